//! Reproduces the in-sample and leave-one-out tables on the didactic datasets.

use seplogit::bench::{
    builtin_scenario, emit_report, run_bench, BenchConfig, Method, ReportFormat, ScenarioName,
};

fn main() -> seplogit::Result<()> {
    let scenarios = ScenarioName::BUILTIN
        .iter()
        .map(|&n| builtin_scenario(n))
        .collect::<seplogit::Result<Vec<_>>>()?;
    let report = run_bench(&scenarios, &Method::ALL, &BenchConfig::default());
    emit_report(&report, ReportFormat::Markdown, &mut std::io::stdout())?;
    for row in report.rows.iter().filter(|r| !r.errors.is_empty()) {
        eprintln!(
            "{} / {}: {}",
            row.scenario,
            row.method,
            row.errors.join("; ")
        );
    }
    Ok(())
}
