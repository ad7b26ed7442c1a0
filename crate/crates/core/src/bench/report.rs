//! Report serialization: JSON (full precision), CSV and a markdown table laid
//! out with one row per (metric, method) and one column per scenario.

use std::io::Write;
use std::str::FromStr;

use crate::bench::run::{BenchReport, BenchRow, Method};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown-table" | "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Precondition(format!(
                "unknown format '{other}' (expected json, csv or markdown-table)"
            ))),
        }
    }
}

pub fn emit_report(report: &BenchReport, format: ReportFormat, out: &mut impl Write) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        ReportFormat::Csv => write_csv(report, out)?,
        ReportFormat::Markdown => out.write_all(markdown(report).as_bytes())?,
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_csv(report: &BenchReport, out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "method",
        "n",
        "in_sample_accuracy",
        "mean_ci_length",
        "loocv_accuracy",
        "loocv_correct",
        "mean_pi_length",
        "cost_seconds",
        "errors",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.scenario.clone(),
            r.method.to_string(),
            r.n.to_string(),
            opt(r.in_sample_accuracy),
            opt(r.mean_ci_length),
            opt(r.loocv_accuracy),
            r.loocv_correct.map(|c| c.to_string()).unwrap_or_default(),
            opt(r.mean_pi_length),
            opt(r.cost_seconds),
            r.errors.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `100 %`, `93.33 %`.
fn fmt_percent(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s} %")
}

fn fmt_cost(v: f64) -> String {
    if v >= 60.0 {
        format!("{:.2} mins", v / 60.0)
    } else {
        format!("{v:.2} secs")
    }
}

fn markdown(report: &BenchReport) -> String {
    let mut scenarios: Vec<&str> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in &report.rows {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    type Metric = (&'static str, fn(&BenchRow) -> Option<String>);
    let metrics: [Metric; 5] = [
        ("accuracy", |r| r.in_sample_accuracy.map(fmt_percent)),
        ("length", |r| r.mean_ci_length.map(|v| format!("{v:.3}"))),
        ("loocv accuracy", |r| r.loocv_accuracy.map(fmt_percent)),
        ("prediction length", |r| {
            r.mean_pi_length.map(|v| format!("{v:.3}"))
        }),
        ("cost", |r| r.cost_seconds.map(fmt_cost)),
    ];
    let mut s = String::new();
    s.push_str("| metric | method |");
    for sc in &scenarios {
        s.push_str(&format!(" {sc} |"));
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---|".repeat(scenarios.len()));
    s.push('\n');
    for (name, get) in metrics.iter() {
        let any = report.rows.iter().any(|r| get(r).is_some());
        if !any {
            continue;
        }
        for m in &methods {
            s.push_str(&format!("| {name} | {m} |"));
            for sc in &scenarios {
                let cell = report
                    .rows
                    .iter()
                    .find(|r| r.scenario == *sc && r.method == *m)
                    .and_then(get)
                    .unwrap_or_else(|| "-".into());
                s.push_str(&format!(" {cell} |"));
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_formatting() {
        assert_eq!(fmt_percent(100.0), "100 %");
        assert_eq!(fmt_percent(93.333333), "93.33 %");
        assert_eq!(fmt_percent(90.0), "90 %");
        assert_eq!(fmt_cost(0.134), "0.13 secs");
        assert_eq!(fmt_cost(222.0), "3.70 mins");
    }
}
