//! One-sided confidence intervals for mean values at the boundary, plus the
//! two-sided Wald intervals on rows the limiting model still fits.

use seplogit::bench::{builtin_scenario, ScenarioName};
use seplogit::inference::{mean_value_intervals, Side};
use seplogit::{fit_completion, separation::DetectConfig};

fn main() -> seplogit::Result<()> {
    let alpha = 0.05;
    for name in [ScenarioName::Complete, ScenarioName::Quasi] {
        let d = builtin_scenario(name)?.dataset;
        let c = fit_completion(&d, &DetectConfig::default())?;
        let set = mean_value_intervals(&d, &c, alpha)?;
        println!("{name} (alpha = {alpha})");
        println!(
            "  {:>5} {:>3} {:>9} {:>9} {:>9}  side",
            "z", "y", "estimate", "lower", "upper"
        );
        for r in &set.records {
            let side = match r.side {
                Side::LowerOneSided => "lower",
                Side::UpperOneSided => "upper",
                Side::TwoSided => "two-sided",
            };
            println!(
                "  {:>5} {:>3} {:>9.4} {:>9.4} {:>9.4}  {side}",
                d.x()[(r.index, 1)],
                r.y,
                r.estimate,
                r.lower,
                r.upper
            );
        }
        for f in &set.failures {
            eprintln!("  row {} failed: {}", f.index, f.message);
        }
    }
    Ok(())
}
