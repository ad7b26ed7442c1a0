//! Linear-programming diagnosis of complete and quasi-complete separation,
//! followed by the limiting conditional model on the problematic rows.

use seplogit::bench::{builtin_scenario, ScenarioName};
use seplogit::{fit_completion, separation::DetectConfig};

fn main() -> seplogit::Result<()> {
    for name in ScenarioName::BUILTIN {
        let d = builtin_scenario(name)?.dataset;
        let c = fit_completion(&d, &DetectConfig::default())?;
        println!("{name}: {}", c.kind().as_str());
        if let Some(b) = &c.report.direction {
            println!("  direction of recession: {b:.4?}");
        }
        println!("  problematic rows: {:?}", c.report.problematic);
        println!("  sup loglik: {:.4}", c.loglik_sup);
        let fitted: Vec<String> = c.mean_values.iter().map(|p| format!("{p:.3}")).collect();
        println!("  mean values: [{}]", fitted.join(", "));
    }
    Ok(())
}
