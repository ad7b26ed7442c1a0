//! Firth-penalized, Cauchy-prior and least-squares fits on the quadratic data.

use seplogit::baselines::{fit_baseline, BaselineMethod};
use seplogit::bench::{builtin_scenario, ScenarioName};

fn main() -> seplogit::Result<()> {
    let d = builtin_scenario(ScenarioName::Quadratic)?.dataset;
    for method in [
        BaselineMethod::Firth,
        BaselineMethod::CauchyMap,
        BaselineMethod::Ols,
    ] {
        let fit = fit_baseline(method, &d)?;
        println!(
            "{}: beta = {:.4?}, iterations = {}",
            method.as_str(),
            fit.beta.0,
            fit.iterations
        );
        let fitted: Vec<String> = fit.pihat.iter().map(|p| format!("{p:.2}")).collect();
        println!("  fitted: {}", fitted.join(" "));
    }
    Ok(())
}
