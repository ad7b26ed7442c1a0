//! Model-averaged prediction for new points on separated training data.

use nalgebra::DVector;
use seplogit::bench::{builtin_scenario, ScenarioName};
use seplogit::predict::{predict_point, PredictConfig};

fn main() -> seplogit::Result<()> {
    let d = builtin_scenario(ScenarioName::Complete)?.dataset;
    let config = PredictConfig::default();
    println!(
        "{:>5} {:>7} {:>7} {:>6} {:>6} {:>7} {:>15} label",
        "z", "pi0", "pi1", "w0", "w1", "pi*", "interval"
    );
    for z in [5.0, 35.0, 45.0, 50.0, 55.0, 65.0, 95.0] {
        let r = predict_point(&d, &DVector::from_vec(vec![1.0, z]), &config)?;
        println!(
            "{z:>5} {:>7.4} {:>7.4} {:>6.3} {:>6.3} {:>7.4} [{:.3}, {:.3}] {}",
            r.pi0, r.pi1, r.w0, r.w1, r.pi_star, r.interval.0, r.interval.1, r.label
        );
    }
    Ok(())
}
