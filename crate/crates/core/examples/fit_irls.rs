//! Maximum likelihood by IRLS, on data with and without separation.

use seplogit::{fit_irls, Dataset, FitConfig};

fn data(y: &[f64]) -> seplogit::Result<Dataset> {
    let rows: Vec<Vec<f64>> = (1..=y.len()).map(|z| vec![z as f64]).collect();
    Dataset::from_rows(&rows, y, &["z"], true)
}

fn main() -> seplogit::Result<()> {
    let overlapping = data(&[0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0])?;
    let separated = data(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])?;
    for (label, d) in [("overlapping", overlapping), ("separated", separated)] {
        let fit = fit_irls(&d, &FitConfig::default())?;
        println!(
            "{label:>11}: beta = {:?}, loglik = {:.4}, converged = {}, diverged = {}, iterations = {}",
            fit.beta.0, fit.loglik, fit.converged, fit.diverged, fit.iterations
        );
    }
    Ok(())
}
