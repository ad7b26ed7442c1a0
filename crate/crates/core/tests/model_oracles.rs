use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seplogit::baselines::{fit_firth, FirthConfig};
use seplogit::inference::wald_ci;
use seplogit::model::{fisher_info, loglik, score};
use seplogit::separation::{detect, SeparationKind};
use seplogit::{fit_irls, Dataset, FitConfig};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn simulate(rng: &mut ChaCha8Rng, n: usize, beta: &[f64]) -> Dataset {
    let k = beta.len() - 1;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| normal(rng)).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| {
            let eta = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            let p = 1.0 / (1.0 + (-eta).exp());
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Dataset::from_rows(&rows, &y, &refs, true).unwrap()
}

#[test]
fn score_and_fisher_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let d = simulate(&mut rng, 40, &[0.3, -0.8, 1.1]);
        let beta = DVector::from_fn(3, |_, _| rng.random_range(-1.5..1.5));
        let g = score(&d, &beta).unwrap();
        let info = fisher_info(&d, &beta).unwrap();
        let h = 1e-5;
        let mut fd_hess = DMatrix::zeros(3, 3);
        for j in 0..3 {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (loglik(&d, &up).unwrap() - loglik(&d, &dn).unwrap()) / (2.0 * h);
            assert!(
                (fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0),
                "score {j}: {fd} vs {}",
                g[j]
            );
            let col = (score(&d, &up).unwrap() - score(&d, &dn).unwrap()) / (2.0 * h);
            fd_hess.set_column(j, &col);
        }
        let diff = (&fd_hess + &info).amax();
        assert!(
            diff <= 1e-4 * info.amax().max(1.0),
            "fisher mismatch {diff}"
        );
    }
}

#[test]
fn irls_divergence_agrees_with_detection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut separated = 0;
    let mut near_separated = 0;
    for _ in 0..200 {
        let n = rng.random_range(6..25);
        let slope = rng.random_range(0.5..6.0);
        let d = simulate(&mut rng, n, &[0.0, slope]);
        let rep = detect(&d, 1e-7).unwrap();
        let fit = fit_irls(&d, &FitConfig::default()).unwrap();
        if rep.kind == SeparationKind::None {
            if !fit.converged {
                // A finite MLE can still put fitted values within 1e-8 of 0 or 1.
                assert!(fit.diverged);
                assert!(
                    fit.pihat.iter().any(|p| !(1e-8..=1.0 - 1e-8).contains(p)),
                    "{d:?}"
                );
                near_separated += 1;
            }
        } else {
            separated += 1;
            assert!(
                !fit.converged || fit.diverged,
                "separated data must not report a finite MLE"
            );
        }
    }
    assert!(separated > 10);
    assert!(
        near_separated <= 10,
        "{near_separated} boundary flags on unseparated data"
    );
}

#[test]
fn wald_coverage_on_simulated_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let beta = [-0.4, 0.9];
    let mut covered = 0;
    let reps = 500;
    for _ in 0..reps {
        let d = simulate(&mut rng, 200, &beta);
        let fit = fit_irls(&d, &FitConfig::default()).unwrap();
        assert!(fit.converged);
        let set = wald_ci(&fit, &d, 0.05).unwrap();
        let x0 = d.x()[(0, 1)];
        let truth = 1.0 / (1.0 + (-(beta[0] + beta[1] * x0)).exp());
        let r = &set.records[0];
        if r.lower <= truth && truth <= r.upper {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
}

#[test]
fn firth_is_close_to_mle_without_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let d = simulate(&mut rng, 500, &[0.2, 0.7, -0.5]);
    let mle = fit_irls(&d, &FitConfig::default()).unwrap();
    let firth = fit_firth(&d, &FirthConfig::default()).unwrap();
    let gap = (firth.beta.as_vector() - mle.beta_vector()).norm();
    assert!(gap <= 0.05, "gap {gap}");
}
