use nalgebra::DVector;
use proptest::prelude::*;
use seplogit::inference::{one_sided_ci, wilson_interval};
use seplogit::model::loglik;
use seplogit::predict::{akaike_weights, optimal_cutoff, predict_point, PredictConfig};
use seplogit::separation::detect;
use seplogit::{fit_irls, Dataset, FitConfig};

fn dataset(xs: &[f64], ys: &[bool]) -> Option<Dataset> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let y: Vec<f64> = ys.iter().map(|&b| f64::from(u8::from(b))).collect();
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return None;
    }
    Dataset::from_rows(&rows, &y, &["x"], true).ok()
}

fn small_data() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (5usize..14).prop_flat_map(|n| {
        (
            prop::collection::vec((-20i32..20).prop_map(|v| f64::from(v) / 2.0), n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wilson_bounds_stay_in_unit_interval(p in 0.0f64..=1.0, n in 1.0f64..500.0, alpha in 0.001f64..0.5) {
        let (lo, hi) = wilson_interval(p, n, alpha).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }

    #[test]
    fn akaike_weights_sum_to_one_and_ignore_shifts(a in -1e3f64..1e3, b in -1e3f64..1e3, s in -1e4f64..1e4) {
        let (w0, w1) = akaike_weights(a, b);
        prop_assert!((w0 + w1 - 1.0).abs() <= 1e-12);
        let (v0, v1) = akaike_weights(a + s, b + s);
        prop_assert!((w0 - v0).abs() <= 1e-9 && (w1 - v1).abs() <= 1e-9);
    }

    #[test]
    fn cutoff_is_a_probability(pi in prop::collection::vec(0.0f64..=1.0, 2..30), seed in any::<u64>()) {
        let y: Vec<f64> = (0..pi.len()).map(|i| f64::from(u8::from((seed >> (i % 64)) & 1 == 1))).collect();
        match optimal_cutoff(&pi, &y) {
            Ok(c) => prop_assert!((0.0..=1.0).contains(&c)),
            Err(_) => prop_assert!(y.iter().all(|&v| v == y[0])),
        }
    }

    #[test]
    fn fitted_values_and_loglik_are_valid((xs, ys) in small_data()) {
        if let Some(d) = dataset(&xs, &ys) {
            let fit = fit_irls(&d, &FitConfig::default()).unwrap();
            prop_assert!(fit.pihat.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!(loglik(&d, &fit.beta_vector()).unwrap() <= 0.0);
        }
    }

    #[test]
    fn prediction_is_a_convex_combination((xs, ys) in small_data(), x_new in -12.0f64..12.0) {
        if let Some(d) = dataset(&xs, &ys) {
            let r = predict_point(&d, &DVector::from_vec(vec![1.0, x_new]), &PredictConfig::default()).unwrap();
            prop_assert!((r.w0 + r.w1 - 1.0).abs() <= 1e-12);
            let (lo, hi) = (r.pi0.min(r.pi1), r.pi0.max(r.pi1));
            prop_assert!(lo - 1e-12 <= r.pi_star && r.pi_star <= hi + 1e-12);
            prop_assert_eq!(r.label, u8::from(r.pi_star >= r.cutoff));
            prop_assert!(r.interval.0 <= r.pi_star + 1e-12 && r.pi_star <= r.interval.1 + 1e-12);
        }
    }

    #[test]
    fn relabeling_mirrors_predictions((xs, ys) in small_data(), x_new in -12.0f64..12.0) {
        if let Some(d) = dataset(&xs, &ys) {
            let x = DVector::from_vec(vec![1.0, x_new]);
            let a = predict_point(&d, &x, &PredictConfig::default()).unwrap();
            let b = predict_point(&d.relabeled(), &x, &PredictConfig::default()).unwrap();
            prop_assert!((a.pi_star - (1.0 - b.pi_star)).abs() <= 1e-8, "{} vs {}", a.pi_star, b.pi_star);
        }
    }

    #[test]
    fn duplicating_a_row_never_shrinks_the_problematic_set((xs, ys) in small_data(), k in any::<prop::sample::Index>()) {
        if let Some(d) = dataset(&xs, &ys) {
            let before = detect(&d, 1e-7).unwrap();
            let j = k.index(xs.len());
            let mut xs2 = xs.clone();
            let mut ys2 = ys.clone();
            xs2.push(xs[j]);
            ys2.push(ys[j]);
            let after = detect(&dataset(&xs2, &ys2).unwrap(), 1e-7).unwrap();
            for i in &before.problematic {
                prop_assert!(after.problematic.contains(i), "row {i} dropped");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_sided_intervals_nest_in_alpha(gap in 1.0f64..10.0, spread in 1.0f64..5.0, n in 3usize..6) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            xs.push(-gap - spread * i as f64);
            ys.push(true);
            xs.push(gap + spread * i as f64);
            ys.push(false);
        }
        let d = dataset(&xs, &ys).unwrap();
        let report = detect(&d, 1e-7).unwrap();
        let wide = one_sided_ci(&d, &report, 0.05).unwrap();
        let narrow = one_sided_ci(&d, &report, 0.20).unwrap();
        prop_assert!(wide.failures.is_empty() && narrow.failures.is_empty());
        for r in &narrow.records {
            let w = wide.get(r.index).unwrap();
            prop_assert!(w.lower <= r.lower + 1e-8 && r.upper <= w.upper + 1e-8);
            prop_assert!((r.constraint_loglik.unwrap() - 0.20f64.ln()).abs() <= 1e-6);
        }
        for r in &wide.records {
            prop_assert!((r.constraint_loglik.unwrap() - 0.05f64.ln()).abs() <= 1e-6);
        }
    }

    #[test]
    fn complete_interval_lengths_grow_toward_the_boundary(gap in 2.0f64..10.0, n in 3usize..6) {
        let xs: Vec<f64> = (0..n).map(|i| -gap - 3.0 * i as f64).chain((0..n).map(|i| gap + 3.0 * i as f64)).collect();
        let ys: Vec<bool> = (0..2 * n).map(|i| i < n).collect();
        let d = dataset(&xs, &ys).unwrap();
        let set = one_sided_ci(&d, &detect(&d, 1e-7).unwrap(), 0.05).unwrap();
        for side in [0..n, n..2 * n] {
            let lens: Vec<f64> = side.map(|i| set.get(i).unwrap().length()).collect();
            for w in lens.windows(2) {
                prop_assert!(w[0] >= w[1] - 1e-8, "{lens:?}");
            }
        }
    }
}
