mod common;

use common::*;
use lro_core::inference::{
    estimate_tau, interval, lrt_ci, split_ci, split_fit, theta_wald_ci, CiMethod, InferenceConfig, LrtProfile,
    QuantileTable, SplitEstimate,
};
use lro_core::simulation::{run_study, sample_replication, Scenario, StudyConfig};
use lro_core::{fit_lro, LroError, TwoSample};

#[test]
fn tau_estimate_tracks_the_analytic_nuisance() {
    let s = Scenario::continuous_exponential();
    let (z, pi): (f64, f64) = (1.0, 0.4);
    let theta = z.exp() / 2.0;
    let (f, g) = ((-z).exp(), 2.0 * (-2.0 * z).exp());
    let kappa = theta * (pi * f + (1.0 - pi) * g) / (pi * (1.0 - pi) * g * g);
    let tau0 = kappa * theta; // theta' = theta here

    let cfg = InferenceConfig::default();
    let mut taus: Vec<f64> = (0..100)
        .map(|rep| {
            let ts = sample_replication(&s, 10_000, 3, rep).unwrap();
            estimate_tau(&fit_lro(&ts).unwrap(), z, &cfg).unwrap().tau
        })
        .collect();
    let med = median(&mut taus);
    assert!((med / tau0 - 1.0).abs() <= 0.3, "median tau {med} vs {tau0}");
}

#[test]
fn theta_wald_half_width() {
    let fit = fit_lro(&golden_sample()).unwrap();
    let q = QuantileTable::embedded().chernoff(0.975).unwrap();
    assert!((q - 0.9982).abs() < 0.01);
    let ci = theta_wald_ci(&fit, 2.0, 0.95, 0.0).unwrap();
    assert_eq!((ci.lower, ci.upper), (ci.estimate, ci.estimate));
}

#[test]
fn intervals_bracket_the_estimate() {
    let ts = sample_replication(&Scenario::mixed(), 2000, 9, 0).unwrap();
    let fit = fit_lro(&ts).unwrap();
    let cfg = InferenceConfig::default();
    for z in [0.2, 0.5, 0.8] {
        for m in [CiMethod::ThetaWald, CiMethod::MuWaldTransformed, CiMethod::Lrt] {
            let ci = interval(&fit, z, 0.95, m, &cfg).unwrap();
            assert!(ci.lower >= 0.0 && ci.lower <= ci.upper, "{m} at {z}: {ci:?}");
            assert!(ci.contains(ci.estimate), "{m} at {z}: {ci:?}");
        }
    }
    let narrow = lrt_ci(&fit, 0.5, 0.5, &cfg).unwrap();
    let wide = lrt_ci(&fit, 0.5, 0.99, &cfg).unwrap();
    assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
}

#[test]
fn lrt_unsupported_at_the_ends() {
    let ts = sample_replication(&Scenario::mixed(), 500, 2, 0).unwrap();
    let fit = fit_lro(&ts).unwrap();
    let lo = fit.pooled().z()[0];
    for z in [lo - 1.0, lo, fit.pooled().y_max() + 0.1] {
        let err = LrtProfile::new(&fit, z).unwrap_err();
        assert!(matches!(err, LroError::UnsupportedPoint { .. }), "{z}: {err}");
    }
}

#[test]
fn split_requires_two_subsamples_and_is_seeded() {
    let ts = sample_replication(&Scenario::mixed(), 1000, 4, 0).unwrap();
    assert!(matches!(split_fit(&ts, 0.5, 1, 7), Err(LroError::InvalidInput(_))));
    let a = split_fit(&ts, 0.5, 5, 7).unwrap();
    let b = split_fit(&ts, 0.5, 5, 7).unwrap();
    assert_eq!(a.values, b.values);
    assert_ne!(a.values, split_fit(&ts, 0.5, 5, 8).unwrap().values);
    let mean = a.values.iter().sum::<f64>() / 5.0;
    assert!((a.mean - mean).abs() < 1e-12);
}

#[test]
fn split_interval_uses_student_t() {
    let se = SplitEstimate::from_values(0.5, 1000, vec![1.0, 1.2, 0.9, 1.1, 1.3]);
    let ci = split_ci(&se, 0.95).unwrap();
    let sd = se.values.iter().map(|v| (v - se.mean).powi(2)).sum::<f64>() / 4.0;
    let half = 2.7764451051977987 * sd.sqrt() / 5f64.sqrt();
    assert!((ci.upper - (se.mean + half)).abs() < 1e-9);
    assert!((ci.lower - (se.mean - half)).abs() < 1e-9);
}

#[test]
fn identical_splits_have_zero_spread() {
    let base = TwoSample::new(vec![1.0, 2.0, 2.5], vec![0.0, 1.5, 2.0]).unwrap();
    let v: Vec<f64> = (0..4).map(|_| fit_lro(&base.clone()).unwrap().theta(1.5)).collect();
    let se = SplitEstimate::from_values(1.5, 24, v);
    assert_eq!(se.sigma_nm, 0.0);
    let ci = split_ci(&se, 0.95).unwrap();
    assert_eq!((ci.lower, ci.upper), (se.mean, se.mean));
}

#[test]
fn quantile_tables_are_monotone() {
    let t = QuantileTable::embedded();
    assert!(t.chernoff(0.9).unwrap() < t.chernoff(0.975).unwrap());
    assert!(t.chernoff(0.5).unwrap().abs() < 0.01);
    let (d50, d95) = (t.lrt(0.5).unwrap(), t.lrt(0.95).unwrap());
    assert!(d95 > d50 && d50 > 0.0);
    assert!(matches!(t.lrt(0.123), Err(LroError::MissingQuantile(..))));
}

fn study(s: Scenario, n: usize, methods: &[CiMethod]) -> lro_core::simulation::MonteCarloReport {
    let mut cfg = StudyConfig::new(s);
    cfg.n_list = vec![n];
    cfg.methods = methods.to_vec();
    run_study(&cfg).unwrap()
}

#[test]
fn poisson_lrt_coverage() {
    let r = study(Scenario::discrete_poisson(), 10_000, &[CiMethod::Lrt, CiMethod::DiscreteWald]);
    for z in 3..=7 {
        let c = cell(&r, 10_000, z as f64, "lrt", "coverage");
        assert!((0.92..=0.98).contains(&c), "lrt coverage {c} at {z}");
    }
    for z in 2..=8 {
        let c = cell(&r, 10_000, z as f64, "discrete-wald", "coverage");
        assert!((0.92..=0.98).contains(&c), "wald coverage {c} at {z}");
    }
}

#[test]
fn exponential_plugin_coverage() {
    let r = study(Scenario::continuous_exponential(), 5000, &[CiMethod::ThetaWald]);
    let c = cell(&r, 5000, 1.0, "theta-wald", "coverage");
    assert!((0.90..=0.99).contains(&c), "coverage {c}");
}

#[test]
fn mixed_design_mu_wald_coverage_and_split_mse() {
    let r = study(Scenario::mixed(), 10_000, &[CiMethod::MuWaldTransformed, CiMethod::Split]);
    let c = cell(&r, 10_000, 0.25, "mu-wald-transformed", "coverage");
    assert!((0.90..=0.99).contains(&c), "coverage {c}");
    let (mut split, mut mle) = (0.0, 0.0);
    for &z in &r.eval_grid {
        if Scenario::mixed().is_boundary(z) || Scenario::mixed().is_atom(z) {
            continue;
        }
        split += cell(&r, 10_000, z, "split-m5", "mse");
        mle += cell(&r, 10_000, z, "mle", "mse");
    }
    assert!(split / mle < 1.0, "aggregate MSE ratio {}", split / mle);
}
