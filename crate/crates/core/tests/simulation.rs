mod common;

use common::*;
use lro_core::inference::CiMethod;
use lro_core::simulation::{
    kde_ratio_estimator, run_study, sample_replication, sample_scenario, true_theta, Scenario, ScenarioKind, StudyConfig,
};
use lro_core::LroError;

#[test]
fn poisson_draws_have_the_right_mean() {
    let ts = sample_scenario(&Scenario::discrete_poisson(), 100_000, 17).unwrap();
    let n1 = ts.x().len() as f64;
    let mean = ts.x().iter().sum::<f64>() / n1;
    let se = (6.0 / n1).sqrt();
    assert!((mean - 6.0).abs() <= 3.0 * se, "mean {mean}");
    assert!(ts.x().iter().chain(ts.y()).all(|&v| v >= 0.0 && v.fract() == 0.0));
    // n1 is Binomial(n, 0.4).
    let sd = (100_000.0f64 * 0.4 * 0.6).sqrt();
    assert!((n1 - 40_000.0).abs() <= 4.0 * sd);
}

#[test]
fn mixed_design_atoms_and_density() {
    let s = Scenario::mixed();
    let ts = sample_scenario(&s, 60_000, 5).unwrap();
    let share = |v: &[f64], a: f64| v.iter().filter(|&&x| x == a).count() as f64 / v.len() as f64;
    for (a, px, py) in [(0.0, 1.0 / 18.0, 1.0 / 9.0), (0.5, 1.0 / 9.0, 1.0 / 9.0), (1.0, 3.0 / 18.0, 1.0 / 9.0)] {
        assert!((share(ts.x(), a) - px).abs() < 0.01, "x atom {a}");
        assert!((share(ts.y(), a) - py).abs() < 0.01, "y atom {a}");
    }
    assert!(ts.x().iter().chain(ts.y()).all(|&v| (0.0..=1.0).contains(&v)));
    assert_eq!(true_theta(&s, 0.5).unwrap(), 1.0);
    assert!((true_theta(&s, 0.3).unwrap() - 0.8).abs() < 1e-12);
    assert!(true_theta(&s, 1.5).is_err());
}

#[test]
fn true_ratios() {
    let p = Scenario::discrete_poisson();
    for z in 0..10 {
        let r = true_theta(&p, z as f64 + 1.0).unwrap() / true_theta(&p, z as f64).unwrap();
        assert!((r - 1.5).abs() < 1e-12);
    }
    assert!((true_theta(&Scenario::continuous_exponential(), 0.0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn kde_ratio_median_near_truth() {
    let s = Scenario::continuous_exponential();
    let mut est: Vec<f64> = (0..100)
        .map(|rep| kde_ratio_estimator(&sample_replication(&s, 10_000, 21, rep).unwrap(), 1.0).unwrap())
        .collect();
    let med = median(&mut est);
    let truth = std::f64::consts::E / 2.0;
    assert!((med / truth - 1.0).abs() <= 0.2, "median {med}");
}

#[test]
fn unknown_scenario_is_a_config_error() {
    assert!(matches!("gamma".parse::<ScenarioKind>(), Err(LroError::Config(_))));
    assert!(matches!(StudyConfig::parse("scenario = gamma\n"), Err(LroError::Config(_))));
}

#[test]
fn report_cells_are_well_formed_and_reproducible() {
    let mut cfg = StudyConfig::new(Scenario::mixed());
    cfg.n_list = vec![200, 400];
    cfg.replications = 25;
    cfg.seed = 99;
    cfg.methods = CiMethod::ALL.to_vec();
    cfg.kde_ratio = true;
    let a = run_study(&cfg).unwrap();
    let b = run_study(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    for c in &a.cells {
        match c.metric.as_str() {
            "coverage" if !c.value.is_nan() => assert!((0.0..=1.0).contains(&c.value), "{c:?}"),
            "mean_width" if !c.value.is_nan() => assert!(c.value >= 0.0, "{c:?}"),
            "count" | "failures" => assert!(c.value >= 0.0 && c.value.fract() == 0.0),
            _ => {}
        }
    }
    for n in [200, 400] {
        let total = a.get(n, Some(0.5), "mle", "count").unwrap() + a.get(n, None, "mle", "failures").unwrap();
        assert_eq!(total, 25.0);
    }
    cfg.seed = 100;
    assert_ne!(run_study(&cfg).unwrap().to_csv(), a.to_csv());
}

#[test]
fn single_replication_has_undefined_spread() {
    let mut cfg = StudyConfig::new(Scenario::continuous_exponential());
    cfg.n_list = vec![300];
    cfg.replications = 1;
    let r = run_study(&cfg).unwrap();
    assert!(cell(&r, 300, 1.0, "mle", "sd").is_nan());
    assert!(cell(&r, 300, 1.0, "mle", "bias").is_finite());
}

#[test]
fn discrete_mle_matches_empirical_more_often_as_n_grows() {
    let mut cfg = StudyConfig::new(Scenario::discrete_poisson());
    cfg.n_list = vec![200, 20_000];
    cfg.replications = 100;
    let r = run_study(&cfg).unwrap();
    let small = r.get(200, None, "mle", "frac_f_star_equals_f_n").unwrap();
    let large = r.get(20_000, None, "mle", "frac_f_star_equals_f_n").unwrap();
    assert!(large > small, "{small} -> {large}");
}
