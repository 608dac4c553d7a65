#![allow(dead_code)]

use lro_core::simulation::MonteCarloReport;
use lro_core::{fit_lro, LroFit, TwoSample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN_X: [f64; 4] = [-1.0, 2.0, 3.0, 3.0];
pub const GOLDEN_Y: [f64; 6] = [0.0, 0.0, 1.0, 3.0, 3.0, 6.0];

pub fn golden_sample() -> TwoSample {
    TwoSample::new(GOLDEN_X.to_vec(), GOLDEN_Y.to_vec()).unwrap()
}

/// A random two-sample instance with total size in `2..=max_n`. Half the
/// draws sit on a coarse integer grid so ties within and across samples are
/// common. Degenerate orders are redrawn.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize) -> TwoSample {
    loop {
        let n = rng.random_range(2..=max_n);
        let n1 = rng.random_range(1..n);
        let shift: f64 = rng.random_range(-1.0..2.0);
        let draw = |rng: &mut ChaCha8Rng, offset: f64| {
            if rng.random_bool(0.5) {
                rng.random_range(0..8) as f64
            } else {
                (rng.random::<f64>() * 8.0 + offset).max(0.0)
            }
        };
        let x: Vec<f64> = (0..n1).map(|_| draw(rng, shift)).collect();
        let y: Vec<f64> = (0..n - n1).map(|_| draw(rng, 0.0)).collect();
        if let Ok(ts) = TwoSample::new(x, y) {
            return ts;
        }
    }
}

/// Distinct sorted values.
pub fn distinct(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// Checks the minorant and majorant inequalities and pooled-CDF preservation
/// at every distinct `y`, and returns the fit.
pub fn fit_checked(ts: &TwoSample) -> LroFit {
    let fit = fit_lro(ts).unwrap();
    assert_fit_invariants(&fit, ts, 1e-12);
    fit
}

pub fn assert_fit_invariants(fit: &LroFit, ts: &TwoSample, tol: f64) {
    let pi = fit.pi_n();
    for &y in &distinct(ts.y()) {
        let (fs, gs) = (fit.f_star().cdf(y), fit.g_star().cdf(y));
        let (fe, ge) = (fit.f_n().cdf(y), fit.g_n().cdf(y));
        assert!(fs <= fe + tol, "F*({y}) = {fs} > F_n = {fe}");
        assert!(gs >= ge - tol, "G*({y}) = {gs} < G_n = {ge}");
        let h = pi * fe + (1.0 - pi) * ge;
        assert!(
            (pi * fs + (1.0 - pi) * gs - h).abs() <= tol,
            "pooled CDF not preserved at {y}"
        );
    }
    assert!((fit.f_star().cdf(f64::INFINITY) - 1.0).abs() <= tol);
    assert!((fit.g_star().cdf(f64::INFINITY) - 1.0).abs() <= tol);
    let levels = fit.theta_star().levels();
    assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    assert!(levels.iter().all(|&l| l >= 0.0));
}

/// Report lookup at the grid point nearest `z`.
pub fn cell(r: &MonteCarloReport, n: usize, z: f64, method: &str, metric: &str) -> f64 {
    let zg = r
        .eval_grid
        .iter()
        .copied()
        .min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()))
        .unwrap();
    assert!((zg - z).abs() < 1e-9, "{z} is not on the grid");
    r.get(n, Some(zg), method, metric)
        .unwrap_or_else(|| panic!("missing cell n={n} z={z} {method} {metric}"))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Instance with at most `max_m2` distinct `y` values.
pub fn small_support_instance(rng: &mut ChaCha8Rng, max_m2: usize) -> TwoSample {
    loop {
        let m2 = rng.random_range(1..=max_m2);
        let ys: Vec<f64> = (0..m2).map(|_| rng.random_range(0..10) as f64).collect();
        let n2 = rng.random_range(1..=8);
        let y: Vec<f64> = (0..n2).map(|_| ys[rng.random_range(0..m2)]).collect();
        let n1 = rng.random_range(1..=8);
        let x: Vec<f64> = (0..n1)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random_range(0..11) as f64
                } else {
                    rng.random::<f64>() * 11.0 - 0.5
                }
            })
            .collect();
        if let Ok(ts) = TwoSample::new(x, y) {
            return ts;
        }
    }
}

/// A pair `(F, G)` in the likelihood ratio ordered model, supported on the
/// pooled values plus one point above every observation.
pub struct Candidate {
    pub f: lro_core::estimators::StepDistribution,
    pub g: lro_core::estimators::StepDistribution,
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Builds the pair from `G` masses on the distinct `y` values, non-decreasing
/// ODC slopes, the share of `F` mass left above the largest `y`, and a rule
/// for splitting each interval's `F` mass across the `x` values inside it
/// and its right `y` endpoint.
fn assemble(
    ts: &TwoSample,
    g_mass: &[f64],
    slopes: &[f64],
    top: f64,
    split: &mut dyn FnMut(&[f64], f64) -> Vec<f64>,
) -> Candidate {
    use lro_core::estimators::StepDistribution;
    let ys = distinct(ts.y());
    let xs = distinct(ts.x());
    let above = xs.last().copied().unwrap_or(0.0).max(ys[ys.len() - 1]) + 1.0;
    let mut knots = distinct(&[ts.x(), ts.y(), &[above]].concat());
    knots.dedup();
    let mut f_mass = vec![0.0; knots.len()];
    let mut g_at = vec![0.0; knots.len()];
    let pos = |v: f64| knots.iter().position(|&k| k == v).unwrap();
    let raw: f64 = slopes.iter().zip(g_mass).map(|(s, g)| s * g).sum();
    let scale = if raw > 0.0 { (1.0 - top) / raw } else { 0.0 };
    let mut lo = f64::NEG_INFINITY;
    for (k, &y) in ys.iter().enumerate() {
        g_at[pos(y)] = g_mass[k];
        let inside: Vec<f64> = xs.iter().copied().filter(|&x| x > lo && x < y).collect();
        let mut pts = inside.clone();
        pts.push(y);
        let w = split(&pts, y);
        for (p, wi) in pts.iter().zip(w) {
            f_mass[pos(*p)] += slopes[k] * g_mass[k] * scale * wi;
        }
        lo = y;
    }
    let rest: Vec<f64> = xs.iter().copied().filter(|&x| x > lo).chain([above]).collect();
    let w = split(&rest, above);
    for (p, wi) in rest.iter().zip(w) {
        f_mass[pos(*p)] += top * wi;
    }
    let cum = |m: &[f64]| {
        let mut c = 0.0;
        m.iter()
            .map(|v| {
                c += v;
                c.min(1.0)
            })
            .collect::<Vec<_>>()
    };
    Candidate {
        f: StepDistribution::new(knots.clone(), cum(&f_mass)).unwrap(),
        g: StepDistribution::new(knots.clone(), cum(&g_at)).unwrap(),
    }
}

/// A uniformly scattered feasible candidate.
pub fn random_candidate(rng: &mut ChaCha8Rng, ts: &TwoSample) -> Candidate {
    let m2 = distinct(ts.y()).len();
    let g_mass = dirichlet(rng, m2);
    let mut slopes: Vec<f64> = (0..m2).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    slopes.sort_by(f64::total_cmp);
    let has_top_x = ts.x().iter().any(|&x| x > distinct(ts.y())[m2 - 1]);
    let top = if has_top_x { rng.random::<f64>() * 0.5 } else { 0.0 };
    let mut split = |pts: &[f64], _: f64| dirichlet(rng, pts.len());
    assemble(ts, &g_mass, &slopes, top, &mut split)
}

/// A small random perturbation of the fitted pair, kept inside the model.
pub fn perturbed_candidate(rng: &mut ChaCha8Rng, ts: &TwoSample, fit: &LroFit, eps: f64) -> Candidate {
    let ys = distinct(ts.y());
    let mut g_mass: Vec<f64> = ys
        .iter()
        .map(|&y| fit.g_star().mass_at(y) * (1.0 + eps * (rng.random::<f64>() - 0.5)))
        .collect();
    let s: f64 = g_mass.iter().sum();
    g_mass.iter_mut().for_each(|g| *g /= s);
    let mut prev = f64::NEG_INFINITY;
    let mut slopes: Vec<f64> = ys
        .iter()
        .map(|&y| {
            let df = fit.f_star().cdf(y) - fit.f_star().cdf(prev);
            prev = y;
            (df / fit.g_star().mass_at(y)) * (1.0 + eps * (rng.random::<f64>() - 0.5))
        })
        .collect();
    for k in 1..slopes.len() {
        slopes[k] = slopes[k].max(slopes[k - 1]);
    }
    let top = 1.0 - fit.f_star().cdf(ys[ys.len() - 1]);
    let top = if top > 0.0 { (top * (1.0 + eps * (rng.random::<f64>() - 0.5))).min(1.0) } else { 0.0 };
    let x = ts.x().to_vec();
    let mut split = |pts: &[f64], right: f64| {
        let counts: Vec<f64> = pts.iter().map(|&p| x.iter().filter(|&&v| v == p).count() as f64).collect();
        let total: f64 = counts.iter().sum();
        if total == 0.0 {
            pts.iter().map(|&p| if p == right { 1.0 } else { 0.0 }).collect()
        } else {
            counts.into_iter().map(|c| c / total).collect()
        }
    };
    assemble(ts, &g_mass, &slopes, top, &mut split)
}
