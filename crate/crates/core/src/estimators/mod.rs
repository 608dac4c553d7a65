//! Empirical distribution functions, the pooled `(Z, D)` representation, and
//! the maximum likelihood estimators `F*`, `G*` and `theta*`.

mod fit;
mod sample;
mod step;

pub use fit::{
    fit_lro, inverse_odds, log_likelihood, odds, theta_via_odc, EmpiricalOdc, LroFit,
};
pub use sample::{ecdf, PooledSample, TwoSample};
pub use step::{MonotoneStepFn, StepDistribution};
