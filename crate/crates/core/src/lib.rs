//! Gamma-kernel estimation of probability densities supported on `[0, ∞)`
//! and of their first derivative.
//!
//! The estimators live in [`estimator`], the kernel in [`kernel`], the
//! leading-order error theory and bandwidth selectors in [`asymptotics`], and
//! the simulation harness in [`harness`].
//!
//! ```
//! use gammakde::{derivative_at, sample, BandwidthReport, Distribution};
//!
//! let truth = Distribution::maxwell(1.0).unwrap();
//! let bw = BandwidthReport::compute(&truth, 2000).unwrap();
//! let data = sample(&truth, 2000, 7).unwrap();
//! let slope = derivative_at(&data, bw.b_refined, 1.0).unwrap();
//! assert!((slope - 0.48).abs() < 0.3);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes and reference values are kept as tabulated.
#![allow(clippy::excessive_precision)]

pub mod asymptotics;
pub mod error;
pub mod estimator;
pub mod format;
pub mod harness;
pub mod kernel;
pub mod numerics;
pub mod refdens;
pub mod specfun;

pub use asymptotics::{
    bias_boundary, bias_interior, boundary_constant, chen_bandwidth, curvature_P,
    global_bandwidth_plugin, mise_leading, mse_leading, pointwise_optimal, refined_bandwidth,
    variance_leading, BandwidthConstants, BandwidthReport, PointwiseOptimum, RefinedBandwidth,
    TheoryIntegrals,
};
pub use error::{Error, Result};
pub use estimator::{density_at, derivative_at, evaluate_on_grid, GridEvaluation, Sample};
pub use harness::{
    convergence_study, lemma_verification, run_experiment, BandwidthMode, ExperimentConfig,
    ExperimentReport, GridSpec,
};
pub use kernel::{
    kernel_value, kernel_x_derivative, log_factor, shape_params, Branch, KernelShape,
};
pub use refdens::{sample, Derivs, Distribution, ReferenceDensity};
pub use specfun::{digamma, log_gamma, stirling_ratio, PositiveReal};
