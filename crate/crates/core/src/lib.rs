//! Integral functionals of powers of the tapered periodogram.
//!
//! The crate computes `J_{k,T}(φ) = ∫ φ(λ) I_T(λ)^k dλ` from simulated or
//! supplied data, evaluates the limit formulas for its mean and covariance,
//! computes exact finite-sample Gaussian moments by pair-partition
//! expansion, and runs Monte Carlo convergence and normality studies.

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod models;
pub mod montecarlo;
pub mod oracle;
pub mod periodogram;
pub mod tapers;

pub use asymptotics::{
    bias_gap, check_exponents, clt_covariance_matrix, cumulant_order_bound, limit_covariance,
    limit_mean, CltCovariance, ExponentCheck, ExponentCondition, LimitCovariance, LimitMean,
    Quadrature,
};
pub use error::{Error, Result};
pub use functionals::{estimate, estimate_batch, FunctionalEstimate, Provenance, WeightFunction};
pub use models::{Innovations, ModelFamily, ModelSpec, SamplePath, SpectralModel};
pub use montecarlo::{
    run_convergence, run_experiment, run_f4_discrimination, run_normality, ExperimentConfig,
    ExperimentKind, ExperimentReport,
};
pub use periodogram::{periodogram_grid, FrequencyGrid, PeriodogramEngine, PeriodogramGrid};
pub use tapers::{Taper, TaperKind, TaperNorms};
