//! Mixture modelling of deviations and per-mode reconstruction.

mod density;
mod gmm;
mod report;

pub(crate) use density::quantile_sorted;
pub use density::{gamma_moment_fit, kde, kolmogorov_p, ks_statistic, silverman_bandwidth, GammaFit};
pub use gmm::{fit_gmm_1d, select_modes, transform_deltas, GaussComponent, GmmOptions, ModeModel};
pub use report::{
    decompose, decompose_with_basis, majority_accuracy, mode_time_histogram, per_mode_reconstruction,
    submode_decompose, ModeEntry, ModeOptions, ModeReport, TimeHistogram,
};
