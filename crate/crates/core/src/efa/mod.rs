//! Sample pipeline: multivariate normal data, sample correlations,
//! unweighted least squares extraction, Varimax and Promax rotation.

mod data;
mod extract;
mod rotate;

pub use data::{correlation_from_values, correlation_matrix, sample_data, Dataset, SeedTrace};
pub use extract::{apply_rotation, offdiag_residual_ssq, uls_extract, EfaOptions, EfaSolution, Rotation};
pub use rotate::{promax, varimax, varimax_criterion, PROMAX_POWER};
