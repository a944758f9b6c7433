//! NIPALS partial least squares (univariate response) with missing-cell
//! support, sparse PLS by soft thresholding, and kernel matrices.

mod kernel;
pub(crate) mod nipals;
mod preprocess;
mod sparse;

pub use kernel::{kernel_matrix, median_heuristic_sigma, KernelSpec};
pub use nipals::{fit_pls, fit_pls_with, PlsFit, PlsOptions};
pub use preprocess::{preprocess, Preprocessing};
pub use sparse::{fit_spls, fit_spls_path, fit_spls_with, soft_threshold};
