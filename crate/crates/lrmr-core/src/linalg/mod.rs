//! Dense matrix primitives: row-major matrices, one-sided Jacobi SVD,
//! singular value thresholding, and the measurement operator with its adjoint.

mod ensemble;
mod matrix;
mod svd;

pub use ensemble::{reshape, residual_norm, MeasurementEnsemble};
pub use matrix::{dot, norm1, norm2, norm_inf, soft_threshold, DenseMatrix};
pub use svd::{
    nuclear_norm, spectral_norm, svd, svt, svt_with_nuclear, truncate_rank, SvdFactors,
};
