//! Sparse kernels, conjugate gradients and shrinkage operators.

mod cg;
mod dense;
mod normal;
mod prox;
mod sparse;

pub use cg::{cg_solve, CgOutcome, CgSettings, DenseOperator, IdentityOperator, LinearOperator};
pub use dense::{dense_normal_matrix, Cholesky};
pub use normal::{normal_apply, DiagScaling, NormalOperator};
pub use prox::{
    block_soft_threshold, block_soft_threshold_in_place, soft_threshold, soft_threshold_in_place,
    soft_threshold_scalar,
};
pub use sparse::{CsrBuilder, CsrMatrix};
