//! Sparse surface reconstruction from scattered data.
//!
//! A surface is represented in a hierarchy of dyadically refined
//! tensor-product quadratic B-spline spaces and fitted with an
//! l1 penalty carrying its own weight on every level. The resulting
//! multilevel LASSO problem is solved by ADMM (a cached Cholesky factor or
//! conjugate gradients for the quadratic step, soft thresholding for the l1
//! step), after which small coefficients are removed. Multilevel least squares and the adaptive group
//! LASSO are provided as comparison methods.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the usual double-precision instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod basis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod scalar;
pub mod solver;

pub use basis::{
    assemble_observation, bspline2, build_index_set, eval_surface, tensor_eval, Domain, LevelGrid,
    MultilevelBasis, ObservationBlocks, Point,
};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use solver::{
    admm_step, fit, hard_threshold, objective, solve_mlasso, AdmmState, CoefBlocks, FitReport,
    InnerSolver, MlassoSolution, SolverParams,
};

pub type Domain64 = Domain<f64>;
pub type Basis64 = MultilevelBasis<f64>;
pub type Blocks64 = ObservationBlocks<f64>;
pub type Coefs64 = CoefBlocks<f64>;
pub type Params64 = SolverParams<f64>;

pub type Domain32 = Domain<f32>;
pub type Basis32 = MultilevelBasis<f32>;
pub type Blocks32 = ObservationBlocks<f32>;
pub type Coefs32 = CoefBlocks<f32>;
pub type Params32 = SolverParams<f32>;
