//! The multilevel LASSO model and its ADMM solver.
//!
//! Minimizes `‖Σ_j A_j X_j − f‖₂² + Σ_j λ_j ‖X_j‖₁` through the splitting
//! `d = λX`:
//!
//! ```text
//! (2AᵀA + βλ²) X⁺ = 2Aᵀf + βλ(d − b/β)        (Cholesky or conjugate gradients)
//! d⁺ = T_{1/β}(λX⁺ + b/β)                      (soft thresholding)
//! b⁺ = b + (λX⁺ − d⁺)
//! ```
//!
//! starting from `X = d = b = 0` and stopping at the first iterate with
//! `‖d − λX‖₂ ≤ ε`. Coefficients with `|X_i| ≤ σ` are then zeroed.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{assemble_observation, eval_surface, MultilevelBasis, ObservationBlocks, Point};
use crate::error::{check_len, Error, Result};
use crate::experiments::{data_error, l0_per_level};
use crate::linalg::{
    cg_solve, dense_normal_matrix, soft_threshold_scalar, CgSettings, Cholesky, DiagScaling,
    NormalOperator,
};
use crate::scalar::{dist2, Scalar};

/// Coefficients `X = (X_1, …, X_J)` stored contiguously, one block per level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefBlocks<T> {
    values: Vec<T>,
    offsets: Vec<usize>,
}

impl<T: Scalar> CoefBlocks<T> {
    pub fn zeros(level_dims: &[usize]) -> Self {
        let total = level_dims.iter().sum();
        Self::from_vec(vec![T::zero(); total], level_dims).expect("lengths agree")
    }

    pub fn from_vec(values: Vec<T>, level_dims: &[usize]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(level_dims.len() + 1);
        offsets.push(0);
        for &n in level_dims {
            offsets.push(offsets.last().unwrap() + n);
        }
        check_len("coefficient blocks", *offsets.last().unwrap(), values.len())?;
        Ok(Self { values, offsets })
    }

    pub fn num_levels(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, j: usize) -> &[T] {
        &self.values[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.values[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.offsets.windows(2).map(|w| &self.values[w[0]..w[1]])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }
}

/// How the X-update system is solved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerSolver {
    /// Cholesky up to [`DENSE_LIMIT`] unknowns, conjugate gradients beyond.
    #[default]
    Auto,
    /// Matrix-free conjugate gradients, warm-started from the previous X.
    Cg,
    /// One dense factorization reused by every iteration.
    Cholesky,
}

/// Largest system handed to the dense factorization under [`InnerSolver::Auto`].
pub const DENSE_LIMIT: usize = 4096;

impl std::str::FromStr for InnerSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "cg" => Ok(Self::Cg),
            "cholesky" => Ok(Self::Cholesky),
            other => Err(Error::InvalidParameter(format!(
                "unknown inner solver '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for InnerSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Cg => "cg",
            Self::Cholesky => "cholesky",
        })
    }
}

/// The X-update `(2AᵀA + β·diag(w²)) X = rhs` with a fixed matrix.
#[derive(Debug)]
pub(crate) enum XUpdate<'a, T> {
    Cg(NormalOperator<'a, T>, CgSettings<T>),
    Factored(Cholesky<T>),
}

impl<'a, T: Scalar> XUpdate<'a, T> {
    /// Falls back to conjugate gradients when the factorization breaks down.
    pub(crate) fn new(
        blocks: &'a ObservationBlocks<T>,
        weights: &'a [T],
        beta: T,
        inner: InnerSolver,
        cg: CgSettings<T>,
    ) -> Result<Self> {
        let n = blocks.n_cols();
        let dense = match inner {
            InnerSolver::Cg => false,
            InnerSolver::Cholesky => true,
            InnerSolver::Auto => n <= DENSE_LIMIT,
        };
        if dense {
            let shift: Vec<T> = weights.iter().map(|&w| beta * w * w).collect();
            let m = dense_normal_matrix(blocks, &shift)?;
            if let Ok(chol) = Cholesky::factor(n, m) {
                return Ok(Self::Factored(chol));
            }
        }
        Ok(Self::Cg(
            NormalOperator::from_weights(blocks, weights, beta)?,
            cg,
        ))
    }

    /// Returns the new X and whether the solve met its tolerance.
    pub(crate) fn solve(&self, rhs: Vec<T>, warm: &[T]) -> Result<(Vec<T>, bool)> {
        match self {
            Self::Cg(op, settings) => {
                let sol = cg_solve(op, &rhs, Some(warm), *settings)?;
                Ok((sol.x, sol.converged))
            }
            Self::Factored(chol) => {
                let mut x = rhs;
                chol.solve_in_place(&mut x)?;
                Ok((x, true))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams<T> {
    /// One positive weight per level.
    pub lambda: Vec<T>,
    pub beta: T,
    /// Stopping threshold on `‖d − λX‖₂`.
    pub eps: T,
    /// Hard threshold applied after the iteration.
    pub sigma: T,
    pub max_outer: usize,
    pub inner: InnerSolver,
    pub cg: CgSettings<T>,
}

pub const DEFAULT_MAX_OUTER: usize = 200_000;

impl<T: Scalar> SolverParams<T> {
    /// `β = 1`, `ε = 1e-4`, `σ = 1e-3`, at most [`DEFAULT_MAX_OUTER`] outer
    /// iterations.
    pub fn new(lambda: Vec<T>) -> Self {
        Self {
            lambda,
            beta: T::one(),
            eps: T::lit(1e-4),
            sigma: T::lit(1e-3),
            max_outer: DEFAULT_MAX_OUTER,
            inner: InnerSolver::Auto,
            cg: CgSettings::default(),
        }
    }

    pub fn uniform(value: T, levels: usize) -> Self {
        Self::new(vec![value; levels])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: T| Error::InvalidParameter(format!("{what} = {v}"));
        if self.lambda.is_empty() {
            return Err(Error::InvalidParameter(
                "no regularization weights given".into(),
            ));
        }
        if let Some(&l) = self
            .lambda
            .iter()
            .find(|l| !(**l > T::zero()) || !l.is_finite())
        {
            return Err(bad("lambda must be positive, got lambda_j", l));
        }
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return Err(bad("beta must be positive, got beta", self.beta));
        }
        if !(self.eps > T::zero()) {
            return Err(bad("eps must be positive, got eps", self.eps));
        }
        if !(self.sigma >= T::zero()) {
            return Err(bad("sigma must be non-negative, got sigma", self.sigma));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter(
                "max_outer must be at least 1".into(),
            ));
        }
        if !(self.cg.rel_tol > T::zero()) {
            return Err(bad("cg tolerance must be positive, got", self.cg.rel_tol));
        }
        Ok(())
    }
}

/// Primal `X`, split variable `d` and dual `b` of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T> {
    pub x: Vec<T>,
    pub d: Vec<T>,
    pub b: Vec<T>,
    pub iteration: usize,
    /// Number of X-updates whose inner CG solve stopped short of its tolerance.
    pub cg_failures: usize,
}

impl<T: Scalar> AdmmState<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![T::zero(); n],
            d: vec![T::zero(); n],
            b: vec![T::zero(); n],
            iteration: 0,
            cg_failures: 0,
        }
    }

    /// `‖d − λX‖₂`
    pub fn primal_residual(&self, scaling: &DiagScaling<T>) -> T {
        let lx = scaling.scale(&self.x);
        dist2(&self.d, &lx)
    }
}

/// Precomputed pieces shared by every iteration of one solve.
#[derive(Debug)]
pub struct Admm<'a, T> {
    blocks: &'a ObservationBlocks<T>,
    scaling: &'a DiagScaling<T>,
    beta: T,
    two_atf: Vec<T>,
    update: XUpdate<'a, T>,
}

impl<'a, T: Scalar> Admm<'a, T> {
    pub fn new(
        blocks: &'a ObservationBlocks<T>,
        f: &[T],
        scaling: &'a DiagScaling<T>,
        beta: T,
        inner: InnerSolver,
        cg: CgSettings<T>,
    ) -> Result<Self> {
        check_len("data vector", blocks.n_rows(), f.len())?;
        check_len("regularization weights", blocks.n_cols(), scaling.len())?;
        let two = T::lit(2.0);
        let two_atf = blocks
            .apply_transpose(f)?
            .into_iter()
            .map(|v| two * v)
            .collect();
        let update = XUpdate::new(blocks, scaling.weights(), beta, inner, cg)?;
        Ok(Self {
            blocks,
            scaling,
            beta,
            two_atf,
            update,
        })
    }

    /// True when the X-update uses a cached factorization.
    pub fn is_factored(&self) -> bool {
        matches!(self.update, XUpdate::Factored(_))
    }

    pub fn step(&self, state: &mut AdmmState<T>) -> Result<()> {
        let n = self.blocks.n_cols();
        check_len("admm state", n, state.x.len())?;
        check_len("admm state", n, state.d.len())?;
        check_len("admm state", n, state.b.len())?;
        let w = self.scaling.weights();
        let beta = self.beta;

        let rhs: Vec<T> = (0..n)
            .map(|i| self.two_atf[i] + beta * w[i] * (state.d[i] - state.b[i] / beta))
            .collect();
        let (x, ok) = self.update.solve(rhs, &state.x)?;
        if !ok {
            state.cg_failures += 1;
        }
        state.x = x;

        let theta = T::one() / beta;
        for i in 0..n {
            let lx = w[i] * state.x[i];
            state.d[i] = soft_threshold_scalar(lx + state.b[i] / beta, theta);
            state.b[i] = state.b[i] + (lx - state.d[i]);
        }
        state.iteration += 1;
        Ok(())
    }
}

/// One iteration of the splitting.
pub fn admm_step<T: Scalar>(
    state: &AdmmState<T>,
    blocks: &ObservationBlocks<T>,
    f: &[T],
    scaling: &DiagScaling<T>,
    beta: T,
) -> Result<AdmmState<T>> {
    let admm = Admm::new(
        blocks,
        f,
        scaling,
        beta,
        InnerSolver::Cg,
        CgSettings::default(),
    )?;
    let mut next = state.clone();
    admm.step(&mut next)?;
    Ok(next)
}

/// `‖AX − f‖₂² + Σ_i λ_i |X_i|`
pub fn objective<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    f: &[T],
    scaling: &DiagScaling<T>,
    x: &[T],
) -> Result<T> {
    check_len("data vector", blocks.n_rows(), f.len())?;
    check_len("regularization weights", x.len(), scaling.len())?;
    let ax = blocks.apply(x)?;
    let fit = ax
        .iter()
        .zip(f)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    let penalty = scaling
        .weights()
        .iter()
        .zip(x)
        .fold(T::zero(), |acc, (&w, &v)| acc + w * v.abs());
    Ok(fit + penalty)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlassoSolution<T> {
    /// The iterate before hard thresholding.
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: T,
    pub cg_failures: usize,
    pub state: AdmmState<T>,
}

/// Runs the iteration from zero until `‖d − λX‖₂ ≤ ε` or `max_outer`.
///
/// Running out of iterations is reported through `converged`, not as an error.
pub fn solve_mlasso<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    f: &[T],
    params: &SolverParams<T>,
) -> Result<MlassoSolution<T>> {
    params.validate()?;
    let scaling = DiagScaling::from_levels(&params.lambda, &blocks.level_dims())?;
    let admm = Admm::new(blocks, f, &scaling, params.beta, params.inner, params.cg)?;
    let mut state = AdmmState::zeros(blocks.n_cols());
    let mut residual = T::infinity();
    while state.iteration < params.max_outer {
        admm.step(&mut state)?;
        residual = state.primal_residual(&scaling);
        if residual <= params.eps {
            break;
        }
    }
    Ok(MlassoSolution {
        x: state.x.clone(),
        iterations: state.iteration,
        converged: residual <= params.eps,
        primal_residual: residual,
        cg_failures: state.cg_failures,
        state,
    })
}

/// Zeroes every coefficient with `|X_i| ≤ σ`.
pub fn hard_threshold<T: Scalar>(x: &CoefBlocks<T>, sigma: T) -> CoefBlocks<T> {
    let mut out = x.clone();
    for v in out.values_mut() {
        if v.abs() <= sigma {
            *v = T::zero();
        }
    }
    out
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: String,
    pub l0: Vec<usize>,
    /// RMS deviation at the data points.
    pub error: f64,
    /// RMS deviation on the metric grid, when a reference surface is known.
    pub rms: Option<f64>,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    /// The solved model's objective at the pre-threshold solution.
    pub objective: f64,
    pub converged: bool,
}

/// Solves and thresholds in one go: assembly, iteration, thresholding and a
/// report whose `error` is measured against `values` and whose `rms` is
/// unset.
pub fn fit<T: Scalar>(
    points: &[Point<T>],
    values: &[T],
    basis: &MultilevelBasis<T>,
    params: &SolverParams<T>,
) -> Result<(CoefBlocks<T>, FitReport)> {
    check_len("data values", points.len(), values.len())?;
    if points.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one data point is required".into(),
        ));
    }
    check_len(
        "regularization weights per level",
        basis.num_levels(),
        params.lambda.len(),
    )?;
    params.validate()?;
    let blocks = assemble_observation(basis, points)?;

    let start = Instant::now();
    let sol = solve_mlasso(&blocks, values, params)?;
    let wall = start.elapsed().as_secs_f64();

    let scaling = DiagScaling::from_levels(&params.lambda, &blocks.level_dims())?;
    let obj = objective(&blocks, values, &scaling, &sol.x)?;
    let raw = CoefBlocks::from_vec(sol.x, &basis.level_dims())?;
    let coefs = hard_threshold(&raw, params.sigma);
    let error = data_error(|p| eval_surface(basis, &coefs, p), points, values)?;
    let report = FitReport {
        method: "mlasso".into(),
        l0: l0_per_level(&coefs),
        error: error.to_f64_lossy(),
        rms: None,
        iterations: sol.iterations,
        wall_time_seconds: wall,
        objective: obj.to_f64_lossy(),
        converged: sol.converged,
    };
    Ok((coefs, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;
    use crate::experiments::sample_scatter;
    use crate::linalg::CsrMatrix;

    fn scalar_problem() -> ObservationBlocks<f64> {
        ObservationBlocks::from_blocks(vec![CsrMatrix::identity(1)]).unwrap()
    }

    #[test]
    fn objective_cases() {
        let a = ObservationBlocks::from_blocks(vec![CsrMatrix::<f64>::identity(3)]).unwrap();
        let s = DiagScaling::uniform(1.0, 3).unwrap();
        let f = [1.0, -2.0, 0.5];
        assert_eq!(objective(&a, &f, &s, &[0.0; 3]).unwrap(), 5.25);
        assert_eq!(objective(&a, &[0.0; 3], &s, &[0.0; 3]).unwrap(), 0.0);
        assert_eq!(
            objective(&a, &[1.0, 0.0, 0.0], &s, &[1.0, 0.0, 0.0]).unwrap(),
            1.0
        );
        assert!(objective(&a, &f[..2], &s, &[0.0; 3]).is_err());
    }

    #[test]
    fn zero_operator_is_a_fixed_point() {
        let a = ObservationBlocks::from_blocks(vec![CsrMatrix::<f64>::zeros(4, 3)]).unwrap();
        let s = DiagScaling::uniform(1.0, 3).unwrap();
        let next = admm_step(&AdmmState::zeros(3), &a, &[1.0, 2.0, 3.0, 4.0], &s, 1.0).unwrap();
        assert_eq!(next.x, vec![0.0; 3]);
        assert_eq!(next.d, vec![0.0; 3]);
        assert_eq!(next.b, vec![0.0; 3]);
        assert_eq!(next.iteration, 1);
    }

    #[test]
    fn scalar_trace_matches_exact_arithmetic() {
        // A = [1], f = [1], λ = 2, β = 1; iterates computed with exact rationals.
        let a = scalar_problem();
        let s = DiagScaling::uniform(2.0, 1).unwrap();
        let expected = [
            (1.0 / 3.0, 0.0, 2.0 / 3.0),
            (1.0 / 9.0, 0.0, 8.0 / 9.0),
            (1.0 / 27.0, 0.0, 26.0 / 27.0),
            (1.0 / 81.0, 0.0, 80.0 / 81.0),
        ];
        let mut state = AdmmState::zeros(1);
        for (x, d, b) in expected {
            state = admm_step(&state, &a, &[1.0], &s, 1.0).unwrap();
            assert!((state.x[0] - x).abs() < 1e-14);
            assert!((state.d[0] - d).abs() < 1e-14);
            assert!((state.b[0] - b).abs() < 1e-14);
        }
    }

    #[test]
    fn converged_state_is_stationary() {
        // min (x − 3)² + |x|  =>  x = 2.5, d = λx, b = β·(1 / β) = 1 at the optimum.
        let a = scalar_problem();
        let s = DiagScaling::uniform(1.0, 1).unwrap();
        let state = AdmmState {
            x: vec![2.5],
            d: vec![2.5],
            b: vec![1.0],
            iteration: 0,
            cg_failures: 0,
        };
        let next = admm_step(&state, &a, &[3.0], &s, 1.0).unwrap();
        assert!((next.x[0] - 2.5).abs() < 1e-12);
        assert!((next.d[0] - 2.5).abs() < 1e-12);
        assert!((next.b[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_data_converges_in_one_iteration() {
        let basis = MultilevelBasis::new(Domain::<f64>::unit_square(), 3, 2).unwrap();
        let pts = sample_scatter(60, 1, basis.domain());
        let a = assemble_observation(&basis, &pts).unwrap();
        let sol = solve_mlasso(&a, &vec![0.0; 60], &SolverParams::uniform(0.01, 2)).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.converged);
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_invalid_params() {
        let a = scalar_problem();
        let mut p = SolverParams::uniform(1.0, 1);
        p.beta = 0.0;
        assert!(solve_mlasso(&a, &[1.0], &p).is_err());
        let p = SolverParams::uniform(-1.0, 1);
        assert!(solve_mlasso(&a, &[1.0], &p).is_err());
        let mut p = SolverParams::uniform(1.0, 1);
        p.sigma = -1.0;
        assert!(p.validate().is_err());
        let p = SolverParams::uniform(1.0, 1);
        assert!(solve_mlasso(&a, &[1.0, 2.0], &p).is_err());
    }

    #[test]
    fn iteration_cap_is_flagged_not_an_error() {
        let a = scalar_problem();
        let mut p = SolverParams::uniform(2.0, 1);
        p.max_outer = 3;
        let sol = solve_mlasso(&a, &[1.0], &p).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn hard_threshold_cases() {
        let x = CoefBlocks::from_vec(vec![0.0005, -0.002, 0.001, -0.001, 0.0], &[2, 3]).unwrap();
        let t = hard_threshold(&x, 1e-3);
        assert_eq!(t.values(), &[0.0, -0.002, 0.0, 0.0, 0.0]);
        assert_eq!(hard_threshold(&t, 1e-3), t);
        let t0 = hard_threshold(&x, 0.0);
        assert_eq!(t0.values(), x.values());
    }

    #[test]
    fn coef_blocks_layout() {
        let c = CoefBlocks::from_vec((0..6).map(f64::from).collect(), &[1, 2, 3]).unwrap();
        assert_eq!(c.block(1), &[1.0, 2.0]);
        assert_eq!(c.block(2), &[3.0, 4.0, 5.0]);
        assert_eq!(c.level_dims(), vec![1, 2, 3]);
        assert!(CoefBlocks::from_vec(vec![0.0; 5], &[1, 2, 3]).is_err());
    }

    #[test]
    fn recovers_a_single_level_one_basis_function() {
        let basis = MultilevelBasis::new(Domain::<f64>::unit_square(), 3, 2).unwrap();
        let pts = sample_scatter(400, 8, basis.domain());
        let grid = &basis.levels()[0];
        let k = grid.index_of(12);
        let values: Vec<f64> = pts
            .iter()
            .map(|&p| crate::basis::tensor_eval(grid, k, p))
            .collect();
        let mut params = SolverParams::uniform(1e-6, 2);
        params.sigma = 0.0;
        let (_, report) = fit(&pts, &values, &basis, &params).unwrap();
        assert!(report.converged);
        assert!(report.error <= 1e-6, "error {}", report.error);
    }

    #[test]
    fn fit_rejects_mismatched_inputs() {
        let basis = MultilevelBasis::new(Domain::<f64>::unit_square(), 3, 2).unwrap();
        let p = SolverParams::uniform(0.01, 2);
        assert!(fit(&[[0.0, 0.0]], &[1.0, 2.0], &basis, &p).is_err());
        assert!(fit(&[], &[], &basis, &p).is_err());
        assert!(fit(
            &[[0.0, 0.0]],
            &[1.0],
            &basis,
            &SolverParams::uniform(0.01, 3)
        )
        .is_err());
        assert!(matches!(
            fit(&[[2.0, 0.0]], &[1.0], &basis, &p),
            Err(Error::PointOutsideDomain { .. })
        ));
    }
}
