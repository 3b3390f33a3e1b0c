//! Comparison methods: level-by-level residual least squares and the
//! adaptive group LASSO.

use crate::basis::ObservationBlocks;
use crate::error::{check_len, Error, Result};
use crate::linalg::{block_soft_threshold_in_place, cg_solve, CgSettings, NormalOperator};
use crate::scalar::{dist2, norm2, Scalar};
use crate::solver::CoefBlocks;
use crate::solver::{InnerSolver, XUpdate};

#[derive(Debug, Clone, PartialEq)]
pub struct LsqLevelResult<T> {
    /// Zero-based level.
    pub level: usize,
    pub coefs: Vec<T>,
    /// `r_j = r_{j−1} − A_j X_j` at the data points.
    pub residual: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqFit<T> {
    /// One block per assembled level; levels that were not fitted stay zero.
    pub coefs: CoefBlocks<T>,
    pub levels: Vec<LsqLevelResult<T>>,
    pub cg_failures: usize,
}

impl<T> LsqFit<T> {
    /// Number of levels actually fitted.
    pub fn levels_used(&self) -> usize {
        self.levels.len()
    }
}

/// Fits level after level to the residual of the coarser levels:
/// `X_j = argmin ‖A_j X_j − r_{j−1}‖² + ridge·‖X_j‖²`, stopping early once
/// `‖r_j‖_∞ ≤ stop_tol`.
pub fn multilevel_lsq<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    f: &[T],
    levels: usize,
    ridge: T,
    stop_tol: T,
) -> Result<LsqFit<T>> {
    check_len("data vector", blocks.n_rows(), f.len())?;
    if levels == 0 || levels > blocks.num_levels() {
        return Err(Error::InvalidParameter(format!(
            "requested {levels} levels but {} are assembled",
            blocks.num_levels()
        )));
    }
    if !(ridge >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }

    let mut coefs = CoefBlocks::zeros(&blocks.level_dims());
    let mut residual = f.to_vec();
    let mut results = Vec::new();
    let mut cg_failures = 0;
    let two = T::lit(2.0);
    for j in 0..levels {
        let single = ObservationBlocks::from_blocks(vec![blocks.block(j).clone()])?;
        let ones = vec![T::one(); single.n_cols()];
        // 2(AᵀA + ridge·I) X = 2Aᵀr
        let op = NormalOperator::from_weights(&single, &ones, two * ridge)?;
        let rhs: Vec<T> = single
            .apply_transpose(&residual)?
            .into_iter()
            .map(|v| two * v)
            .collect();
        let sol = cg_solve(&op, &rhs, None, CgSettings::default())?;
        if !sol.converged {
            cg_failures += 1;
        }
        let fitted = single.apply(&sol.x)?;
        for (r, v) in residual.iter_mut().zip(&fitted) {
            *r = *r - *v;
        }
        coefs.block_mut(j).copy_from_slice(&sol.x);
        results.push(LsqLevelResult {
            level: j,
            coefs: sol.x,
            residual: residual.clone(),
        });
        let max_abs = residual.iter().fold(T::zero(), |m, r| m.max(r.abs()));
        if max_abs <= stop_tol {
            break;
        }
    }
    Ok(LsqFit {
        coefs,
        levels: results,
        cg_failures,
    })
}

/// `‖AX − f‖₂² + Σ_j μ_j ‖X_j‖₂`
pub fn group_objective<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    f: &[T],
    mu: &[T],
    x: &[T],
) -> Result<T> {
    check_len("data vector", blocks.n_rows(), f.len())?;
    check_len("group weights", blocks.num_levels(), mu.len())?;
    let ax = blocks.apply(x)?;
    let fit = ax
        .iter()
        .zip(f)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    let penalty = (0..blocks.num_levels()).fold(T::zero(), |acc, j| {
        acc + mu[j] * norm2(&x[blocks.level_range(j)])
    });
    Ok(fit + penalty)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AglassoSolution<T> {
    pub x: Vec<T>,
    pub d: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: T,
    pub cg_failures: usize,
}

/// Group LASSO by the same splitting with `d = X`:
///
/// ```text
/// (2AᵀA + βI) X⁺ = 2Aᵀf + β(d − b/β)
/// d_j⁺ = block_shrink(X_j⁺ + b_j/β, μ_j/β)
/// b⁺ = b + (X⁺ − d⁺)
/// ```
///
/// stopping once `‖d − X‖₂ ≤ ε`.
pub fn aglasso_solve<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    f: &[T],
    mu: &[T],
    beta: T,
    eps: T,
    max_outer: usize,
    inner: InnerSolver,
) -> Result<AglassoSolution<T>> {
    check_len("data vector", blocks.n_rows(), f.len())?;
    check_len("group weights", blocks.num_levels(), mu.len())?;
    if let Some(m) = mu.iter().find(|m| !(**m > T::zero())) {
        return Err(Error::InvalidParameter(format!(
            "group weights must be positive, got {m}"
        )));
    }
    if !(beta > T::zero()) || !(eps > T::zero()) || max_outer == 0 {
        return Err(Error::InvalidParameter(
            "beta and eps must be positive and max_outer at least 1".into(),
        ));
    }

    let n = blocks.n_cols();
    let two = T::lit(2.0);
    let two_atf: Vec<T> = blocks
        .apply_transpose(f)?
        .into_iter()
        .map(|v| two * v)
        .collect();
    let ones = vec![T::one(); n];
    let update = XUpdate::new(blocks, &ones, beta, inner, CgSettings::default())?;

    let mut x = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    let mut iterations = 0;
    let mut cg_failures = 0;
    let mut residual = T::infinity();
    while iterations < max_outer {
        let rhs: Vec<T> = (0..n)
            .map(|i| two_atf[i] + beta * (d[i] - b[i] / beta))
            .collect();
        let (next, ok) = update.solve(rhs, &x)?;
        if !ok {
            cg_failures += 1;
        }
        x = next;
        for j in 0..blocks.num_levels() {
            let range = blocks.level_range(j);
            let dj = &mut d[range.clone()];
            for ((dv, &xv), &bv) in dj.iter_mut().zip(&x[range.clone()]).zip(&b[range.clone()]) {
                *dv = xv + bv / beta;
            }
            block_soft_threshold_in_place(dj, mu[j] / beta);
        }
        for i in 0..n {
            b[i] = b[i] + (x[i] - d[i]);
        }
        iterations += 1;
        residual = dist2(&d, &x);
        if residual <= eps {
            break;
        }
    }
    Ok(AglassoSolution {
        x,
        d,
        iterations,
        converged: residual <= eps,
        primal_residual: residual,
        cg_failures,
    })
}
