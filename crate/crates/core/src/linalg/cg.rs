//! Matrix-free conjugate gradients for symmetric positive-definite systems.

use crate::error::{check_len, Result};
use crate::scalar::{dot, norm2, Scalar};

/// A square linear map applied without materializing its matrix.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;

    /// `out = Op(x)`; both slices have length `dim()`.
    fn apply(&self, x: &[T], out: &mut [T]);
}

/// Dense row-major square matrix viewed as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseOperator<T> {
    pub fn new(n: usize, data: Vec<T>) -> Result<Self> {
        check_len("dense operator", n * n, data.len())?;
        Ok(Self { n, data })
    }
}

impl<T: Scalar> LinearOperator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        for (row, o) in self.data.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = dot(row, x);
        }
    }
}

/// Identity map of a given dimension.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl<T: Scalar> LinearOperator<T> for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings<T> {
    pub rel_tol: T,
    /// `None` means `10 · dim`.
    pub max_iter: Option<usize>,
}

impl<T: Scalar> Default for CgSettings<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Norm of the recursively updated residual at exit.
    pub residual_norm: T,
    pub converged: bool,
}

/// Solves `Op(x) = rhs`, stopping once `‖rhs − Op(x)‖₂ ≤ rel_tol·‖rhs‖₂`.
///
/// `x0` warm-starts the iteration. A zero right-hand side returns the zero
/// vector without iterating. Hitting `max_iter` is not an error: the last
/// iterate comes back with `converged == false`.
pub fn cg_solve<T, Op>(
    op: &Op,
    rhs: &[T],
    x0: Option<&[T]>,
    settings: CgSettings<T>,
) -> Result<CgOutcome<T>>
where
    T: Scalar,
    Op: LinearOperator<T> + ?Sized,
{
    let n = op.dim();
    check_len("cg right-hand side", n, rhs.len())?;
    if let Some(x0) = x0 {
        check_len("cg initial guess", n, x0.len())?;
    }
    let max_iter = settings.max_iter.unwrap_or(10 * n);

    let rhs_norm = norm2(rhs);
    if rhs_norm == T::zero() {
        return Ok(CgOutcome {
            x: vec![T::zero(); n],
            iterations: 0,
            residual_norm: T::zero(),
            converged: true,
        });
    }
    let target = settings.rel_tol * rhs_norm;

    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let mut r = rhs.to_vec();
    let mut ap = vec![T::zero(); n];
    if x0.is_some() {
        op.apply(&x, &mut ap);
        for (ri, &a) in r.iter_mut().zip(&ap) {
            *ri = *ri - a;
        }
    }
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual_norm: rr.sqrt(),
            converged: true,
        });
    }

    let mut p = r.clone();
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            // loss of positive definiteness (or breakdown in low precision)
            return Ok(CgOutcome {
                x,
                iterations: it - 1,
                residual_norm: rr.sqrt(),
                converged: false,
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= target {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual_norm: rr_next.sqrt(),
                converged: true,
            });
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(CgOutcome {
        x,
        iterations: max_iter,
        residual_norm: rr.sqrt(),
        converged: false,
    })
}
