//! The Gram-type operator of the ADMM X-subproblem.

use crate::basis::ObservationBlocks;
use crate::error::{check_len, Error, Result};
use crate::linalg::cg::LinearOperator;
use crate::scalar::Scalar;

/// Per-coefficient regularization weights: `λ_j` repeated over the `n_j`
/// coefficients of level `j`. All weights are strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagScaling<T> {
    weights: Vec<T>,
}

impl<T: Scalar> DiagScaling<T> {
    pub fn from_levels(lambda: &[T], level_dims: &[usize]) -> Result<Self> {
        check_len("per-level weights", level_dims.len(), lambda.len())?;
        let weights = lambda
            .iter()
            .zip(level_dims)
            .flat_map(|(&l, &n)| std::iter::repeat_n(l, n))
            .collect();
        Self::new(weights)
    }

    pub fn new(weights: Vec<T>) -> Result<Self> {
        if let Some(w) = weights
            .iter()
            .find(|w| !(**w > T::zero()) || !w.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "regularization weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(value: T, n: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `λ ∘ x`
    pub fn scale(&self, x: &[T]) -> Vec<T> {
        self.weights.iter().zip(x).map(|(&w, &v)| w * v).collect()
    }
}

/// `x ↦ 2·Aᵀ(A x) + β·λ²∘x`, applied blockwise without forming `AᵀA`.
#[derive(Debug, Clone, Copy)]
pub struct NormalOperator<'a, T> {
    blocks: &'a ObservationBlocks<T>,
    weights: &'a [T],
    beta: T,
}

impl<'a, T: Scalar> NormalOperator<'a, T> {
    pub fn new(
        blocks: &'a ObservationBlocks<T>,
        scaling: &'a DiagScaling<T>,
        beta: T,
    ) -> Result<Self> {
        check_len("normal operator weights", blocks.n_cols(), scaling.len())?;
        Ok(Self {
            blocks,
            weights: scaling.weights(),
            beta,
        })
    }

    /// `2AᵀA + β·diag(w²)` from raw weights; unit weights give `2AᵀA + βI`.
    pub fn from_weights(
        blocks: &'a ObservationBlocks<T>,
        weights: &'a [T],
        beta: T,
    ) -> Result<Self> {
        check_len("normal operator weights", blocks.n_cols(), weights.len())?;
        Ok(Self {
            blocks,
            weights,
            beta,
        })
    }
}

impl<T: Scalar> LinearOperator<T> for NormalOperator<'_, T> {
    fn dim(&self) -> usize {
        self.blocks.n_cols()
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        let ax = self
            .blocks
            .apply(x)
            .expect("operator input has operator dimension");
        for ((o, &w), &xi) in out.iter_mut().zip(self.weights).zip(x) {
            *o = self.beta * w * w * xi;
        }
        let two = T::lit(2.0);
        let scaled: Vec<T> = ax.iter().map(|&v| two * v).collect();
        self.blocks
            .apply_transpose_add(&scaled, out)
            .expect("operator output has operator dimension");
    }
}

/// Applies `2Aᵀ(Ax) + β·λ²∘x`.
pub fn normal_apply<T: Scalar>(
    blocks: &ObservationBlocks<T>,
    scaling: &DiagScaling<T>,
    beta: T,
    x: &[T],
) -> Result<Vec<T>> {
    let op = NormalOperator::new(blocks, scaling, beta)?;
    check_len("normal operator input", op.dim(), x.len())?;
    let mut out = vec![T::zero(); x.len()];
    op.apply(x, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::scalar::dot;
    use proptest::prelude::*;

    fn random_blocks(seed: u64) -> ObservationBlocks<f64> {
        let mut rng = crate::experiments::SplitMix64::new(seed);
        let mut mk = |rows: usize, cols: usize| {
            let dense: Vec<f64> = (0..rows * cols)
                .map(|_| {
                    let u = rng.next_f64();
                    if u < 0.4 {
                        0.0
                    } else {
                        2.0 * rng.next_f64() - 1.0
                    }
                })
                .collect();
            CsrMatrix::from_dense(rows, cols, &dense).unwrap()
        };
        let a1 = mk(12, 5);
        let a2 = mk(12, 7);
        ObservationBlocks::from_blocks(vec![a1, a2]).unwrap()
    }

    #[test]
    fn zero_input_maps_to_zero() {
        let blocks = random_blocks(1);
        let s = DiagScaling::from_levels(&[0.5, 2.0], &blocks.level_dims()).unwrap();
        assert_eq!(
            normal_apply(&blocks, &s, 1.0, &[0.0; 12]).unwrap(),
            vec![0.0; 12]
        );
    }

    #[test]
    fn zero_data_operator_is_identity() {
        let blocks = ObservationBlocks::from_blocks(vec![CsrMatrix::<f64>::zeros(4, 3)]).unwrap();
        let s = DiagScaling::uniform(1.0, 3).unwrap();
        let x = vec![1.5, -2.0, 0.25];
        assert_eq!(normal_apply(&blocks, &s, 1.0, &x).unwrap(), x);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(DiagScaling::<f64>::from_levels(&[1.0, 0.0], &[2, 2]).is_err());
        assert!(DiagScaling::<f64>::from_levels(&[1.0], &[2, 2]).is_err());
        let s = DiagScaling::from_levels(&[1.0, 3.0], &[1, 2]).unwrap();
        assert_eq!(s.weights(), &[1.0, 3.0, 3.0]);
    }

    proptest! {
        #[test]
        fn symmetric_and_positive_definite(
            seed in any::<u64>(),
            x in prop::collection::vec(-1.0f64..1.0, 12),
            y in prop::collection::vec(-1.0f64..1.0, 12),
            l1 in 0.01f64..2.0,
            l2 in 0.01f64..2.0,
        ) {
            let blocks = random_blocks(seed);
            let s = DiagScaling::from_levels(&[l1, l2], &blocks.level_dims()).unwrap();
            let nx = normal_apply(&blocks, &s, 1.0, &x).unwrap();
            let ny = normal_apply(&blocks, &s, 1.0, &y).unwrap();
            prop_assert!((dot(&nx, &y) - dot(&x, &ny)).abs() < 1e-10);
            if x.iter().any(|&v| v != 0.0) {
                prop_assert!(dot(&x, &nx) > 0.0);
            }
        }
    }
}
