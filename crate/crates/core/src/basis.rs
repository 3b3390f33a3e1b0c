//! Multilevel tensor-product quadratic B-spline bases on a rectangle.
//!
//! Level `j` uses spacing `h_j = h_1 / 2^(j-1)` where `h_1` splits each domain
//! edge into `base_intervals` uniform intervals. With grid coordinate
//! `s = (x − x_min) / h_j`, the basis function with index `k` is supported on
//! `[k, k + 3)` and the index set of a level with `m` intervals per axis is
//! `{−2, …, m − 1}²`: exactly the B-splines whose open support meets the
//! domain. Columns are ordered lexicographically in `(k1, k2)`.

use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrBuilder, CsrMatrix};
use crate::scalar::Scalar;
use crate::solver::CoefBlocks;

/// A point `(x, y)` in domain coordinates.
pub type Point<T> = [T; 2];

/// Uniform quadratic B-spline supported on `[0, 3)`.
#[inline]
pub fn bspline2<T: Scalar>(t: T) -> T {
    let half = T::lit(0.5);
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    if t < T::zero() || t >= three {
        T::zero()
    } else if t < one {
        half * t * t
    } else if t < two {
        half * (T::lit(-2.0) * t * t + T::lit(6.0) * t - three)
    } else {
        let u = three - t;
        half * u * u
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Scalar> Domain<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T) -> Result<Self> {
        if !(x_min < x_max) || !(y_min < y_max) {
            return Err(Error::InvalidParameter(format!(
                "empty domain [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `[−1, 1]²`
    pub fn unit_square() -> Self {
        let one = T::one();
        Self {
            x_min: -one,
            x_max: one,
            y_min: -one,
            y_max: one,
        }
    }

    /// Closed containment; the boundary belongs to the domain.
    pub fn contains(&self, p: Point<T>) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }
}

/// One resolution level: spacing, grid origin and the index set `I_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid<T> {
    level: usize,
    origin: Point<T>,
    base_spacing: [T; 2],
    scale: T,
    intervals: usize,
}

impl<T: Scalar> LevelGrid<T> {
    /// One-based level number.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn intervals_per_dim(&self) -> usize {
        self.intervals
    }

    /// Basis functions per axis, `intervals + 2`.
    pub fn per_dim(&self) -> usize {
        self.intervals + 2
    }

    pub fn dim(&self) -> usize {
        self.per_dim() * self.per_dim()
    }

    /// `(h_x, h_y)` at this level.
    pub fn spacing(&self) -> [T; 2] {
        [
            self.base_spacing[0] / self.scale,
            self.base_spacing[1] / self.scale,
        ]
    }

    /// Lowest basis index per axis.
    pub const MIN_INDEX: i64 = -2;

    /// Index set `I_j` in column order.
    pub fn index_set(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let hi = self.intervals as i64 - 1;
        (Self::MIN_INDEX..=hi).flat_map(move |k1| (Self::MIN_INDEX..=hi).map(move |k2| (k1, k2)))
    }

    pub fn contains_index(&self, k: (i64, i64)) -> bool {
        let hi = self.intervals as i64 - 1;
        (Self::MIN_INDEX..=hi).contains(&k.0) && (Self::MIN_INDEX..=hi).contains(&k.1)
    }

    /// Column of `k` within this level's block.
    pub fn column(&self, k: (i64, i64)) -> Option<usize> {
        self.contains_index(k).then(|| {
            let per = self.per_dim() as i64;
            ((k.0 - Self::MIN_INDEX) * per + (k.1 - Self::MIN_INDEX)) as usize
        })
    }

    /// Inverse of [`column`](Self::column).
    pub fn index_of(&self, column: usize) -> (i64, i64) {
        let per = self.per_dim();
        (
            (column / per) as i64 + Self::MIN_INDEX,
            (column % per) as i64 + Self::MIN_INDEX,
        )
    }

    /// Grid coordinates `2^(j-1)·(p − origin)/h`.
    pub fn grid_coords(&self, p: Point<T>) -> [T; 2] {
        [
            (p[0] - self.origin[0]) / self.base_spacing[0] * self.scale,
            (p[1] - self.origin[1]) / self.base_spacing[1] * self.scale,
        ]
    }

    /// Closed support box `[x0, x1] × [y0, y1]` of basis `k` (not clipped).
    pub fn support_box(&self, k: (i64, i64)) -> [T; 4] {
        let [hx, hy] = self.spacing();
        let k1 = T::lit(k.0 as f64);
        let k2 = T::lit(k.1 as f64);
        let three = T::lit(3.0);
        [
            self.origin[0] + k1 * hx,
            self.origin[0] + (k1 + three) * hx,
            self.origin[1] + k2 * hy,
            self.origin[1] + (k2 + three) * hy,
        ]
    }

    /// Calls `visit(column, value)` for every basis function that is nonzero
    /// at `p`, in increasing column order.
    pub fn for_each_nonzero(&self, p: Point<T>, mut visit: impl FnMut(usize, T)) {
        let [sx, sy] = self.grid_coords(p);
        let ax = self.axis_values(sx);
        let ay = self.axis_values(sy);
        let per = self.per_dim();
        for &(i1, v1) in ax.iter().flatten() {
            for &(i2, v2) in ay.iter().flatten() {
                visit(i1 * per + i2, v1 * v2);
            }
        }
    }

    /// Nonzero univariate values at grid coordinate `s` as
    /// `(offset into index range, value)`, ascending.
    fn axis_values(&self, s: T) -> [Option<(usize, T)>; 3] {
        let mut out = [None; 3];
        if !s.is_finite() {
            return out;
        }
        let base = s.floor().to_i64().unwrap_or(i64::MIN / 2);
        let hi = self.intervals as i64 - 1;
        for (slot, k) in (base - 2..=base).enumerate() {
            if k < Self::MIN_INDEX || k > hi {
                continue;
            }
            let v = bspline2(s - T::lit(k as f64));
            if v != T::zero() {
                out[slot] = Some(((k - Self::MIN_INDEX) as usize, v));
            }
        }
        out
    }
}

/// `φ(s_x − k1)·φ(s_y − k2)` for the level grid coordinates of `p`.
pub fn tensor_eval<T: Scalar>(grid: &LevelGrid<T>, k: (i64, i64), p: Point<T>) -> T {
    let [sx, sy] = grid.grid_coords(p);
    bspline2(sx - T::lit(k.0 as f64)) * bspline2(sy - T::lit(k.1 as f64))
}

/// Level `j` (one-based) of the dyadic hierarchy over `domain`.
pub fn build_index_set<T: Scalar>(
    level: usize,
    domain: &Domain<T>,
    base_intervals: usize,
) -> Result<LevelGrid<T>> {
    if base_intervals == 0 {
        return Err(Error::InvalidParameter(
            "base_intervals must be at least 1".into(),
        ));
    }
    if level == 0 {
        return Err(Error::InvalidParameter("levels are numbered from 1".into()));
    }
    let scale_int = 1usize
        .checked_shl(level as u32 - 1)
        .filter(|s| s.checked_mul(base_intervals).is_some())
        .ok_or_else(|| Error::InvalidParameter(format!("level {level} is too fine")))?;
    let m = T::from_usize_lossy(base_intervals);
    Ok(LevelGrid {
        level,
        origin: [domain.x_min, domain.y_min],
        base_spacing: [domain.width() / m, domain.height() / m],
        scale: T::from_usize_lossy(scale_int),
        intervals: base_intervals * scale_int,
    })
}

/// The `J` nested levels `S_1 ⊆ … ⊆ S_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelBasis<T> {
    domain: Domain<T>,
    base_intervals: usize,
    levels: Vec<LevelGrid<T>>,
}

impl<T: Scalar> MultilevelBasis<T> {
    pub fn new(domain: Domain<T>, base_intervals: usize, num_levels: usize) -> Result<Self> {
        if num_levels == 0 {
            return Err(Error::InvalidParameter(
                "at least one level is required".into(),
            ));
        }
        let levels = (1..=num_levels)
            .map(|j| build_index_set(j, &domain, base_intervals))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain,
            base_intervals,
            levels,
        })
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn base_intervals(&self) -> usize {
        self.base_intervals
    }

    pub fn levels(&self) -> &[LevelGrid<T>] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `n_j` for each level.
    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(LevelGrid::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.levels.iter().map(LevelGrid::dim).sum()
    }

    /// Zero coefficients laid out for this basis.
    pub fn zero_coefs(&self) -> CoefBlocks<T> {
        CoefBlocks::zeros(&self.level_dims())
    }
}

/// Per-level observation matrices `A_j(i, k) = φ_k^j(x_i)`, sharing the row
/// space of the `N` data points.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBlocks<T> {
    rows: usize,
    blocks: Vec<CsrMatrix<T>>,
    offsets: Vec<usize>,
}

impl<T: Scalar> ObservationBlocks<T> {
    /// Wraps arbitrary blocks that share a row count.
    pub fn from_blocks(blocks: Vec<CsrMatrix<T>>) -> Result<Self> {
        let rows = blocks.first().map_or(0, CsrMatrix::rows);
        for b in &blocks {
            check_len("observation block rows", rows, b.rows())?;
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.cols());
        }
        Ok(Self {
            rows,
            blocks,
            offsets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_levels(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CsrMatrix<T>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &CsrMatrix<T> {
        &self.blocks[j]
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(CsrMatrix::cols).collect()
    }

    /// Column range of level `j` (zero-based) in the stacked vector.
    pub fn level_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// `Σ_j A_j x_j`; each row accumulates levels in order, columns in order.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("observation apply", self.n_cols(), x.len())?;
        let mut y = vec![T::zero(); self.rows];
        for (j, block) in self.blocks.iter().enumerate() {
            let xj = &x[self.level_range(j)];
            for (r, out) in y.iter_mut().enumerate() {
                *out = block.row(r).fold(*out, |acc, (c, v)| acc + v * xj[c]);
            }
        }
        Ok(y)
    }

    /// `out += Aᵀ r` over all blocks.
    pub fn apply_transpose_add(&self, r: &[T], out: &mut [T]) -> Result<()> {
        check_len("observation transpose output", self.n_cols(), out.len())?;
        for (j, block) in self.blocks.iter().enumerate() {
            let range = self.level_range(j);
            block.spmv_transpose_add(r, &mut out[range])?;
        }
        Ok(())
    }

    pub fn apply_transpose(&self, r: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n_cols()];
        self.apply_transpose_add(r, &mut out)?;
        Ok(out)
    }

    /// The subset of levels `0..count` as a new set of blocks.
    pub fn truncated(&self, count: usize) -> Self {
        Self::from_blocks(self.blocks[..count.min(self.blocks.len())].to_vec())
            .expect("sub-blocks share row count")
    }
}

/// Evaluates every level's basis at every point.
///
/// Points must lie in the closed domain; anything else (including NaN) is
/// rejected.
pub fn assemble_observation<T: Scalar>(
    basis: &MultilevelBasis<T>,
    points: &[Point<T>],
) -> Result<ObservationBlocks<T>> {
    for (index, p) in points.iter().enumerate() {
        if !basis.domain().contains(*p) {
            return Err(Error::PointOutsideDomain {
                index,
                x: p[0].to_f64_lossy(),
                y: p[1].to_f64_lossy(),
            });
        }
    }
    let blocks = basis
        .levels()
        .iter()
        .map(|grid| {
            let mut builder = CsrBuilder::new(grid.dim());
            for p in points {
                grid.for_each_nonzero(*p, |col, v| builder.push(col, v));
                builder.finish_row();
            }
            builder.build()
        })
        .collect();
    ObservationBlocks::from_blocks(blocks)
}

/// `g(p) = Σ_j Σ_k X_k^j φ_k^j(p)`.
pub fn eval_surface<T: Scalar>(
    basis: &MultilevelBasis<T>,
    coefs: &CoefBlocks<T>,
    p: Point<T>,
) -> T {
    assert_eq!(
        coefs.level_dims(),
        basis.level_dims(),
        "coefficient layout does not match basis"
    );
    let mut acc = T::zero();
    for (j, grid) in basis.levels().iter().enumerate() {
        let xj = coefs.block(j);
        grid.for_each_nonzero(p, |col, v| acc = acc + v * xj[col]);
    }
    acc
}
