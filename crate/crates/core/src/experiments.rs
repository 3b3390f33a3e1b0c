//! Test functions, reproducible scattered samples, the noise model and the
//! error metrics used to compare fits.
//!
//! # Random stream
//!
//! All randomness comes from SplitMix64. With 64-bit wrapping arithmetic:
//!
//! ```text
//! state ← state + 0x9E3779B97F4A7C15
//! z ← state
//! z ← (z ⊕ (z >> 30)) × 0xBF58476D1CE4E5B9
//! z ← (z ⊕ (z >> 27)) × 0x94D049BB133111EB
//! output z ⊕ (z >> 31)
//! ```
//!
//! A user seed `s` is split into independent streams by starting from
//! `state = s ⊕ (0xD1B54A32D192ED03 × (stream + 1))`; stream 0 draws the
//! scatter points, stream 1 the noise. A uniform double on `[0, 1)` is
//! `(z >> 11) · 2⁻⁵³`, and on the open interval `(0, 1)` it is
//! `((z >> 11) + ½) · 2⁻⁵³`. Points draw `x` then `y` for each sample.

use std::fmt;
use std::str::FromStr;

use crate::basis::{eval_surface, Domain, MultilevelBasis, Point};
use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;
use crate::solver::CoefBlocks;

pub const POINT_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// SplitMix64 generator; see the module docs for the exact recurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream `stream` of user seed `seed`.
    pub fn for_stream(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ 0xD1B5_4A32_D192_ED03u64.wrapping_mul(stream.wrapping_add(1)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// Discontinuous across the unit circle.
    F1,
    /// Continuous with a kink at the origin and a jump in slope on the unit circle.
    F2,
    /// Smooth rational-cosine surface.
    F3,
    /// Franke's four-exponential surface.
    F4,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];

    pub fn eval<T: Scalar>(self, x: T, y: T) -> T {
        let c = T::lit;
        let r2 = x * x + y * y;
        match self {
            Self::F1 => {
                if r2 > T::one() {
                    x + y
                } else if r2 == T::zero() {
                    T::zero()
                } else {
                    x * x * y / r2
                }
            }
            Self::F2 => {
                if r2 > T::one() {
                    x * y
                } else if r2 == T::zero() {
                    T::zero()
                } else {
                    x * y / r2.sqrt()
                }
            }
            Self::F3 => {
                let u = c(3.0) * x - T::one();
                (c(1.25) + (c(5.4) * y).cos()) / (c(6.0) + c(6.0) * u * u)
            }
            Self::F4 => {
                let nx = c(9.0) * x;
                let ny = c(9.0) * y;
                let sq = |v: T| v * v;
                c(0.75) * (-(sq(nx - c(2.0)) + sq(ny - c(2.0))) / c(4.0)).exp()
                    + c(0.75) * (-sq(nx + T::one()) / c(49.0) - sq(ny + T::one()) / c(10.0)).exp()
                    + c(0.5) * (-(sq(nx - c(7.0)) + sq(ny - c(3.0))) / c(4.0)).exp()
                    - c(0.2) * (-sq(nx - c(4.0)) - sq(ny - c(7.0))).exp()
            }
        }
    }

    pub fn eval_at<T: Scalar>(self, p: Point<T>) -> T {
        self.eval(p[0], p[1])
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::F3 => "f3",
            Self::F4 => "f4",
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" | "franke" => Ok(Self::F4),
            other => Err(Error::Config(format!("unknown test function `{other}`"))),
        }
    }
}

/// `n` points drawn i.i.d. uniformly on `domain`.
pub fn sample_scatter<T: Scalar>(n: usize, seed: u64, domain: &Domain<T>) -> Vec<Point<T>> {
    let mut rng = SplitMix64::for_stream(seed, POINT_STREAM);
    (0..n)
        .map(|_| {
            let ux = T::lit(rng.next_f64());
            let uy = T::lit(rng.next_f64());
            [
                (domain.x_min + domain.width() * ux).min(domain.x_max),
                (domain.y_min + domain.height() * uy).min(domain.y_max),
            ]
        })
        .collect()
}

/// Adds i.i.d. uniform noise on `(−a, a)` with `a = max_i |v_i| / 10`.
pub fn add_noise<T: Scalar>(values: &[T], seed: u64) -> Vec<T> {
    let amplitude = noise_amplitude(values).to_f64_lossy();
    let mut rng = SplitMix64::for_stream(seed, NOISE_STREAM);
    values
        .iter()
        .map(|&v| {
            let eps = amplitude * (2.0 * rng.next_open_f64() - 1.0);
            v + T::lit(eps)
        })
        .collect()
}

pub fn noise_amplitude<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |m, v| m.max(v.abs())) / T::lit(10.0)
}

/// Noisy samples of a test function together with the noise-free truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub points: Vec<Point<T>>,
    pub truth: Vec<T>,
    pub observed: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn generate(function: TestFunction, n: usize, seed: u64, domain: &Domain<T>) -> Self {
        let points = sample_scatter(n, seed, domain);
        let truth: Vec<T> = points.iter().map(|&p| function.eval_at(p)).collect();
        let observed = add_noise(&truth, seed);
        Self {
            points,
            truth,
            observed,
        }
    }
}

/// Regular `m × n` evaluation grid whose nodes include the domain corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricGrid {
    pub m: usize,
    pub n: usize,
}

impl Default for MetricGrid {
    fn default() -> Self {
        Self { m: 50, n: 50 }
    }
}

impl MetricGrid {
    fn node<T: Scalar>(lo: T, span: T, i: usize, count: usize) -> T {
        if count <= 1 {
            return lo;
        }
        lo + span * (T::from_usize_lossy(i) / T::from_usize_lossy(count - 1))
    }

    pub fn xs<T: Scalar>(&self, domain: &Domain<T>) -> Vec<T> {
        (0..self.m)
            .map(|i| Self::node(domain.x_min, domain.width(), i, self.m))
            .collect()
    }

    pub fn ys<T: Scalar>(&self, domain: &Domain<T>) -> Vec<T> {
        (0..self.n)
            .map(|j| Self::node(domain.y_min, domain.height(), j, self.n))
            .collect()
    }

    /// Nodes in `i`-major order.
    pub fn nodes<T: Scalar>(&self, domain: &Domain<T>) -> Vec<Point<T>> {
        let ys = self.ys(domain);
        self.xs(domain)
            .into_iter()
            .flat_map(|x| ys.iter().map(move |&y| [x, y]))
            .collect()
    }
}

fn root_mean_square<T: Scalar>(diffs: impl Iterator<Item = T>, count: usize) -> T {
    let ss = diffs.fold(T::zero(), |acc, d| acc + d * d);
    (ss / T::from_usize_lossy(count)).sqrt()
}

/// Root-mean-square deviation between `g` and `f` over the grid nodes.
pub fn rms_error<T, G, F>(g: G, f: F, grid: MetricGrid, domain: &Domain<T>) -> T
where
    T: Scalar,
    G: Fn(Point<T>) -> T,
    F: Fn(Point<T>) -> T,
{
    let nodes = grid.nodes(domain);
    root_mean_square(nodes.iter().map(|&p| g(p) - f(p)), nodes.len())
}

/// Root-mean-square deviation between `g` and the true values at the data points.
pub fn data_error<T, G>(g: G, points: &[Point<T>], true_values: &[T]) -> Result<T>
where
    T: Scalar,
    G: Fn(Point<T>) -> T,
{
    check_len("data error values", points.len(), true_values.len())?;
    if points.is_empty() {
        return Err(Error::InvalidParameter(
            "data error needs at least one point".into(),
        ));
    }
    Ok(root_mean_square(
        points.iter().zip(true_values).map(|(&p, &v)| g(p) - v),
        points.len(),
    ))
}

/// Count of exactly nonzero coefficients per level.
pub fn l0_per_level<T: Scalar>(coefs: &CoefBlocks<T>) -> Vec<usize> {
    coefs
        .blocks()
        .map(|b| b.iter().filter(|v| **v != T::zero()).count())
        .collect()
}

/// `(Error, RMS)` of a fitted surface against a test function.
pub fn score<T: Scalar>(
    basis: &MultilevelBasis<T>,
    coefs: &CoefBlocks<T>,
    function: TestFunction,
    points: &[Point<T>],
    grid: MetricGrid,
) -> (T, T) {
    let g = |p: Point<T>| eval_surface(basis, coefs, p);
    let truth: Vec<T> = points.iter().map(|&p| function.eval_at(p)).collect();
    let error = data_error(g, points, &truth).unwrap_or_else(|_| T::nan());
    let rms = rms_error(g, |p| function.eval_at(p), grid, basis.domain());
    (error, rms)
}
