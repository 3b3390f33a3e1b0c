//! Independent reference solvers and optimality checks shared by the
//! integration tests.
#![allow(dead_code)]

use mlasso::experiments::SplitMix64;
use mlasso::linalg::CsrMatrix;
use mlasso::ObservationBlocks;

/// Dense random least-squares instance with two coefficient groups.
pub struct Instance {
    pub rows: usize,
    pub group_sizes: Vec<usize>,
    /// Row-major `rows × n`.
    pub a: Vec<f64>,
    pub f: Vec<f64>,
    /// One weight per group.
    pub weights: Vec<f64>,
}

impl Instance {
    pub fn random(seed: u64, rows: usize, group_sizes: &[usize], w_range: (f64, f64)) -> Self {
        let mut rng = SplitMix64::new(seed);
        let n: usize = group_sizes.iter().sum();
        let a = (0..rows * n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        let f = (0..rows).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        let weights = group_sizes
            .iter()
            .map(|_| w_range.0 + (w_range.1 - w_range.0) * rng.next_f64())
            .collect();
        Self {
            rows,
            group_sizes: group_sizes.to_vec(),
            a,
            f,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn blocks(&self) -> ObservationBlocks<f64> {
        let n = self.n();
        let mut start = 0;
        let mut mats = Vec::new();
        for &g in &self.group_sizes {
            let sub: Vec<f64> = (0..self.rows)
                .flat_map(|r| self.a[r * n + start..r * n + start + g].iter().copied())
                .collect();
            mats.push(CsrMatrix::from_dense(self.rows, g, &sub).unwrap());
            start += g;
        }
        ObservationBlocks::from_blocks(mats).unwrap()
    }

    pub fn group_of(&self) -> Vec<usize> {
        self.group_sizes
            .iter()
            .enumerate()
            .flat_map(|(j, &g)| std::iter::repeat_n(j, g))
            .collect()
    }

    pub fn coord_weights(&self) -> Vec<f64> {
        self.group_of().iter().map(|&j| self.weights[j]).collect()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..self.rows)
            .map(|r| (0..n).map(|c| self.a[r * n + c] * x[c]).sum::<f64>() - self.f[r])
            .collect()
    }

    /// `2Aᵀ(Ax − f)`
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let r = self.residual(x);
        (0..n)
            .map(|c| {
                2.0 * (0..self.rows)
                    .map(|i| self.a[i * n + c] * r[i])
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn lasso_objective(&self, x: &[f64]) -> f64 {
        let fit: f64 = self.residual(x).iter().map(|v| v * v).sum();
        fit + self
            .coord_weights()
            .iter()
            .zip(x)
            .map(|(w, v)| w * v.abs())
            .sum::<f64>()
    }

    pub fn group_objective(&self, x: &[f64]) -> f64 {
        let fit: f64 = self.residual(x).iter().map(|v| v * v).sum();
        let mut start = 0;
        let mut pen = 0.0;
        for (j, &g) in self.group_sizes.iter().enumerate() {
            pen += self.weights[j] * norm(&x[start..start + g]);
            start += g;
        }
        fit + pen
    }

    fn gram(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut g = vec![0.0; n * n];
        let mut atf = vec![0.0; n];
        for r in 0..self.rows {
            for i in 0..n {
                atf[i] += self.a[r * n + i] * self.f[r];
                for j in 0..n {
                    g[i * n + j] += self.a[r * n + i] * self.a[r * n + j];
                }
            }
        }
        (g, atf)
    }

    /// Proximal gradient with step `1/L`, `L = 2·λ_max(AᵀA)` bounded from above.
    fn proximal_gradient(&self, iterations: usize, prox: impl Fn(&mut [f64], f64)) -> Vec<f64> {
        let n = self.n();
        let (g, atf) = self.gram();
        let lip = 2.0 * 1.01 * largest_eigenvalue(&g, n);
        let step = 1.0 / lip;
        let mut x = vec![0.0; n];
        let mut gx = vec![0.0; n];
        for _ in 0..iterations {
            for i in 0..n {
                gx[i] = g[i * n..(i + 1) * n]
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            for i in 0..n {
                x[i] -= step * 2.0 * (gx[i] - atf[i]);
            }
            prox(&mut x, step);
        }
        x
    }

    pub fn ista_lasso(&self, iterations: usize) -> Vec<f64> {
        let w = self.coord_weights();
        self.proximal_gradient(iterations, |x, step| {
            for (v, wi) in x.iter_mut().zip(&w) {
                let t = step * wi;
                *v = v.signum() * (v.abs() - t).max(0.0);
            }
        })
    }

    pub fn ista_group(&self, iterations: usize) -> Vec<f64> {
        let sizes = self.group_sizes.clone();
        let w = self.weights.clone();
        self.proximal_gradient(iterations, |x, step| {
            let mut start = 0;
            for (j, &g) in sizes.iter().enumerate() {
                let block = &mut x[start..start + g];
                let nb = norm(block);
                let scale = if nb > 0.0 {
                    (1.0 - step * w[j] / nb).max(0.0)
                } else {
                    0.0
                };
                block.iter_mut().for_each(|v| *v *= scale);
                start += g;
            }
        })
    }

    /// Largest coordinatewise violation of the l1 optimality conditions, where
    /// `active[i]` says whether coordinate `i` is treated as nonzero.
    pub fn lasso_kkt_violation(&self, x: &[f64], active: &[bool]) -> f64 {
        let grad = self.gradient(x);
        let w = self.coord_weights();
        (0..self.n())
            .map(|i| {
                if active[i] {
                    (grad[i] + w[i] * x[i].signum()).abs()
                } else {
                    (grad[i].abs() - w[i]).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest group violation of the group-l2 optimality conditions.
    pub fn group_kkt_violation(&self, x: &[f64], active: &[bool]) -> f64 {
        let grad = self.gradient(x);
        let mut start = 0;
        let mut worst: f64 = 0.0;
        for (j, &g) in self.group_sizes.iter().enumerate() {
            let xs = &x[start..start + g];
            let gs = &grad[start..start + g];
            let v = if active[j] {
                let nx = norm(xs);
                let r: Vec<f64> = gs
                    .iter()
                    .zip(xs)
                    .map(|(a, b)| a + self.weights[j] * b / nx)
                    .collect();
                norm(&r)
            } else {
                (norm(gs) - self.weights[j]).max(0.0)
            };
            worst = worst.max(v);
            start += g;
        }
        worst
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Power iteration on a symmetric positive semidefinite matrix.
pub fn largest_eigenvalue(m: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n)
            .map(|i| {
                m[i * n..(i + 1) * n]
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        lambda = nw / norm(&v);
        v = w.iter().map(|x| x / nw).collect();
    }
    lambda
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
