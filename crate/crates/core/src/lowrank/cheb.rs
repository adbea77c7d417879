//! Tensor Chebyshev interpolation in the source variable.

use num_complex::Complex64;

use super::svd::Scalar;
use super::{Entries, KernelMatrix};
use crate::error::{Error, Result};
use crate::geometry::HyperCube;
use crate::kernels::{self, KernelId};
use crate::sampling::ParticleSet;

/// Chebyshev extrema grid with `order` points per axis on `cube`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    pub order: usize,
    pub cube: HyperCube,
}

impl ChebGrid {
    pub fn new(order: usize, cube: HyperCube) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("interpolation order must be at least 1".into()));
        }
        Ok(ChebGrid { order, cube })
    }

    pub fn len(&self) -> usize {
        self.order.pow(self.cube.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn nodes_1d(&self, axis: usize) -> Vec<f64> {
        let (a, b) = (self.cube.lo()[axis], self.cube.hi()[axis]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        if self.order == 1 {
            return vec![mid];
        }
        let p = self.order - 1;
        (0..=p)
            .map(|j| match j {
                0 => b,
                _ if j == p => a,
                _ => mid + half * (std::f64::consts::PI * j as f64 / p as f64).cos(),
            })
            .collect()
    }

    fn weights(&self) -> Vec<f64> {
        let p = self.order;
        (0..p)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j + 1 == p {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect()
    }

    /// Tensor nodes, axis 0 varying fastest.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let d = self.cube.dim();
        let per_axis: Vec<Vec<f64>> = (0..d).map(|a| self.nodes_1d(a)).collect();
        (0..self.len())
            .map(|mut idx| {
                (0..d)
                    .map(|a| {
                        let v = per_axis[a][idx % self.order];
                        idx /= self.order;
                        v
                    })
                    .collect()
            })
            .collect()
    }

    /// Values of all tensor Lagrange basis functions at `y`.
    pub fn basis(&self, y: &[f64]) -> Vec<f64> {
        let d = self.cube.dim();
        let w = self.weights();
        let per_axis: Vec<Vec<f64>> = (0..d).map(|a| lagrange_1d(&self.nodes_1d(a), &w, y[a])).collect();
        (0..self.len())
            .map(|mut idx| {
                let mut v = 1.0;
                for l in &per_axis {
                    v *= l[idx % self.order];
                    idx /= self.order;
                }
                v
            })
            .collect()
    }
}

fn lagrange_1d(nodes: &[f64], w: &[f64], y: f64) -> Vec<f64> {
    if nodes.len() == 1 {
        return vec![1.0];
    }
    if let Some(hit) = nodes.iter().position(|&x| x == y) {
        let mut out = vec![0.0; nodes.len()];
        out[hit] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes.iter().zip(w).map(|(x, wj)| wj / (y - x)).collect();
    let s: f64 = terms.iter().sum();
    terms.iter().map(|t| t / s).collect()
}

/// Where a factor came from.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorSource {
    Chebyshev(ChebGrid),
    Svd,
    Zero,
}

/// `K ≈ U·Vᵀ` with `U: m×r` and `V: n×r`, both column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub u: Entries,
    pub v: Entries,
    pub source: FactorSource,
}

impl LowRankFactor {
    pub fn zero(m: usize, n: usize) -> Self {
        LowRankFactor { m, n, r: 0, u: Entries::Real(Vec::new()), v: Entries::Real(Vec::new()), source: FactorSource::Zero }
    }

    /// Truncated SVD of `k` keeping `rank` terms.
    pub fn from_svd(k: &KernelMatrix, rank: usize) -> Result<Self> {
        fn build<T: Scalar>(m: usize, n: usize, a: &[T], rank: usize) -> Result<(Vec<T>, Vec<T>, usize)> {
            let (u, s, v) = T::faer_scaled_svd(faer::MatRef::from_column_major_slice(a, m, n))?;
            let r = rank.min(s.len());
            let u = (0..r).flat_map(|k| (0..m).map(move |i| (i, k))).map(|(i, k)| u[(i, k)]).collect();
            let v = (0..r).flat_map(|k| (0..n).map(move |j| (j, k))).map(|(j, k)| v[(j, k)]).collect();
            Ok((u, v, r))
        }
        let (m, n) = (k.nrows(), k.ncols());
        let (u, v, r) = match k.entries() {
            Entries::Real(a) => {
                let (u, v, r) = build(m, n, a, rank)?;
                (Entries::Real(u), Entries::Real(v), r)
            }
            Entries::Complex(a) => {
                let (u, v, r) = build(m, n, a, rank)?;
                (Entries::Complex(u), Entries::Complex(v), r)
            }
        };
        Ok(LowRankFactor { m, n, r, u, v, source: FactorSource::Svd })
    }

    /// Dense `U·Vᵀ`, column-major.
    pub fn to_dense(&self) -> Entries {
        fn product<T: Scalar>(m: usize, n: usize, r: usize, u: &[T], v: &[T]) -> Vec<T> {
            let mut out = vec![T::default(); m * n];
            for k in 0..r {
                let uk = &u[k * m..(k + 1) * m];
                for j in 0..n {
                    let w = v[k * n + j];
                    for (o, &x) in out[j * m..(j + 1) * m].iter_mut().zip(uk) {
                        *o += x * w;
                    }
                }
            }
            out
        }
        let (m, n, r) = (self.m, self.n, self.r);
        match (&self.u, &self.v) {
            (Entries::Real(u), Entries::Real(v)) => Entries::Real(product(m, n, r, u, v)),
            (u, v) => {
                let up = to_complex(u);
                let vp = to_complex(v);
                Entries::Complex(product(m, n, r, &up, &vp))
            }
        }
    }

    /// Entry `(i, j)` of `U·Vᵀ`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        (0..self.r).map(|k| self.u.get(k * self.m + i) * self.v.get(k * self.n + j)).sum()
    }
}

fn to_complex(e: &Entries) -> Vec<Complex64> {
    match e {
        Entries::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        Entries::Complex(v) => v.clone(),
    }
}

/// Interpolate the kernel in the source variable on a tensor Chebyshev grid
/// of `source_box`: `U[i][k] = K(x_i, y^k)`, `V[j][k] = L_k(y_j)`.
pub fn cheb_factorize(
    kernel: &KernelId,
    targets: &ParticleSet,
    source_box: &HyperCube,
    sources: &ParticleSet,
    order: usize,
) -> Result<LowRankFactor> {
    if sources.iter().any(|y| {
        y.iter().enumerate().any(|(a, &v)| v < source_box.lo()[a] || v > source_box.hi()[a])
    }) {
        return Err(Error::Geometry(format!("sources fall outside {source_box}")));
    }
    let grid = ChebGrid::new(order, source_box.clone())?;
    let nodes = grid.nodes();
    let (m, n, r) = (targets.len(), sources.len(), nodes.len());
    let v: Vec<f64> = {
        let rows: Vec<Vec<f64>> = sources.iter().map(|y| grid.basis(y)).collect();
        (0..r).flat_map(|k| rows.iter().map(move |row| row[k])).collect()
    };
    let (u, v) = if kernel.is_complex() {
        let mut u = Vec::with_capacity(m * r);
        for y in &nodes {
            for x in targets.iter() {
                u.push(kernels::evaluate(kernel, x, y)?);
            }
        }
        (Entries::Complex(u), Entries::Complex(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()))
    } else {
        let mut u = Vec::with_capacity(m * r);
        for y in &nodes {
            for x in targets.iter() {
                u.push(kernels::evaluate_real(kernel, x, y)?);
            }
        }
        (Entries::Real(u), Entries::Real(v))
    };
    Ok(LowRankFactor { m, n, r, u, v, source: FactorSource::Chebyshev(grid) })
}

/// `max|K - U·Vᵀ| / max|K|`.
pub fn rel_maxnorm_error(k: &KernelMatrix, f: &LowRankFactor) -> Result<f64> {
    if (k.nrows(), k.ncols()) != (f.m, f.n) {
        return Err(Error::Dimension(format!(
            "matrix is {}×{} but factor is {}×{}",
            k.nrows(),
            k.ncols(),
            f.m,
            f.n
        )));
    }
    let norm = k.max_abs();
    if norm == 0.0 {
        return Err(Error::DegenerateNorm);
    }
    let approx = if f.r == 0 { None } else { Some(f.to_dense()) };
    let mut worst: f64 = 0.0;
    for idx in 0..f.m * f.n {
        let diff = match &approx {
            None => k.entries().get(idx),
            Some(a) => k.entries().get(idx) - a.get(idx),
        };
        worst = worst.max(diff.norm());
    }
    Ok(worst / norm)
}
