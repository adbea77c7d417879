//! Normal approximations of count pmfs with explicit error bounds.

use gauss_quad::GaussLegendre;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::counts::{check_pair, CountModel};
use crate::error::{Error, Result};

/// Berry–Esseen constants. Their values are not pinned down by the theory, so
/// they are configuration and are reported with every approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerryEsseenConstants {
    pub c: f64,
    pub c_mult: f64,
}

impl Default for BerryEsseenConstants {
    fn default() -> Self {
        BerryEsseenConstants { c: 0.5, c_mult: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalApprox {
    pub approx: f64,
    pub error_bound: f64,
    /// Set when `nq < 5` or `n(1-q) < 5`.
    pub low_count_warning: bool,
    pub c: f64,
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_mass(a: f64, b: f64) -> f64 {
    // Difference taken on the side where the CDF is small.
    if a >= 0.0 {
        std_normal_cdf(-a) - std_normal_cdf(-b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    }
}

/// Continuity-corrected normal approximation of `P(N = k)`.
pub fn normal_approx_pmf(model: &CountModel, k: u64, consts: &BerryEsseenConstants) -> NormalApprox {
    let (n, q) = (model.n() as f64, model.q());
    let sd = (n * q * (1.0 - q)).sqrt();
    let mu = n * q;
    let a = (k as f64 - 0.5 - mu) / sd;
    let b = (k as f64 + 0.5 - mu) / sd;
    NormalApprox {
        approx: normal_mass(a, b),
        error_bound: 2.0 * consts.c * (1.0 - 2.0 * q + 2.0 * q * q) / sd,
        low_count_warning: n * q < 5.0 || n * (1.0 - q) < 5.0,
        c: consts.c,
    }
}

/// `4·C_mult/√n`.
pub fn berry_esseen_multivariate_bound(n: u64, c_mult: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(4.0 * c_mult / (n as f64).sqrt())
}

/// Bivariate normal approximation of `P(N' = l, N'' = m)`: the density with
/// the trinomial's means and correlation integrated over the continuity-
/// corrected cell by tensor Gauss–Legendre quadrature.
pub fn bivariate_normal_cell(n: u64, q1: f64, q2: f64, l: u64, m: u64, nodes: usize) -> Result<f64> {
    check_pair(q1, q2)?;
    if q1 + q2 >= 1.0 {
        return Err(Error::Distribution("the pair of cells must leave positive remaining mass".into()));
    }
    let nf = n as f64;
    let s1 = (nf * q1 * (1.0 - q1)).sqrt();
    let s2 = (nf * q2 * (1.0 - q2)).sqrt();
    let rho = -(q1 * q2 / ((1.0 - q1) * (1.0 - q2))).sqrt();
    let a1 = (l as f64 - 0.5 - nf * q1) / s1;
    let b1 = (l as f64 + 0.5 - nf * q1) / s1;
    let a2 = (m as f64 - 0.5 - nf * q2) / s2;
    let b2 = (m as f64 + 0.5 - nf * q2) / s2;
    let det = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let rule = GaussLegendre::new(nodes.try_into().map_err(|_| Error::Domain("need at least one node".into()))?);
    Ok(rule.integrate(a1, b1, |x| {
        rule.integrate(a2, b2, |y| norm * (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp())
    }))
}
