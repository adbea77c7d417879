//! Closed-form expectation and variance bound of the realized rank.

use serde::Serialize;

use super::counts::binom;
use super::truncated::{cov, cov_with_terminal, mean, var};
use crate::error::{Error, Result};
use crate::geometry::kappa;

/// Parameters shared by the rank bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub d: usize,
    pub dprime: usize,
    pub n: u64,
    pub p: u64,
}

impl BoundInputs {
    pub fn new(d: usize, dprime: usize, n: u64, p: u64) -> Result<Self> {
        if d == 0 || dprime >= d {
            return Err(Error::Dimension(format!("need 0 ≤ d' < d, got d = {d}, d' = {dprime}")));
        }
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        Ok(BoundInputs { d, dprime, n, p })
    }

    pub fn kappa(&self) -> usize {
        kappa(self.n, self.d)
    }

    /// Peeled boxes at level `k`.
    pub fn h(&self, k: usize) -> f64 {
        2f64.powi((self.dprime * k) as i32) * (2f64.powi((self.d - self.dprime) as i32) - 1.0)
    }

    /// Probability of one level-`k` box.
    pub fn q(&self, k: usize) -> f64 {
        2f64.powi(-((self.d * k) as i32))
    }

    /// Probability of the terminal region.
    pub fn q_terminal(&self) -> f64 {
        2f64.powi(-(((self.d - self.dprime) * self.kappa()) as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedR {
    /// `Σ_k h_k E[min(N_k, p)] + n q_κ`.
    pub exact_sum: f64,
    /// The closed-form upper bound on `exact_sum`.
    pub witness: f64,
}

pub fn expected_r(b: &BoundInputs) -> ExpectedR {
    let kap = b.kappa();
    let exact_sum = (1..=kap).map(|k| b.h(k) * mean(b.n, b.q(k), b.p)).sum::<f64>() + b.n as f64 * b.q_terminal();
    let (d, dp) = (b.d as f64, b.dprime as f64);
    let nf = b.n as f64;
    let p = b.p as f64;
    let tail = nf / 2f64.powi((b.d * kap) as i32);
    let witness = if b.dprime == 0 {
        (2f64.powf(d) - 1.0) * kap as f64 * p + tail
    } else {
        let growth = nf.powf(dp / d);
        (2f64.powf(d) - 2f64.powf(dp)) / (2f64.powf(dp) - 1.0) * (growth - 1.0) * p + growth * tail
    };
    ExpectedR { exact_sum, witness }
}

/// The variance bound: terminal variance plus level-count-weighted sums of
/// `Cov(Z_k, M)`, `Cov(Z_{k1}, Z_{k2})` (k1 < k2) and `Var(Z_k)`.
pub fn var_r_bound(b: &BoundInputs) -> f64 {
    let kap = b.kappa();
    let (n, p) = (b.n, b.p);
    let qt = b.q_terminal();
    let a = 2f64.powi((b.dprime * kap) as i32);
    let c = 2f64.powi((b.d - b.dprime) as i32) - 1.0;
    let nf = n as f64;
    let first = a * nf / 2f64.powi((b.d * kap) as i32);
    let cov_m: f64 = (1..=kap).map(|k| cov_with_terminal(n, b.q(k), qt, p)).sum();
    let cov_zz: f64 = (1..=kap).flat_map(|k1| (k1 + 1..=kap).map(move |k2| (k1, k2))).map(|(k1, k2)| cov(n, b.q(k1), b.q(k2), p)).sum();
    let vars: f64 = (1..=kap).map(|k| var(n, b.q(k), p)).sum();
    first + 2.0 * a * c * cov_m + 2.0 * a * a * c * c * cov_zz + 3.0 * a * a * c * c * vars
}

/// Exact `Var(R)` under the uniform model, keeping every covariance with its
/// own level count. Used to audit [`var_r_bound`].
pub fn var_r_exact(b: &BoundInputs) -> f64 {
    let kap = b.kappa();
    let (n, p) = (b.n, b.p);
    let qt = b.q_terminal();
    let nf = n as f64;
    let mut total = nf * qt * (1.0 - qt);
    for k in 1..=kap {
        let (h, q) = (b.h(k), b.q(k));
        total += h * var(n, q, p);
        if h > 1.0 {
            total += h * (h - 1.0) * cov(n, q, q, p);
        }
        total += 2.0 * h * cov_with_terminal(n, q, qt, p);
        for k2 in k + 1..=kap {
            total += 2.0 * h * b.h(k2) * cov(n, q, b.q(k2), p);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KTilde {
    pub k_tilde: usize,
    /// `√(2 ln(1/(ε√(2π))))`.
    pub m_eps: f64,
    /// `κ - k̃`.
    pub slack: i64,
}

/// Level below which `P(N_k = p) < eps` for every `k ≤ k̃`.
pub fn k_tilde(n: u64, p: u64, eps: f64, d: usize) -> Result<KTilde> {
    let limit = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::Domain(format!("eps must lie in (0, {limit}), got {eps}")));
    }
    if n + 1 <= 2 * p {
        return Err(Error::Domain(format!("need n + 1 > 2p, got n = {n}, p = {p}")));
    }
    if d == 0 {
        return Err(Error::Dimension("d must be at least 1".into()));
    }
    let m_eps = (2.0 * (1.0 / (eps * (2.0 * std::f64::consts::PI).sqrt())).ln()).sqrt();
    let denom = m_eps * m_eps + 2.0 * p as f64 - 1.0;
    if denom <= 0.0 {
        return Err(Error::Domain(format!("M² + 2p - 1 = {denom} is not positive")));
    }
    let x = 1.0 + (n as f64 + 1.0 - 2.0 * p as f64) / denom;
    let base = 2f64.powi(d as i32);
    let mut k = 0usize;
    while base.powi(k as i32 + 1) <= x {
        k += 1;
    }
    Ok(KTilde { k_tilde: k, m_eps, slack: kappa(n, d) as i64 - k as i64 })
}

/// `P(N_k = p)` for a level-`k` box, as used by the `k̃` argument.
pub fn level_cap_probability(n: u64, d: usize, k: usize, p: u64) -> f64 {
    binom(n, 2f64.powi(-((d * k) as i32)), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_r_examples() {
        let e = expected_r(&BoundInputs::new(1, 0, 2, 0).unwrap());
        assert_eq!(e.exact_sum, 1.0);
        let e = expected_r(&BoundInputs::new(1, 0, 1024, 7).unwrap());
        assert_eq!(e.witness, 71.0);
        assert!(e.exact_sum <= e.witness);
    }

    #[test]
    fn p_zero_bound_is_terminal_only() {
        for d in 1..=3 {
            let b = BoundInputs::new(d, 0, 1000, 0).unwrap();
            let v = var_r_bound(&b);
            assert!((v - 1000.0 / 2f64.powi((d * b.kappa()) as i32)).abs() < 1e-12);
            assert!(v <= 2f64.powi(d as i32));
        }
    }

    #[test]
    fn k_tilde_caps_probabilities() {
        let (n, p, eps) = (1u64 << 20, 7, 1e-3);
        let kt = k_tilde(n, p, eps, 1).unwrap();
        assert!(kt.k_tilde >= 1);
        for k in 1..=kt.k_tilde {
            assert!(level_cap_probability(n, 1, k, p) < eps);
        }
        assert!(matches!(k_tilde(5, 3, 1e-3, 1), Err(Error::Domain(_))));
        assert!(matches!(k_tilde(100, 3, 0.5, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn k_tilde_near_eps_limit() {
        let eps = 1.0 / (2.0 * std::f64::consts::PI).sqrt() * (1.0 - 1e-12);
        let kt = k_tilde(1000, 3, eps, 1).unwrap();
        let expect = ((1.0 + (1001.0 - 6.0) / 5.0) as f64).log2().floor() as usize;
        assert_eq!(kt.k_tilde, expect);
    }
}
