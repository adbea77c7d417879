use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Number of particles (out of `n`) landing in a cell of probability `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountModel {
    n: u64,
    q: f64,
}

impl CountModel {
    pub fn new(n: u64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Distribution(format!("cell probability must lie in (0, 1), got {q}")));
        }
        Ok(CountModel { n, q })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// `ln C(n, k)`. Exact log-sums near the edges, log-gamma in the bulk.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    if k <= 64 {
        let base = (n - k) as f64;
        (1..=k).map(|i| ((base + i as f64) / i as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// Binomial pmf with `k > n` mapping to 0.
pub(crate) fn binom(n: u64, q: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (ln_choose(n, k) + k as f64 * q.ln() + (n - k) as f64 * (-q).ln_1p()).exp()
}

/// `P(N = k)`.
pub fn binom_pmf(model: &CountModel, k: u64) -> Result<f64> {
    if k > model.n {
        return Err(Error::index(k as usize, 0, model.n as usize));
    }
    Ok(binom(model.n, model.q, k))
}

/// Trinomial pmf allowing `q1 + q2 = 1`; out-of-range counts map to 0.
pub(crate) fn trinom(n: u64, q1: f64, q2: f64, l: u64, m: u64) -> f64 {
    if l + m > n {
        return 0.0;
    }
    let rest = n - l - m;
    let r = 1.0 - q1 - q2;
    let tail = if rest == 0 {
        0.0
    } else if r <= 0.0 {
        return 0.0;
    } else {
        rest as f64 * r.ln()
    };
    (ln_choose(n, l) + ln_choose(n - l, m) + l as f64 * q1.ln() + m as f64 * q2.ln() + tail).exp()
}

pub(crate) fn check_pair(q1: f64, q2: f64) -> Result<()> {
    if !(q1 > 0.0 && q2 > 0.0 && q1 + q2 <= 1.0) {
        return Err(Error::Distribution(format!("need q1, q2 > 0 and q1 + q2 ≤ 1, got {q1}, {q2}")));
    }
    Ok(())
}

/// `P(N(V') = l, N(V'') = m)` for disjoint cells of probabilities `q1, q2`.
pub fn trinom_pmf(n: u64, q1: f64, q2: f64, l: u64, m: u64) -> Result<f64> {
    if !(q1 > 0.0 && q2 > 0.0 && q1 + q2 < 1.0) {
        return Err(Error::Distribution(format!("need q1, q2 > 0 and q1 + q2 < 1, got {q1}, {q2}")));
    }
    if l + m > n {
        return Err(Error::index((l + m) as usize, 0, n as usize));
    }
    Ok(trinom(n, q1, q2, l, m))
}

/// `(E[N'N''], Cov(N', N''))` for disjoint cells.
pub fn cross_moment_nn(n: u64, q1: f64, q2: f64) -> Result<(f64, f64)> {
    check_pair(q1, q2)?;
    let nf = n as f64;
    Ok((nf * (nf - 1.0) * q1 * q2, -nf * q1 * q2))
}
