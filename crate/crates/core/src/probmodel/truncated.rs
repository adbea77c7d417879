//! Truncated counts `Z = min(N, p)` and their second moments.
//!
//! Moments are read off the pmf. Where `Z` is close to its cap they are
//! evaluated through the deficit `p - Z`, which is supported on `N < p`
//! only and so avoids cancellation between near-equal large terms.

use super::counts::{binom, check_pair, trinom, CountModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedCountModel {
    pub base: CountModel,
    pub p: u64,
}

impl TruncatedCountModel {
    pub fn new(n: u64, q: f64, p: u64) -> Result<Self> {
        Ok(TruncatedCountModel { base: CountModel::new(n, q)?, p })
    }
}

/// `P(N ≥ p)` as the complement of the short left sum.
fn upper_tail(n: u64, q: f64, p: u64) -> f64 {
    if p > n {
        return 0.0;
    }
    (1.0 - (0..p).map(|j| binom(n, q, j)).sum::<f64>()).max(0.0)
}

fn pmf(n: u64, q: f64, p: u64, i: u64) -> f64 {
    if i < p {
        binom(n, q, i)
    } else {
        upper_tail(n, q, p)
    }
}

/// `P(Z = i)` for `0 ≤ i ≤ p`.
pub fn z_pmf(model: &TruncatedCountModel, i: u64) -> Result<f64> {
    if i > model.p {
        return Err(Error::index(i as usize, 0, model.p as usize));
    }
    Ok(pmf(model.base.n(), model.base.q(), model.p, i))
}

/// Mean deficit `E[p - Z] = Σ_{i<p} (p - i) P(N = i)`.
fn mean_deficit(n: u64, q: f64, p: u64) -> f64 {
    (0..p).map(|i| (p - i) as f64 * binom(n, q, i)).sum()
}

pub(crate) fn mean(n: u64, q: f64, p: u64) -> f64 {
    p as f64 - mean_deficit(n, q, p)
}

pub(crate) fn var(n: u64, q: f64, p: u64) -> f64 {
    let mu = mean(n, q, p);
    (0..=p).map(|i| (i as f64 - mu).powi(2) * pmf(n, q, p, i)).sum()
}

/// `E[Z] = p + Σ_{i<p} (i - p) P(N = i)`.
pub fn z_mean(model: &TruncatedCountModel) -> f64 {
    mean(model.base.n(), model.base.q(), model.p)
}

pub fn z_var(model: &TruncatedCountModel) -> f64 {
    var(model.base.n(), model.base.q(), model.p)
}

/// Joint pmf of two truncated counts of disjoint cells; the cells at the cap
/// collect the trinomial tails.
pub fn z_joint_pmf(n: u64, q1: f64, q2: f64, p: u64, l: u64, m: u64) -> Result<f64> {
    check_pair(q1, q2)?;
    if l > p || m > p {
        return Err(Error::index(l.max(m) as usize, 0, p as usize));
    }
    let inner = |l: u64, m: u64| trinom(n, q1, q2, l, m);
    Ok(match (l < p, m < p) {
        (true, true) => inner(l, m),
        (true, false) => binom(n, q1, l) - (0..p).map(|j| inner(l, j)).sum::<f64>(),
        (false, true) => binom(n, q2, m) - (0..p).map(|i| inner(i, m)).sum::<f64>(),
        (false, false) => {
            let below1: f64 = (0..p).map(|i| binom(n, q1, i)).sum();
            let below2: f64 = (0..p).map(|j| binom(n, q2, j)).sum();
            let both: f64 = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| inner(i, j)).sum();
            1.0 - below1 - below2 + both
        }
    }
    .max(0.0))
}

pub(crate) fn cov(n: u64, q1: f64, q2: f64, p: u64) -> f64 {
    // Cov(Z1, Z2) = Cov(p - Z1, p - Z2); both deficits vanish unless N < p.
    let mut cross = 0.0;
    for l in 0..p {
        for m in 0..p {
            cross += ((p - l) * (p - m)) as f64 * trinom(n, q1, q2, l, m);
        }
    }
    cross - mean_deficit(n, q1, p) * mean_deficit(n, q2, p)
}

/// `Cov(min(N', p), min(N'', p))` for disjoint cells.
pub fn z_cov(n: u64, q1: f64, q2: f64, p: u64) -> Result<f64> {
    check_pair(q1, q2)?;
    Ok(cov(n, q1, q2, p))
}

/// `Σ_m m·P(N' = l, N'' = m)`, summed over the numerically relevant range.
pub fn terminal_first_moment(n: u64, q_k: f64, q_kappa: f64, l: u64) -> Result<f64> {
    check_pair(q_k, q_kappa)?;
    Ok(first_moment_sum(n, q_k, q_kappa, l))
}

fn first_moment_sum(n: u64, q1: f64, q2: f64, l: u64) -> f64 {
    if l > n {
        return 0.0;
    }
    let rest = n - l;
    let (lo, hi) = if rest <= 4096 {
        (0, rest)
    } else {
        let c = q2 / (1.0 - q1);
        let mu = rest as f64 * c;
        let width = 40.0 * (mu * (1.0 - c)).sqrt() + 64.0;
        ((mu - width).max(0.0) as u64, ((mu + width).ceil() as u64).min(rest))
    };
    (lo..=hi).map(|m| m as f64 * trinom(n, q1, q2, l, m)).sum()
}

/// `E[M | N = l] = (n - l)·q_κ/(1 - q_k)`.
pub fn conditional_terminal_mean(n: u64, q_k: f64, q_kappa: f64, l: u64) -> f64 {
    n.saturating_sub(l) as f64 * q_kappa / (1.0 - q_k)
}

pub(crate) fn cov_with_terminal(n: u64, q_k: f64, q_kappa: f64, p: u64) -> f64 {
    let by_sum: f64 = (0..p).map(|l| (p - l) as f64 * first_moment_sum(n, q_k, q_kappa, l)).sum();
    debug_assert!({
        let by_identity: f64 = (0..p)
            .map(|l| (p - l) as f64 * binom(n, q_k, l) * conditional_terminal_mean(n, q_k, q_kappa, l))
            .sum();
        (by_sum - by_identity).abs() <= 1e-7 * (1.0 + by_identity.abs())
    });
    // Cov(Z, M) = -Cov(p - Z, M).
    mean_deficit(n, q_k, p) * n as f64 * q_kappa - by_sum
}

/// `Cov(min(N, p), M)` between a level cell and the terminal region.
pub fn cov_z_m(n: u64, q_k: f64, q_kappa: f64, p: u64) -> Result<f64> {
    check_pair(q_k, q_kappa)?;
    Ok(cov_with_terminal(n, q_k, q_kappa, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_examples() {
        let m = TruncatedCountModel::new(3, 0.5, 1).unwrap();
        assert!((z_pmf(&m, 0).unwrap() - 0.125).abs() < 1e-15);
        assert!((z_pmf(&m, 1).unwrap() - 0.875).abs() < 1e-15);
        assert!(matches!(z_pmf(&m, 2), Err(Error::Index { .. })));
        assert!((z_mean(&m) - 0.875).abs() < 1e-15);
        assert!((z_var(&m) - 0.109375).abs() < 1e-15);

        let zero = TruncatedCountModel::new(5, 0.3, 0).unwrap();
        assert_eq!(z_pmf(&zero, 0).unwrap(), 1.0);
        assert_eq!((z_mean(&zero), z_var(&zero)), (0.0, 0.0));
    }

    #[test]
    fn cap_at_n_is_untruncated() {
        let (n, q) = (6, 0.3);
        let m = TruncatedCountModel::new(n, q, n).unwrap();
        let b = CountModel::new(n, q).unwrap();
        for i in 0..n {
            assert_eq!(z_pmf(&m, i).unwrap(), super::super::binom_pmf(&b, i).unwrap());
        }
        assert!((z_pmf(&m, n).unwrap() - q.powi(6)).abs() < 1e-15);
        assert!((z_mean(&m) - 1.8).abs() < 1e-13);
        assert!((z_var(&m) - 1.26).abs() < 1e-13);
    }

    #[test]
    fn large_n_limit() {
        let m = TruncatedCountModel::new(1_000_000, 0.25, 7).unwrap();
        assert!((z_mean(&m) - 7.0).abs() < 1e-6);
        assert!(z_var(&m) < 1e-6);
    }

    #[test]
    fn covariances_reduce_to_multinomial() {
        assert!((z_cov(2, 0.25, 0.25, 2).unwrap() + 0.125).abs() < 1e-15);
        assert_eq!(z_cov(5, 0.25, 0.25, 0).unwrap(), 0.0);
        assert!((cov_z_m(3, 0.25, 0.125, 3).unwrap() + 3.0 * 0.25 * 0.125).abs() < 1e-15);
        assert_eq!(cov_z_m(3, 0.25, 0.125, 0).unwrap(), 0.0);
    }

    #[test]
    fn joint_pmf_matches_cov() {
        let (n, q1, q2, p) = (7, 0.25, 0.125, 3);
        let mut total = 0.0;
        let mut exy = 0.0;
        for l in 0..=p {
            for m in 0..=p {
                let pj = z_joint_pmf(n, q1, q2, p, l, m).unwrap();
                total += pj;
                exy += (l * m) as f64 * pj;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        let direct = exy - mean(n, q1, p) * mean(n, q2, p);
        assert!((direct - z_cov(n, q1, q2, p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn conditional_identity() {
        let (n, qk, qm) = (40, 0.125, 0.0625);
        for l in 0..5 {
            let lhs = terminal_first_moment(n, qk, qm, l).unwrap();
            let rhs = conditional_terminal_mean(n, qk, qm, l) * binom(n, qk, l);
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn windowed_first_moment_matches_identity() {
        let (n, qk, qm) = (1 << 20, 1.0 / 64.0, 1.0 / 1024.0);
        let l = 16_000;
        let lhs = terminal_first_moment(n, qk, qm, l).unwrap();
        let rhs = conditional_terminal_mean(n, qk, qm, l) * binom(n, qk, l);
        // Log-gamma terms near 1e7 leave about 1e-9 relative noise per pmf value.
        assert!((lhs - rhs).abs() <= 1e-7 * rhs.abs(), "{lhs} vs {rhs}");
    }
}
