//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// Distribution of the cell counts of `n` independent particles over cells
/// with probabilities `probs`, by enumerating all `cells^n` placements.
pub fn enumerate_counts(n: u32, probs: &[f64]) -> BTreeMap<Vec<u64>, f64> {
    assert!(n <= 8 && probs.len() <= 4, "oracle limited to n ≤ 8 and ≤ 4 cells");
    let c = probs.len();
    let mut out = BTreeMap::new();
    for code in 0..c.pow(n) {
        let mut counts = vec![0u64; c];
        let mut w = 1.0;
        let mut rest = code;
        for _ in 0..n {
            let cell = rest % c;
            rest /= c;
            counts[cell] += 1;
            w *= probs[cell];
        }
        *out.entry(counts).or_insert(0.0) += w;
    }
    out
}

/// `E[f(counts)]` under the enumeration.
pub fn expect(dist: &BTreeMap<Vec<u64>, f64>, f: impl Fn(&[u64]) -> f64) -> f64 {
    dist.iter().map(|(c, w)| w * f(c)).sum()
}

/// `(E[Z], Var[Z])` for `Z = min(N, p)`, `N` the count of a cell of
/// probability `q`.
pub fn z_moments(n: u32, q: f64, p: u64) -> (f64, f64) {
    let dist = enumerate_counts(n, &[q, 1.0 - q]);
    let mean = expect(&dist, |c| c[0].min(p) as f64);
    let second = expect(&dist, |c| (c[0].min(p) as f64).powi(2));
    (mean, second - mean * mean)
}

fn pair_cells(q1: f64, q2: f64) -> Vec<f64> {
    let rest = 1.0 - q1 - q2;
    if rest > 0.0 {
        vec![q1, q2, rest]
    } else {
        vec![q1, q2]
    }
}

/// `Cov(min(N1, p), min(N2, p))` for two disjoint cells.
pub fn z_cov(n: u32, q1: f64, q2: f64, p: u64) -> f64 {
    let dist = enumerate_counts(n, &pair_cells(q1, q2));
    let a = expect(&dist, |c| c[0].min(p) as f64);
    let b = expect(&dist, |c| c[1].min(p) as f64);
    expect(&dist, |c| (c[0].min(p) * c[1].min(p)) as f64) - a * b
}

/// `Cov(min(N, p), M)` with `M` an untruncated disjoint count.
pub fn cov_z_m(n: u32, qk: f64, qm: f64, p: u64) -> f64 {
    let dist = enumerate_counts(n, &pair_cells(qk, qm));
    let a = expect(&dist, |c| c[0].min(p) as f64);
    let b = expect(&dist, |c| c[1] as f64);
    expect(&dist, |c| (c[0].min(p) * c[1]) as f64) - a * b
}

/// Joint pmf of `(min(N1, p), min(N2, p))`.
pub fn z_joint(n: u32, q1: f64, q2: f64, p: u64, l: u64, m: u64) -> f64 {
    let dist = enumerate_counts(n, &pair_cells(q1, q2));
    expect(&dist, |c| if c[0].min(p) == l && c[1].min(p) == m { 1.0 } else { 0.0 })
}

/// Dyadic probabilities `2^-1 .. 2^-4`.
pub const DYADIC: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];
