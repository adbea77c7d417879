//! Reproducible particle sampling, membership counting and order-statistic
//! diagnostics.
//!
//! Every stream is a `Xoshiro256PlusPlus` generator seeded through
//! [`derive_seed`], so a trial's particles depend only on its seed and never
//! on scheduling.

use std::fmt;
use std::sync::Arc;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellId, HyperCube, SubdivisionTree};

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: folds each part into the master seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut s = mix64(master ^ 0x9e3779b97f4a7c15);
    for (i, &p) in parts.iter().enumerate() {
        s = mix64(s ^ mix64(p.wrapping_add((i as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15))));
    }
    s
}

pub fn stream(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform draw from the open interval (0, 1).
#[inline]
pub fn open_unit(rng: &mut impl Rng) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// A one-dimensional marginal with an explicit CDF and inverse CDF on an
/// absolute support interval.
#[derive(Clone)]
pub struct CustomMarginal {
    pub name: String,
    pub support: (f64, f64),
    pub cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub inverse_cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomMarginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMarginal").field("name", &self.name).field("support", &self.support).finish()
    }
}

/// Per-axis marginal. `Uniform` and `Power` live on the unit interval and are
/// scaled to the box side.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marginal {
    Uniform,
    /// CDF `t^exponent` on [0, 1].
    Power { exponent: f64 },
    #[serde(skip)]
    Custom(CustomMarginal),
}

impl PartialEq for Marginal {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Marginal::Uniform, Marginal::Uniform) => true,
            (Marginal::Power { exponent: a }, Marginal::Power { exponent: b }) => a == b,
            (Marginal::Custom(a), Marginal::Custom(b)) => a.name == b.name,
            _ => false,
        }
    }
}

impl Marginal {
    fn check(&self, lo: f64, hi: f64) -> Result<()> {
        match self {
            Marginal::Uniform => Ok(()),
            Marginal::Power { exponent } if *exponent > 0.0 && exponent.is_finite() => Ok(()),
            Marginal::Power { exponent } => {
                Err(Error::Distribution(format!("power exponent must be positive, got {exponent}")))
            }
            Marginal::Custom(c) if c.support.0 <= lo && c.support.1 >= hi => Ok(()),
            Marginal::Custom(c) => Err(Error::Distribution(format!(
                "support {:?} of `{}` does not cover [{lo}, {hi}]",
                c.support, c.name
            ))),
        }
    }

    fn draw(&self, u: f64, lo: f64, hi: f64) -> f64 {
        match self {
            Marginal::Uniform => lo + (hi - lo) * u,
            Marginal::Power { exponent } => lo + (hi - lo) * u.powf(1.0 / exponent),
            Marginal::Custom(c) => (c.inverse_cdf)(u),
        }
    }

    /// Mass of `[a, b)` relative to the mass of `[lo, hi]`.
    fn mass(&self, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
        match self {
            Marginal::Uniform => (b - a) / (hi - lo),
            Marginal::Power { exponent } => {
                let t = |x: f64| ((x - lo) / (hi - lo)).powf(*exponent);
                t(b) - t(a)
            }
            Marginal::Custom(c) => ((c.cdf)(b) - (c.cdf)(a)) / ((c.cdf)(hi) - (c.cdf)(lo)),
        }
    }
}

/// Distribution of one particle: i.i.d. uniform, or independent coordinates
/// with per-axis marginals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    Product(Vec<Marginal>),
}

impl Distribution {
    fn marginal(&self, j: usize) -> &Marginal {
        match self {
            Distribution::Uniform => &Marginal::Uniform,
            Distribution::Product(m) => &m[j],
        }
    }

    fn check(&self, domain: &HyperCube) -> Result<()> {
        if let Distribution::Product(m) = self {
            if m.len() != domain.dim() {
                return Err(Error::Distribution(format!(
                    "{} marginals for a {}-dimensional domain",
                    m.len(),
                    domain.dim()
                )));
            }
        }
        (0..domain.dim()).try_for_each(|j| self.marginal(j).check(domain.lo()[j], domain.hi()[j]))
    }

    /// Probability that one particle of `domain` lands in `cell`.
    pub fn box_probability(&self, domain: &HyperCube, cell: &HyperCube) -> Result<f64> {
        self.check(domain)?;
        if !domain.contains_box(cell) {
            return Err(Error::Geometry(format!("{cell} is not inside {domain}")));
        }
        Ok((0..domain.dim())
            .map(|j| self.marginal(j).mass(cell.lo()[j], cell.hi()[j], domain.lo()[j], domain.hi()[j]))
            .product())
    }
}

/// `n` particles drawn inside `domain`, with their provenance.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    points: Vec<f64>,
    domain: HyperCube,
    seed: u64,
    distribution: Distribution,
}

impl ParticleSet {
    /// Wrap explicit points, checking they lie in the open interior.
    pub fn from_points(domain: HyperCube, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut flat = Vec::with_capacity(points.len() * domain.dim());
        for p in &points {
            if !domain.contains_open(p) {
                return Err(Error::Geometry(format!("point {p:?} is not inside {domain}")));
            }
            flat.extend_from_slice(p);
        }
        Ok(ParticleSet { points: flat, domain, seed: 0, distribution: Distribution::Uniform })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.domain.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim())
    }

    pub fn domain(&self) -> &HyperCube {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    /// Points with the given indices, as a new set on the same domain.
    pub fn subset(&self, indices: &[usize]) -> ParticleSet {
        let mut points = Vec::with_capacity(indices.len() * self.dim());
        for &i in indices {
            points.extend_from_slice(self.point(i));
        }
        ParticleSet { points, ..self.clone_meta() }
    }

    fn clone_meta(&self) -> ParticleSet {
        ParticleSet {
            points: Vec::new(),
            domain: self.domain.clone(),
            seed: self.seed,
            distribution: self.distribution.clone(),
        }
    }
}

/// Draw `n` i.i.d. particles in the open interior of `domain`.
pub fn sample(domain: &HyperCube, n: usize, seed: u64, distribution: &Distribution) -> Result<ParticleSet> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    distribution.check(domain)?;
    let d = domain.dim();
    let mut rng = stream(seed);
    let mut points = Vec::with_capacity(n * d);
    for _ in 0..n {
        for j in 0..d {
            let (lo, hi) = (domain.lo()[j], domain.hi()[j]);
            let m = distribution.marginal(j);
            let x = loop {
                let x = m.draw(open_unit(&mut rng), lo, hi);
                if !(x >= lo && x <= hi) {
                    return Err(Error::Distribution(format!("axis {j} drew {x} outside [{lo}, {hi}]")));
                }
                // Rounding can land exactly on the boundary; redraw.
                if x > lo && x < hi {
                    break x;
                }
            };
            points.push(x);
        }
    }
    Ok(ParticleSet { points, domain: domain.clone(), seed, distribution: distribution.clone() })
}

/// Particles in `cell`, half-open per axis and closed where the cell meets the
/// upper boundary of the domain.
pub fn count_in(ps: &ParticleSet, cell: &HyperCube) -> Result<usize> {
    let domain = ps.domain();
    if !domain.contains_box(cell) {
        return Err(Error::Geometry(format!("{cell} is not inside {domain}")));
    }
    let closed: Vec<bool> = (0..ps.dim()).map(|j| cell.hi()[j] == domain.hi()[j]).collect();
    Ok(ps
        .iter()
        .filter(|p| {
            p.iter().enumerate().all(|(j, &x)| {
                x >= cell.lo()[j] && (x < cell.hi()[j] || (closed[j] && x <= cell.hi()[j]))
            })
        })
        .count())
}

/// Particle counts per peeled box and in the terminal region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedCounts {
    /// `levels[k-1][l]` counts box `l` of level `k`.
    pub levels: Vec<Vec<u64>>,
    pub terminal: u64,
}

impl RealizedCounts {
    pub fn total(&self) -> u64 {
        self.levels.iter().flatten().sum::<u64>() + self.terminal
    }
}

/// Membership of each particle in the tree cells, by index.
pub(crate) fn membership(ps: &ParticleSet, tree: &SubdivisionTree) -> Result<Vec<CellId>> {
    if ps.domain() != tree.source() {
        return Err(Error::Geometry(format!(
            "particles live in {} but the tree subdivides {}",
            ps.domain(),
            tree.source()
        )));
    }
    ps.iter()
        .map(|p| tree.locate(p).ok_or_else(|| Error::Geometry(format!("point {p:?} outside the tree"))))
        .collect()
}

pub fn realized_counts(ps: &ParticleSet, tree: &SubdivisionTree) -> Result<RealizedCounts> {
    let mut levels: Vec<Vec<u64>> = tree.levels().iter().map(|l| vec![0; l.len()]).collect();
    let mut terminal = 0;
    for id in membership(ps, tree)? {
        match id {
            CellId::Peeled { level, index } => levels[level - 1][index] += 1,
            CellId::Terminal => terminal += 1,
        }
    }
    Ok(RealizedCounts { levels, terminal })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStatRow {
    pub k: usize,
    pub mean: f64,
    pub theory_mean: f64,
    pub var: f64,
    pub theory_var: f64,
}

/// Empirical order statistics of 1-D draws, mapped to the unit interval,
/// against their beta-distribution moments.
#[derive(Debug, Clone, Serialize)]
pub struct OrderStatReport {
    pub n: usize,
    pub draws: usize,
    pub rows: Vec<OrderStatRow>,
    pub mean_gap: f64,
    pub theory_gap: f64,
}

pub fn grid_perturbation_stats(draws: &[ParticleSet]) -> Result<OrderStatReport> {
    let first = draws.first().ok_or_else(|| Error::Domain("no draws".into()))?;
    if first.dim() != 1 {
        return Err(Error::Dimension(format!("order statistics need d = 1, got {}", first.dim())));
    }
    let n = first.len();
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for ps in draws {
        if ps.dim() != 1 || ps.len() != n {
            return Err(Error::Dimension("all draws must be 1-D with the same n".into()));
        }
        let (lo, side) = (ps.domain().lo()[0], ps.domain().side());
        let mut xs: Vec<f64> = ps.iter().map(|p| (p[0] - lo) / side).collect();
        xs.sort_by(f64::total_cmp);
        for (k, &x) in xs.iter().enumerate() {
            sum[k] += x;
            sum_sq[k] += x * x;
        }
    }
    let t = draws.len() as f64;
    let nf = n as f64;
    let rows = (0..n)
        .map(|i| {
            let k = (i + 1) as f64;
            let mean = sum[i] / t;
            OrderStatRow {
                k: i + 1,
                mean,
                theory_mean: k / (nf + 1.0),
                var: (sum_sq[i] / t - mean * mean).max(0.0),
                theory_var: k * (nf - k + 1.0) / ((nf + 1.0).powi(2) * (nf + 2.0)),
            }
        })
        .collect::<Vec<_>>();
    // Mean spacing between consecutive order statistics; with one point, the
    // spacing to the lower end of the interval.
    let mean_gap = if n > 1 { (rows[n - 1].mean - rows[0].mean) / (nf - 1.0) } else { rows[0].mean };
    Ok(OrderStatReport { n, draws: draws.len(), rows, mean_gap, theory_gap: 1.0 / (nf + 1.0) })
}
