//! Hyper-cube domains, interaction classification and the dyadic peeling tree.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIDE_RTOL: f64 = 1e-12;

/// Axis-aligned cube in `R^d` with equal side lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperCube {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl HyperCube {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Dimension(format!(
                "corner lengths {} and {} must be equal and positive",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite corner coordinate".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::Geometry(format!("empty interior: lo={lo:?} hi={hi:?}")));
        }
        let side = hi[0] - lo[0];
        for (a, b) in lo.iter().zip(&hi) {
            if ((b - a) - side).abs() > SIDE_RTOL * side {
                return Err(Error::Geometry(format!("not a cube: lo={lo:?} hi={hi:?}")));
            }
        }
        Ok(HyperCube { lo, hi })
    }

    /// Cube with lower corner `lo` and the given side length.
    pub fn from_corner(lo: Vec<f64>, side: f64) -> Result<Self> {
        let hi = lo.iter().map(|v| v + side).collect();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        self.side() * (self.dim() as f64).sqrt()
    }

    pub fn contains_box(&self, other: &HyperCube) -> bool {
        other.dim() == self.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| b <= a)
    }

    pub fn contains_open(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a < x && x < b)
    }

    /// The 2^d children of a dyadic split. Bit `j` of the child index selects
    /// the upper half along axis `j`.
    pub fn children(&self) -> Vec<HyperCube> {
        let d = self.dim();
        let half = self.side() / 2.0;
        (0..1usize << d)
            .map(|mask| {
                let lo: Vec<f64> = (0..d)
                    .map(|j| if mask >> j & 1 == 1 { self.lo[j] + half } else { self.lo[j] })
                    .collect();
                let hi = (0..d)
                    .map(|j| if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] + half })
                    .collect();
                HyperCube { lo, hi }
            })
            .collect()
    }

    pub fn translated(&self, axis: usize, offset: f64) -> HyperCube {
        let mut out = self.clone();
        out.lo[axis] += offset;
        out.hi[axis] += offset;
        out
    }
}

impl fmt::Display for HyperCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if j > 0 {
                write!(f, "×")?;
            }
            write!(f, "[{a}, {b}]")?;
        }
        Ok(())
    }
}

/// How a target box sees a source box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InteractionKind {
    /// Separated by at least one box width.
    FarField,
    /// Touching along a shared surface of the given dimension
    /// (0 = vertex, 1 = edge, 2 = face, ...).
    SharedSurface(usize),
}

impl InteractionKind {
    pub fn label(&self) -> &'static str {
        match self {
            InteractionKind::FarField => "far-field",
            InteractionKind::SharedSurface(0) => "vertex",
            InteractionKind::SharedSurface(1) => "edge",
            InteractionKind::SharedSurface(2) => "face",
            InteractionKind::SharedSurface(_) => "hyper-surface",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteractionKind::FarField => write!(f, "far"),
            InteractionKind::SharedSurface(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for InteractionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "far" | "far-field" | "farfield" => Ok(InteractionKind::FarField),
            "vertex" => Ok(InteractionKind::SharedSurface(0)),
            "edge" => Ok(InteractionKind::SharedSurface(1)),
            "face" => Ok(InteractionKind::SharedSurface(2)),
            _ => s
                .parse::<usize>()
                .map(InteractionKind::SharedSurface)
                .map_err(|_| Error::Config(format!("unknown surface `{s}` (expected far or an integer)"))),
        }
    }
}

// "far" or a bare integer in JSON.
impl Serialize for InteractionKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InteractionKind::FarField => s.serialize_str("far"),
            InteractionKind::SharedSurface(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for InteractionKind {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(usize),
            Str(String),
        }
        match Repr::deserialize(de)? {
            Repr::Int(k) => Ok(InteractionKind::SharedSurface(k)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Standard target/source pair: source `[0,l]^d`, target touching it along a
/// `d'`-surface, or one full cube away along axis 0.
pub fn make_domain_pair(d: usize, kind: InteractionKind, side: f64) -> Result<(HyperCube, HyperCube)> {
    if d == 0 {
        return Err(Error::Dimension("d must be at least 1".into()));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::Geometry(format!("side must be positive, got {side}")));
    }
    let source = HyperCube::from_corner(vec![0.0; d], side)?;
    let target = match kind {
        InteractionKind::FarField => source.translated(0, -2.0 * side),
        InteractionKind::SharedSurface(dp) => {
            if dp >= d {
                return Err(Error::Dimension(format!("surface dimension {dp} must be below d = {d}")));
            }
            let lo = (0..d).map(|j| if j < dp { 0.0 } else { -side }).collect();
            HyperCube::from_corner(lo, side)?
        }
    };
    Ok((target, source))
}

/// Classify the interaction between two boxes.
///
/// Distances and diameters are measured in the max-norm, so "one cube away"
/// is far-field in every dimension. Touching boxes must meet along a full
/// face of at least one of them.
pub fn classify(target: &HyperCube, source: &HyperCube) -> Result<InteractionKind> {
    let d = source.dim();
    if target.dim() != d {
        return Err(Error::Dimension(format!("dimensions differ: {} vs {}", target.dim(), d)));
    }
    let tol = SIDE_RTOL * target.side().min(source.side());
    let mut dist: f64 = 0.0;
    let mut overlapping = Vec::with_capacity(d);
    for j in 0..d {
        let (a, b) = (target.lo[j], target.hi[j]);
        let (c, e) = (source.lo[j], source.hi[j]);
        let gap = (c - b).max(a - e).max(0.0);
        dist = dist.max(gap);
        overlapping.push(b.min(e) - a.max(c) > tol);
    }
    if overlapping.iter().all(|&o| o) {
        return Err(Error::Geometry(format!("interiors of {target} and {source} overlap")));
    }
    if dist <= tol {
        for j in (0..d).filter(|&j| overlapping[j]) {
            let t_in_s = target.lo[j] >= source.lo[j] - tol && target.hi[j] <= source.hi[j] + tol;
            let s_in_t = source.lo[j] >= target.lo[j] - tol && source.hi[j] <= target.hi[j] + tol;
            if !(t_in_s || s_in_t) {
                return Err(Error::Geometry(format!(
                    "{target} and {source} touch along a partial face (axis {j})"
                )));
            }
        }
        return Ok(InteractionKind::SharedSurface(overlapping.iter().filter(|&&o| o).count()));
    }
    let threshold = target.side().min(source.side());
    if dist >= threshold - tol {
        Ok(InteractionKind::FarField)
    } else {
        Err(Error::AmbiguousSeparation { dist, threshold })
    }
}

/// Subdivision depth `floor(log_{2^d} n)`, by repeated multiplication.
pub fn kappa(n: u64, d: usize) -> usize {
    let base = 1u128 << d;
    let mut k = 0;
    let mut pow = base;
    while pow <= n as u128 {
        k += 1;
        pow *= base;
    }
    k
}

/// Number of boxes peeled at level `k`: `2^{d'k}(2^{d-d'} - 1)`.
pub fn level_count(d: usize, dprime: usize, k: usize) -> u64 {
    (1u64 << (dprime * k)) * ((1u64 << (d - dprime)) - 1)
}

/// One cell of the tree with its integer coordinates at its own level.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub cube: HyperCube,
    pub coords: Vec<u64>,
}

/// Selects a level (1-based) or the terminal region of a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRegion {
    Level(usize),
    Terminal,
}

/// Cell a point falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellId {
    /// Peeled box `index` (0-based) at `level` (1-based).
    Peeled { level: usize, index: usize },
    Terminal,
}

/// Dyadic peeling of the source box towards the shared surface.
#[derive(Debug, Clone)]
pub struct SubdivisionTree {
    source: HyperCube,
    target: HyperCube,
    d: usize,
    dprime: usize,
    kappa: usize,
    levels: Vec<Vec<Cell>>,
    terminal: Vec<Cell>,
    lookup: Vec<HashMap<Vec<u64>, usize>>,
}

impl SubdivisionTree {
    pub fn source(&self) -> &HyperCube {
        &self.source
    }

    pub fn target(&self) -> &HyperCube {
        &self.target
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dprime(&self) -> usize {
        self.dprime
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Peeled boxes at `k` = 1..=κ.
    pub fn level(&self, k: usize) -> Option<&[Cell]> {
        k.checked_sub(1).and_then(|i| self.levels.get(i)).map(Vec::as_slice)
    }

    pub fn levels(&self) -> &[Vec<Cell>] {
        &self.levels
    }

    /// Level-κ cells still adjacent to the target; their union is `Y_κ`.
    pub fn terminal_cells(&self) -> &[Cell] {
        &self.terminal
    }

    /// Bounding corners of the terminal region.
    pub fn terminal_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.terminal[0].cube.lo.clone();
        let mut hi = self.terminal[0].cube.hi.clone();
        for c in &self.terminal[1..] {
            for j in 0..self.d {
                lo[j] = lo[j].min(c.cube.lo[j]);
                hi[j] = hi[j].max(c.cube.hi[j]);
            }
        }
        (lo, hi)
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// Locate a point of the source box. Cells are half-open, closed on the
    /// upper boundary of the source box.
    pub fn locate(&self, p: &[f64]) -> Option<CellId> {
        if p.len() != self.d {
            return None;
        }
        let scale = (1u64 << self.kappa) as f64;
        let top = (1u64 << self.kappa) - 1;
        let side = self.source.side();
        let mut finest = Vec::with_capacity(self.d);
        for (j, &x) in p.iter().enumerate() {
            if x < self.source.lo[j] || x > self.source.hi[j] {
                return None;
            }
            let t = ((x - self.source.lo[j]) / side * scale).floor();
            finest.push((t as u64).min(top));
        }
        let mut key = vec![0u64; self.d];
        for k in 1..=self.kappa {
            for j in 0..self.d {
                key[j] = finest[j] >> (self.kappa - k);
            }
            if let Some(&index) = self.lookup[k - 1].get(&key) {
                return Some(CellId::Peeled { level: k, index });
            }
        }
        Some(CellId::Terminal)
    }
}

/// Build the peeling tree of `source` against `target` for `n` particles.
pub fn subdivide(source: &HyperCube, target: &HyperCube, n: u64) -> Result<SubdivisionTree> {
    let dprime = match classify(target, source)? {
        InteractionKind::FarField => return Err(Error::NoSubdivisionNeeded),
        InteractionKind::SharedSurface(dp) => dp,
    };
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let d = source.dim();
    let depth = kappa(n, d);
    if d * depth > 62 || depth >= 63 {
        return Err(Error::Domain(format!("subdivision depth {depth} too large for d = {d}")));
    }
    let mut adjacent = vec![Cell { cube: source.clone(), coords: vec![0; d] }];
    let mut levels = Vec::with_capacity(depth);
    let mut lookup = Vec::with_capacity(depth);
    for _ in 1..=depth {
        let mut peeled = Vec::new();
        let mut kept = Vec::new();
        for parent in &adjacent {
            for (mask, child) in parent.cube.children().into_iter().enumerate() {
                let coords = (0..d).map(|j| 2 * parent.coords[j] + (mask >> j & 1) as u64).collect();
                let cell = Cell { cube: child, coords };
                match classify(target, &cell.cube)? {
                    InteractionKind::SharedSurface(dp) if dp == dprime => kept.push(cell),
                    InteractionKind::FarField => peeled.push(cell),
                    other => {
                        return Err(Error::Geometry(format!(
                            "child {} classified as {other:?} during peeling",
                            cell.cube
                        )))
                    }
                }
            }
        }
        peeled.sort_by(|a, b| a.coords.cmp(&b.coords));
        kept.sort_by(|a, b| a.coords.cmp(&b.coords));
        lookup.push(peeled.iter().enumerate().map(|(i, c)| (c.coords.clone(), i)).collect());
        levels.push(peeled);
        adjacent = kept;
    }
    Ok(SubdivisionTree {
        source: source.clone(),
        target: target.clone(),
        d,
        dprime,
        kappa: depth,
        levels,
        terminal: adjacent,
        lookup,
    })
}

/// Probability that a uniform particle lands in one box of level `k`, or in
/// the terminal region.
pub fn box_probability(tree: &SubdivisionTree, which: TreeRegion) -> Result<f64> {
    let d = tree.d as i32;
    match which {
        TreeRegion::Level(k) if (1..=tree.kappa).contains(&k) => Ok(2f64.powi(-d * k as i32)),
        TreeRegion::Level(k) => Err(Error::index(k, 1, tree.kappa)),
        TreeRegion::Terminal => Ok(2f64.powi(-(((tree.d - tree.dprime) * tree.kappa) as i32))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(lo: &[f64], hi: &[f64]) -> HyperCube {
        HyperCube::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn domain_pairs() {
        let (x, y) = make_domain_pair(1, InteractionKind::SharedSurface(0), 1.0).unwrap();
        assert_eq!((x.lo(), x.hi()), (&[-1.0][..], &[0.0][..]));
        assert_eq!((y.lo(), y.hi()), (&[0.0][..], &[1.0][..]));

        let (x, _) = make_domain_pair(2, InteractionKind::SharedSurface(1), 1.0).unwrap();
        assert_eq!(x, cube(&[0.0, -1.0], &[1.0, 0.0]));

        let (x, _) = make_domain_pair(1, InteractionKind::FarField, 1.0).unwrap();
        assert_eq!(x, cube(&[-2.0], &[-1.0]));

        assert!(matches!(
            make_domain_pair(2, InteractionKind::SharedSurface(2), 1.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let y1 = cube(&[0.0], &[1.0]);
        assert_eq!(classify(&cube(&[-1.0], &[0.0]), &y1).unwrap(), InteractionKind::SharedSurface(0));
        assert_eq!(classify(&cube(&[-2.0], &[-1.0]), &y1).unwrap(), InteractionKind::FarField);
        let y2 = cube(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(
            classify(&cube(&[0.0, -1.0], &[1.0, 0.0]), &y2).unwrap(),
            InteractionKind::SharedSurface(1)
        );
    }

    #[test]
    fn classify_errors() {
        let y = cube(&[0.0], &[1.0]);
        assert!(matches!(classify(&cube(&[-0.5], &[0.5]), &y), Err(Error::Geometry(_))));
        assert!(matches!(
            classify(&cube(&[-1.5], &[-0.5]), &y),
            Err(Error::AmbiguousSeparation { .. })
        ));
        let y2 = cube(&[0.0, 0.0], &[1.0, 1.0]);
        let staggered = cube(&[0.5, -1.0], &[1.5, 0.0]);
        assert!(matches!(classify(&staggered, &y2), Err(Error::Geometry(_))));
    }

    #[test]
    fn kappa_is_exact_at_powers() {
        assert_eq!(kappa(8, 1), 3);
        assert_eq!(kappa(7, 1), 2);
        assert_eq!(kappa(16, 2), 2);
        assert_eq!(kappa(15, 2), 1);
        assert_eq!(kappa(512, 3), 3);
        assert_eq!(kappa(1, 1), 0);
        assert_eq!(kappa(1 << 24, 1), 24);
    }

    #[test]
    fn subdivide_1d() {
        let (x, y) = make_domain_pair(1, InteractionKind::SharedSurface(0), 1.0).unwrap();
        let tree = subdivide(&y, &x, 8).unwrap();
        assert_eq!(tree.kappa(), 3);
        let expect = [(0.5, 1.0), (0.25, 0.5), (0.125, 0.25)];
        for (k, (a, b)) in expect.iter().enumerate() {
            let lvl = tree.level(k + 1).unwrap();
            assert_eq!(lvl.len(), 1);
            assert_eq!((lvl[0].cube.lo()[0], lvl[0].cube.hi()[0]), (*a, *b));
        }
        assert_eq!(tree.terminal_bounds(), (vec![0.0], vec![0.125]));
    }

    #[test]
    fn subdivide_2d_counts() {
        let (x, y) = make_domain_pair(2, InteractionKind::SharedSurface(1), 1.0).unwrap();
        let tree = subdivide(&y, &x, 16).unwrap();
        assert_eq!(tree.kappa(), 2);
        assert_eq!(tree.level_counts(), vec![2, 4]);

        let (x, y) = make_domain_pair(2, InteractionKind::SharedSurface(0), 1.0).unwrap();
        let tree = subdivide(&y, &x, 256).unwrap();
        assert_eq!(tree.level_counts(), vec![3; 4]);
    }

    #[test]
    fn subdivide_degenerate_and_far() {
        let (x, y) = make_domain_pair(1, InteractionKind::SharedSurface(0), 1.0).unwrap();
        let tree = subdivide(&y, &x, 1).unwrap();
        assert_eq!(tree.kappa(), 0);
        assert_eq!(tree.terminal_cells()[0].cube, y);
        assert_eq!(tree.locate(&[0.7]), Some(CellId::Terminal));

        let (x, y) = make_domain_pair(1, InteractionKind::FarField, 1.0).unwrap();
        assert!(matches!(subdivide(&y, &x, 8), Err(Error::NoSubdivisionNeeded)));
    }

    #[test]
    fn box_probabilities() {
        let (x, y) = make_domain_pair(1, InteractionKind::SharedSurface(0), 1.0).unwrap();
        let tree = subdivide(&y, &x, 8).unwrap();
        assert_eq!(box_probability(&tree, TreeRegion::Level(2)).unwrap(), 0.25);
        assert!(matches!(box_probability(&tree, TreeRegion::Level(4)), Err(Error::Index { .. })));
        assert!(matches!(box_probability(&tree, TreeRegion::Level(0)), Err(Error::Index { .. })));

        let (x, y) = make_domain_pair(2, InteractionKind::SharedSurface(1), 1.0).unwrap();
        let tree = subdivide(&y, &x, 16).unwrap();
        assert_eq!(box_probability(&tree, TreeRegion::Terminal).unwrap(), 0.25);

        let (x, y) = make_domain_pair(3, InteractionKind::SharedSurface(0), 1.0).unwrap();
        let tree = subdivide(&y, &x, 8).unwrap();
        assert_eq!(box_probability(&tree, TreeRegion::Terminal).unwrap(), 0.125);
    }

    #[test]
    fn locate_matches_boxes() {
        let (x, y) = make_domain_pair(2, InteractionKind::SharedSurface(1), 1.0).unwrap();
        let tree = subdivide(&y, &x, 64).unwrap();
        for p in [[0.9, 0.9], [0.1, 0.3], [0.6, 0.2], [0.3, 0.05], [0.99, 0.01]] {
            let hit = tree.locate(&p).unwrap();
            match hit {
                CellId::Peeled { level, index } => {
                    let c = &tree.level(level).unwrap()[index].cube;
                    assert!(c.lo().iter().zip(&p).all(|(a, v)| a <= v));
                    assert!(c.hi().iter().zip(&p).all(|(b, v)| v < b));
                }
                CellId::Terminal => {
                    let (_, hi) = tree.terminal_bounds();
                    assert!(p[1] < hi[1]);
                }
            }
        }
    }
}
