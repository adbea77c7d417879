//! Block-wise compression over the peeling tree and the realized rank bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cheb::{cheb_factorize, LowRankFactor};
use super::{assemble, Entries, KernelMatrix};
use crate::error::{Error, Result};
use crate::geometry::{classify, CellId, HyperCube, InteractionKind, SubdivisionTree};
use crate::kernels::{self, KernelId};
use crate::sampling::{membership, ParticleSet, RealizedCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeDirection {
    /// A 2-norm tolerance expressed as a max-norm tolerance.
    TwoToMax,
    /// A max-norm tolerance expressed as a 2-norm tolerance.
    MaxToTwo,
}

/// Tolerance conversion between relative 2-norm and max-norm errors of an
/// `m×n` matrix: `√(mn)·eps` either way.
pub fn tolerance_bridge(m: usize, n: usize, eps: f64, _direction: BridgeDirection) -> f64 {
    ((m as f64) * (n as f64)).sqrt() * eps
}

/// `Σ min(N_{k,l}, p) + M_κ`.
pub fn realized_r(counts: &RealizedCounts, p: u64) -> u64 {
    counts.levels.iter().flatten().map(|&c| c.min(p)).sum::<u64>() + counts.terminal
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchicalOptions {
    /// Target relative max-norm error.
    pub delta: f64,
    /// Largest block rank allowed for an interpolated block.
    pub max_block_rank: usize,
    /// Largest interpolation order per axis.
    pub max_order: usize,
    /// Rows and columns of the probe subgrid.
    pub probe: usize,
}

impl HierarchicalOptions {
    pub fn new(delta: f64, max_block_rank: usize) -> Self {
        HierarchicalOptions { delta, max_block_rank, max_order: 20, probe: 20 }
    }
}

/// One block of the approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    /// `None` for the terminal block.
    pub level: Option<usize>,
    pub index: usize,
    pub columns: usize,
    /// Interpolation order per axis, `None` when stored dense.
    pub order: Option<usize>,
    pub rank: usize,
    /// Relative max-norm error of the block against its own max-norm.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchicalApproximation {
    /// Assembled block sum.
    pub approx: KernelMatrix,
    pub blocks: Vec<BlockSummary>,
    pub total_rank: usize,
    pub achieved_error: f64,
    /// Largest interpolation order used by any block (0 if none).
    pub max_order: usize,
}

fn evenly_spaced(len: usize, count: usize) -> Vec<usize> {
    if len <= count {
        return (0..len).collect();
    }
    (0..count).map(|i| i * (len - 1) / (count - 1)).collect()
}

fn block_error(k: &KernelMatrix, f: &LowRankFactor) -> f64 {
    let norm = k.max_abs();
    if norm == 0.0 {
        return 0.0;
    }
    let approx = f.to_dense();
    let mut worst: f64 = 0.0;
    for idx in 0..f.m * f.n {
        worst = worst.max((k.entries().get(idx) - approx.get(idx)).norm());
    }
    worst / norm
}

fn probe_error(kernel: &KernelId, targets: &ParticleSet, sources: &ParticleSet, f: &LowRankFactor, probe: usize) -> Result<f64> {
    let rows = evenly_spaced(targets.len(), probe);
    let cols = evenly_spaced(sources.len(), probe);
    let (mut worst, mut norm): (f64, f64) = (0.0, 0.0);
    for &j in &cols {
        for &i in &rows {
            let exact = kernels::evaluate(kernel, targets.point(i), sources.point(j))?;
            norm = norm.max(exact.norm());
            worst = worst.max((exact - f.entry(i, j)).norm());
        }
    }
    Ok(if norm == 0.0 { 0.0 } else { worst / norm })
}

/// Compress one far-field block: smallest even order whose probe and full
/// errors pass, within the order and rank caps. Blocks with no more columns
/// than the interpolation rank are stored dense.
fn compress_block(
    kernel: &KernelId,
    targets: &ParticleSet,
    cube: &HyperCube,
    sources: &ParticleSet,
    exact: &KernelMatrix,
    opts: &HierarchicalOptions,
) -> Result<(Option<LowRankFactor>, Option<usize>, f64)> {
    let d = cube.dim() as u32;
    let c = sources.len();
    let mut best: Option<(LowRankFactor, usize, f64)> = None;
    let mut order = 2;
    while order <= opts.max_order {
        let r = order.pow(d);
        if r >= c {
            return Ok((None, None, 0.0));
        }
        if r > opts.max_block_rank {
            break;
        }
        let f = cheb_factorize(kernel, targets, cube, sources, order)?;
        if probe_error(kernel, targets, sources, &f, opts.probe)? < opts.delta / 10.0 {
            let err = block_error(exact, &f);
            if err < opts.delta {
                return Ok((Some(f), Some(order), err));
            }
            best = Some((f, order, err));
        } else {
            best = Some((f, order, f64::NAN));
        }
        order += 2;
    }
    match best {
        Some((f, order, err)) => {
            let err = if err.is_nan() { block_error(exact, &f) } else { err };
            Ok((Some(f), Some(order), err))
        }
        // Even order 2 exceeds the rank cap.
        None if c <= opts.max_block_rank => Ok((None, None, 0.0)),
        None => Err(Error::Domain(format!(
            "block of {c} columns cannot be compressed within rank {}",
            opts.max_block_rank
        ))),
    }
}

fn write_columns(dst: &mut Entries, m: usize, cols: &[usize], block: &Entries) {
    match (dst, block) {
        (Entries::Real(d), Entries::Real(b)) => {
            for (bj, &j) in cols.iter().enumerate() {
                d[j * m..(j + 1) * m].copy_from_slice(&b[bj * m..(bj + 1) * m]);
            }
        }
        (Entries::Complex(d), b) => {
            for (bj, &j) in cols.iter().enumerate() {
                for i in 0..m {
                    d[j * m + i] = b.get(bj * m + i);
                }
            }
        }
        (Entries::Real(_), Entries::Complex(_)) => unreachable!("complex block in a real matrix"),
    }
}

fn assemble_blocks(
    kernel: &KernelId,
    targets: &ParticleSet,
    sources: &ParticleSet,
    groups: Vec<(Option<usize>, usize, HyperCube, Vec<usize>)>,
    opts: &HierarchicalOptions,
) -> Result<HierarchicalApproximation> {
    let k = assemble(kernel, targets, sources)?;
    let m = k.nrows();
    let mut approx = match k.entries() {
        Entries::Real(v) => Entries::Real(vec![0.0; v.len()]),
        Entries::Complex(v) => Entries::Complex(vec![Complex64::default(); v.len()]),
    };
    let mut blocks = Vec::with_capacity(groups.len());
    let mut max_order = 0;
    for (level, index, cube, cols) in groups {
        let exact = k.columns(&cols);
        let summary = if cols.is_empty() {
            BlockSummary { level, index, columns: 0, order: None, rank: 0, error: 0.0 }
        } else if level.is_none() {
            write_columns(&mut approx, m, &cols, exact.entries());
            BlockSummary { level, index, columns: cols.len(), order: None, rank: cols.len(), error: 0.0 }
        } else {
            let sub = sources.subset(&cols);
            match compress_block(kernel, targets, &cube, &sub, &exact, opts)? {
                (Some(f), Some(order), error) => {
                    write_columns(&mut approx, m, &cols, &f.to_dense());
                    max_order = max_order.max(order);
                    BlockSummary { level, index, columns: cols.len(), order: Some(order), rank: f.r, error }
                }
                _ => {
                    write_columns(&mut approx, m, &cols, exact.entries());
                    BlockSummary { level, index, columns: cols.len(), order: None, rank: cols.len(), error: 0.0 }
                }
            }
        };
        blocks.push(summary);
    }
    let norm = k.max_abs();
    if norm == 0.0 {
        return Err(Error::DegenerateNorm);
    }
    let mut worst: f64 = 0.0;
    for idx in 0..m * k.ncols() {
        worst = worst.max((k.entries().get(idx) - approx.get(idx)).norm());
    }
    let total_rank = blocks.iter().map(|b| b.rank).sum();
    let approx = KernelMatrix::from_entries(m, k.ncols(), approx, k.meta().clone())?;
    Ok(HierarchicalApproximation { approx, blocks, total_rank, achieved_error: worst / norm, max_order })
}

/// Approximate `K` as a sum of column blocks over the peeling tree: each
/// peeled box is interpolated, the terminal block is kept exactly.
pub fn hierarchical_approximate(
    kernel: &KernelId,
    targets: &ParticleSet,
    sources: &ParticleSet,
    tree: &SubdivisionTree,
    opts: &HierarchicalOptions,
) -> Result<HierarchicalApproximation> {
    if !(opts.delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {}", opts.delta)));
    }
    let cells = membership(sources, tree)?;
    let mut groups: Vec<(Option<usize>, usize, HyperCube, Vec<usize>)> = Vec::new();
    for (k, level) in tree.levels().iter().enumerate() {
        for (l, cell) in level.iter().enumerate() {
            groups.push((Some(k + 1), l, cell.cube.clone(), Vec::new()));
        }
    }
    let offsets: Vec<usize> = tree
        .levels()
        .iter()
        .scan(0, |acc, lvl| {
            let o = *acc;
            *acc += lvl.len();
            Some(o)
        })
        .collect();
    let terminal = groups.len();
    groups.push((None, 0, tree.source().clone(), Vec::new()));
    for (j, id) in cells.into_iter().enumerate() {
        let g = match id {
            CellId::Peeled { level, index } => offsets[level - 1] + index,
            CellId::Terminal => terminal,
        };
        groups[g].3.push(j);
    }
    assemble_blocks(kernel, targets, sources, groups, opts)
}

/// Single-block compression of a far-field interaction.
pub fn compress_far_field(
    kernel: &KernelId,
    targets: &ParticleSet,
    sources: &ParticleSet,
    opts: &HierarchicalOptions,
) -> Result<HierarchicalApproximation> {
    if classify(targets.domain(), sources.domain())? != InteractionKind::FarField {
        return Err(Error::NotApplicable("domains are not far-field".into()));
    }
    let all = (0..sources.len()).collect();
    assemble_blocks(kernel, targets, sources, vec![(Some(1), 0, sources.domain().clone(), all)], opts)
}
