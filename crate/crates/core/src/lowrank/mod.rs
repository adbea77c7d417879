//! Kernel matrices, ε-rank, Chebyshev factorizations and the realized
//! hierarchical rank.

mod cheb;
mod hier;
pub mod svd;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperCube;
use crate::kernels::{self, KernelId};
use crate::sampling::ParticleSet;
use svd::Scalar;

pub use cheb::{cheb_factorize, rel_maxnorm_error, ChebGrid, FactorSource, LowRankFactor};
pub use hier::{
    compress_far_field, hierarchical_approximate, realized_r, tolerance_bridge, BlockSummary, BridgeDirection,
    HierarchicalApproximation, HierarchicalOptions,
};

/// Dense column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Entries {
    pub fn is_complex(&self) -> bool {
        matches!(self, Entries::Complex(_))
    }

    fn len(&self) -> usize {
        match self {
            Entries::Real(v) => v.len(),
            Entries::Complex(v) => v.len(),
        }
    }

    fn get(&self, idx: usize) -> Complex64 {
        match self {
            Entries::Real(v) => Complex64::new(v[idx], 0.0),
            Entries::Complex(v) => v[idx],
        }
    }

    fn abs_at(&self, idx: usize) -> f64 {
        match self {
            Entries::Real(v) => v[idx].abs(),
            Entries::Complex(v) => v[idx].norm(),
        }
    }
}

/// Provenance carried by a kernel matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub kernel: String,
    pub target: Option<HyperCube>,
    pub source: Option<HyperCube>,
    pub target_seed: Option<u64>,
    pub source_seed: Option<u64>,
}

/// Dense `m×n` kernel matrix, immutable after assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    m: usize,
    n: usize,
    entries: Entries,
    meta: MatrixMeta,
}

impl KernelMatrix {
    /// Wrap column-major entries.
    pub fn from_entries(m: usize, n: usize, entries: Entries, meta: MatrixMeta) -> Result<Self> {
        if entries.len() != m * n {
            return Err(Error::Dimension(format!("{} entries for a {m}×{n} matrix", entries.len())));
        }
        Ok(KernelMatrix { m, n, entries, meta })
    }

    /// Real matrix from an element function.
    pub fn from_fn(m: usize, n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut v = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                v.push(f(i, j));
            }
        }
        KernelMatrix { m, n, entries: Entries::Real(v), meta: MatrixMeta::default() }
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn is_complex(&self) -> bool {
        self.entries.is_complex()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries.get(j * self.m + i)
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.m * self.n).map(|k| self.entries.abs_at(k)).fold(0.0, f64::max)
    }

    /// Columns `cols`, in order.
    pub fn columns(&self, cols: &[usize]) -> KernelMatrix {
        fn pick<T: Copy>(v: &[T], m: usize, cols: &[usize]) -> Vec<T> {
            cols.iter().flat_map(|&j| v[j * m..(j + 1) * m].iter().copied()).collect()
        }
        let entries = match &self.entries {
            Entries::Real(v) => Entries::Real(pick(v, self.m, cols)),
            Entries::Complex(v) => Entries::Complex(pick(v, self.m, cols)),
        };
        KernelMatrix { m: self.m, n: cols.len(), entries, meta: self.meta.clone() }
    }

    /// Write `<stem>.bin` (row-major little-endian, 8-byte reals or 16-byte
    /// complex pairs) and the `<stem>.json` header.
    pub fn export(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let mut bytes = Vec::with_capacity(self.m * self.n * if self.is_complex() { 16 } else { 8 });
        for i in 0..self.m {
            for j in 0..self.n {
                let z = self.get(i, j);
                bytes.extend_from_slice(&z.re.to_le_bytes());
                if self.is_complex() {
                    bytes.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
        std::fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
        let header = ExportHeader {
            m: self.m,
            n: self.n,
            scalar: if self.is_complex() { "complex128" } else { "float64" }.into(),
            kernel: self.meta.kernel.clone(),
            seeds: ExportSeeds { target: self.meta.target_seed, source: self.meta.source_seed },
            format_version: crate::FORMAT_VERSION,
        };
        let mut f = std::fs::File::create(&json).map_err(|e| Error::io(&json, e))?;
        serde_json::to_writer_pretty(&mut f, &header)
            .map_err(|e| Error::Parse { path: json.clone(), message: e.to_string() })?;
        f.write_all(b"\n").map_err(|e| Error::io(&json, e))?;
        Ok((bin, json))
    }

    /// Read back a matrix written by [`KernelMatrix::export`].
    pub fn import(stem: &Path) -> Result<KernelMatrix> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let h: ExportHeader =
            serde_json::from_str(&text).map_err(|e| Error::Parse { path: json.clone(), message: e.to_string() })?;
        let mut bytes = Vec::new();
        std::fs::File::open(&bin).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(&bin, e))?;
        let complex = match h.scalar.as_str() {
            "float64" => false,
            "complex128" => true,
            other => return Err(Error::Parse { path: json, message: format!("unknown scalar `{other}`") }),
        };
        let width = if complex { 16 } else { 8 };
        if bytes.len() != h.m * h.n * width {
            return Err(Error::Parse { path: bin, message: "size does not match header".into() });
        }
        let word = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
        let at = |i: usize, j: usize| (i * h.n + j) * width;
        let entries = if complex {
            Entries::Complex(
                (0..h.n)
                    .flat_map(|j| (0..h.m).map(move |i| (i, j)))
                    .map(|(i, j)| Complex64::new(word(at(i, j)), word(at(i, j) + 8)))
                    .collect(),
            )
        } else {
            Entries::Real((0..h.n).flat_map(|j| (0..h.m).map(move |i| (i, j))).map(|(i, j)| word(at(i, j))).collect())
        };
        let meta = MatrixMeta {
            kernel: h.kernel,
            target_seed: h.seeds.target,
            source_seed: h.seeds.source,
            ..MatrixMeta::default()
        };
        KernelMatrix::from_entries(h.m, h.n, entries, meta)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ExportSeeds {
    target: Option<u64>,
    source: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExportHeader {
    m: usize,
    n: usize,
    scalar: String,
    kernel: String,
    seeds: ExportSeeds,
    format_version: u32,
}

fn interiors_disjoint(a: &HyperCube, b: &HyperCube) -> bool {
    (0..a.dim()).any(|j| a.hi()[j].min(b.hi()[j]) <= a.lo()[j].max(b.lo()[j]))
}

fn fill<T: Scalar>(
    targets: &ParticleSet,
    sources: &ParticleSet,
    eval: impl Fn(&[f64], &[f64]) -> Result<T>,
) -> Result<Vec<T>> {
    let m = targets.len();
    let mut out = Vec::with_capacity(m * sources.len());
    for (j, y) in sources.iter().enumerate() {
        for (i, x) in targets.iter().enumerate() {
            let v = eval(x, y).map_err(|e| {
                Error::Numerical(format!("entry ({i}, {j}) at distance {:e}: {e}", kernels::distance(x, y)))
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

/// Assemble `K[i][j] = kernel(x_i, y_j)`.
pub fn assemble(kernel: &KernelId, targets: &ParticleSet, sources: &ParticleSet) -> Result<KernelMatrix> {
    if targets.is_empty() || sources.is_empty() {
        return Err(Error::Domain("assembly needs at least one target and one source".into()));
    }
    if targets.dim() != sources.dim() {
        return Err(Error::Dimension("targets and sources differ in dimension".into()));
    }
    if !interiors_disjoint(targets.domain(), sources.domain()) {
        return Err(Error::Geometry(format!(
            "target {} and source {} overlap",
            targets.domain(),
            sources.domain()
        )));
    }
    let entries = if kernel.is_complex() {
        Entries::Complex(fill(targets, sources, |x, y| kernels::evaluate(kernel, x, y))?)
    } else {
        Entries::Real(fill(targets, sources, |x, y| kernels::evaluate_real(kernel, x, y))?)
    };
    let meta = MatrixMeta {
        kernel: kernel.name(),
        target: Some(targets.domain().clone()),
        source: Some(sources.domain().clone()),
        target_seed: Some(targets.seed()),
        source_seed: Some(sources.seed()),
    };
    Ok(KernelMatrix { m: targets.len(), n: sources.len(), entries, meta })
}

/// How singular values are obtained for rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    /// Full SVD of the whole matrix.
    Full,
    /// Pivoted-QR deflation to `rel_tol·‖K‖_F`, then an SVD of the retained
    /// rows.
    Deflated { rel_tol: f64 },
}

impl Default for RankMethod {
    fn default() -> Self {
        RankMethod::Deflated { rel_tol: 1e-15 }
    }
}

/// ε-rank with the singular values it was read from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub eps_rank: usize,
    /// Descending. With deflation only the leading values are present.
    pub singular_values: Vec<f64>,
    pub eps: f64,
    pub realized_r: Option<u64>,
    /// Norm of the block dropped by deflation (0 for a full SVD).
    pub tail_bound: f64,
}

/// `max{k : σ_k/σ_1 ≥ eps}` for a descending list.
pub fn rank_from_singular_values(sv: &[f64], eps: f64) -> usize {
    match sv.first() {
        Some(&s1) if s1 > 0.0 => sv.iter().take_while(|&&s| s >= eps * s1).count(),
        _ => 0,
    }
}

fn singular_values_of<T: Scalar>(m: usize, n: usize, a: &[T], method: RankMethod) -> Result<(Vec<f64>, f64)> {
    match method {
        RankMethod::Full => Ok((svd::full_singular_values(m, n, a)?, 0.0)),
        RankMethod::Deflated { rel_tol } => {
            let kmax = m.min(n);
            let max_steps = if kmax <= 32 { 0 } else { kmax / 4 };
            let d = svd::deflated_singular_values(m, n, &mut a.to_vec(), rel_tol, max_steps)?;
            Ok((d.values, d.tail))
        }
    }
}

/// ε-rank with the default (deflated) singular value route.
pub fn eps_rank(k: &KernelMatrix, eps: f64) -> Result<RankReport> {
    eps_rank_with(k, eps, RankMethod::default())
}

pub fn eps_rank_with(k: &KernelMatrix, eps: f64, method: RankMethod) -> Result<RankReport> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let (mut sv, tail) = match &k.entries {
        Entries::Real(v) => singular_values_of(k.m, k.n, v, method)?,
        Entries::Complex(v) => singular_values_of(k.m, k.n, v, method)?,
    };
    if sv.iter().all(|&s| s == 0.0) {
        sv = vec![0.0; k.m.min(k.n)];
    }
    Ok(RankReport { eps_rank: rank_from_singular_values(&sv, eps), singular_values: sv, eps, realized_r: None, tail_bound: tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain_pair, InteractionKind};
    use crate::sampling::{sample, Distribution};

    fn pair(kind: InteractionKind, d: usize, n: usize, seed: u64) -> (ParticleSet, ParticleSet) {
        let (x, y) = make_domain_pair(d, kind, 1.0).unwrap();
        (
            sample(&x, n, seed, &Distribution::Uniform).unwrap(),
            sample(&y, n, seed + 1, &Distribution::Uniform).unwrap(),
        )
    }

    #[test]
    fn assemble_single_entry() {
        let xs = ParticleSet::from_points(HyperCube::new(vec![-2.0], vec![0.0]).unwrap(), vec![vec![-1.0]]).unwrap();
        let ys = ParticleSet::from_points(HyperCube::new(vec![0.0], vec![2.0]).unwrap(), vec![vec![1.0]]).unwrap();
        let k = assemble(&KernelId::K7, &xs, &ys).unwrap();
        assert_eq!((k.nrows(), k.ncols(), k.get(0, 0).re), (1, 1, 2.0));
        assert!(!k.is_complex());
        assert!(assemble(&KernelId::K4, &xs, &ys).unwrap().is_complex());
    }

    #[test]
    fn assemble_rejects_overlap() {
        let c = HyperCube::new(vec![0.0], vec![1.0]).unwrap();
        let a = sample(&c, 3, 1, &Distribution::Uniform).unwrap();
        assert!(matches!(assemble(&KernelId::K1, &a, &a), Err(Error::Geometry(_))));
    }

    #[test]
    fn diag_rank() {
        let k = KernelMatrix::from_fn(3, 3, |i, j| if i == j { [1.0, 1e-3, 1e-15][i] } else { 0.0 });
        assert_eq!(eps_rank_with(&k, 1e-6, RankMethod::Full).unwrap().eps_rank, 2);
        assert_eq!(eps_rank(&k, 1e-6).unwrap().eps_rank, 2);
    }

    #[test]
    fn zero_matrix_rank() {
        let k = KernelMatrix::from_fn(4, 3, |_, _| 0.0);
        let r = eps_rank(&k, 1e-12).unwrap();
        assert_eq!((r.eps_rank, r.singular_values.clone()), (0, vec![0.0; 3]));
    }

    #[test]
    fn one_dimensional_identities() {
        let (xs, ys) = pair(InteractionKind::FarField, 1, 300, 5);
        for (id, expect) in [(KernelId::K3, 2), (KernelId::K6, 1), (KernelId::K7, 2)] {
            let k = assemble(&id, &xs, &ys).unwrap();
            assert_eq!(eps_rank(&k, 1e-12).unwrap().eps_rank, expect, "{id}");
        }
    }

    #[test]
    fn deflated_and_full_agree_on_kernel_matrices() {
        for (kind, d) in [(InteractionKind::SharedSurface(0), 1), (InteractionKind::SharedSurface(1), 2)] {
            let (xs, ys) = pair(kind, d, 200, 21);
            for id in [KernelId::K1, KernelId::K4] {
                let k = assemble(&id, &xs, &ys).unwrap();
                let full = eps_rank_with(&k, 1e-12, RankMethod::Full).unwrap();
                let fast = eps_rank(&k, 1e-12).unwrap();
                assert_eq!(full.eps_rank, fast.eps_rank, "{id} d={d}");
                for (a, b) in fast.singular_values.iter().zip(&full.singular_values).take(fast.eps_rank) {
                    assert!((a - b).abs() <= 1e-13 * full.singular_values[0]);
                }
            }
        }
    }

    #[test]
    fn export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (xs, ys) = pair(InteractionKind::FarField, 1, 4, 2);
        for id in [KernelId::K1, KernelId::K4] {
            let k = assemble(&id, &xs, &ys).unwrap();
            let stem = dir.path().join(id.name());
            k.export(&stem).unwrap();
            let back = KernelMatrix::import(&stem).unwrap();
            assert_eq!(back.entries(), k.entries());
            assert_eq!(back.meta().source_seed, Some(ys.seed()));
        }
        let k = assemble(&KernelId::K7, &xs, &ys).unwrap();
        let stem = dir.path().join("rowmajor");
        k.export(&stem).unwrap();
        let bytes = std::fs::read(stem.with_extension("bin")).unwrap();
        let second = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        assert_eq!(second, k.get(0, 1).re);
    }
}
