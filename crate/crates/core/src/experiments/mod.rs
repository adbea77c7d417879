//! Seeded Monte Carlo trials of the ε-rank and the realized rank bound.
//!
//! Every trial draws fresh targets and sources from a seed derived from
//! `(master_seed, kernel, n, trial)`, so any single cell can be reproduced on
//! its own. Samples are integers and are aggregated in trial order, which
//! makes the statistics independent of the number of workers.

mod calibrate;
mod emit;
mod fit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_domain_pair, subdivide, InteractionKind};
use crate::kernels::{KernelId, KernelRegistry};
use crate::lowrank::{assemble, eps_rank_with, realized_r, RankMethod};
use crate::sampling::{derive_seed, realized_counts, sample, Distribution};

pub use calibrate::{calibrate_p, Calibration, CalibrationOptions};
pub use emit::{emit, emit_plot, parse_csv, parse_json, plot_rows, render, EmitFormat, PlotRow, SummaryRow};
pub use fit::{growth_fit, growth_fit_stats, GrowthFit, LineFit};

fn default_eps() -> f64 {
    1e-12
}

fn default_side() -> f64 {
    1.0
}

/// One experiment: a grid of kernels × particle counts, each run for
/// `trials` independent draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub surface: InteractionKind,
    pub kernels: Vec<String>,
    pub n: Vec<u64>,
    pub trials: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub master_seed: u64,
    /// Truncation level for the realized rank; calibrated when absent.
    #[serde(default)]
    pub p: Option<u64>,
    #[serde(default)]
    pub distribution: Distribution,
    #[serde(default = "default_side")]
    pub side: f64,
    #[serde(default)]
    pub method: RankMethod,
}

impl ExperimentConfig {
    pub fn new(dim: usize, surface: InteractionKind, kernels: &[KernelId], n: Vec<u64>, trials: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            dim,
            surface,
            kernels: kernels.iter().map(KernelId::name).collect(),
            n,
            trials,
            eps: default_eps(),
            master_seed,
            p: None,
            distribution: Distribution::Uniform,
            side: default_side(),
            method: RankMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.n.is_empty() || self.n[0] == 0 || self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n values must be positive and strictly ascending".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::Config("at least one kernel is required".into()));
        }
        make_domain_pair(self.dim, self.surface, self.side).map(|_| ())
    }

    pub fn resolve_kernels(&self, registry: &KernelRegistry) -> Result<Vec<KernelId>> {
        self.kernels.iter().map(|k| registry.resolve(k)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Execution knobs that never influence results.
#[derive(Debug, Clone, Default)]
pub struct Runner {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub registry: KernelRegistry,
    /// Keep per-trial samples in the statistics.
    pub keep_samples: bool,
}

impl Runner {
    pub fn with_workers(workers: usize) -> Self {
        Runner { workers: Some(workers), ..Runner::default() }
    }

    fn install<R: Send>(&self, job: impl FnOnce() -> R + Send) -> Result<R> {
        match self.workers {
            None => Ok(job()),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// Aggregate of one `(kernel, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub kernel: String,
    pub n: u64,
    pub trials: u64,
    pub sum: u64,
    pub sum_sq: u128,
    pub mean: f64,
    /// Population variance (divides by the number of trials).
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellStats {
    pub fn from_samples(kernel: &str, n: u64, samples: &[u32], keep: bool) -> Self {
        let t = samples.len() as u64;
        let sum: u64 = samples.iter().map(|&r| r as u64).sum();
        let sum_sq: u128 = samples.iter().map(|&r| (r as u128) * (r as u128)).sum();
        let (mean, variance) = if t == 0 {
            (0.0, 0.0)
        } else {
            let centered = t as u128 * sum_sq - (sum as u128) * (sum as u128);
            (sum as f64 / t as f64, centered as f64 / ((t as f64) * (t as f64)))
        };
        CellStats {
            kernel: kernel.to_string(),
            n,
            trials: t,
            sum,
            sum_sq,
            mean,
            variance,
            samples: keep.then(|| samples.to_vec()),
            error: None,
        }
    }

    fn failed(kernel: &str, n: u64, error: &Error) -> Self {
        let mut c = Self::from_samples(kernel, n, &[], false);
        c.error = Some(error.to_string());
        c
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.trials.max(1) as f64).sqrt()
    }
}

/// Results of an experiment together with the configuration that produced
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankStatistics {
    pub config: ExperimentConfig,
    /// What the samples are: `eps_rank` or `realized_r`.
    pub quantity: String,
    pub variance: String,
    pub format_version: u32,
    pub cells: Vec<CellStats>,
}

impl RankStatistics {
    pub fn cell(&self, kernel: &str, n: u64) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.kernel.eq_ignore_ascii_case(kernel) && c.n == n)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellStats> {
        self.cells.iter().filter(|c| !c.is_ok())
    }
}

fn trial_seed(config: &ExperimentConfig, kernel: &KernelId, n: u64, trial: u64) -> u64 {
    derive_seed(config.master_seed, &[kernel.code(), n, trial])
}

fn with_provenance<T>(kernel: &KernelId, n: u64, trial: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Trial { kernel: kernel.name(), n, trial, source: Box::new(e) })
}

/// Sample count per domain: particle counts must fit in memory indices.
fn count(n: u64) -> Result<usize> {
    usize::try_from(n).map_err(|_| Error::Config(format!("n = {n} does not fit in memory")))
}

struct Draw {
    rank: u32,
    realized: Option<u32>,
}

fn draw(config: &ExperimentConfig, kernel: &KernelId, n: u64, trial: u64, p: Option<u64>, rank: bool) -> Result<Draw> {
    let seed = trial_seed(config, kernel, n, trial);
    let (target, source) = make_domain_pair(config.dim, config.surface, config.side)?;
    let ys = sample(&source, count(n)?, derive_seed(seed, &[1]), &config.distribution)?;
    let realized = match p {
        Some(p) => {
            let tree = subdivide(&source, &target, n)?;
            let r = realized_r(&realized_counts(&ys, &tree)?, p);
            Some(u32::try_from(r).map_err(|_| Error::Numerical(format!("realized rank {r} overflows")))?)
        }
        None => None,
    };
    let rank = if rank {
        let xs = sample(&target, count(n)?, derive_seed(seed, &[0]), &config.distribution)?;
        let k = assemble(kernel, &xs, &ys)?;
        eps_rank_with(&k, config.eps, config.method)?.eps_rank as u32
    } else {
        0
    };
    Ok(Draw { rank, realized })
}

/// ε-rank of one seeded draw.
pub fn run_trial(config: &ExperimentConfig, kernel: &KernelId, n: u64, trial: u64) -> Result<u32> {
    with_provenance(kernel, n, trial, draw(config, kernel, n, trial, None, true).map(|d| d.rank))
}

/// ε-rank and realized rank bound of the same draw.
pub fn run_paired_trial(config: &ExperimentConfig, kernel: &KernelId, n: u64, trial: u64, p: u64) -> Result<(u32, u32)> {
    with_provenance(
        kernel,
        n,
        trial,
        draw(config, kernel, n, trial, Some(p), true).map(|d| (d.rank, d.realized.unwrap_or(0))),
    )
}

type CellResult = Result<Vec<(u32, u32)>>;

/// Runs every trial of every cell. Returns per-cell `(rank, realized)`
/// samples in trial order, or the first failing trial of the cell.
fn run_cells(
    config: &ExperimentConfig,
    runner: &Runner,
    kernels: &[KernelId],
    p: &[Option<u64>],
    rank: bool,
) -> Result<Vec<CellResult>> {
    let cells: Vec<(usize, u64)> = (0..kernels.len()).flat_map(|k| config.n.iter().map(move |&n| (k, n))).collect();
    let tasks: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| (0..config.trials).map(move |t| (c, t))).collect();
    let results: Vec<Result<(u32, u32)>> = runner.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| {
                let (k, n) = cells[c];
                let kernel = &kernels[k];
                with_provenance(kernel, n, t, draw(config, kernel, n, t, p[k], rank))
                    .map(|d| (d.rank, d.realized.unwrap_or(0)))
            })
            .collect()
    })?;
    let per_cell = config.trials as usize;
    let mut it = results.into_iter();
    Ok((0..cells.len())
        .map(|_| {
            let chunk: Vec<_> = it.by_ref().take(per_cell).collect();
            chunk.into_iter().collect::<Result<Vec<_>>>()
        })
        .collect())
}

fn statistics(config: &ExperimentConfig, quantity: &str, cells: Vec<CellStats>) -> RankStatistics {
    RankStatistics {
        config: config.clone(),
        quantity: quantity.into(),
        variance: "population".into(),
        format_version: crate::FORMAT_VERSION,
        cells,
    }
}

fn cell_keys<'a>(config: &'a ExperimentConfig, kernels: &'a [KernelId]) -> impl Iterator<Item = (String, u64)> + 'a {
    kernels.iter().flat_map(move |k| config.n.iter().map(move |&n| (k.name(), n)))
}

/// ε-rank statistics for every `(kernel, n)` cell of `config`, using the
/// global thread pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RankStatistics> {
    run_experiment_with(config, &Runner::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, runner: &Runner) -> Result<RankStatistics> {
    config.validate()?;
    let kernels = config.resolve_kernels(&runner.registry)?;
    let results = run_cells(config, runner, &kernels, &vec![None; kernels.len()], true)?;
    let cells = cell_keys(config, &kernels)
        .zip(results)
        .map(|((name, n), r)| match r {
            Ok(s) => CellStats::from_samples(&name, n, &s.iter().map(|x| x.0).collect::<Vec<_>>(), runner.keep_samples),
            Err(e) => CellStats::failed(&name, n, &e),
        })
        .collect();
    Ok(statistics(config, "eps_rank", cells))
}

fn truncation_levels(config: &ExperimentConfig, runner: &Runner, kernels: &[KernelId]) -> Result<Vec<Option<u64>>> {
    if config.surface == InteractionKind::FarField {
        return Err(Error::NotApplicable("the realized rank needs a shared-surface configuration".into()));
    }
    kernels
        .iter()
        .map(|k| match config.p {
            Some(p) => Ok(Some(p)),
            None => {
                let opts = CalibrationOptions { master_seed: config.master_seed, method: config.method, ..Default::default() };
                calibrate_p(k, config.dim, config.eps, &opts, runner).map(|c| Some(c.p))
            }
        })
        .collect()
}

/// Statistics of the realized rank bound over the same source draws as
/// [`run_trial`]. No kernel matrices are formed.
pub fn realized_r_experiment(config: &ExperimentConfig, runner: &Runner) -> Result<RankStatistics> {
    config.validate()?;
    let kernels = config.resolve_kernels(&runner.registry)?;
    let p = truncation_levels(config, runner, &kernels)?;
    let results = run_cells(config, runner, &kernels, &p, false)?;
    let cells = cell_keys(config, &kernels)
        .zip(results)
        .map(|((name, n), r)| match r {
            Ok(s) => CellStats::from_samples(&name, n, &s.iter().map(|x| x.1).collect::<Vec<_>>(), runner.keep_samples),
            Err(e) => CellStats::failed(&name, n, &e),
        })
        .collect();
    Ok(statistics(config, "realized_r", cells))
}

/// Paired ε-rank and realized rank of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedCell {
    pub kernel: String,
    pub n: u64,
    pub p: u64,
    pub rank: CellStats,
    pub realized: CellStats,
    /// Fraction of trials with `eps_rank ≤ realized_r`.
    pub dominated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedReport {
    pub config: ExperimentConfig,
    pub cells: Vec<PairedCell>,
}

/// Both samples from every draw, for checking that the realized rank bounds
/// the ε-rank trial by trial.
pub fn paired_experiment(config: &ExperimentConfig, runner: &Runner) -> Result<PairedReport> {
    config.validate()?;
    let kernels = config.resolve_kernels(&runner.registry)?;
    let p = truncation_levels(config, runner, &kernels)?;
    let results = run_cells(config, runner, &kernels, &p, true)?;
    let per_kernel = config.n.len();
    let mut cells = Vec::new();
    for (i, ((name, n), r)) in cell_keys(config, &kernels).zip(results).enumerate() {
        let s = r?;
        let ranks: Vec<u32> = s.iter().map(|x| x.0).collect();
        let realized: Vec<u32> = s.iter().map(|x| x.1).collect();
        let hits = s.iter().filter(|(a, b)| a <= b).count();
        cells.push(PairedCell {
            kernel: name.clone(),
            n,
            p: p[i / per_kernel].unwrap_or(0),
            rank: CellStats::from_samples(&name, n, &ranks, runner.keep_samples),
            realized: CellStats::from_samples(&name, n, &realized, runner.keep_samples),
            dominated: hits as f64 / s.len() as f64,
        });
    }
    Ok(PairedReport { config: config.clone(), cells })
}
