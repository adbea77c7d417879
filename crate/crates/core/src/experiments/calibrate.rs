use serde::Serialize;

use super::{run_experiment_with, ExperimentConfig, Runner};
use crate::error::{Error, Result};
use crate::geometry::InteractionKind;
use crate::kernels::KernelId;
use crate::lowrank::RankMethod;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub ladder: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub method: RankMethod,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { ladder: vec![64, 128, 256, 512, 1024], trials: 4, master_seed: 0, method: RankMethod::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    /// Largest observed far-field rank plus one.
    pub p: u64,
    pub observed_max: u64,
    /// `(n, max rank over the trials at n)`.
    pub ladder: Vec<(u64, u64)>,
}

/// Truncation level from far-field ranks of `kernel` in `d` dimensions.
pub fn calibrate_p(kernel: &KernelId, d: usize, eps: f64, opts: &CalibrationOptions, runner: &Runner) -> Result<Calibration> {
    let mut cfg = ExperimentConfig::new(d, InteractionKind::FarField, &[], opts.ladder.clone(), opts.trials, opts.master_seed);
    cfg.kernels = vec![kernel.name()];
    cfg.eps = eps;
    cfg.method = opts.method;
    let mut runner = Runner { keep_samples: true, ..runner.clone() };
    if let KernelId::Custom(c) = kernel {
        if runner.registry.resolve(&c.name).is_err() {
            runner.registry.register(c.clone())?;
        }
    }
    let stats = run_experiment_with(&cfg, &runner)?;
    let mut ladder = Vec::new();
    for cell in &stats.cells {
        if let Some(e) = &cell.error {
            return Err(Error::Numerical(format!("calibration failed: {e}")));
        }
        let max = cell.samples.as_deref().unwrap_or(&[]).iter().copied().max().unwrap_or(0) as u64;
        ladder.push((cell.n, max));
    }
    let observed_max = ladder.iter().map(|x| x.1).max().unwrap_or(0);
    Ok(Calibration { p: observed_max + 1, observed_max, ladder })
}
