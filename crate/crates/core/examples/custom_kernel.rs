//! Register a user kernel and measure its far-field rank.

use kernel_rank::experiments::{run_experiment_with, ExperimentConfig, Runner};
use kernel_rank::geometry::InteractionKind;
use kernel_rank::kernels::CustomKernel;

fn main() -> kernel_rank::Result<()> {
    let mut runner = Runner::default();
    runner.registry.register(CustomKernel::real("gauss", "entire", |x, y| {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-r2).exp()
    }))?;
    let mut cfg = ExperimentConfig::new(1, InteractionKind::FarField, &[], vec![100, 200], 5, 9);
    cfg.kernels = vec!["gauss".into()];
    let stats = run_experiment_with(&cfg, &runner)?;
    for c in &stats.cells {
        println!("{} n = {}: mean rank {:.2}", c.kernel, c.n, c.mean);
    }
    Ok(())
}
