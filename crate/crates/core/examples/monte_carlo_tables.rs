//! Run a small rank experiment and render it as a table and as CSV.

use kernel_rank::experiments::{render, EmitFormat, ExperimentConfig, Runner, run_experiment_with};
use kernel_rank::geometry::InteractionKind;
use kernel_rank::kernels::KernelId;

fn main() -> kernel_rank::Result<()> {
    let cfg = ExperimentConfig::new(2, InteractionKind::SharedSurface(0), &[KernelId::K1, KernelId::K6], vec![64, 144, 256], 10, 3);
    let stats = run_experiment_with(&cfg, &Runner::default())?;
    print!("{}", String::from_utf8_lossy(&render(&stats, EmitFormat::Table)?));
    println!();
    print!("{}", String::from_utf8_lossy(&render(&stats, EmitFormat::Csv)?));
    Ok(())
}
