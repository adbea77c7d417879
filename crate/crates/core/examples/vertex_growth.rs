//! Mean ε-rank of `1/r` between intervals sharing a vertex, which grows by
//! roughly two per doubling of `n`.

use kernel_rank::experiments::{growth_fit_stats, run_experiment, ExperimentConfig};
use kernel_rank::geometry::InteractionKind;
use kernel_rank::kernels::KernelId;

fn main() -> kernel_rank::Result<()> {
    let cfg = ExperimentConfig::new(1, InteractionKind::SharedSurface(0), &[KernelId::K1], vec![125, 250, 500, 1000], 40, 7);
    let stats = run_experiment(&cfg)?;
    for c in &stats.cells {
        println!("n = {:>5}: mean {:.2}  variance {:.2}", c.n, c.mean, c.variance);
    }
    let fit = growth_fit_stats(&stats, "K1")?;
    println!("log fit: {:.2} per doubling (R² {:.3})", fit.log.slope, fit.log.r2);
    Ok(())
}
