//! Hierarchical approximation of a vertex-sharing block, compared with the
//! rank implied by the realized cell counts.

use kernel_rank::geometry::{make_domain_pair, subdivide, InteractionKind};
use kernel_rank::kernels::KernelId;
use kernel_rank::lowrank::{assemble, eps_rank, hierarchical_approximate, realized_r, HierarchicalOptions};
use kernel_rank::sampling::{realized_counts, sample, Distribution};

fn main() -> kernel_rank::Result<()> {
    let n = 512;
    let (x, y) = make_domain_pair(1, InteractionKind::SharedSurface(0), 1.0)?;
    let xs = sample(&x, n, 21, &Distribution::Uniform)?;
    let ys = sample(&y, n, 22, &Distribution::Uniform)?;
    let tree = subdivide(&y, &x, n as u64)?;
    let h = hierarchical_approximate(&KernelId::K1, &xs, &ys, &tree, &HierarchicalOptions::new(1e-12, 64))?;
    let counts = realized_counts(&ys, &tree)?;
    let rank = eps_rank(&assemble(&KernelId::K1, &xs, &ys)?, 1e-12)?.eps_rank;

    println!("blocks: {}", h.blocks.len());
    for b in h.blocks.iter().take(6) {
        println!("  level {:?} columns {:>3} order {:?} rank {:>3} error {:.1e}", b.level, b.columns, b.order, b.rank, b.error);
    }
    println!("total rank {}  achieved error {:.2e}", h.total_rank, h.achieved_error);
    println!("realized bound with p = {}: {}", h.max_order, realized_r(&counts, h.max_order as u64));
    println!("ε-rank of the dense block: {rank}");
    Ok(())
}
