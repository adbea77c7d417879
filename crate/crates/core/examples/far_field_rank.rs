//! ε-rank of each benchmark kernel between well-separated 1-D intervals.

use kernel_rank::geometry::{make_domain_pair, InteractionKind};
use kernel_rank::kernels::KernelId;
use kernel_rank::lowrank::{assemble, eps_rank};
use kernel_rank::sampling::{derive_seed, sample, Distribution};

fn main() -> kernel_rank::Result<()> {
    let (x, y) = make_domain_pair(1, InteractionKind::FarField, 1.0)?;
    let n = 500;
    let xs = sample(&x, n, derive_seed(1, &[0]), &Distribution::Uniform)?;
    let ys = sample(&y, n, derive_seed(1, &[1]), &Distribution::Uniform)?;
    for kernel in KernelId::BUILTIN {
        let k = assemble(&kernel, &xs, &ys)?;
        let report = eps_rank(&k, 1e-12)?;
        let sv = &report.singular_values;
        println!(
            "{kernel}: rank {:>2}  sigma_2/sigma_1 = {:.2e}",
            report.eps_rank,
            sv.get(1).map_or(0.0, |s| s / sv[0])
        );
    }
    Ok(())
}
