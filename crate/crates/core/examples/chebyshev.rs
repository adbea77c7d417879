//! Tensor Chebyshev factorization of a far-field block, error by order.

use kernel_rank::geometry::{make_domain_pair, InteractionKind};
use kernel_rank::kernels::KernelId;
use kernel_rank::lowrank::{assemble, cheb_factorize, rel_maxnorm_error};
use kernel_rank::sampling::{sample, Distribution};

fn main() -> kernel_rank::Result<()> {
    let (x, y) = make_domain_pair(2, InteractionKind::FarField, 1.0)?;
    let xs = sample(&x, 300, 11, &Distribution::Uniform)?;
    let ys = sample(&y, 300, 12, &Distribution::Uniform)?;
    let k = assemble(&KernelId::K1, &xs, &ys)?;
    for order in (2..=14).step_by(2) {
        let f = cheb_factorize(&KernelId::K1, &xs, &y, &ys, order)?;
        println!("order {order:>2} (rank {:>3}): relative max error {:.2e}", order * order, rel_maxnorm_error(&k, &f)?);
    }
    Ok(())
}
