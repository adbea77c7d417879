//! Estimate the far-field rank constant of a kernel from a ladder of sizes.

use kernel_rank::experiments::{calibrate_p, CalibrationOptions, Runner};
use kernel_rank::kernels::KernelId;

fn main() -> kernel_rank::Result<()> {
    for kernel in [KernelId::K1, KernelId::K3, KernelId::K6] {
        let c = calibrate_p(&kernel, 1, 1e-12, &CalibrationOptions::default(), &Runner::default())?;
        println!("{kernel}: p = {}  ladder {:?}", c.p, c.ladder);
    }
    Ok(())
}
