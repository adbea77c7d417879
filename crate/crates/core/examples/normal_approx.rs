//! Continuity-corrected normal approximation of a cell-count pmf.

use kernel_rank::probmodel::{binom_pmf, normal_approx_pmf, BerryEsseenConstants, CountModel};

fn main() -> kernel_rank::Result<()> {
    let consts = BerryEsseenConstants::default();
    for n in [100u64, 400, 1600, 6400] {
        let m = CountModel::new(n, 0.25)?;
        let (mut worst, mut bound) = (0.0f64, 0.0);
        for k in 0..=n {
            let a = normal_approx_pmf(&m, k, &consts);
            worst = worst.max((a.approx - binom_pmf(&m, k)?).abs());
            bound = a.error_bound;
        }
        println!("n = {n:>5}: max pmf error {worst:.3e}  bound {bound:.3e}");
    }
    Ok(())
}
