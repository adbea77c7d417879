//! Closed-form expectation and variance bound of the realized rank.

use kernel_rank::probmodel::{expected_r, k_tilde, var_r_bound, BoundInputs};

fn main() -> kernel_rank::Result<()> {
    let p = 8;
    for (d, dp) in [(1, 0), (2, 0), (2, 1), (3, 2)] {
        println!("d = {d}, shared dimension {dp}, p = {p}");
        for n in [256u64, 4096, 65536] {
            let b = BoundInputs::new(d, dp, n, p)?;
            let e = expected_r(&b);
            println!(
                "  n = {n:>6}: E[R] = {:>9.2}  witness {:>9.2}  Var bound {:>10.2}  kappa {}",
                e.exact_sum,
                e.witness,
                var_r_bound(&b),
                b.kappa()
            );
        }
    }
    let kt = k_tilde(1 << 20, 7, 1e-3, 1)?;
    println!("\nlevels after which a cell exceeds p = 7 with probability ≤ 1e-3: {}", kt.k_tilde);
    Ok(())
}
