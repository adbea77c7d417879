//! Binomial model of the realized rank.
//!
//! A cell of probability `q` receives `N ~ Binomial(n, q)` particles and
//! contributes `Z = min(N, p)` to the rank bound, where `p` is the far-field
//! rank. This module evaluates those distributions exactly in log space, their
//! normal approximations, and the resulting mean and variance bounds.

mod bounds;
mod counts;
mod normal;
mod truncated;

pub use bounds::{expected_r, k_tilde, level_cap_probability, var_r_bound, var_r_exact, BoundInputs, ExpectedR, KTilde};
pub use counts::{binom_pmf, cross_moment_nn, ln_choose, trinom_pmf, CountModel};
pub use normal::{
    berry_esseen_multivariate_bound, bivariate_normal_cell, normal_approx_pmf, std_normal_cdf,
    BerryEsseenConstants, NormalApprox,
};
pub use truncated::{
    conditional_terminal_mean, cov_z_m, terminal_first_moment, z_cov, z_joint_pmf, z_mean, z_pmf, z_var,
    TruncatedCountModel,
};
