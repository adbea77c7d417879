//! Numerical rank of kernel matrices between neighbouring hyper-cubes.
//!
//! The crate measures the ε-rank of kernel matrices built from random particles
//! in touching or separated boxes, builds the dyadic subdivision that explains
//! the rank growth, and evaluates the binomial rank model that predicts it.
//!
//! ```
//! use kernel_rank::geometry::{make_domain_pair, InteractionKind};
//! use kernel_rank::kernels::KernelId;
//! use kernel_rank::lowrank::{assemble, eps_rank};
//! use kernel_rank::sampling::{sample, Distribution};
//!
//! let (target, source) = make_domain_pair(1, InteractionKind::FarField, 1.0).unwrap();
//! let xs = sample(&target, 200, 11, &Distribution::Uniform).unwrap();
//! let ys = sample(&source, 200, 12, &Distribution::Uniform).unwrap();
//! let k = assemble(&KernelId::K6, &xs, &ys).unwrap();
//! assert_eq!(eps_rank(&k, 1e-12).unwrap().eps_rank, 1);
//! ```

pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod lowrank;
pub mod probmodel;
pub mod sampling;

pub use error::{Error, Result};

/// Version of the on-disk result formats (CSV/JSON/binary export).
pub const FORMAT_VERSION: u32 = 1;
