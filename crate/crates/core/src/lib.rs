//! Structure-aware discrete diffusion on Ising spin systems, sampled with
//! probabilistic bits.

// NaN must fail validation, so `!(x > 0.0)` is deliberate.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod checks;
pub mod commands;
pub mod correlated;
pub mod datastore;
pub mod denoiser;
pub mod error;
pub mod eval;
pub mod gbit;
pub mod independent;
pub mod lfsr;
pub mod oracle;
pub mod pbit;
pub mod rng;
pub mod spin;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use spin::{CouplingGraph, SpinConfiguration};
