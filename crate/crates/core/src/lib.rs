//! Numerical core of the adaptive label regularization lab.
//!
//! Everything in this crate is deterministic 64-bit float arithmetic with no
//! IO: dense vectors and matrices, a softmax/cross-entropy toolkit with
//! analytic gradients, the learnable residual correlation matrix and its
//! losses, a small manually differentiated MLP classifier with SGD/Adam
//! optimizers, and seeded synthetic dataset generation. File formats, config
//! parsing, and the CLI live in the companion `alr-lab` crate.
//!
//! The crate is `no_std`-compatible (`alloc` required): build with
//! `--no-default-features --features libm` to route transcendental functions
//! through `libm` instead of the platform libm behind `std`.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("alr-core needs a math backend: enable either `std` or `libm`");

extern crate alloc;

pub mod data;
pub mod error;
pub mod fmtnum;
pub mod labels;
pub mod losses;
mod math;
pub mod model;
pub mod numeric;
pub mod optim;
pub mod residual;
pub mod rng;
pub mod train;

pub use error::{CoreError, Result};
pub use labels::ClassIndex;
pub use losses::{LossBundle, Prefactor};
pub use numeric::DenseMatrix;
pub use residual::ResidualCorrelationMatrix;
pub use rng::RngStream;
