//! Numerical core of the gridlander stack.
//!
//! Everything in this crate is pure computation over in-memory values: dense
//! layers with manual backpropagation, the forward-only convolution and
//! attention kernels behind the multimodal transformer detector, the
//! bounding-box loss family, image perturbations, the discretized landing
//! environment, and the deep Q-network agent together with its tabular
//! oracles. File formats, plotting and the command line live in the
//! `gridlander` crate.
//!
//! The crate is `no_std` and only needs `alloc`. The `std` feature enables
//! runtime CPU feature detection for the matrix kernels.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dqn;
pub mod env;
pub mod error;
pub mod geometry;
pub mod losses;
pub mod nn;
pub mod perturb;
pub mod rng;
pub mod vital;

pub use error::{Error, Result};
pub use rng::Rng;
