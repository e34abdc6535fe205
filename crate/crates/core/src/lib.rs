//! Simultaneous versus independent dimensionality reduction on synthetic
//! data, compositional variational bottleneck losses, and neural
//! mutual-information estimation with finite-data reliability checks.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod io;
pub mod ibgraph;
pub mod lindr;
pub mod linalg;
pub mod metrics;
pub mod miest;
pub mod nncore;
pub mod rng;

pub use error::{Error, Result};
