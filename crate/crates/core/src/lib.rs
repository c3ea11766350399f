//! Discrete nonlinear potential theory on epsilon-net graphs of model
//! metric measure spaces.

#![forbid(unsafe_code)]

pub mod acceptance;
pub mod canon;
pub mod cable;
pub mod capacity;
pub mod error;
pub mod harnack;
pub mod linalg;
pub mod modulus;
pub mod netgraph;
pub mod penergy;
pub mod scaling;
pub mod spaces;

pub use error::{Error, Result};
