//! Dense numerical kernels, stable elementary functions, losses, and seeded
//! randomness. Everything downstream builds on this module.

pub mod func;
pub mod matrix;
pub mod rng;

pub use func::{cross_entropy, cross_entropy_from_logits, softmax_rows, squared_error};
pub use matrix::{solve, DenseMatrix};
pub use rng::{role, substream_seed, Rng};
