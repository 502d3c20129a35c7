//! Tone lifts of two-dimensional subshifts of finite type.
//!
//! A model with a one-letter energy taking values in `eps0 * S` is lifted by
//! giving a symbol of level `s` exactly `N^(max S - s)` tones. Uniform
//! measures on the lifted SFT then match Gibbs measures of the original at
//! `beta = log N / eps0`. This crate builds the lifts and checks that
//! correspondence by exact enumeration, transfer matrices and sampling.

pub mod burton_steif;
pub mod cli;
pub mod contours;
pub mod error;
pub mod gibbs;
pub mod lattice;
pub mod models;
pub mod rng;
pub mod sampling;
pub mod sft;

pub use error::{Error, Result};
