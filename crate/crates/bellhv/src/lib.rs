//! A laboratory for hidden-variable models of the Bell/CHSH experiment.
//!
//! The crate evaluates, samples, and audits a family of local models built
//! on per-wing "background" variables — from the classic
//! common-cause form through the dichotomic five-factor construction that
//! reaches the algebraic CHSH maximum, and its continuous counterpart on the
//! unit sphere that reproduces singlet statistics exactly.
//!
//! Monte Carlo estimation is chunked and counter-seeded, so every estimate
//! is bit-identical for a fixed seed regardless of worker count; the
//! `parallel` feature (on by default) runs chunks on a rayon pool.

pub mod analysis;
pub mod core;
pub mod error;
pub mod models;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
