//! Diffusion Kalman filtering over sensor networks.
//!
//! A collection of agents on a connected graph tracks a linear-Gaussian
//! state. Each node runs a local filtering update (adapt) and then convex-
//! combines its neighbours' intermediate estimates (combine). The crate
//! provides:
//!
//! - [`model`] — state-space definitions, trajectory simulation, and the
//!   2-D constant-velocity tracking model,
//! - [`network`] — graphs, neighbourhoods, and combination-weight matrices,
//! - [`filters`] — the centralized filter, the diffusion filter, and the
//!   centralized / distributed / local-only Riccati gain schedules,
//! - [`analysis`] — the stacked network-wide error system, PBH
//!   detectability and stabilizability tests, spectral-radius stability
//!   certificates, and Monte-Carlo bias validation.
//!
//! The data-parallel inner loops (per-node filter phases, Monte-Carlo
//! batches) run on rayon when the default `parallel` feature is enabled
//! and fall back to sequential execution otherwise. Results are identical
//! either way; see [`par`].

pub mod analysis;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod model;
pub mod network;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
