//! Nelson-diffusion representations of quantum states and synthesis of the
//! time-dependent controlling potentials that drive transitions between them.
//!
//! The crate provides:
//! - closed-form stationary states, transition kernels and decay mixtures of
//!   the harmonic oscillator together with their forward drift fields;
//! - a conservative Fokker-Planck grid solver with impenetrable barriers at
//!   drift singularities;
//! - Sturm-Liouville eigensolvers (finite-difference and exact shooting via
//!   confluent hypergeometric functions) with spectral reconstruction;
//! - phase and controlling-potential synthesis for density/drift pairs,
//!   including the explicit schedules for relaxation, decay, coherent
//!   transitions and Gaussian squeezing;
//! - a deterministic Euler-Maruyama ensemble simulator for validation.

pub mod closedform;
pub mod control;
pub mod drift;
pub mod error;
pub mod fpcore;
pub mod numeric;
pub mod sim;
pub mod specfun;
pub mod spectral;
pub mod states;

pub use error::{Error, Result};
