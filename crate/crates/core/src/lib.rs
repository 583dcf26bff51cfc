//! Stochastic within-host viral dynamics.
//!
//! A three-compartment model of susceptible cells `S`, infected cells `I`
//! and free virions `B`, with environmental noise on the cell and virion
//! mortality rates:
//!
//! ```text
//! dS = (ω − βSB − μS) dt − σ₁ S dW₁
//! dI = (βSB − pI − μI) dt − σ₁ I dW₁
//! dB = (αI − qB − μ₁B) dt − σ₂ B dW₂
//! ```
//!
//! The crate provides:
//!
//! - [`model`]: parameters, drift/diffusion, `R₀` and the equilibria,
//! - [`stability`]: closed-form extinction criteria and boundedness constants,
//! - [`sim`]: Euler–Maruyama integration, ensembles and Monte-Carlo statistics,
//! - [`control`]: the drug-dosing optimal control problem solved by a
//!   forward-backward sweep,
//! - [`config`], [`io`] and [`commands`]: presets, file formats and the
//!   command layer used by the `viral-sde` binary.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod control;
pub mod error;
pub mod io;
pub mod model;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
pub use model::{Controls, ModelParams, NoiseParams, SimState};
