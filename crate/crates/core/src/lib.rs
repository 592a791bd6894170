//! Cross-entropy based online prediction for Markov reward processes.
//!
//! The crate is organised as:
//!
//! - [`mdp`]: finite MDPs, exact error oracles and transition samplers.
//! - [`ce`]: the stochastic-approximation cross-entropy optimizer.
//! - [`objectives`]: online MSPBE/MSBR estimators and the two SCE algorithms.
//! - [`baselines`]: TD(λ), RG, GTD2, TDC, LSTD(λ), LSPE(λ) and nonlinear GTD2.
//! - [`environments`]: benchmark problems.
//! - [`harness`]: experiment configuration, multi-trial runs, CSV output and the CLI.

pub mod baselines;
pub mod ce;
pub mod environments;
mod error;
pub mod harness;
pub(crate) mod linalg;
pub mod mdp;
pub mod objectives;

pub use error::{Error, Result};

/// Random stream used by every stochastic routine.
pub type SimRng = rand_chacha::ChaCha8Rng;
