//! Empirical Bayes replicability analysis for paired p-values from two studies.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! * [`model`]: the four-state mixture of hidden signal states and the exact
//!   evaluation of its joint density and local false discovery rate (Lfdr).
//! * [`grenander`]: weighted maximum likelihood estimation of non-increasing
//!   densities on (0, 1) by pool-adjacent-violators.
//! * [`em`]: the EM fit of the mixture, in full-EM or conservative-proportion mode.
//! * [`fdrctl`]: the Lfdr step-up rule for FDR control.
//! * [`baselines`]: competing replicability procedures (ad hoc BH, MaxP, JUMP,
//!   MaRR, adaptive radjust) and Storey-type null proportion estimators.
//! * [`simkit`]: simulation designs, evaluation metrics and the Hellinger diagnostic.
#![no_std]

extern crate alloc;

pub mod baselines;
pub mod em;
pub mod error;
pub mod fdrctl;
pub mod grenander;
mod linalg;
pub mod model;
pub mod normal;
pub mod simkit;

pub use error::{Error, Result};
pub use model::{
    Density, HiddenStates, MixtureModel, MonotoneStepDensity, PairedPValueSet, StateProportions,
};
