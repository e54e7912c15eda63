//! Spatial capture-recapture (SCR) inference for territorial species.
//!
//! Home-range centers of the individuals in the population follow a
//! repulsive Strauss point process. The crate provides:
//!
//! - [`geometry`]: rectangular domains, trap arrays and uniform sampling.
//! - [`strauss`]: pair counts, the unnormalized Strauss density and a
//!   fixed-n Metropolis simulator.
//! - [`norm_const`]: thermodynamic-integration tables for `log c_n(a, b)`.
//! - [`likelihood`]: the multinomial-logit trap encounter model.
//! - [`sampler`]: a Metropolis-within-Gibbs posterior sampler with data
//!   augmentation and an optional multi-period presence layer.
//! - [`simstudy`]: replicate data generation, fitting and the metrics used to
//!   compare the Strauss and independence models.
//! - [`thinning`]: covariate-driven logistic thinning of a Strauss process.
//! - [`config`], [`manifest`] and [`cli`]: the reproducible command-line
//!   workflows behind the `scr` binary.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod likelihood;
pub mod manifest;
pub mod norm_const;
pub mod rng;
pub mod sampler;
pub mod simstudy;
pub mod strauss;
pub mod thinning;

pub use error::{Error, Result};
pub use geometry::{distance, Domain, Point, TrapArray};
pub use likelihood::{CaptureHistory, DetectionParams, PeriodMap};
pub use norm_const::{GridSpec, NormConstTable};
pub use rng::RandomStream;
pub use sampler::{run_chain, AugmentedState, ChainConfig, ChainOutput, Model, Priors};

pub use strauss::{PointPattern, StraussParams};
