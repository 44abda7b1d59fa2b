//! Stochastic meta-population influenza model with weekly school-closure
//! control.
//!
//! The crate is organised bottom-up:
//!
//! - [`types`] and [`reproduction`]: age groups, contact matrices, census
//!   counts and the next-generation-matrix algebra that links `R0` to the
//!   per-contact transmission probability.
//! - [`intra_patch`]: deterministic and stochastic (Euler–Maruyama) stepping
//!   of one district's age-structured SEIR model.
//! - [`metapop`]: the coupled patch model. Uninfected patches receive
//!   infections through a non-homogeneous Poisson process realised with the
//!   time-scale transformation.
//! - [`env`]: the budgeted weekly school-closure MDP.
//! - [`groundtruth`]: exhaustive search over binary closure schedules on the
//!   deterministic single-district model.
//! - [`ppo`]: policy/value networks, GAE and the clipped-surrogate learner.
//! - [`census`] and [`network`]: compositional analytics for district
//!   selection and modularity-based community detection on the commute graph.
//! - [`config`], [`synth`] and [`io`]: experiment configuration, synthetic
//!   data generation and the on-disk formats.

pub mod census;
pub mod config;
pub mod env;
pub mod error;
pub mod groundtruth;
pub mod intra_patch;
pub mod io;
pub mod metapop;
pub mod network;
pub mod ppo;
pub mod reproduction;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{AgeGroup, Census, ContactMatrix, ContactPair, EpiParams, MatrixLabel, SeirState};
