//! Embodied distributed quality-diversity for robot swarms.
//!
//! Each robot in a simulated foraging swarm keeps a MAP-Elites archive of the
//! controllers it has executed, broadcasts it to robots in radio range and
//! draws its next controller from what it has heard. Four archive-sharing
//! variants are provided together with a fitness-proportionate
//! genome-broadcast baseline, plus the analysis tooling (diversity,
//! precision, swarm maps, pairwise significance tests) used to compare them.

pub mod analysis;
pub mod archive;
pub mod config;
pub mod controller;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod experiment;
pub mod fixtures;
pub mod genome;
pub mod geometry;
pub mod metrics;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
