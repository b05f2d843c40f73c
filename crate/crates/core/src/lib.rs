//! Simulation of motion-corrupted, thick-slice fetal brain MR acquisitions
//! from tissue label maps, super-resolution reconstruction of the image and
//! its label map, and segmentation evaluation.
//!
//! The pipeline is:
//!
//! 1. [`phantom`]: procedural multi-tissue label maps and relaxation tables.
//! 2. [`acquisition`]: orthogonal thick-slice stacks with per-slice rigid
//!    motion, slice-profile blur and Rician noise; labels propagated through
//!    the same geometry.
//! 3. [`srr`]: TV-regularised least-squares reconstruction on an isotropic
//!    grid and majority-vote label fusion.
//! 4. [`eval`]: Dice, paired Wilcoxon signed-rank, Bonferroni and report
//!    tables.
//!
//! [`pipeline`] chains the stages behind a JSON run configuration.

pub mod acquisition;
pub mod config;
pub mod error;
pub mod eval;
pub mod phantom;
pub mod pipeline;
mod rng;
pub mod srr;
pub mod volume;

pub use error::{Error, Result};
