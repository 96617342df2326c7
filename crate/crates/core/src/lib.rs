//! Spectral-spatial classification of hyperspectral cubes.
//!
//! A small convolutional network turns every pixel's k×k×d neighbourhood into
//! a class posterior. A Potts Markov random field over the 4-connected pixel
//! grid then smooths the label field by α-expansion on top of a max-flow
//! solver, and the network is retrained on the smoothed labels. The two steps
//! alternate for a fixed epoch budget.
//!
//! Modules:
//!
//! - [`data`]: cubes, label maps, patches, splits and the binary/CSV file formats.
//! - [`synth`]: synthetic scenes from the generalized bilinear mixing model.
//! - [`nn`]: the network, backpropagation and SGD training.
//! - [`mrf`]: the energy model, max-flow and α-expansion.
//! - [`regularize`]: median filter and majority vote baselines.
//! - [`metrics`]: confusion matrices, OA, AA and Cohen's kappa.
//! - [`pipeline`]: the alternating training loop, sweeps, reports and rendering.

pub mod data;
pub mod error;
pub mod metrics;
pub mod mrf;
pub mod nn;
pub mod pipeline;
pub mod regularize;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
