//! Vibration analysis with physics-informed graph convolution.
//!
//! The pipeline turns multichannel sensor windows into cross-power spectra,
//! weights them with the frequency response of a lumped mass-spring chain,
//! and uses the dominant singular vectors as a complex modal filter bank inside
//! a graph autoencoder. Reconstruction errors are thresholded to flag damage.

pub mod anomaly;
pub mod config;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod manifest;
pub mod modeconv;
pub mod nn;
pub mod pipeline;
pub mod signal;
pub mod simulator;
pub mod structure;
pub mod window;

pub use error::{Error, Result};

/// Crate version embedded in every report and checkpoint.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
