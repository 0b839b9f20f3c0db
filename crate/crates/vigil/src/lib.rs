//! vigil: video anomaly detection with per-region restricted Boltzmann
//! machines.
//!
//! Normal appearance is modeled per scene region: frames are cut into
//! overlapping multi-scale patches, patch locations are grouped into regions
//! by a small clustering RBM, and one detection RBM per region learns to
//! reconstruct that region's patches. At detection time a patch whose
//! average reconstruction error exceeds a threshold marks its pixels as
//! candidate anomalies; candidates are then pruned by 3D connected-component
//! analysis over a chunk of frames. A streaming mode keeps the region models
//! updated as new chunks arrive.

pub mod cli;
pub mod cluster;
pub mod config;
pub mod detector;
pub mod error;
pub mod eval;
mod exec;
pub mod io;
pub mod patch;
pub mod rbm;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
