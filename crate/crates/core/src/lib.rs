//! Off-grid delay/Doppler target detection on sparse, unstructured OFDM
//! resource grids.
//!
//! The crate is organised the way the processing chain runs:
//!
//! ```text
//! scene     resource selection, response vectors, channel synthesis
//! recovery  dictionary, FFT correlation, OMP, Newtonized OMP
//! baseline  zero-filled 2D-FFT periodogram and peak picking
//! metrics   CRB, detection/truth association, Monte-Carlo experiments
//! pipeline  recordings, background subtraction, coherent blocks
//! config    flat key-value configuration files
//! ```
//!
//! All operations are pure functions of their inputs and an explicit RNG
//! seed; nothing here keeps global state.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod config;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod recovery;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
pub use num_complex::Complex64;
