//! Preprocessing and recognition pipeline for low-light action video.
//!
//! The crate covers the full path from raw dark clips to class scores:
//!
//! - [`media`]: frames, clips, histograms, flow fields and their file formats
//! - [`gamma`]: per-frame adaptive gamma correction (brighten, darken, estimate)
//! - [`sampling`]: delta sampling with blank-frame padding
//! - [`geometry`]: center/maxcenter crops and bilinear scaling
//! - [`flow`]: dense Lucas-Kanade and Horn-Schunck optical flow
//! - [`features`]: grid appearance features and oriented-flow histograms
//! - [`classifier`]: multinomial logistic regression trained by gradient descent
//! - [`pipeline`]: configuration plus the end-to-end clip scoring path
//! - [`synth`]: deterministic synthetic dark-action dataset generator
//! - [`experiment`]: train/eval experiment driver with CSV reports

pub mod classifier;
pub mod error;
pub mod experiment;
pub mod features;
pub mod flow;
pub mod gamma;
pub mod geometry;
pub mod media;
pub mod pipeline;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
pub use media::{Clip, FlowField, Frame, HistogramRgb};
