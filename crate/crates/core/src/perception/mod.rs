//! Contact-patch segmentation and shear estimation from depth and IR frames.
//!
//! A no-contact reference is captured after every pressure settle. The patch
//! is the region where the current depth frame is closer to the camera than
//! the reference by more than a threshold. Both IR frames are masked by the
//! patch, a dense flow is computed between them, and the flow is summed into
//! a tangential displacement and a torsional moment about the patch centroid.

mod filter;
mod flow;
mod mask;
mod reference;
mod shear;

use thiserror::Error;

pub use flow::{dense_flow, flow_field, FlowConfig};
pub use mask::{compute_mask, erode, fill_holes, largest_component, mask_ir, MaskConfig};
pub use reference::{reset_reference, FrameAnalysis, PerceptionConfig, ReferenceState, ShearPipeline};
pub use shear::{aggregate_shear, calibrate_gain, format_gain, parse_gain, Calibration, GainMatrix, ShearEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("image is {found:?}, expected {expected:?}")]
    Dimensions { expected: (usize, usize), found: (usize, usize) },
    #[error("reference captured at {reference} hPa but frame at {current} hPa (tolerance {tolerance} hPa); reset the reference")]
    StaleReference { reference: f64, current: f64, tolerance: f64 },
    #[error("no reference has been captured")]
    NoReference,
    #[error("a reference needs at least one frame")]
    EmptyReference,
    #[error("invalid perception configuration: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("invalid gain file: {0}")]
    Gain(String),
}
