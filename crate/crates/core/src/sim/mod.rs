//! Synthetic soft-bubble membrane.
//!
//! The membrane is an elliptical-base cap observed orthographically by an
//! internal camera whose field of view lies inside the membrane rim. Pressure
//! lifts the visible membrane uniformly (tapering to zero at the clamped rim),
//! objects indent it with a smooth lift-off band around the contact patch, and
//! tangential load drags the printed markers: rigidly inside the patch and
//! with a cosine falloff towards the rim outside it.

mod config;
mod force;
mod markers;
mod membrane;
mod object;
mod render;

use thiserror::Error;

pub use config::{BubbleConfig, PRESSURE_MAX, PRESSURE_MIN};
pub use force::{grasp_force_model, jaw_width_for_force, measured_jaw_width};
pub use markers::{sample_markers, Marker};
pub use membrane::{apply_shear, inflate_shape, press_at_width, press_object, shear_decay, MembraneState};
pub use object::{ObjectPrimitive, Pose, Shape};
pub use render::{render_depth, render_ir, render_splats, DepthNoise, SplatStyle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("pressure {0} hPa is outside the operating band [1010, 1090]")]
    PressureOutOfBand(f64),
    #[error("invalid bubble configuration: {0}")]
    Config(String),
    #[error("invalid object: {0}")]
    Object(String),
    #[error("grasp force must be positive, got {0} N")]
    Force(f64),
    #[error("jaw width {0} mm is outside the gripper range")]
    Width(f64),
    #[error("shear requires a non-empty contact patch")]
    NoContact,
    #[error("object would press the membrane onto the base plate")]
    BottomedOut,
}
