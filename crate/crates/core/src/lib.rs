//! Simulation, pneumatic control and shear perception for pressure-regulated
//! soft-bubble visuotactile grippers.
//!
//! The crate is split along the data flow of a grasp:
//!
//! * [`sim`] generates ground truth: an inflatable membrane whose geometry,
//!   contact patch and printed markers respond to pressure, pressing objects
//!   and tangential load, rendered as depth and IR frames.
//! * [`pneumatics`] regulates bubble pressure with a pump/exhaust-valve plant,
//!   a deadband setpoint controller and a line-oriented command protocol.
//! * [`perception`] turns depth/IR frame pairs into a contact mask, a dense
//!   flow field over the masked IR images and a gain-scaled shear estimate,
//!   re-referenced whenever the inflation state changes.
//! * [`harness`] wires the three together into scripted, recordable and
//!   replayable runs and the pressure sweeps.
//!
//! Per-pixel work runs on rayon when the `parallel` feature is enabled (the
//! default) and falls back to plain iterators otherwise. Both paths produce
//! bit-identical output.

pub mod format;
pub mod harness;
pub mod image;
pub mod par;
pub mod perception;
pub mod pneumatics;
pub mod sim;

pub use image::{ContactMask, DepthImage, FlowField, Grid, IrImage};
