//! Pump/exhaust-valve pressure regulation for independently controlled bubbles.
//!
//! A first-order plant stands in for the hardware: the pump drives the bubble
//! towards a supply ceiling, the exhaust valve bleeds it towards ambient with
//! a slower time constant (there is no active suction). The pressure sensor
//! sits on the supply line, so while air flows it reads the bubble pressure
//! plus a regime-dependent gradient that the offset table removes before the
//! deadband controller acts.

mod controller;
mod offset;
mod plant;
mod profile;
mod protocol;
mod system;

use thiserror::Error;

pub use controller::{controller_step, Actuation, BubbleController, ControllerConfig, ControllerMode};
pub use offset::{offset_correct, FlowRegime};
pub use plant::{deflation_time, inflation_time, step_plant, PlantConfig, PlantState};
pub use profile::{load_plant_profile, parse_plant_profile};
pub use protocol::{format_response, parse_command, Command, CommandConsole, ErrorReason, Response};
pub use system::{step_response, PneumaticChannel, PneumaticSystem, StepResponse, TelemetryRow, TELEMETRY_HEADER};

/// Ambient pressure floor, hPa.
pub const AMBIENT_HPA: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PneumaticsError {
    #[error("offset table has no entry for the {0:?} regime")]
    MissingRegime(FlowRegime),
    #[error("pump and exhaust valve are both open")]
    ConflictingActuation,
    #[error("setpoint {0} hPa is outside the operating band")]
    SetpointOutOfBand(f64),
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error("plant profile line {line}: {reason}")]
    Profile { line: usize, reason: String },
    #[error("no bubble with id {0}")]
    UnknownBubble(usize),
}
