//! Scripted closed-loop runs, record/replay and the experiment sweeps.
//!
//! A scenario drives both bubbles through a pressure schedule and the
//! simulator through grasp and shear events. A run record holds every frame
//! in the binary grid format together with CSV indexes, so perception can be
//! replayed bit-exactly from disk.

mod fit;
mod record;
mod runner;
mod scenario;
mod sweep;

use thiserror::Error;

use crate::format::FormatError;
use crate::perception::PerceptionError;
use crate::pneumatics::PneumaticsError;
use crate::sim::SimError;

pub use fit::{fit_quadratic, QuadraticFit};
pub use record::{
    audit_reset_discipline, read_frame_index, replay, telemetry_csv, FrameIndexRow, FrameKind, FrameTelemetry, RunRecord,
    CONTACT_FILE, FLOW_FILE, FRAMES_FILE, FRAMES_HEADER, INDEX_FILE, MASKS_FILE, PNEUMATICS_FILE, SCENARIO_FILE,
    TELEMETRY_FILE, TELEMETRY_HEADER,
};
pub use runner::{capture, frame_seed, run_scenario, RunOptions};
pub use scenario::{Action, Event, ObjectPreset, Scenario};
pub use sweep::{
    fig6_csv, fig6_sweep, fig7_csv, fig7_sweep, fig8_csv, fig8_sweep, gnuplot_script, Fig6Result, Fig6Row, Fig7Result,
    Fig7Row, Fig8Result, Fig8Row, SweepOptions, FIG8_OBJECTS, FIG8_PRESSURES,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario line {line}: {reason}")]
    Scenario { line: usize, reason: String },
    #[error("run aborted at step {step} (line {line}, t = {time} s, `{action}`): {reason}")]
    Abort { step: usize, line: usize, time: f64, action: String, reason: String },
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("record: {0}")]
    Record(String),
    #[error("fit: {0}")]
    Fit(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pneumatics(#[from] PneumaticsError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
