use std::fmt;
use std::path::Path;

use super::HarnessError;
use crate::sim::{ObjectPrimitive, PRESSURE_MAX, PRESSURE_MIN};

/// Named test objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectPreset {
    /// Edge of a dinner plate, modelled as a 3 mm slab.
    Plate,
    /// 44 mm diameter mug body.
    Mug,
    /// 28 mm diameter sanitizer bottle.
    Sanitizer,
    /// 10 mm diameter pen.
    Pen,
}

impl ObjectPreset {
    pub const ALL: [ObjectPreset; 4] = [Self::Plate, Self::Mug, Self::Sanitizer, Self::Pen];

    pub fn name(self) -> &'static str {
        match self {
            Self::Plate => "plate",
            Self::Mug => "mug",
            Self::Sanitizer => "sanitizer",
            Self::Pen => "pen",
        }
    }

    pub fn primitive(self) -> ObjectPrimitive {
        match self {
            Self::Plate => ObjectPrimitive::plane(3.0),
            Self::Mug => ObjectPrimitive::cylinder(22.0),
            Self::Sanitizer => ObjectPrimitive::cylinder(14.0),
            Self::Pen => ObjectPrimitive::cylinder(5.0),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for ObjectPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    /// New setpoint for both bubbles.
    Pressure(f64),
    Grasp(bool),
    /// Additional object displacement, millimetres.
    Shear([f64; 2]),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Pressure(p) => write!(f, "set pressure {p}"),
            Action::Grasp(on) => write!(f, "set grasp {}", if *on { "on" } else { "off" }),
            Action::Shear([x, y]) => write!(f, "set shear {x} {y}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub action: Action,
    /// Source line, for diagnostics.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub object: ObjectPreset,
    /// Jaw force used to solve the grasp width, N.
    pub grasp_force: f64,
    pub initial_pressure: f64,
    pub duration: f64,
    pub frame_period: f64,
    /// Depth noise standard deviation, mm.
    pub noise: f64,
    pub seed: u64,
    /// Frames averaged into each reference capture.
    pub reference_frames: usize,
    pub events: Vec<Event>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "unnamed".into(),
            object: ObjectPreset::Mug,
            grasp_force: 25.0,
            initial_pressure: 1050.0,
            duration: 5.0,
            frame_period: 0.25,
            noise: 0.5,
            seed: 0,
            reference_frames: 4,
            events: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |line: usize, reason: String| Err(HarnessError::Scenario { line, reason });
        if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&self.initial_pressure) {
            return bad(0, format!("initial pressure {} is outside the operating band", self.initial_pressure));
        }
        if !(self.duration > 0.0 && self.frame_period > 0.0) {
            return bad(0, "duration and frame period must be positive".into());
        }
        if !(self.grasp_force > 0.0) || !(self.noise >= 0.0) || self.reference_frames == 0 {
            return bad(0, "grasp force, noise and reference frame count must be positive".into());
        }
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.time >= 0.0) || e.time < last {
                return bad(e.line, format!("event at {} s is out of order", e.time));
            }
            last = e.time;
            match e.action {
                Action::Pressure(p) if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&p) => {
                    return bad(e.line, format!("setpoint {p} hPa is outside the operating band"));
                }
                Action::Shear([x, y]) if !(x.is_finite() && y.is_finite()) => {
                    return bad(e.line, "shear must be finite".into());
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Parses `key = value` settings and `at <t> set <key> <value...>` events.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut s = Scenario::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |reason: String| HarnessError::Scenario { line, reason };
            if let Some(rest) = content.strip_prefix("at ") {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                if tokens.len() < 4 || tokens[1] != "set" {
                    return Err(err("expected `at <t> set <key> <value>`".into()));
                }
                let time: f64 = tokens[0].parse().map_err(|_| err(format!("bad time {:?}", tokens[0])))?;
                let num = |t: &str| t.parse::<f64>().map_err(|_| err(format!("bad number {t:?}")));
                let action = match (tokens[2], &tokens[3..]) {
                    ("pressure", [p]) => Action::Pressure(num(p)?),
                    ("grasp", ["on"]) => Action::Grasp(true),
                    ("grasp", ["off"]) => Action::Grasp(false),
                    ("shear", [x, y]) => Action::Shear([num(x)?, num(y)?]),
                    (key, _) => return Err(err(format!("cannot set {key:?} to {:?}", tokens[3..].join(" ")))),
                };
                s.events.push(Event { time, action, line });
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| err(format!("bad number {value:?}")));
            match key {
                "name" => s.name = value.to_string(),
                "object" => s.object = ObjectPreset::parse(value).ok_or_else(|| err(format!("unknown object {value:?}")))?,
                "grasp_force" => s.grasp_force = num()?,
                "initial_pressure" => s.initial_pressure = num()?,
                "duration" => s.duration = num()?,
                "frame_period" => s.frame_period = num()?,
                "noise" => s.noise = num()?,
                "seed" => s.seed = value.parse().map_err(|_| err(format!("bad seed {value:?}")))?,
                "reference_frames" => {
                    s.reference_frames = value.parse().map_err(|_| err(format!("bad count {value:?}")))?
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; parses back to the same scenario.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "name = {}\nobject = {}\ngrasp_force = {}\ninitial_pressure = {}\nduration = {}\nframe_period = {}\nnoise = {}\nseed = {}\nreference_frames = {}\n",
            self.name,
            self.object,
            self.grasp_force,
            self.initial_pressure,
            self.duration,
            self.frame_period,
            self.noise,
            self.seed,
            self.reference_frames
        );
        for e in &self.events {
            out.push_str(&format!("at {} {}\n", e.time, e.action));
        }
        out
    }
}
