use super::{FlowRegime, PneumaticsError};
use crate::sim::{PRESSURE_MAX, PRESSURE_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub setpoint: f64,
    pub deadband: f64,
    pub sample_period: f64,
    /// Signed line-minus-bubble gradient per flow regime.
    pub offset_table: Vec<(FlowRegime, f64)>,
    /// Extra wait before reporting settled after a deflation.
    pub deflate_extra_delay: f64,
    /// Time the estimate must stay inside the band before reporting settled.
    pub settle_hold: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            setpoint: 1050.0,
            deadband: 2.0,
            sample_period: 0.02,
            offset_table: vec![
                (FlowRegime::Inflating, 6.0),
                (FlowRegime::Deflating, -4.0),
                (FlowRegime::Static, 0.0),
            ],
            deflate_extra_delay: 1.0,
            settle_hold: 0.5,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), PneumaticsError> {
        if !(self.deadband > 0.0) {
            return Err(PneumaticsError::Config("deadband must be positive".into()));
        }
        if !(self.sample_period > 0.0) {
            return Err(PneumaticsError::Config("sample period must be positive".into()));
        }
        if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&self.setpoint) {
            return Err(PneumaticsError::SetpointOutOfBand(self.setpoint));
        }
        for regime in [FlowRegime::Inflating, FlowRegime::Deflating, FlowRegime::Static] {
            if !self.offset_table.iter().any(|(r, _)| *r == regime) {
                return Err(PneumaticsError::MissingRegime(regime));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Actuation {
    pub pump_on: bool,
    pub valve_open: bool,
}

/// Deadband bang-bang law: pump below the band, exhaust above it, idle inside.
pub fn controller_step(estimate: f64, config: &ControllerConfig) -> Actuation {
    if estimate < config.setpoint - config.deadband {
        Actuation { pump_on: true, valve_open: false }
    } else if estimate > config.setpoint + config.deadband {
        Actuation { pump_on: false, valve_open: true }
    } else {
        Actuation::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    Regulate,
    /// Exhaust to ambient, pump locked out.
    Vent,
}

/// Per-bubble controller with settle tracking.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleController {
    config: ControllerConfig,
    mode: ControllerMode,
    in_band_since: Option<f64>,
    deflated_since_setpoint: bool,
    last: Actuation,
}

impl BubbleController {
    pub fn new(config: ControllerConfig) -> Result<Self, PneumaticsError> {
        config.validate()?;
        Ok(Self {
            config,
            mode: ControllerMode::Regulate,
            in_band_since: None,
            deflated_since_setpoint: false,
            last: Actuation::default(),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn mode(&self) -> ControllerMode {
        self.mode
    }

    pub fn setpoint(&self) -> f64 {
        self.config.setpoint
    }

    pub fn last_actuation(&self) -> Actuation {
        self.last
    }

    pub fn set_setpoint(&mut self, setpoint: f64) -> Result<(), PneumaticsError> {
        if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&setpoint) {
            return Err(PneumaticsError::SetpointOutOfBand(setpoint));
        }
        if setpoint != self.config.setpoint || self.mode != ControllerMode::Regulate {
            self.in_band_since = None;
            self.deflated_since_setpoint = false;
        }
        self.config.setpoint = setpoint;
        self.mode = ControllerMode::Regulate;
        Ok(())
    }

    pub fn vent(&mut self) {
        self.mode = ControllerMode::Vent;
        self.in_band_since = None;
    }

    /// Computes the actuation for a bubble-pressure estimate sampled at `time`.
    pub fn update(&mut self, time: f64, estimate: f64) -> Actuation {
        let act = match self.mode {
            ControllerMode::Regulate => controller_step(estimate, &self.config),
            ControllerMode::Vent => Actuation { pump_on: false, valve_open: true },
        };
        if act.valve_open {
            self.deflated_since_setpoint = true;
        }
        let inside = self.mode == ControllerMode::Regulate
            && (estimate - self.config.setpoint).abs() <= self.config.deadband;
        if inside {
            self.in_band_since.get_or_insert(time);
        } else {
            self.in_band_since = None;
        }
        self.last = act;
        act
    }

    /// True once the estimate has stayed in band for the settle hold, plus the
    /// deflation delay if the valve opened since the last setpoint change.
    pub fn is_settled(&self, time: f64) -> bool {
        let Some(since) = self.in_band_since else {
            return false;
        };
        let mut hold = self.config.settle_hold;
        if self.deflated_since_setpoint {
            hold += self.config.deflate_extra_delay;
        }
        time - since >= hold - 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deadband_law() {
        let c = ControllerConfig { setpoint: 1070.0, ..Default::default() };
        assert_eq!(controller_step(1070.0, &c), Actuation::default());
        assert_eq!(controller_step(1066.0, &c), Actuation { pump_on: true, valve_open: false });
        assert_eq!(controller_step(1074.0, &c), Actuation { pump_on: false, valve_open: true });
        assert_eq!(controller_step(1068.0, &c), Actuation::default());
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig { deadband: 0.0, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { setpoint: 900.0, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { offset_table: vec![], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn settle_requires_hold_and_extra_after_deflation() {
        let mut c = BubbleController::new(ControllerConfig::default()).unwrap();
        c.update(0.0, 1050.0);
        assert!(!c.is_settled(0.2));
        assert!(c.is_settled(0.5));
        c.set_setpoint(1040.0).unwrap();
        c.update(1.0, 1050.0);
        c.update(2.0, 1041.0);
        assert!(!c.is_settled(2.6));
        assert!(c.is_settled(3.5));
    }
}
