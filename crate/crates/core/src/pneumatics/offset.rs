use super::PneumaticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowRegime {
    Inflating,
    Deflating,
    Static,
}

impl FlowRegime {
    pub fn from_actuation(pump_on: bool, valve_open: bool) -> Result<Self, PneumaticsError> {
        match (pump_on, valve_open) {
            (true, false) => Ok(Self::Inflating),
            (false, true) => Ok(Self::Deflating),
            (false, false) => Ok(Self::Static),
            (true, true) => Err(PneumaticsError::ConflictingActuation),
        }
    }
}

/// Bubble pressure estimate from the line sensor: the tabulated signed
/// gradient of the current flow regime is subtracted. No air flows in the
/// static regime, so its correction is always zero.
pub fn offset_correct(
    line_pressure: f64,
    pump_on: bool,
    valve_open: bool,
    table: &[(FlowRegime, f64)],
) -> Result<f64, PneumaticsError> {
    for regime in [FlowRegime::Inflating, FlowRegime::Deflating, FlowRegime::Static] {
        if !table.iter().any(|(r, _)| *r == regime) {
            return Err(PneumaticsError::MissingRegime(regime));
        }
    }
    let regime = FlowRegime::from_actuation(pump_on, valve_open)?;
    if regime == FlowRegime::Static {
        return Ok(line_pressure);
    }
    let correction = table.iter().find(|(r, _)| *r == regime).map(|(_, c)| *c).unwrap_or(0.0);
    Ok(line_pressure - correction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Vec<(FlowRegime, f64)> {
        vec![(FlowRegime::Inflating, 6.0), (FlowRegime::Deflating, -4.0), (FlowRegime::Static, 0.0)]
    }

    #[test]
    fn static_is_uncorrected() {
        assert_eq!(offset_correct(1050.0, false, false, &table()).unwrap(), 1050.0);
    }

    #[test]
    fn inflating_subtracts_gradient() {
        assert_eq!(offset_correct(1056.0, true, false, &table()).unwrap(), 1050.0);
        assert_eq!(offset_correct(1046.0, false, true, &table()).unwrap(), 1050.0);
    }

    #[test]
    fn missing_regime_is_a_configuration_error() {
        let t = vec![(FlowRegime::Inflating, 6.0), (FlowRegime::Static, 0.0)];
        assert_eq!(
            offset_correct(1050.0, false, false, &t),
            Err(PneumaticsError::MissingRegime(FlowRegime::Deflating))
        );
        assert_eq!(offset_correct(1050.0, true, true, &table()), Err(PneumaticsError::ConflictingActuation));
    }
}
