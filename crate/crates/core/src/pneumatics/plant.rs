use super::AMBIENT_HPA;

/// Plant constants. Time constants are chosen so that at mid-band the pump
/// inflates at about 20 hPa/s and the valve deflates at about 8 hPa/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    pub ambient: f64,
    /// Pressure the pump asymptotically drives the bubble to.
    pub supply_pressure: f64,
    pub inflate_time_constant: f64,
    pub deflate_time_constant: f64,
    /// Sensor-side excess over bubble pressure while the pump runs.
    pub inflate_line_offset: f64,
    /// Sensor-side deficit under bubble pressure while venting.
    pub deflate_line_offset: f64,
    /// Standard deviation of the line pressure sensor, hPa.
    pub sensor_noise: f64,
    pub rest_volume_ml: f64,
    pub volume_per_hpa_ml: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            ambient: AMBIENT_HPA,
            supply_pressure: 1600.0,
            inflate_time_constant: 27.5,
            deflate_time_constant: 6.25,
            inflate_line_offset: 6.0,
            deflate_line_offset: 4.0,
            sensor_noise: 0.3,
            rest_volume_ml: 60.0,
            volume_per_hpa_ml: 0.05,
        }
    }
}

impl PlantConfig {
    pub fn noiseless(self) -> Self {
        Self { sensor_noise: 0.0, ..self }
    }

    pub fn volume_at(&self, pressure: f64) -> f64 {
        (self.rest_volume_ml + self.volume_per_hpa_ml * (pressure - 1050.0)).max(1e-3)
    }

    /// Line pressure seen by the sensor for a given bubble pressure and actuation.
    pub fn line_pressure(&self, bubble: f64, pump_on: bool, valve_open: bool) -> f64 {
        let mut line = bubble;
        if pump_on {
            line += self.inflate_line_offset;
        }
        if valve_open {
            line -= self.deflate_line_offset;
        }
        line
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub bubble_pressure: f64,
    pub line_pressure: f64,
    pub pump_on: bool,
    pub valve_open: bool,
    pub bubble_volume: f64,
    pub time: f64,
}

impl PlantState {
    /// Bubble at rest at `pressure` with both actuators off.
    pub fn at_rest(config: &PlantConfig, pressure: f64) -> Self {
        let p = pressure.max(config.ambient);
        Self {
            bubble_pressure: p,
            line_pressure: p,
            pump_on: false,
            valve_open: false,
            bubble_volume: config.volume_at(p),
            time: 0.0,
        }
    }
}

/// Advances the plant by `dt` seconds with the current actuation, integrating
/// the first-order dynamics exactly.
pub fn step_plant(state: &PlantState, config: &PlantConfig, dt: f64) -> PlantState {
    let mut next = *state;
    if !(dt > 0.0) {
        return next;
    }
    next.time = state.time + dt;
    let inflow = if state.pump_on { 1.0 / config.inflate_time_constant } else { 0.0 };
    let outflow = if state.valve_open { 1.0 / config.deflate_time_constant } else { 0.0 };
    let rate = inflow + outflow;
    if rate > 0.0 {
        let target = (inflow * config.supply_pressure + outflow * config.ambient) / rate;
        next.bubble_pressure = target + (state.bubble_pressure - target) * (-rate * dt).exp();
    }
    next.bubble_pressure = next.bubble_pressure.max(config.ambient);
    next.line_pressure = config.line_pressure(next.bubble_pressure, state.pump_on, state.valve_open);
    next.bubble_volume = config.volume_at(next.bubble_pressure);
    next
}

/// Time for the pump alone to raise the bubble from `from` to `to`.
pub fn inflation_time(config: &PlantConfig, from: f64, to: f64) -> f64 {
    config.inflate_time_constant * ((config.supply_pressure - from) / (config.supply_pressure - to)).ln()
}

/// Time for the valve alone to bleed the bubble from `from` down to `to`.
pub fn deflation_time(config: &PlantConfig, from: f64, to: f64) -> f64 {
    config.deflate_time_constant * ((from - config.ambient) / (to - config.ambient)).ln()
}
