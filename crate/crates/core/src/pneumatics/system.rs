use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{offset_correct, step_plant, BubbleController, ControllerConfig, PlantConfig, PlantState, PneumaticsError};

pub const TELEMETRY_HEADER: &str = "time_s,bubble_id,true_hpa,est_hpa,pump,valve";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub time: f64,
    pub bubble_id: usize,
    pub true_hpa: f64,
    pub est_hpa: f64,
    pub pump: bool,
    pub valve: bool,
}

impl TelemetryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{:.3},{},{:.3},{:.3},{},{}",
            self.time, self.bubble_id, self.true_hpa, self.est_hpa, self.pump as u8, self.valve as u8
        )
    }
}

/// One bubble: plant, line sensor and controller.
#[derive(Debug, Clone)]
pub struct PneumaticChannel {
    pub id: usize,
    pub plant_config: PlantConfig,
    pub plant: PlantState,
    pub controller: BubbleController,
    estimate: f64,
    rng: ChaCha8Rng,
}

impl PneumaticChannel {
    pub fn new(
        id: usize,
        plant_config: PlantConfig,
        controller: ControllerConfig,
        initial_pressure: f64,
        seed: u64,
    ) -> Result<Self, PneumaticsError> {
        let plant = PlantState::at_rest(&plant_config, initial_pressure);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64 + 1);
        Ok(Self {
            id,
            plant_config,
            estimate: plant.bubble_pressure,
            plant,
            controller: BubbleController::new(controller)?,
            rng,
        })
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn true_pressure(&self) -> f64 {
        self.plant.bubble_pressure
    }

    fn read_sensor(&mut self) -> f64 {
        let sigma = self.plant_config.sensor_noise;
        let noise = if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("finite sigma").sample(&mut self.rng)
        } else {
            0.0
        };
        self.plant.line_pressure + noise
    }

    /// Samples the sensor, updates the controller and integrates one sample period.
    pub fn tick(&mut self) -> TelemetryRow {
        let line = self.read_sensor();
        let estimate = offset_correct(
            line,
            self.plant.pump_on,
            self.plant.valve_open,
            &self.controller.config().offset_table,
        )
        .expect("offset table validated at construction");
        self.estimate = estimate;
        let time = self.plant.time;
        let act = self.controller.update(time, estimate);
        self.plant.pump_on = act.pump_on;
        self.plant.valve_open = act.valve_open;
        let dt = self.controller.config().sample_period;
        self.plant = step_plant(&self.plant, &self.plant_config, dt);
        TelemetryRow {
            time,
            bubble_id: self.id,
            true_hpa: self.plant.bubble_pressure,
            est_hpa: estimate,
            pump: act.pump_on,
            valve: act.valve_open,
        }
    }

    pub fn is_settled(&self) -> bool {
        self.controller.is_settled(self.plant.time)
    }
}

/// Independent channels advanced on one simulated clock.
#[derive(Debug, Clone)]
pub struct PneumaticSystem {
    pub channels: Vec<PneumaticChannel>,
}

impl PneumaticSystem {
    pub fn new(
        count: usize,
        plant: PlantConfig,
        controller: ControllerConfig,
        initial_pressure: f64,
        seed: u64,
    ) -> Result<Self, PneumaticsError> {
        let channels = (0..count)
            .map(|id| PneumaticChannel::new(id, plant, controller.clone(), initial_pressure, seed))
            .collect::<Result<_, _>>()?;
        Ok(Self { channels })
    }

    pub fn time(&self) -> f64 {
        self.channels.first().map_or(0.0, |c| c.plant.time)
    }

    pub fn sample_period(&self) -> f64 {
        self.channels.first().map_or(0.02, |c| c.controller.config().sample_period)
    }

    pub fn channel(&self, id: usize) -> Result<&PneumaticChannel, PneumaticsError> {
        self.channels.get(id).ok_or(PneumaticsError::UnknownBubble(id))
    }

    pub fn channel_mut(&mut self, id: usize) -> Result<&mut PneumaticChannel, PneumaticsError> {
        self.channels.get_mut(id).ok_or(PneumaticsError::UnknownBubble(id))
    }

    pub fn set_all(&mut self, setpoint: f64) -> Result<(), PneumaticsError> {
        for c in &mut self.channels {
            c.controller.set_setpoint(setpoint)?;
        }
        Ok(())
    }

    /// One sample period on every channel.
    pub fn tick(&mut self) -> Vec<TelemetryRow> {
        self.channels.iter_mut().map(|c| c.tick()).collect()
    }

    /// Runs whole sample periods until `duration` seconds have elapsed.
    pub fn advance(&mut self, duration: f64) -> Vec<TelemetryRow> {
        let steps = (duration / self.sample_period()).round().max(0.0) as usize;
        let mut rows = Vec::with_capacity(steps * self.channels.len());
        for _ in 0..steps {
            rows.extend(self.tick());
        }
        rows
    }

    pub fn all_settled(&self) -> bool {
        self.channels.iter().all(|c| c.is_settled())
    }
}

/// Closed-loop response of one channel to a setpoint step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResponse {
    pub from: f64,
    pub to: f64,
    /// Time after which the true pressure never left the deadband again.
    pub settle_time: f64,
    /// How long the pressure stayed in band until the end of the run.
    pub hold: f64,
    /// Sampled steps with pump and valve open together.
    pub conflicts: usize,
}

/// Starts at rest at `from`, commands `to` at time zero and runs for `duration` seconds.
pub fn step_response(
    plant: PlantConfig,
    controller: ControllerConfig,
    from: f64,
    to: f64,
    duration: f64,
    seed: u64,
) -> Result<StepResponse, PneumaticsError> {
    let band = controller.deadband;
    let mut ch = PneumaticChannel::new(0, plant, ControllerConfig { setpoint: from, ..controller }, from, seed)?;
    ch.controller.set_setpoint(to)?;
    let steps = (duration / ch.controller.config().sample_period).round() as usize;
    let mut settle_time = 0.0;
    let mut conflicts = 0;
    for _ in 0..steps {
        let row = ch.tick();
        if row.pump && row.valve {
            conflicts += 1;
        }
        if (ch.true_pressure() - to).abs() > band {
            settle_time = ch.plant.time;
        }
    }
    Ok(StepResponse { from, to, settle_time, hold: ch.plant.time - settle_time, conflicts })
}
