use super::record::{FrameIndexRow, FrameKind, FrameTelemetry, RunRecord};
use super::scenario::{Action, Scenario};
use super::HarnessError;
use crate::format::{quantize_depth, quantize_ir, GridWriter, DEFAULT_DEPTH_SCALE_UM};
use crate::image::{DepthImage, IrImage};
use crate::perception::{PerceptionConfig, ShearPipeline};
use crate::pneumatics::{ControllerConfig, PlantConfig, PneumaticSystem};
use crate::sim::{
    apply_shear, inflate_shape, jaw_width_for_force, press_at_width, render_depth, render_ir, BubbleConfig, DepthNoise,
    MembraneState, PRESSURE_MAX, PRESSURE_MIN,
};

/// Everything a run needs besides the scenario itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub bubble: BubbleConfig,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub perception: PerceptionConfig,
    /// Also record `BBLM1` masks and `BBLV1` flow for analysed frames.
    pub debug_dumps: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            bubble: BubbleConfig::default(),
            plant: PlantConfig::default(),
            controller: ControllerConfig::default(),
            perception: PerceptionConfig::default(),
            debug_dumps: false,
        }
    }
}

/// Seed of the depth noise for one frame of a run.
pub fn frame_seed(run_seed: u64, frame: usize) -> u64 {
    run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (frame as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Renders one quantised depth/IR pair exactly as it is stored on disk.
pub fn capture(state: &MembraneState, noise_sigma: f64, seed: u64, time: f64) -> (DepthImage, IrImage) {
    let noise = DepthNoise::with_sigma(noise_sigma, seed);
    (
        quantize_depth(&render_depth(state, &noise, time), DEFAULT_DEPTH_SCALE_UM),
        quantize_ir(&render_ir(state, time)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Grasp {
    width: f64,
    shear: [f64; 2],
}

/// Membrane for a pressure and grasp, reusing the last result when nothing changed.
struct MembraneCache {
    config: BubbleConfig,
    key: Option<(f64, Option<Grasp>)>,
    state: Option<MembraneState>,
}

impl MembraneCache {
    fn get(&mut self, scenario: &Scenario, pressure: f64, grasp: Option<Grasp>) -> Result<&MembraneState, HarnessError> {
        let p = pressure.clamp(PRESSURE_MIN, PRESSURE_MAX);
        if self.key != Some((p, grasp)) {
            let mut state = inflate_shape(&self.config, p)?;
            if let Some(g) = grasp {
                state = press_at_width(&state, &scenario.object.primitive(), g.width)?;
                if g.shear != [0.0, 0.0] {
                    state = apply_shear(&state, g.shear)?;
                }
            }
            self.state = Some(state);
            self.key = Some((p, grasp));
        }
        Ok(self.state.as_ref().expect("just built"))
    }
}

struct Recorder {
    record: RunRecord,
    frames: GridWriter<Vec<u8>>,
    contact: GridWriter<Vec<u8>>,
    masks: GridWriter<Vec<u8>>,
    flow: GridWriter<Vec<u8>>,
}

impl Recorder {
    fn push_frame(&mut self, row: FrameIndexRow, depth: &DepthImage, ir: &IrImage, state: &MembraneState) -> Result<(), HarnessError> {
        self.frames.write_depth(depth, DEFAULT_DEPTH_SCALE_UM)?;
        self.frames.write_ir(ir)?;
        self.contact.write_contact(&state.contact_set)?;
        self.record.frames.push(row);
        Ok(())
    }
}

/// Executes a scenario in closed loop: the controller tracks the pressure
/// schedule, a reference is captured whenever both bubbles settle, grasp and
/// shear events drive the simulator, and every frame taken while a reference
/// is valid goes through the perception pipeline.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunRecord, HarnessError> {
    scenario.validate()?;
    let controller = ControllerConfig { setpoint: scenario.initial_pressure, ..options.controller.clone() };
    let dt = controller.sample_period;
    let tolerance = options.perception.mask.pressure_tolerance;
    let mut system = PneumaticSystem::new(2, options.plant, controller, scenario.initial_pressure, scenario.seed)?;
    let mut pipeline = ShearPipeline::new(options.perception.clone())?;
    let mut cache = MembraneCache { config: options.bubble, key: None, state: None };
    let mut rec = Recorder {
        record: RunRecord::new(scenario.clone(), tolerance),
        frames: GridWriter::new(Vec::new()),
        contact: GridWriter::new(Vec::new()),
        masks: GridWriter::new(Vec::new()),
        flow: GridWriter::new(Vec::new()),
    };

    let mut grasp: Option<Grasp> = None;
    // The plant starts at rest on its setpoint, so the first reference is taken at once.
    let mut awaiting_settle = true;
    let mut at_rest = true;
    let mut reference: Option<usize> = None;
    let mut next_event = 0;
    let mut next_frame = 0usize;
    let mut frame_index = 0usize;
    let steps = (scenario.duration / dt).round() as usize;

    for step in 0..=steps {
        let t = step as f64 * dt;
        let pressure = system.channel(0)?.true_pressure();

        while let Some(event) = scenario.events.get(next_event).filter(|e| e.time <= t + 1e-9) {
            next_event += 1;
            let abort = |reason: &str| HarnessError::Abort {
                step: next_event,
                line: event.line,
                time: event.time,
                action: event.action.to_string(),
                reason: reason.to_string(),
            };
            match event.action {
                Action::Pressure(p) => {
                    if grasp.is_some() {
                        return Err(abort("pressure change while grasping; release first so a new reference can be captured"));
                    }
                    system.set_all(p)?;
                    at_rest = false;
                    reference = None;
                    awaiting_settle = true;
                }
                Action::Grasp(true) => {
                    if grasp.is_some() {
                        return Err(abort("already grasping"));
                    }
                    if reference.is_none() {
                        return Err(abort("no reference at the current pressure; wait for the controller to settle"));
                    }
                    let object = scenario.object.primitive();
                    let p = pressure.clamp(PRESSURE_MIN, PRESSURE_MAX);
                    let width = jaw_width_for_force(&options.bubble, p, object.thickness(), scenario.grasp_force)
                        .clamp(0.0, options.bubble.max_jaw_width);
                    grasp = Some(Grasp { width, shear: [0.0, 0.0] });
                }
                Action::Grasp(false) => grasp = None,
                Action::Shear(d) => {
                    let Some(g) = grasp.as_mut() else {
                        return Err(abort("shear without a grasp"));
                    };
                    if cache.get(scenario, pressure, Some(Grasp { width: g.width, shear: [0.0, 0.0] }))?.contact_set.is_empty() {
                        return Err(abort("object is not in contact, nothing to shear"));
                    }
                    g.shear = [g.shear[0] + d[0], g.shear[1] + d[1]];
                }
            }
        }

        if awaiting_settle && (at_rest || system.all_settled()) {
            let id = rec.record.references.len();
            let state = cache.get(scenario, pressure, grasp)?.clone();
            let mut frames = Vec::with_capacity(scenario.reference_frames);
            for _ in 0..scenario.reference_frames {
                let (d, i) = capture(&state, scenario.noise, frame_seed(scenario.seed, frame_index), t);
                rec.push_frame(
                    FrameIndexRow { frame: frame_index, time: t, pressure: d.pressure_at_capture, kind: FrameKind::Reference, reference: Some(id), contact_px: state.contact_area_px() },
                    &d,
                    &i,
                    &state,
                )?;
                frames.push((d, i));
                frame_index += 1;
            }
            pipeline.reset(&frames, state.pressure)?;
            rec.record.references.push(state.pressure);
            reference = Some(id);
            awaiting_settle = false;
        }

        if t + 1e-9 >= next_frame as f64 * scenario.frame_period {
            next_frame += 1;
            let state = cache.get(scenario, pressure, grasp)?.clone();
            let (d, i) = capture(&state, scenario.noise, frame_seed(scenario.seed, frame_index), t);
            let kind = if reference.is_some() { FrameKind::Analyzed } else { FrameKind::Transient };
            rec.push_frame(
                FrameIndexRow { frame: frame_index, time: t, pressure: d.pressure_at_capture, kind, reference, contact_px: state.contact_area_px() },
                &d,
                &i,
                &state,
            )?;
            if reference.is_some() {
                let analysis = pipeline.process(&d, &i)?;
                if options.debug_dumps {
                    rec.masks.write_mask(&analysis.mask)?;
                    rec.flow.write_flow(&analysis.flow)?;
                }
                rec.record.mask_scores.push(analysis.mask.iou(&state.contact_set));
                rec.record.telemetry.push(FrameTelemetry { frame: frame_index, estimate: analysis.estimate });
            }
            frame_index += 1;
        }

        if step < steps {
            rec.record.pneumatics.extend(system.tick());
        }
    }

    let mut record = rec.record;
    record.frames_bin = rec.frames.into_inner();
    record.contact_bin = rec.contact.into_inner();
    record.masks_bin = rec.masks.into_inner();
    record.flow_bin = rec.flow.into_inner();
    Ok(record)
}
