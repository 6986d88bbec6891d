use super::fit::{fit_quadratic, QuadraticFit};
use super::runner::{capture, frame_seed};
use super::scenario::ObjectPreset;
use super::HarnessError;
use crate::par;
use crate::perception::{compute_mask, reset_reference, PerceptionConfig};
use crate::pneumatics::{ControllerConfig, PneumaticChannel, PlantConfig};
use crate::sim::{
    grasp_force_model, inflate_shape, jaw_width_for_force, measured_jaw_width, press_at_width, render_depth, BubbleConfig,
    DepthNoise, PRESSURE_MAX, PRESSURE_MIN,
};

/// Shared settings of the experiment sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub bubble: BubbleConfig,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub perception: PerceptionConfig,
    /// Depth noise standard deviation for noisy captures, mm.
    pub noise: f64,
    pub reference_frames: usize,
    pub seed: u64,
    /// Grasp force that fixes the jaw width at the rest pressure, N.
    pub grasp_force: f64,
    /// Extra jaw opening of the wide-grasp variant, mm.
    pub wide_extra: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bubble: BubbleConfig::default(),
            plant: PlantConfig::default(),
            controller: ControllerConfig::default(),
            perception: PerceptionConfig::default(),
            noise: 0.5,
            reference_frames: 4,
            seed: 1,
            grasp_force: 25.0,
            wide_extra: 6.0,
        }
    }
}

const SETTLE_LIMIT_S: f64 = 120.0;

/// Drives a channel to `setpoint` and returns the settled true pressure.
fn settle(channel: &mut PneumaticChannel, setpoint: f64) -> Result<f64, HarnessError> {
    channel.controller.set_setpoint(setpoint)?;
    let start = channel.plant.time;
    while !channel.is_settled() {
        if channel.plant.time - start > SETTLE_LIMIT_S {
            return Err(HarnessError::Sweep(format!("no settle at {setpoint} hPa within {SETTLE_LIMIT_S} s")));
        }
        channel.tick();
    }
    Ok(channel.true_pressure().clamp(PRESSURE_MIN, PRESSURE_MAX))
}

fn fresh_channel(opts: &SweepOptions, seed: u64) -> Result<PneumaticChannel, HarnessError> {
    let c = ControllerConfig { setpoint: opts.bubble.rest_pressure, ..opts.controller.clone() };
    Ok(PneumaticChannel::new(0, opts.plant, c, opts.bubble.rest_pressure, seed)?)
}

fn band(start: f64, step: f64, end: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as i64;
    (0..=n).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig6Row {
    pub setpoint: f64,
    pub pressure: f64,
    pub mean_depth: f64,
    pub mean_depth_noisy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig6Result {
    pub rows: Vec<Fig6Row>,
    /// Fit of noise-free mean depth against settled pressure.
    pub fit: QuadraticFit,
    pub noisy_monotone: bool,
}

/// Mean camera range against settled pressure over the operating band.
pub fn fig6_sweep(opts: &SweepOptions) -> Result<Fig6Result, HarnessError> {
    let cells = band(PRESSURE_MIN, 10.0, PRESSURE_MAX);
    let rows = par::map(cells.into_iter().enumerate().collect(), |(i, sp)| -> Result<Fig6Row, HarnessError> {
        let mut ch = fresh_channel(opts, opts.seed.wrapping_add(i as u64))?;
        let p = settle(&mut ch, sp)?;
        let state = inflate_shape(&opts.bubble, p)?;
        let clean = render_depth(&state, &DepthNoise::none(), 0.0);
        let noisy = render_depth(&state, &DepthNoise::with_sigma(opts.noise, frame_seed(opts.seed, i)), 0.0);
        Ok(Fig6Row { setpoint: sp, pressure: p, mean_depth: clean.mean(), mean_depth_noisy: noisy.mean() })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.pressure).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_depth).collect();
    let fit = fit_quadratic(&xs, &ys)?;
    let noisy_monotone = rows.windows(2).all(|w| w[1].mean_depth_noisy > w[0].mean_depth_noisy);
    Ok(Fig6Result { rows, fit, noisy_monotone })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig7Row {
    pub setpoint: f64,
    pub pressure: f64,
    pub force: f64,
    pub jaw_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig7Result {
    pub commanded_width: f64,
    pub rows: Vec<Fig7Row>,
    pub fit: QuadraticFit,
    /// Population standard deviation of the measured jaw width.
    pub width_std: f64,
}

/// Holds the mug at the jaw width that gives the grasp force at rest pressure,
/// then steps the pressure down through the band and records grip force.
pub fn fig7_sweep(opts: &SweepOptions) -> Result<Fig7Result, HarnessError> {
    let cfg = &opts.bubble;
    let thickness = ObjectPreset::Mug.primitive().thickness();
    let width = jaw_width_for_force(cfg, cfg.rest_pressure, thickness, opts.grasp_force).clamp(0.0, cfg.max_jaw_width);
    let mut ch = fresh_channel(opts, opts.seed)?;
    let mut rows = Vec::new();
    for sp in band(1070.0, -10.0, PRESSURE_MIN) {
        let p = settle(&mut ch, sp)?;
        let force = grasp_force_model(cfg, p, width, thickness)?;
        rows.push(Fig7Row { setpoint: sp, pressure: p, force, jaw_width: measured_jaw_width(cfg, width, force) });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.pressure).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.force).collect();
    let fit = fit_quadratic(&xs, &ys)?;
    let mean = rows.iter().map(|r| r.jaw_width).sum::<f64>() / rows.len() as f64;
    let width_std = (rows.iter().map(|r| (r.jaw_width - mean).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    Ok(Fig7Result { commanded_width: width, rows, fit, width_std })
}

pub const FIG8_PRESSURES: [f64; 3] = [1020.0, 1050.0, 1070.0];
pub const FIG8_OBJECTS: [ObjectPreset; 3] = [ObjectPreset::Mug, ObjectPreset::Sanitizer, ObjectPreset::Pen];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig8Row {
    pub object: ObjectPreset,
    pub wide: bool,
    pub setpoint: f64,
    pub pressure: f64,
    pub jaw_width: f64,
    pub patch_area: usize,
    pub truth_area: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig8Result {
    pub rows: Vec<Fig8Row>,
}

impl Fig8Result {
    fn series(&self, object: ObjectPreset, wide: bool) -> Vec<&Fig8Row> {
        let mut v: Vec<&Fig8Row> = self.rows.iter().filter(|r| r.object == object && r.wide == wide).collect();
        v.sort_by(|a, b| a.setpoint.total_cmp(&b.setpoint));
        v
    }

    /// Objects whose measured patch area is not strictly increasing with pressure.
    pub fn non_monotone(&self, wide: bool) -> Vec<ObjectPreset> {
        FIG8_OBJECTS
            .into_iter()
            .filter(|&o| !self.series(o, wide).windows(2).all(|w| w[1].patch_area > w[0].patch_area))
            .collect()
    }

    pub fn cell(&self, object: ObjectPreset, wide: bool, setpoint: f64) -> Option<&Fig8Row> {
        self.rows.iter().find(|r| r.object == object && r.wide == wide && r.setpoint == setpoint)
    }
}

/// Patch area per object and pressure. For each cell the gripper is opened,
/// the pressure settles, a reference is captured, and the object is grasped at
/// the width fixed by the grasp force at rest pressure (plus the wide-grasp
/// extra opening when `wide`).
pub fn fig8_sweep(opts: &SweepOptions, wide: bool) -> Result<Fig8Result, HarnessError> {
    let cfg = &opts.bubble;
    let mut cells = Vec::new();
    for (oi, object) in FIG8_OBJECTS.into_iter().enumerate() {
        for (pi, sp) in FIG8_PRESSURES.into_iter().enumerate() {
            cells.push((oi * FIG8_PRESSURES.len() + pi, object, sp));
        }
    }
    let rows = par::map(cells, |(i, object, sp)| -> Result<Fig8Row, HarnessError> {
        let prim = object.primitive();
        let mut width = jaw_width_for_force(cfg, cfg.rest_pressure, prim.thickness(), opts.grasp_force).clamp(0.0, cfg.max_jaw_width);
        if wide {
            width = (width + opts.wide_extra).min(cfg.max_jaw_width);
        }
        let seed = frame_seed(opts.seed, 1000 * i + wide as usize * 500);
        let mut ch = fresh_channel(opts, seed)?;
        let p = settle(&mut ch, sp)?;
        let free = inflate_shape(cfg, p)?;
        let refs: Vec<_> = (0..opts.reference_frames)
            .map(|k| capture(&free, opts.noise, frame_seed(seed, k), 0.0))
            .collect();
        let reference = reset_reference(&refs, p)?;
        let held = press_at_width(&free, &prim, width)?;
        let (depth, _) = capture(&held, opts.noise, frame_seed(seed, opts.reference_frames), 0.0);
        let mask = compute_mask(&reference.depth, &depth, &opts.perception.mask)?;
        Ok(Fig8Row {
            object,
            wide,
            setpoint: sp,
            pressure: p,
            jaw_width: width,
            patch_area: mask.area(),
            truth_area: held.contact_area_px(),
            iou: mask.iou(&held.contact_set),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(Fig8Result { rows })
}

pub const FIG6_HEADER: &str = "setpoint_hpa,pressure_hpa,mean_depth_mm,mean_depth_noisy_mm";
pub const FIG7_HEADER: &str = "setpoint_hpa,pressure_hpa,force_n,jaw_width_mm";
pub const FIG8_HEADER: &str = "object,variant,setpoint_hpa,pressure_hpa,jaw_width_mm,patch_area_px,truth_area_px,iou";

pub fn fig6_csv(r: &Fig6Result) -> String {
    let mut out = format!("{FIG6_HEADER}\n");
    for row in &r.rows {
        out.push_str(&format!("{},{:.4},{:.6},{:.6}\n", row.setpoint, row.pressure, row.mean_depth, row.mean_depth_noisy));
    }
    out
}

pub fn fig7_csv(r: &Fig7Result) -> String {
    let mut out = format!("{FIG7_HEADER}\n");
    for row in &r.rows {
        out.push_str(&format!("{},{:.4},{:.6},{:.8}\n", row.setpoint, row.pressure, row.force, row.jaw_width));
    }
    out
}

pub fn fig8_csv(results: &[&Fig8Result]) -> String {
    let mut out = format!("{FIG8_HEADER}\n");
    for r in results {
        for row in &r.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{},{},{:.4}\n",
                row.object,
                if row.wide { "wide" } else { "standard" },
                row.setpoint,
                row.pressure,
                row.jaw_width,
                row.patch_area,
                row.truth_area,
                row.iou
            ));
        }
    }
    out
}

/// Gnuplot script that plots the sweep CSVs written next to it.
pub fn gnuplot_script() -> String {
    "set datafile separator ','\n\
set terminal pngcairo size 1200,400\n\
set output 'sweeps.png'\n\
set multiplot layout 1,3\n\
set key top left\n\
set xlabel 'pressure (hPa)'\n\
set ylabel 'mean range (mm)'\n\
plot 'fig6.csv' skip 1 using 2:3 with linespoints title 'mean depth'\n\
set ylabel 'grip force (N)'\n\
plot 'fig7.csv' skip 1 using 2:3 with linespoints title 'force'\n\
set ylabel 'patch area (px)'\n\
plot for [obj in 'mug sanitizer pen'] 'fig8.csv' skip 1 using (strcol(1) eq obj && strcol(2) eq 'standard' ? $4 : 1/0):6 with linespoints title obj\n\
unset multiplot\n"
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands_include_both_ends() {
        assert_eq!(band(1010.0, 10.0, 1090.0).len(), 9);
        assert_eq!(band(1070.0, -10.0, 1010.0), vec![1070.0, 1060.0, 1050.0, 1040.0, 1030.0, 1020.0, 1010.0]);
    }
}
