//! Library outputs checked against independent closed-form oracles. The
//! frozen constants were produced by the oracles below, not by the library.

use bubble_core::harness::{fig6_sweep, fig7_sweep, fit_quadratic, ObjectPreset, SweepOptions};
use bubble_core::pneumatics::{
    deflation_time, inflation_time, step_response, ControllerConfig, PlantConfig,
};
use bubble_core::sim::{
    grasp_force_model, inflate_shape, jaw_width_for_force, press_object, render_depth, BubbleConfig, DepthNoise,
};

const W: usize = 224;
const H: usize = 171;
const PITCH: f64 = 0.25;

/// Base-plane coordinates of every pixel centre.
fn plane_points() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(W * H);
    for v in 0..H {
        for u in 0..W {
            out.push(((u as f64 - 111.5) * PITCH, (v as f64 - 85.0) * PITCH));
        }
    }
    out
}

/// Rest ellipsoid cap height over the view, no pressure lift.
fn rest_cap(x: f64, y: f64) -> f64 {
    let r2 = (x / 48.0).powi(2) + (y / 36.0).powi(2);
    30.0 * (1.0 - r2).max(0.0).sqrt()
}

fn oracle_mean_cap() -> f64 {
    let pts = plane_points();
    pts.iter().map(|&(x, y)| rest_cap(x, y)).sum::<f64>() / pts.len() as f64
}

/// Apex lift at `p`, mm.
fn lift(p: f64) -> f64 {
    let dp = p - 1050.0;
    0.08 * dp + 1.3e-4 * dp * dp
}

fn oracle_mean_range(p: f64) -> f64 {
    20.0 + oracle_mean_cap() + lift(p)
}

/// Pixels where a cylinder along x, of radius `r`, pressed with its nearest
/// point at height `z`, overlaps the free membrane by at least the lift band.
fn oracle_contact_px(p: f64, r: f64, z: f64) -> usize {
    plane_points()
        .iter()
        .filter(|&&(x, y)| {
            if y.abs() >= r {
                return false;
            }
            let surface = z + r - (r * r - y * y).sqrt();
            rest_cap(x, y) + lift(p) - surface >= 1.5
        })
        .count()
}

/// Jaw width giving `force` on a cylinder of radius `r` at `p`, clamped to the gripper.
fn oracle_width(p: f64, r: f64, force: f64) -> f64 {
    let dp = p - 1050.0;
    let compliance = 1.0 + 1.25 / 1.0e4;
    (2.0 * r + 0.16 * dp + (-0.00127 * dp * dp - force * compliance) / 1.25).clamp(0.0, 66.0)
}

fn oracle_force(p: f64, width: f64, thickness: f64) -> f64 {
    let dp = p - 1050.0;
    (1.25 * (thickness - width + 0.16 * dp) - 0.00127 * dp * dp).max(0.0) / (1.0 + 1.25e-4)
}

const MEAN_CAP_FROZEN: f64 = 26.180788321482506;
const MUG_WIDTH_FROZEN: f64 = 23.9975;
const MUG_FORCE_1070_FROZEN: f64 = 28.49156355455568;
const MUG_FORCE_1010_FROZEN: f64 = 14.96925384326959;

/// Ground-truth contact pixels of a 25 N grasp.
const CONTACT_FROZEN: [(ObjectPreset, f64, usize); 9] = [
    (ObjectPreset::Mug, 1020.0, 24468),
    (ObjectPreset::Mug, 1050.0, 23540),
    (ObjectPreset::Mug, 1070.0, 23956),
    (ObjectPreset::Sanitizer, 1020.0, 19940),
    (ObjectPreset::Sanitizer, 1050.0, 19236),
    (ObjectPreset::Sanitizer, 1070.0, 19580),
    (ObjectPreset::Pen, 1020.0, 2176),
    (ObjectPreset::Pen, 1050.0, 5608),
    (ObjectPreset::Pen, 1070.0, 7432),
];

#[test]
fn oracles_match_frozen_values() {
    assert!((oracle_mean_cap() - MEAN_CAP_FROZEN).abs() < 1e-12);
    let w = oracle_width(1050.0, 22.0, 25.0);
    assert!((w - MUG_WIDTH_FROZEN).abs() < 1e-12);
    assert!((oracle_force(1070.0, w, 44.0) - MUG_FORCE_1070_FROZEN).abs() < 1e-12);
    assert!((oracle_force(1010.0, w, 44.0) - MUG_FORCE_1010_FROZEN).abs() < 1e-12);
}

#[test]
fn mean_range_follows_the_lift_curve() {
    let cfg = BubbleConfig::default();
    for p in [1010.0, 1023.0, 1050.0, 1061.5, 1090.0] {
        let state = inflate_shape(&cfg, p).unwrap();
        let mean = render_depth(&state, &DepthNoise::none(), 0.0).mean();
        assert!((mean - oracle_mean_range(p)).abs() < 1e-9, "{p}: {mean} vs {}", oracle_mean_range(p));
    }
}

#[test]
fn mean_depth_sweep_matches_oracle_rows() {
    let r = fig6_sweep(&SweepOptions::default()).unwrap();
    assert_eq!(r.rows.len(), 9);
    for row in &r.rows {
        assert!((row.pressure - row.setpoint).abs() <= 2.0);
        assert!((row.mean_depth - oracle_mean_range(row.pressure)).abs() < 1e-9);
    }
    assert!((r.fit.c2 - 1.3e-4).abs() < 1e-9);
}

#[test]
fn grasp_force_matches_oracle() {
    let cfg = BubbleConfig::default();
    let w = jaw_width_for_force(&cfg, 1050.0, 44.0, 25.0);
    assert!((w - MUG_WIDTH_FROZEN).abs() < 1e-12);
    for p in [1010.0, 1030.0, 1050.0, 1070.0] {
        let f = grasp_force_model(&cfg, p, w, 44.0).unwrap();
        assert!((f - oracle_force(p, w, 44.0)).abs() < 1e-12);
    }
    assert!((grasp_force_model(&cfg, 1050.0, w, 44.0).unwrap() - 25.0).abs() < 1e-12);
    let r = fig7_sweep(&SweepOptions::default()).unwrap();
    for row in &r.rows {
        assert!((row.force - oracle_force(row.pressure, r.commanded_width, 44.0)).abs() < 1e-12);
    }
}

#[test]
fn contact_patch_matches_oracle_count() {
    let cfg = BubbleConfig::default();
    for (object, p, frozen) in CONTACT_FROZEN {
        let r = object.primitive().thickness() / 2.0;
        let w = oracle_width(p, r, 25.0);
        let oracle = oracle_contact_px(p, r, 30.0 - 0.5 * (2.0 * r - w));
        assert_eq!(oracle, frozen, "{object} at {p}");
        let held = press_object(&inflate_shape(&cfg, p).unwrap(), &object.primitive(), 25.0).unwrap();
        assert_eq!(held.contact_area_px(), frozen, "{object} at {p}");
    }
}

#[test]
fn quadratic_fit_recovers_exact_coefficients() {
    let xs: Vec<f64> = (0..9).map(|i| 1010.0 + 10.0 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.5 - 0.02 * (x - 1000.0) + 7.0e-4 * (x - 1000.0).powi(2)).collect();
    let fit = fit_quadratic(&xs, &ys).unwrap();
    // expanded about zero: c2 x^2 + c1 x + c0
    assert!((fit.c2 - 7.0e-4).abs() < 1e-12);
    assert!((fit.c1 - (-0.02 - 2.0 * 7.0e-4 * 1000.0)).abs() < 1e-8);
    assert!((fit.c0 - (3.5 + 0.02 * 1000.0 + 7.0e-4 * 1.0e6)).abs() < 1e-5);
    assert!(fit.residual < 1e-9);
}

#[test]
fn plant_transit_times_match_closed_form() {
    let c = PlantConfig::default();
    assert!((inflation_time(&c, 1010.0, 1090.0) - 27.5 * (590.0f64 / 510.0).ln()).abs() < 1e-12);
    assert!((deflation_time(&c, 1090.0, 1010.0) - 6.25 * 9.0f64.ln()).abs() < 1e-12);
}

#[test]
fn noiseless_settle_times_match_closed_form() {
    let plant = PlantConfig::default().noiseless();
    let controller = ControllerConfig::default();
    let dt = controller.sample_period;
    // the band edge is entered once the bubble crosses setpoint -/+ deadband
    let up = step_response(plant, controller.clone(), 1010.0, 1070.0, 30.0, 0).unwrap();
    let t_up = 27.5 * (590.0f64 / 532.0).ln();
    assert!(up.settle_time <= t_up && up.settle_time > t_up - dt - 1e-9, "{} vs {t_up}", up.settle_time);
    let down = step_response(plant, controller, 1070.0, 1010.0, 30.0, 0).unwrap();
    let t_down = 6.25 * (70.0f64 / 12.0).ln();
    assert!(down.settle_time <= t_down && down.settle_time > t_down - dt - 1e-9, "{} vs {t_down}", down.settle_time);
    assert_eq!(up.conflicts + down.conflicts, 0);
}
