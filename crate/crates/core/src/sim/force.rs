//! Grasp force of the bubble pair squeezing an object at a fixed jaw width.
//!
//! The jaws are placed so the two apexes just touch at rest pressure and zero
//! width. Squeezing an object of thickness `T` at width `w` indents the pair by
//! `T - w` plus twice the apex lift, and the membrane pair answers with
//! `k (T - w + 2 g Δp) + c Δp²` where `Δp` is the offset from rest pressure,
//! `g` the linear geometry gain and `c` the quadratic force residual. The jaws
//! themselves yield slightly, which divides the force by `1 + k / k_jaw`.

use super::{BubbleConfig, SimError};

fn check_width(config: &BubbleConfig, width: f64) -> Result<(), SimError> {
    if (0.0..=config.max_jaw_width).contains(&width) {
        Ok(())
    } else {
        Err(SimError::Width(width))
    }
}

fn compliance(config: &BubbleConfig) -> f64 {
    1.0 + config.contact_stiffness / config.jaw_stiffness
}

/// Force on an object of the given thickness held at commanded jaw `width`.
pub fn grasp_force_model(config: &BubbleConfig, pressure: f64, width: f64, thickness: f64) -> Result<f64, SimError> {
    check_width(config, width)?;
    let dp = pressure - config.rest_pressure;
    let k = config.contact_stiffness;
    let squeeze = k * (thickness - width + 2.0 * config.geometry_gain * dp) + config.force_quad * dp * dp;
    Ok(squeeze.max(0.0) / compliance(config))
}

/// Commanded width at which the model produces `force`; may fall outside the
/// gripper range, callers clamp.
pub fn jaw_width_for_force(config: &BubbleConfig, pressure: f64, thickness: f64, force: f64) -> f64 {
    let dp = pressure - config.rest_pressure;
    let k = config.contact_stiffness;
    thickness + 2.0 * config.geometry_gain * dp + (config.force_quad * dp * dp - force * compliance(config)) / k
}

/// Jaw width reported by the gripper while holding `force`.
pub fn measured_jaw_width(config: &BubbleConfig, commanded: f64, force: f64) -> f64 {
    commanded + force / config.jaw_stiffness
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_when_deflated_and_wide() {
        let c = BubbleConfig::default();
        assert_eq!(grasp_force_model(&c, 1010.0, 60.0, 44.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_width() {
        let c = BubbleConfig::default();
        assert_eq!(grasp_force_model(&c, 1050.0, 66.5, 44.0), Err(SimError::Width(66.5)));
        assert!(grasp_force_model(&c, 1050.0, -0.1, 44.0).is_err());
    }

    #[test]
    fn inverse_matches_forward() {
        let c = BubbleConfig::default();
        for p in [1010.0, 1035.0, 1050.0, 1090.0] {
            let w = jaw_width_for_force(&c, p, 44.0, 25.0);
            let f = grasp_force_model(&c, p, w, 44.0).unwrap();
            assert!((f - 25.0).abs() < 1e-9, "{p}: {f}");
        }
    }
}
