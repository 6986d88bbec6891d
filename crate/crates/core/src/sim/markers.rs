use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BubbleConfig, SimError, PRESSURE_MAX, PRESSURE_MIN};

/// A printed marker. `anchor` is where the marker sits on the base plane with
/// no tangential load, `displacement` the shear-induced offset on top of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub anchor: [f64; 2],
    pub displacement: [f64; 2],
    /// Point on the membrane surface, millimetres.
    pub surface: [f64; 3],
}

impl Marker {
    pub fn plane_position(&self) -> [f64; 2] {
        [self.anchor[0] + self.displacement[0], self.anchor[1] + self.displacement[1]]
    }

    pub fn image_point(&self, config: &BubbleConfig) -> [f64; 2] {
        let [x, y] = self.plane_position();
        let (u, v) = config.plane_to_pixel(x, y);
        [u, v]
    }
}

/// Samples the rest-pressure marker pattern: denser towards the centre, with a
/// minimum spacing so no two splats merge, and kept far enough from the image
/// border that stretching over the full pressure band keeps them in view.
pub fn sample_markers(config: &BubbleConfig) -> Result<Vec<[f64; 2]>, SimError> {
    let (hx, hy) = config.half_extent();
    let worst_stretch = config.marker_stretch.abs()
        * (PRESSURE_MAX - config.rest_pressure).abs().max((config.rest_pressure - PRESSURE_MIN).abs());
    let margin_mm = (3.0 * config.marker_sigma_px + 1.0) * config.pixel_pitch;
    let bx = (hx - margin_mm) / (1.0 + worst_stretch);
    let by = (hy - margin_mm) / (1.0 + worst_stretch);
    if bx <= 0.0 || by <= 0.0 {
        return Err(SimError::Config("image too small for markers".into()));
    }
    let spacing = config.marker_spacing_px * config.pixel_pitch;
    let cell = spacing.max(1e-6);
    let nx = (2.0 * bx / cell).ceil() as usize + 1;
    let ny = (2.0 * by / cell).ceil() as usize + 1;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    let mut rng = ChaCha8Rng::seed_from_u64(config.marker_seed);
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(config.marker_count);
    let max_attempts = config.marker_count.saturating_mul(500).max(10_000);
    let mut attempts = 0;
    while out.len() < config.marker_count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(SimError::Config(format!(
                "could only place {} of {} markers at {} px spacing",
                out.len(),
                config.marker_count,
                config.marker_spacing_px
            )));
        }
        let x = rng.random_range(-bx..bx);
        let y = rng.random_range(-by..by);
        let r = ((x / bx).powi(2) + (y / by).powi(2)).sqrt() / std::f64::consts::SQRT_2;
        if rng.random::<f64>() > 1.0 - 0.5 * r {
            continue;
        }
        let ci = (((x + bx) / cell) as usize).min(nx - 1);
        let cj = (((y + by) / cell) as usize).min(ny - 1);
        let mut clear = true;
        'scan: for j in cj.saturating_sub(1)..=(cj + 1).min(ny - 1) {
            for i in ci.saturating_sub(1)..=(ci + 1).min(nx - 1) {
                for &k in &buckets[j * nx + i] {
                    let [ox, oy] = out[k];
                    if (ox - x).powi(2) + (oy - y).powi(2) < spacing * spacing {
                        clear = false;
                        break 'scan;
                    }
                }
            }
        }
        if clear {
            buckets[cj * nx + ci].push(out.len());
            out.push([x, y]);
        }
    }
    Ok(out)
}
