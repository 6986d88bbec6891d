use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MembraneState;
use crate::image::{DepthImage, Grid, IrImage};
use crate::par;

/// Zero-mean uniform per-pixel range noise in `[-amplitude, amplitude]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthNoise {
    pub amplitude: f64,
    pub seed: u64,
}

impl DepthNoise {
    pub const fn none() -> Self {
        Self { amplitude: 0.0, seed: 0 }
    }

    pub const fn uniform(amplitude: f64, seed: u64) -> Self {
        Self { amplitude, seed }
    }

    /// Uniform noise with the given standard deviation.
    pub fn with_sigma(sigma: f64, seed: u64) -> Self {
        Self { amplitude: sigma * 3f64.sqrt(), seed }
    }
}

/// Camera range to the membrane per pixel. Each row draws from its own
/// ChaCha stream so the result does not depend on how rows are scheduled.
pub fn render_depth(state: &MembraneState, noise: &DepthNoise, timestamp: f64) -> DepthImage {
    let (w, h) = state.height_field.dims();
    let standoff = state.config.camera_standoff;
    let heights = &state.height_field;
    let data = par::build_rows(w, h, |v, row| {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(v as u64);
        for (u, out) in row.iter_mut().enumerate() {
            let mut r = standoff + heights.get(u, v);
            if noise.amplitude > 0.0 {
                r += noise.amplitude * (2.0 * rng.random::<f64>() - 1.0);
            }
            *out = r;
        }
    });
    DepthImage {
        values: Grid::from_vec(w, h, data).expect("sized"),
        timestamp,
        pressure_at_capture: state.pressure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatStyle {
    pub sigma: f64,
    pub peak: f64,
    pub background: f64,
}

impl Default for SplatStyle {
    fn default() -> Self {
        Self { sigma: 0.9, peak: 0.85, background: 0.05 }
    }
}

/// Dark background with a Gaussian splat per point (pixel coordinates),
/// saturating at 1.
pub fn render_splats(width: usize, height: usize, points: &[[f64; 2]], style: &SplatStyle) -> Grid<f64> {
    let reach = (4.0 * style.sigma).ceil();
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); height];
    for (i, p) in points.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            continue;
        }
        let lo = (p[1] - reach).floor().max(0.0);
        let hi = (p[1] + reach).ceil().min(height as f64 - 1.0);
        if hi < lo {
            continue;
        }
        for row in by_row.iter_mut().take(hi as usize + 1).skip(lo as usize) {
            row.push(i);
        }
    }
    let inv = 1.0 / (2.0 * style.sigma * style.sigma);
    let data = par::build_rows(width, height, |v, row| {
        row.fill(style.background);
        let y = v as f64;
        for &i in &by_row[v] {
            let [px, py] = points[i];
            let lo = (px - reach).floor().max(0.0) as usize;
            let hi = (px + reach).ceil().min(width as f64 - 1.0);
            if hi < 0.0 {
                continue;
            }
            let dy2 = (y - py).powi(2);
            for (u, out) in row.iter_mut().enumerate().take(hi as usize + 1).skip(lo) {
                let d2 = (u as f64 - px).powi(2) + dy2;
                *out += style.peak * (-d2 * inv).exp();
            }
        }
        for out in row.iter_mut() {
            *out = out.min(1.0);
        }
    });
    Grid::from_vec(width, height, data).expect("sized")
}

/// IR amplitude image of the printed marker pattern.
pub fn render_ir(state: &MembraneState, timestamp: f64) -> IrImage {
    let c = &state.config;
    let points: Vec<[f64; 2]> = state.markers.iter().map(|m| m.image_point(c)).collect();
    let style = SplatStyle { sigma: c.marker_sigma_px, ..SplatStyle::default() };
    IrImage { values: render_splats(c.image_width, c.image_height, &points, &style), timestamp }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{inflate_shape, BubbleConfig};

    #[test]
    fn noiseless_depth_is_standoff_plus_height() {
        let s = inflate_shape(&BubbleConfig::default(), 1050.0).unwrap();
        let d = render_depth(&s, &DepthNoise::none(), 0.0);
        assert_eq!(*d.values.get(3, 4), 20.0 + s.height_field.get(3, 4));
        assert_eq!(d.pressure_at_capture, 1050.0);
    }

    #[test]
    fn noise_is_bounded_zero_mean_and_seeded() {
        let s = inflate_shape(&BubbleConfig::default(), 1050.0).unwrap();
        let clean = render_depth(&s, &DepthNoise::none(), 0.0);
        let a = render_depth(&s, &DepthNoise::uniform(0.5, 3), 0.0);
        let b = render_depth(&s, &DepthNoise::uniform(0.5, 3), 0.0);
        let c = render_depth(&s, &DepthNoise::uniform(0.5, 4), 0.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let diffs: Vec<f64> = a.values.as_slice().iter().zip(clean.values.as_slice()).map(|(x, y)| x - y).collect();
        assert!(diffs.iter().all(|d| d.abs() <= 0.5));
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn splat_peaks_at_point() {
        let g = render_splats(9, 9, &[[4.0, 4.0]], &SplatStyle::default());
        assert!((g.get(4, 4) - 0.9).abs() < 1e-12);
        assert!((g.get(0, 0) - 0.05).abs() < 1e-6);
    }
}
