//! Pyramidal polynomial-expansion dense optical flow.
//!
//! Every pixel neighbourhood is approximated by a quadratic
//! `f(x) = x'Ax + b'x + c`, fitted with Gaussian weights. A translation `d`
//! turns `b` into `b - 2Ad`, so the displacement follows from a small linear
//! solve that is averaged over a square window. Estimates are refined coarse
//! to fine, warping the second expansion by the current flow at each step.

use nalgebra::{Matrix3, Vector3};

use super::filter::{box_sum, correlate_cols, correlate_rows, gaussian_blur, gaussian_taps, resize};
use super::mask::{check_dims, erode};
use super::PerceptionError;
use crate::image::{ContactMask, FlowField, Grid, IrImage};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub levels: usize,
    pub pyramid_scale: f64,
    /// Side of the square averaging window; also sets the validity erosion.
    pub window: usize,
    pub iterations: usize,
    /// Half-width of the polynomial fit neighbourhood.
    pub poly_n: usize,
    pub poly_sigma: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { levels: 3, pyramid_scale: 0.5, window: 15, iterations: 3, poly_n: 7, poly_sigma: 1.5 }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        let bad = |m: &str| Err(PerceptionError::Config(m.into()));
        if self.levels == 0 {
            return bad("at least one pyramid level is required");
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return bad("pyramid scale must be in (0, 1)");
        }
        if self.window == 0 || self.window % 2 == 0 {
            return bad("window must be a positive odd size");
        }
        if self.poly_n == 0 || !(self.poly_sigma > 0.0) {
            return bad("polynomial neighbourhood and sigma must be positive");
        }
        Ok(())
    }

    pub fn window_radius(&self) -> usize {
        self.window / 2
    }
}

/// Determinant regulariser for intensities in [0, 1], equal to 1e-3 on an
/// 8-bit intensity scale.
const DET_EPS: f64 = 1e-3 / (255.0 * 255.0 * 255.0 * 255.0);

/// Quadratic model coefficients per pixel: `b = (bx, by)`,
/// `A = [[axx, axy/2], [axy/2, ayy]]`.
struct Expansion {
    bx: Grid<f64>,
    by: Grid<f64>,
    axx: Grid<f64>,
    ayy: Grid<f64>,
    axy: Grid<f64>,
}

fn poly_expand(image: &Grid<f64>, n: usize, sigma: f64) -> Expansion {
    let g = gaussian_taps(sigma, n);
    let r = n as isize;
    let offs: Vec<f64> = (-r..=r).map(|i| i as f64).collect();
    let g1: Vec<f64> = g.iter().zip(&offs).map(|(g, x)| g * x).collect();
    let g2: Vec<f64> = g.iter().zip(&offs).map(|(g, x)| g * x * x).collect();
    let s0: f64 = g.iter().sum();
    let s2: f64 = g2.iter().sum();
    let s4: f64 = g.iter().zip(&offs).map(|(g, x)| g * x.powi(4)).sum();

    let t0 = correlate_cols(image, &g);
    let t1 = correlate_cols(image, &g1);
    let t2 = correlate_cols(image, &g2);
    let c00 = correlate_rows(&t0, &g);
    let c10 = correlate_rows(&t0, &g1);
    let c20 = correlate_rows(&t0, &g2);
    let c01 = correlate_rows(&t1, &g);
    let c11 = correlate_rows(&t1, &g1);
    let c02 = correlate_rows(&t2, &g);

    // Gram matrix of {1, x^2, y^2}; the odd and cross terms are decoupled.
    let (gm0, gm2, gm4, gm22) = (s0 * s0, s2 * s0, s4 * s0, s2 * s2);
    let gram = Matrix3::new(gm0, gm2, gm2, gm2, gm4, gm22, gm2, gm22, gm4);
    let inv = gram.try_inverse().expect("Gaussian Gram matrix is positive definite");

    let (w, h) = image.dims();
    let mut axx = Grid::filled(w, h, 0.0);
    let mut ayy = Grid::filled(w, h, 0.0);
    for i in 0..w * h {
        let q = inv * Vector3::new(c00.as_slice()[i], c20.as_slice()[i], c02.as_slice()[i]);
        axx.as_mut_slice()[i] = q[1];
        ayy.as_mut_slice()[i] = q[2];
    }
    Expansion {
        bx: c10.map(|v| v / gm2),
        by: c01.map(|v| v / gm2),
        axx,
        ayy,
        axy: c11.map(|v| v / gm22),
    }
}

fn pyramid(image: &Grid<f64>, config: &FlowConfig) -> Vec<Grid<f64>> {
    let (w, h) = image.dims();
    (0..config.levels)
        .map(|k| {
            if k == 0 {
                return image.clone();
            }
            let s = config.pyramid_scale.powi(k as i32);
            let sigma = (1.0 / s - 1.0) * 0.5;
            let lw = ((w as f64 * s).round() as usize).max(1);
            let lh = ((h as f64 * s).round() as usize).max(1);
            resize(&gaussian_blur(image, sigma), lw, lh)
        })
        .collect()
}

fn upsample_flow(flow: &Grid<[f64; 2]>, width: usize, height: usize) -> Grid<[f64; 2]> {
    let (cw, ch) = flow.dims();
    let sx = cw as f64 / width as f64;
    let sy = ch as f64 / height as f64;
    let fx = flow.map(|v| v[0]);
    let fy = flow.map(|v| v[1]);
    let data = par::build_rows(width, height, |y, row| {
        let v = (y as f64 + 0.5) * sy - 0.5;
        for (x, out) in row.iter_mut().enumerate() {
            let u = (x as f64 + 0.5) * sx - 0.5;
            *out = [fx.bilinear(u, v) / sx, fy.bilinear(u, v) / sy];
        }
    });
    Grid::from_vec(width, height, data).expect("sized")
}

fn sample(grid: &Grid<f64>, x: f64, y: f64) -> f64 {
    grid.bilinear(x, y)
}

/// One refinement of `flow` given the two expansions.
fn refine(e1: &Expansion, e2: &Expansion, flow: &Grid<[f64; 2]>, radius: usize) -> Grid<[f64; 2]> {
    let (w, h) = flow.dims();
    // Per-pixel normal-equation terms: G = A'A (symmetric), v = A'Δb.
    let terms: Vec<[f64; 5]> = par::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let [dx, dy] = *flow.get(x, y);
            let (px, py) = (x as f64 + dx, y as f64 + dy);
            if px < 0.0 || py < 0.0 || px > (w - 1) as f64 || py > (h - 1) as f64 {
                *out = [0.0; 5];
                continue;
            }
            let a11 = 0.5 * (e1.axx.get(x, y) + sample(&e2.axx, px, py));
            let a22 = 0.5 * (e1.ayy.get(x, y) + sample(&e2.ayy, px, py));
            let a12 = 0.25 * (e1.axy.get(x, y) + sample(&e2.axy, px, py));
            let b1 = -0.5 * (sample(&e2.bx, px, py) - e1.bx.get(x, y)) + a11 * dx + a12 * dy;
            let b2 = -0.5 * (sample(&e2.by, px, py) - e1.by.get(x, y)) + a12 * dx + a22 * dy;
            *out = [
                a11 * a11 + a12 * a12,
                a11 * a12 + a12 * a22,
                a12 * a12 + a22 * a22,
                a11 * b1 + a12 * b2,
                a12 * b1 + a22 * b2,
            ];
        }
    });
    let channel = |k: usize| {
        box_sum(&Grid::from_vec(w, h, terms.iter().map(|t| t[k]).collect()).expect("sized"), radius)
    };
    let [g11, g12, g22, h1, h2] = [channel(0), channel(1), channel(2), channel(3), channel(4)];
    let data = par::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let (a, b, c) = (*g11.get(x, y), *g12.get(x, y), *g22.get(x, y));
            let (p, q) = (*h1.get(x, y), *h2.get(x, y));
            let idet = 1.0 / (a * c - b * b + DET_EPS);
            *out = [(c * p - b * q) * idet, (a * q - b * p) * idet];
        }
    });
    Grid::from_vec(w, h, data).expect("sized")
}

/// Raw flow over the whole frame, no validity applied.
pub fn flow_field(first: &Grid<f64>, second: &Grid<f64>, config: &FlowConfig) -> Result<Grid<[f64; 2]>, PerceptionError> {
    config.validate()?;
    check_dims(first.dims(), second.dims())?;
    let p1 = pyramid(first, config);
    let p2 = pyramid(second, config);
    let mut flow: Option<Grid<[f64; 2]>> = None;
    for k in (0..config.levels).rev() {
        let (w, h) = p1[k].dims();
        let mut current = match flow.take() {
            Some(coarse) => upsample_flow(&coarse, w, h),
            None => Grid::filled(w, h, [0.0, 0.0]),
        };
        let e1 = poly_expand(&p1[k], config.poly_n, config.poly_sigma);
        let e2 = poly_expand(&p2[k], config.poly_n, config.poly_sigma);
        for _ in 0..config.iterations {
            current = refine(&e1, &e2, &current, config.window_radius());
        }
        flow = Some(current);
    }
    Ok(flow.expect("at least one level"))
}

/// Dense flow between two masked IR frames. Vectors are valid only inside the
/// mask eroded by the window radius and are zero elsewhere.
pub fn dense_flow(
    first: &IrImage,
    second: &IrImage,
    mask: &ContactMask,
    config: &FlowConfig,
) -> Result<FlowField, PerceptionError> {
    config.validate()?;
    check_dims(first.dims(), second.dims())?;
    check_dims(first.dims(), mask.dims())?;
    let (w, h) = first.dims();
    let valid = erode(&mask.values, config.window_radius());
    if !valid.as_slice().iter().any(|&v| v) {
        return Ok(FlowField { vectors: Grid::filled(w, h, [0.0, 0.0]), valid });
    }
    let raw = flow_field(&first.values, &second.values, config)?;
    let data = raw
        .as_slice()
        .iter()
        .zip(valid.as_slice())
        .map(|(v, &ok)| if ok && v[0].is_finite() && v[1].is_finite() { *v } else { [0.0, 0.0] })
        .collect();
    Ok(FlowField { vectors: Grid::from_vec(w, h, data).expect("sized"), valid })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(shift: [f64; 2]) -> Grid<f64> {
        let pts: Vec<[f64; 2]> = (0..12)
            .flat_map(|j| (0..12).map(move |i| [6.0 + 7.3 * i as f64 + (j % 3) as f64, 5.0 + 6.1 * j as f64 + (i % 2) as f64]))
            .map(|[x, y]| [x + shift[0], y + shift[1]])
            .collect();
        crate::sim::render_splats(96, 80, &pts, &crate::sim::SplatStyle::default())
    }

    #[test]
    fn expansion_recovers_quadratic() {
        let g = Grid::from_vec(
            21,
            21,
            (0..441)
                .map(|i| {
                    let (x, y) = ((i % 21) as f64, (i / 21) as f64);
                    0.5 * x * x + 0.25 * x * y - 0.1 * y * y + 2.0 * x - y + 3.0
                })
                .collect(),
        )
        .unwrap();
        let e = poly_expand(&g, 4, 1.2);
        let (x, y) = (10.0, 10.0);
        assert!((e.axx.get(10, 10) - 0.5).abs() < 1e-9);
        assert!((e.ayy.get(10, 10) + 0.1).abs() < 1e-9);
        assert!((e.axy.get(10, 10) - 0.25).abs() < 1e-9);
        assert!((e.bx.get(10, 10) - (x + 0.25 * y + 2.0)).abs() < 1e-9);
        assert!((e.by.get(10, 10) - (0.25 * x - 0.2 * y - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let a = blobs([0.0, 0.0]);
        let f = flow_field(&a, &a, &FlowConfig::default()).unwrap();
        assert!(f.as_slice().iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn recovers_translation() {
        let a = blobs([0.0, 0.0]);
        let b = blobs([2.0, -1.0]);
        let f = flow_field(&a, &b, &FlowConfig::default()).unwrap();
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for y in 20..60 {
            for x in 20..76 {
                xs.push(f.get(x, y)[0]);
                ys.push(f.get(x, y)[1]);
            }
        }
        let (mx, my) = (crate::image::median(&mut xs), crate::image::median(&mut ys));
        assert!((mx - 2.0).abs() < 0.25 && (my + 1.0).abs() < 0.25, "{mx} {my}");
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(FlowConfig { window: 4, ..Default::default() }.validate().is_err());
        assert!(FlowConfig { pyramid_scale: 1.0, ..Default::default() }.validate().is_err());
    }
}
