use nalgebra::{DMatrix, Matrix3, Vector3};

use super::mask::check_dims;
use super::PerceptionError;
use crate::image::{ContactMask, FlowField};

/// Maps `[sum_dx, sum_dy, torsion]` to a force estimate.
pub type GainMatrix = Matrix3<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearEstimate {
    /// Two tangential components and a torsional moment about the centroid.
    pub force: [f64; 3],
    pub raw_displacement_sum: [f64; 2],
    pub torsion: f64,
    pub patch_area: usize,
    pub patch_centroid: [f64; 2],
}

impl ShearEstimate {
    pub fn zero() -> Self {
        Self { force: [0.0; 3], raw_displacement_sum: [0.0; 2], torsion: 0.0, patch_area: 0, patch_centroid: [0.0; 2] }
    }

    /// The aggregate the gain acts on.
    pub fn raw(&self) -> [f64; 3] {
        [self.raw_displacement_sum[0], self.raw_displacement_sum[1], self.torsion]
    }

    /// Tangential direction in radians, `None` for a zero estimate.
    pub fn direction(&self) -> Option<f64> {
        let [fx, fy, _] = self.force;
        (fx != 0.0 || fy != 0.0).then(|| fy.atan2(fx))
    }
}

/// Sums valid flow inside the mask and applies the gain.
pub fn aggregate_shear(flow: &FlowField, mask: &ContactMask, gain: &GainMatrix) -> Result<ShearEstimate, PerceptionError> {
    check_dims(mask.dims(), flow.dims())?;
    let Some(centroid) = mask.centroid() else {
        return Ok(ShearEstimate::zero());
    };
    let (mut sx, mut sy, mut torsion) = (0.0, 0.0, 0.0);
    for (x, y, [vx, vy]) in flow.valid_vectors() {
        if !mask.values.get(x, y) {
            continue;
        }
        sx += vx;
        sy += vy;
        torsion += (x as f64 - centroid[0]) * vy - (y as f64 - centroid[1]) * vx;
    }
    let f = gain * Vector3::new(sx, sy, torsion);
    Ok(ShearEstimate {
        force: [f[0], f[1], f[2]],
        raw_displacement_sum: [sx, sy],
        torsion,
        patch_area: mask.area(),
        patch_centroid: centroid,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub gain: GainMatrix,
    /// Root-mean-square force residual over the scenarios.
    pub residual: f64,
}

/// Least-squares gain from `(applied force, raw aggregate)` pairs.
pub fn calibrate_gain(scenarios: &[([f64; 3], [f64; 3])]) -> Result<Calibration, PerceptionError> {
    let n = scenarios.len();
    if n < 3 {
        return Err(PerceptionError::Calibration(format!("need at least 3 scenarios, got {n}")));
    }
    let x = DMatrix::from_fn(n, 3, |i, j| scenarios[i].1[j]);
    let y = DMatrix::from_fn(n, 3, |i, j| scenarios[i].0[j]);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * n as f64;
    if !(smax > 0.0) || svd.rank(tol) < 3 {
        return Err(PerceptionError::Calibration("scenario set is rank deficient".into()));
    }
    let kt = svd
        .solve(&y, tol)
        .map_err(|e| PerceptionError::Calibration(e.to_string()))?;
    let gain = Matrix3::from_fn(|i, j| kt[(j, i)]);
    let resid = &x * &kt - &y;
    let residual = (resid.norm_squared() / n as f64).sqrt();
    Ok(Calibration { gain, residual })
}

/// Three whitespace-separated rows.
pub fn format_gain(gain: &GainMatrix) -> String {
    let mut out = String::new();
    for i in 0..3 {
        out.push_str(&format!("{:e} {:e} {:e}\n", gain[(i, 0)], gain[(i, 1)], gain[(i, 2)]));
    }
    out
}

pub fn parse_gain(text: &str) -> Result<GainMatrix, PerceptionError> {
    let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    if rows.len() != 3 {
        return Err(PerceptionError::Gain(format!("expected 3 rows, got {}", rows.len())));
    }
    let mut g = GainMatrix::zeros();
    for (i, row) in rows.iter().enumerate() {
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| PerceptionError::Gain(format!("row {}: bad number {t:?}", i + 1))))
            .collect::<Result<_, _>>()?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(PerceptionError::Gain(format!("row {} needs 3 finite values", i + 1)));
        }
        for (j, v) in vals.into_iter().enumerate() {
            g[(i, j)] = v;
        }
    }
    Ok(g)
}
