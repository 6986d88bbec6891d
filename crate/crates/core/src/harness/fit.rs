use nalgebra::{DMatrix, DVector};

use super::HarnessError;

/// `y = c0 + c1 x + c2 x^2` with the RMS residual of the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub residual: f64,
}

impl QuadraticFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * self.c2)
    }
}

/// Least-squares quadratic. The abscissae are centred and scaled before the
/// solve so pressures around 1000 hPa do not wreck the conditioning.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<QuadraticFit, HarnessError> {
    if xs.len() != ys.len() {
        return Err(HarnessError::Fit(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 4 {
        return Err(HarnessError::Fit(format!("need at least 4 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(HarnessError::Fit("non-finite input".into()));
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let scale = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(HarnessError::Fit("all abscissae are equal".into()));
    }
    let t: Vec<f64> = xs.iter().map(|x| (x - mean) / scale).collect();
    let a = DMatrix::from_fn(n, 3, |i, j| t[i].powi(j as i32));
    let svd = a.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max() * n as f64;
    if svd.rank(tol) < 3 {
        return Err(HarnessError::Fit("fewer than 3 distinct abscissae".into()));
    }
    let y = DVector::from_column_slice(ys);
    let p = svd.solve(&y, tol).map_err(|e| HarnessError::Fit(e.to_string()))?;
    let residual = ((&a * &p - &y).norm_squared() / n as f64).sqrt();
    let (a0, a1, a2) = (p[0], p[1], p[2]);
    let s2 = scale * scale;
    Ok(QuadraticFit {
        c0: a0 - a1 * mean / scale + a2 * mean * mean / s2,
        c1: a1 / scale - 2.0 * a2 * mean / s2,
        c2: a2 / s2,
        residual,
    })
}
