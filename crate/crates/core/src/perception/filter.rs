//! Separable filters over `Grid<f64>` with replicated borders.

use crate::image::Grid;
use crate::par;

/// Unnormalised Gaussian taps for offsets `-radius..=radius`.
pub(crate) fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Correlates every row with `taps` (centred).
pub(crate) fn correlate_rows(src: &Grid<f64>, taps: &[f64]) -> Grid<f64> {
    let (w, h) = src.dims();
    let r = (taps.len() / 2) as isize;
    let data = par::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * src.clamped(x as isize + k as isize - r, y as isize);
            }
            *out = acc;
        }
    });
    Grid::from_vec(w, h, data).expect("sized")
}

/// Correlates every column with `taps` (centred).
pub(crate) fn correlate_cols(src: &Grid<f64>, taps: &[f64]) -> Grid<f64> {
    let (w, h) = src.dims();
    let r = (taps.len() / 2) as isize;
    let data = par::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * src.clamped(x as isize, y as isize + k as isize - r);
            }
            *out = acc;
        }
    });
    Grid::from_vec(w, h, data).expect("sized")
}

/// Normalised Gaussian blur.
pub(crate) fn gaussian_blur(src: &Grid<f64>, sigma: f64) -> Grid<f64> {
    if sigma <= 0.0 {
        return src.clone();
    }
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut taps = gaussian_taps(sigma, radius);
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    correlate_cols(&correlate_rows(src, &taps), &taps)
}

/// Sum over a `(2r+1)^2` square window.
pub(crate) fn box_sum(src: &Grid<f64>, radius: usize) -> Grid<f64> {
    let taps = vec![1.0; 2 * radius + 1];
    correlate_cols(&correlate_rows(src, &taps), &taps)
}

/// Resamples to `width x height` with bilinear interpolation at pixel centres.
pub(crate) fn resize(src: &Grid<f64>, width: usize, height: usize) -> Grid<f64> {
    let sx = src.width() as f64 / width as f64;
    let sy = src.height() as f64 / height as f64;
    let data = par::build_rows(width, height, |y, row| {
        let v = (y as f64 + 0.5) * sy - 0.5;
        for (x, out) in row.iter_mut().enumerate() {
            *out = src.bilinear((x as f64 + 0.5) * sx - 0.5, v);
        }
    });
    Grid::from_vec(width, height, data).expect("sized")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sum_of_ones_away_from_border() {
        let g = Grid::filled(9, 9, 1.0);
        assert_eq!(*box_sum(&g, 1).get(4, 4), 9.0);
        assert_eq!(*box_sum(&g, 1).get(0, 0), 9.0);
    }

    #[test]
    fn blur_preserves_constants() {
        let g = Grid::filled(7, 5, 0.4);
        let b = gaussian_blur(&g, 1.2);
        assert!(b.as_slice().iter().all(|v| (v - 0.4).abs() < 1e-12));
    }

    #[test]
    fn resize_halves_linear_ramp() {
        let g = Grid::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = resize(&g, 2, 1);
        assert_eq!(r.as_slice(), &[0.5, 2.5]);
    }
}
