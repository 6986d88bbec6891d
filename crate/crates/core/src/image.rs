//! Image grids shared by the simulator, perception and file formats.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("buffer length {len} does not match {width}x{height}")]
    Length { width: usize, height: usize, len: usize },
    #[error("depth value {value} at ({x}, {y}) is not finite and positive")]
    Depth { x: usize, y: usize, value: f64 },
    #[error("intensity {value} at ({x}, {y}) is outside [0, 1]")]
    Intensity { x: usize, y: usize, value: f64 },
}

/// Row-major 2D buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::Length { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }
}

impl<T: Copy> Grid<T> {
    /// Clamped lookup; coordinates outside the grid read the nearest edge.
    #[inline]
    pub fn clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }
}

impl Grid<f64> {
    /// Bilinear sample with edge clamping.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let a = self.clamped(xi, yi);
        let b = self.clamped(xi + 1, yi);
        let c = self.clamped(xi, yi + 1);
        let d = self.clamped(xi + 1, yi + 1);
        (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Range image from the internal time-of-flight sensor, in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub values: Grid<f64>,
    pub timestamp: f64,
    /// Bubble pressure estimate at capture time, hPa.
    pub pressure_at_capture: f64,
}

impl DepthImage {
    pub fn new(values: Grid<f64>, timestamp: f64, pressure_at_capture: f64) -> Result<Self, ImageError> {
        for y in 0..values.height() {
            for x in 0..values.width() {
                let v = *values.get(x, y);
                if !(v.is_finite() && v > 0.0) {
                    return Err(ImageError::Depth { x, y, value: v });
                }
            }
        }
        Ok(Self { values, timestamp, pressure_at_capture })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn mean(&self) -> f64 {
        self.values.mean()
    }
}

/// IR amplitude image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrImage {
    pub values: Grid<f64>,
    pub timestamp: f64,
}

impl IrImage {
    pub fn new(values: Grid<f64>, timestamp: f64) -> Result<Self, ImageError> {
        for y in 0..values.height() {
            for x in 0..values.width() {
                let v = *values.get(x, y);
                if !(0.0..=1.0).contains(&v) {
                    return Err(ImageError::Intensity { x, y, value: v });
                }
            }
        }
        Ok(Self { values, timestamp })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }
}

/// Binary contact-patch mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMask {
    pub values: Grid<bool>,
}

impl ContactMask {
    pub fn new(values: Grid<bool>) -> Self {
        Self { values }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { values: Grid::filled(width, height, false) }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self { values: Grid::filled(width, height, true) }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn area(&self) -> usize {
        self.values.as_slice().iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.values.as_slice().iter().any(|&m| m)
    }

    /// Mean pixel coordinate of the set pixels.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for y in 0..self.values.height() {
            for x in 0..self.values.width() {
                if *self.values.get(x, y) {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| [sx / n as f64, sy / n as f64])
    }

    /// Intersection over union; two empty masks score 1.
    pub fn iou(&self, other: &ContactMask) -> f64 {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.values.as_slice().iter().zip(other.values.as_slice()) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Dense per-pixel displacement field in pixels, with validity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub vectors: Grid<[f64; 2]>,
    pub valid: Grid<bool>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            vectors: Grid::filled(width, height, [0.0, 0.0]),
            valid: Grid::filled(width, height, false),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.vectors.dims()
    }

    pub fn valid_vectors(&self) -> impl Iterator<Item = (usize, usize, [f64; 2])> + '_ {
        let w = self.vectors.width();
        self.vectors
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(move |(i, (v, _))| (i % w, i / w, *v))
    }

    /// Component-wise median over valid pixels.
    pub fn median(&self) -> Option<[f64; 2]> {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for (_, _, v) in self.valid_vectors() {
            xs.push(v[0]);
            ys.push(v[1]);
        }
        if xs.is_empty() {
            return None;
        }
        Some([median(&mut xs), median(&mut ys)])
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_values() {
        assert!(Grid::from_vec(2, 2, vec![1.0; 3]).is_err());
        let g = Grid::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        assert!(matches!(DepthImage::new(g, 0.0, 1050.0), Err(ImageError::Depth { x: 1, .. })));
        let g = Grid::from_vec(1, 1, vec![1.5]).unwrap();
        assert!(IrImage::new(g, 0.0).is_err());
    }

    #[test]
    fn bilinear_interpolates_between_pixels() {
        let g = Grid::from_vec(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.bilinear(0.5, 0.5), 1.5);
        assert_eq!(g.bilinear(-3.0, 0.0), 0.0);
        assert_eq!(g.bilinear(1.0, 1.0), 3.0);
    }

    #[test]
    fn mask_statistics() {
        let mut m = ContactMask::empty(4, 4);
        assert!(m.centroid().is_none());
        *m.values.get_mut(1, 1) = true;
        *m.values.get_mut(3, 1) = true;
        assert_eq!(m.area(), 2);
        assert_eq!(m.centroid(), Some([2.0, 1.0]));
        assert_eq!(m.iou(&m.clone()), 1.0);
        assert_eq!(m.iou(&ContactMask::empty(4, 4)), 0.0);
    }
}
