use super::filter::box_sum;
use super::PerceptionError;
use crate::image::{ContactMask, DepthImage, Grid, IrImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskConfig {
    /// Minimum indentation (reference range minus current range), mm.
    pub threshold: f64,
    /// Half-width of the box filter applied to the depth difference; 0 disables it.
    pub smooth_radius: usize,
    /// Largest allowed capture-pressure mismatch between the two frames, hPa.
    pub pressure_tolerance: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self { threshold: 1.5, smooth_radius: 1, pressure_tolerance: 4.0 }
    }
}

pub(crate) fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<(), PerceptionError> {
    if expected != found {
        return Err(PerceptionError::Dimensions { expected, found });
    }
    Ok(())
}

/// Contact patch from the depth difference between a reference frame and the
/// current one. The camera sits inside the membrane, so contact shows up as a
/// shorter range.
pub fn compute_mask(
    reference: &DepthImage,
    current: &DepthImage,
    config: &MaskConfig,
) -> Result<ContactMask, PerceptionError> {
    check_dims(reference.dims(), current.dims())?;
    let gap = (reference.pressure_at_capture - current.pressure_at_capture).abs();
    if gap > config.pressure_tolerance {
        return Err(PerceptionError::StaleReference {
            reference: reference.pressure_at_capture,
            current: current.pressure_at_capture,
            tolerance: config.pressure_tolerance,
        });
    }
    let (w, h) = reference.dims();
    let diff: Vec<f64> = reference
        .values
        .as_slice()
        .iter()
        .zip(current.values.as_slice())
        .map(|(r, c)| r - c)
        .collect();
    let mut diff = Grid::from_vec(w, h, diff).expect("sized");
    if config.smooth_radius > 0 {
        let n = (2 * config.smooth_radius + 1).pow(2) as f64;
        diff = box_sum(&diff, config.smooth_radius).map(|v| v / n);
    }
    let raw = diff.map(|&d| d > config.threshold);
    Ok(ContactMask::new(fill_holes(&largest_component(&raw))))
}

/// Per-pixel product of an IR image with a mask.
pub fn mask_ir(image: &IrImage, mask: &ContactMask) -> Result<IrImage, PerceptionError> {
    check_dims(image.dims(), mask.dims())?;
    let (w, h) = image.dims();
    let data = image
        .values
        .as_slice()
        .iter()
        .zip(mask.values.as_slice())
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    Ok(IrImage { values: Grid::from_vec(w, h, data).expect("sized"), timestamp: image.timestamp })
}

/// Keeps the largest 8-connected component. Ties go to the component found
/// first in row-major order.
pub fn largest_component(mask: &Grid<bool>) -> Grid<bool> {
    let (w, h) = mask.dims();
    let mut label = vec![0u32; w * h];
    let mut best = (0u32, 0usize);
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.as_slice()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.as_slice()[j] && label[j] == 0 {
                        label[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
        if size > best.1 {
            best = (next, size);
        }
    }
    let data = label.iter().map(|&l| l != 0 && l == best.0).collect();
    Grid::from_vec(w, h, data).expect("sized")
}

/// Sets every background pixel that is not 4-connected to the image border.
pub fn fill_holes(mask: &Grid<bool>) -> Grid<bool> {
    let (w, h) = mask.dims();
    let src = mask.as_slice();
    let mut outside = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    let seed = |i: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>| {
        if !src[i] && !outside[i] {
            outside[i] = true;
            stack.push(i);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut stack);
        seed((h - 1) * w + x, &mut outside, &mut stack);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut stack);
        seed(y * w + w - 1, &mut outside, &mut stack);
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        if x > 0 {
            seed(i - 1, &mut outside, &mut stack);
        }
        if x + 1 < w {
            seed(i + 1, &mut outside, &mut stack);
        }
        if y > 0 {
            seed(i - w, &mut outside, &mut stack);
        }
        if y + 1 < h {
            seed(i + w, &mut outside, &mut stack);
        }
    }
    Grid::from_vec(w, h, outside.into_iter().map(|o| !o).collect()).expect("sized")
}

/// Erodes with a `(2r+1)^2` square; pixels outside the image count as unset.
pub fn erode(mask: &Grid<bool>, radius: usize) -> Grid<bool> {
    let (w, h) = mask.dims();
    let r = radius as isize;
    let pass = |src: &Grid<bool>, horizontal: bool| -> Grid<bool> {
        let mut out = Grid::filled(w, h, false);
        for y in 0..h {
            for x in 0..w {
                let mut all = true;
                for k in -r..=r {
                    let (nx, ny) = if horizontal { (x as isize + k, y as isize) } else { (x as isize, y as isize + k) };
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize || !src.get(nx as usize, ny as usize) {
                        all = false;
                        break;
                    }
                }
                *out.get_mut(x, y) = all;
            }
        }
        out
    };
    pass(&pass(mask, true), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> Grid<bool> {
        let w = rows[0].len();
        let data = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        Grid::from_vec(w, rows.len(), data).unwrap()
    }

    #[test]
    fn keeps_largest_component_with_diagonal_links() {
        let g = grid(&["#...#", "...#.", "..#..", ".....", "#...."]);
        let out = largest_component(&g);
        assert_eq!(out, grid(&["....#", "...#.", "..#..", ".....", "....."]));
    }

    #[test]
    fn fills_enclosed_holes_only() {
        let g = grid(&["#####.", "#..#..", "#####.", "......"]);
        let out = fill_holes(&g);
        assert_eq!(out, grid(&["#####.", "####..", "#####.", "......"]));
    }

    #[test]
    fn erosion_treats_border_as_unset() {
        let g = Grid::filled(5, 5, true);
        let e = erode(&g, 1);
        assert!(!e.get(0, 2));
        assert!(*e.get(2, 2));
        assert_eq!(e.as_slice().iter().filter(|&&b| b).count(), 9);
    }

    #[test]
    fn stale_reference_is_rejected() {
        let a = DepthImage::new(Grid::filled(4, 4, 30.0), 0.0, 1050.0).unwrap();
        let b = DepthImage::new(Grid::filled(4, 4, 30.0), 0.0, 1070.0).unwrap();
        assert!(matches!(
            compute_mask(&a, &b, &MaskConfig::default()),
            Err(PerceptionError::StaleReference { .. })
        ));
        let c = DepthImage::new(Grid::filled(3, 4, 30.0), 0.0, 1050.0).unwrap();
        assert!(matches!(compute_mask(&a, &c, &MaskConfig::default()), Err(PerceptionError::Dimensions { .. })));
    }

    #[test]
    fn checkerboard_mask_on_unit_image() {
        let ir = IrImage::new(Grid::filled(4, 3, 1.0), 0.0).unwrap();
        let m = ContactMask::new(Grid::from_vec(4, 3, (0..12).map(|i| (i % 4 + i / 4) % 2 == 0).collect()).unwrap());
        let out = mask_ir(&ir, &m).unwrap();
        for (v, b) in out.values.as_slice().iter().zip(m.values.as_slice()) {
            assert_eq!(*v, if *b { 1.0 } else { 0.0 });
        }
    }
}
