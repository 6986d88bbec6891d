use super::force::jaw_width_for_force;
use super::markers::{sample_markers, Marker};
use super::{BubbleConfig, ObjectPrimitive, SimError};
use crate::image::{ContactMask, Grid};
use crate::par;

/// Simulated bubble: geometry, ground-truth contact and marker positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneState {
    pub config: BubbleConfig,
    pub pressure: f64,
    /// Membrane height above the base plane per pixel, millimetres.
    pub height_field: Grid<f64>,
    pub contact_set: ContactMask,
    pub markers: Vec<Marker>,
    pub object: Option<ObjectPrimitive>,
    /// Commanded jaw width of the current grasp.
    pub grasp_width: Option<f64>,
    /// Accumulated tangential displacement of the grasped object, millimetres.
    pub object_shear_offset: [f64; 2],
}

impl MembraneState {
    /// Membrane height at a (sub)pixel position.
    pub fn height_at_pixel(&self, u: f64, v: f64) -> f64 {
        self.height_field.bilinear(u, v)
    }

    pub fn contact_area_px(&self) -> usize {
        self.contact_set.area()
    }

    fn surface_point(&self, plane: [f64; 2]) -> [f64; 3] {
        let (u, v) = self.config.plane_to_pixel(plane[0], plane[1]);
        [plane[0], plane[1], self.height_at_pixel(u, v)]
    }

    fn refresh_marker_surfaces(&mut self) {
        let mut markers = std::mem::take(&mut self.markers);
        for m in &mut markers {
            m.surface = self.surface_point(m.plane_position());
        }
        self.markers = markers;
    }

    fn pixel_in_contact(&self, plane: [f64; 2]) -> bool {
        let (u, v) = self.config.plane_to_pixel(plane[0], plane[1]);
        let (w, h) = self.contact_set.dims();
        let (ui, vi) = (u.round(), v.round());
        if ui < 0.0 || vi < 0.0 || ui >= w as f64 || vi >= h as f64 {
            return false;
        }
        *self.contact_set.values.get(ui as usize, vi as usize)
    }
}

fn free_field(config: &BubbleConfig, pressure: f64) -> Grid<f64> {
    let (w, h) = (config.image_width, config.image_height);
    let data = par::build_rows(w, h, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            let (x, y) = config.pixel_to_plane(u as f64, v as f64);
            *out = config.free_height(x, y, pressure);
        }
    });
    Grid::from_vec(w, h, data).expect("sized by construction")
}

/// Unloaded membrane at `pressure`.
pub fn inflate_shape(config: &BubbleConfig, pressure: f64) -> Result<MembraneState, SimError> {
    config.validate()?;
    BubbleConfig::check_pressure(pressure)?;
    let stretch = 1.0 + config.marker_stretch * (pressure - config.rest_pressure);
    let markers = sample_markers(config)?
        .into_iter()
        .map(|[x, y]| Marker { anchor: [x * stretch, y * stretch], displacement: [0.0, 0.0], surface: [0.0; 3] })
        .collect();
    let mut state = MembraneState {
        config: *config,
        pressure,
        height_field: free_field(config, pressure),
        contact_set: ContactMask::empty(config.image_width, config.image_height),
        markers,
        object: None,
        grasp_width: None,
        object_shear_offset: [0.0, 0.0],
    };
    state.refresh_marker_surfaces();
    Ok(state)
}

/// Indentation profile: the membrane follows the object where the free shape
/// overlaps it by at least `lift`, and blends back to the free shape over an
/// overlap band of `[-lift, lift]`. The blend is C¹ and never undercuts the
/// object surface. An object that overlaps the free shape by less than
/// `lift` dimples the membrane without making contact.
fn indentation(overlap: f64, lift: f64) -> f64 {
    if lift <= 0.0 {
        overlap.max(0.0)
    } else if overlap >= lift {
        overlap
    } else if overlap <= -lift {
        0.0
    } else {
        (overlap + lift).powi(2) / (4.0 * lift)
    }
}

/// Grasps `object` with the jaws held at `width`, replacing any previous object.
pub fn press_at_width(state: &MembraneState, object: &ObjectPrimitive, width: f64) -> Result<MembraneState, SimError> {
    object.validate()?;
    let config = &state.config;
    if !(0.0..=config.max_jaw_width).contains(&width) {
        return Err(SimError::Width(width));
    }
    let mut placed = *object;
    placed.pose.z = config.rest_apex_height - 0.5 * (object.thickness() - width);

    let free = free_field(config, state.pressure);
    let (w, h) = free.dims();
    let surface: Vec<f64> = par::build_rows(w, h, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            let (x, y) = config.pixel_to_plane(u as f64, v as f64);
            *out = placed.surface_height(x, y);
        }
    });
    let max_overlap = free
        .as_slice()
        .iter()
        .zip(&surface)
        .map(|(f, s)| f - s)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut next = state.clone();
    next.object = Some(placed);
    next.grasp_width = Some(width);
    next.object_shear_offset = [0.0, 0.0];
    for m in &mut next.markers {
        m.displacement = [0.0, 0.0];
    }

    let lift = config.contact_lift;
    if max_overlap <= 0.0 && max_overlap <= -lift {
        next.height_field = free;
        next.contact_set = ContactMask::empty(w, h);
    } else {
        let mut heights = free.into_vec();
        let mut contact = vec![false; w * h];
        for i in 0..heights.len() {
            let overlap = heights[i] - surface[i];
            let touching = if lift > 0.0 { overlap >= lift } else { overlap > 0.0 };
            if touching {
                if surface[i] <= 0.0 {
                    return Err(SimError::BottomedOut);
                }
                heights[i] = surface[i];
                contact[i] = true;
            } else {
                heights[i] -= indentation(overlap, lift);
            }
        }
        next.height_field = Grid::from_vec(w, h, heights).expect("sized");
        next.contact_set = ContactMask::new(Grid::from_vec(w, h, contact).expect("sized"));
    }
    next.refresh_marker_surfaces();
    Ok(next)
}

/// Grasps `object` with `grasp_force`: the jaw width is solved from the force
/// model and clamped to the gripper range, so thin objects may end up held
/// with less than the requested force at a closed gripper.
pub fn press_object(state: &MembraneState, object: &ObjectPrimitive, grasp_force: f64) -> Result<MembraneState, SimError> {
    if !(grasp_force > 0.0 && grasp_force.is_finite()) {
        return Err(SimError::Force(grasp_force));
    }
    let config = &state.config;
    let width = jaw_width_for_force(config, state.pressure, object.thickness(), grasp_force)
        .clamp(0.0, config.max_jaw_width);
    press_at_width(state, object, width)
}

/// Boundary pixels of the contact set in base-plane millimetres.
fn contact_boundary(state: &MembraneState) -> Vec<[f64; 2]> {
    let mask = &state.contact_set.values;
    let (w, h) = mask.dims();
    let mut out = Vec::new();
    for v in 0..h {
        for u in 0..w {
            if !*mask.get(u, v) {
                continue;
            }
            let edge = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(du, dv)| {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                nu >= 0 && nv >= 0 && (nu as usize) < w && (nv as usize) < h && !*mask.get(nu as usize, nv as usize)
            });
            if edge {
                let (x, y) = state.config.pixel_to_plane(u as f64, v as f64);
                out.push([x, y]);
            }
        }
    }
    out
}

fn decay_from(boundary: &[[f64; 2]], config: &BubbleConfig, p: [f64; 2]) -> f64 {
    let dc = boundary
        .iter()
        .map(|b| ((b[0] - p[0]).powi(2) + (b[1] - p[1]).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    if !dc.is_finite() {
        return 1.0;
    }
    let dr = config.rim_distance(p[0], p[1]);
    if dc + dr <= 0.0 {
        return 0.0;
    }
    let t = dc / (dc + dr);
    0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

/// Fraction of the object's tangential displacement carried by the membrane
/// material at base-plane point `p`: 1 inside the contact patch, falling with
/// a cosine profile to 0 at the rim.
pub fn shear_decay(state: &MembraneState, p: [f64; 2]) -> f64 {
    if state.pixel_in_contact(p) {
        return 1.0;
    }
    decay_from(&contact_boundary(state), &state.config, p)
}

/// Drags the grasped object tangentially by `displacement` (millimetres). The
/// patch stays in stiction, so the contact set is unchanged and in-patch
/// markers move by exactly the accumulated object offset.
pub fn apply_shear(state: &MembraneState, displacement: [f64; 2]) -> Result<MembraneState, SimError> {
    if state.contact_set.is_empty() {
        return Err(SimError::NoContact);
    }
    if displacement == [0.0, 0.0] {
        return Ok(state.clone());
    }
    let mut next = state.clone();
    next.object_shear_offset = [
        state.object_shear_offset[0] + displacement[0],
        state.object_shear_offset[1] + displacement[1],
    ];
    let offset = next.object_shear_offset;
    let boundary = contact_boundary(state);
    let mut markers = std::mem::take(&mut next.markers);
    for m in &mut markers {
        let f = if state.pixel_in_contact(m.anchor) {
            1.0
        } else {
            decay_from(&boundary, &state.config, m.anchor)
        };
        m.displacement = if f == 1.0 { offset } else { [f * offset[0], f * offset[1]] };
    }
    next.markers = markers;
    next.refresh_marker_surfaces();
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mug() -> ObjectPrimitive {
        ObjectPrimitive::cylinder(22.0)
    }

    #[test]
    fn indentation_is_c1_and_never_undercuts() {
        let lift = 1.5;
        for i in -400..400 {
            let o = i as f64 * 0.01;
            assert!(indentation(o, lift) >= o - 1e-12);
        }
        let eps = 1e-7;
        let slope = (indentation(lift, lift) - indentation(lift - eps, lift)) / eps;
        assert!((slope - 1.0).abs() < 1e-5);
        assert_eq!(indentation(-lift, lift), 0.0);
        assert_eq!(indentation(0.3, 0.0), 0.3);
    }

    #[test]
    fn press_rejects_bad_force_and_width() {
        let s = inflate_shape(&BubbleConfig::default(), 1050.0).unwrap();
        assert_eq!(press_object(&s, &mug(), 0.0), Err(SimError::Force(0.0)));
        assert!(press_at_width(&s, &mug(), 70.0).is_err());
    }

    #[test]
    fn contact_pixels_sit_on_the_object() {
        let s = inflate_shape(&BubbleConfig::default(), 1050.0).unwrap();
        let p = press_object(&s, &mug(), 25.0).unwrap();
        let obj = p.object.unwrap();
        assert!(!p.contact_set.is_empty());
        for v in 0..171 {
            for u in 0..224 {
                let (x, y) = p.config.pixel_to_plane(u as f64, v as f64);
                let z = obj.surface_height(x, y);
                let hgt = *p.height_field.get(u, v);
                if *p.contact_set.values.get(u, v) {
                    assert_eq!(hgt, z);
                } else {
                    assert!(hgt <= z + 1e-6);
                }
                assert!(hgt > 0.0);
            }
        }
    }

    #[test]
    fn shear_on_free_membrane_is_an_error() {
        let s = inflate_shape(&BubbleConfig::default(), 1050.0).unwrap();
        assert_eq!(apply_shear(&s, [1.0, 0.0]), Err(SimError::NoContact));
    }
}
