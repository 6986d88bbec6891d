use super::SimError;

/// Surface facing the membrane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Flat plate of the given thickness (its extent along the closing direction).
    Plane { thickness: f64 },
    /// Cylinder whose axis runs along the pose's local x axis.
    Cylinder { radius: f64 },
    Sphere { radius: f64 },
}

/// Rigid placement in the bubble frame: `(x, y)` offset and `yaw` about the
/// camera axis, and `z` the height of the object's nearest point above the
/// base plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectPrimitive {
    pub shape: Shape,
    pub pose: Pose,
}

impl ObjectPrimitive {
    pub fn plane(thickness: f64) -> Self {
        Self { shape: Shape::Plane { thickness }, pose: Pose::default() }
    }

    pub fn cylinder(radius: f64) -> Self {
        Self { shape: Shape::Cylinder { radius }, pose: Pose::default() }
    }

    pub fn sphere(radius: f64) -> Self {
        Self { shape: Shape::Sphere { radius }, pose: Pose::default() }
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.pose.x = x;
        self.pose.y = y;
        self
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.pose.yaw = yaw;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match self.shape {
            Shape::Plane { thickness } => thickness > 0.0,
            Shape::Cylinder { radius } | Shape::Sphere { radius } => radius > 0.0,
        };
        let finite = [self.pose.x, self.pose.y, self.pose.z, self.pose.yaw].iter().all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(SimError::Object(format!("{:?}", self.shape)))
        }
    }

    /// Extent between the two jaw-facing surfaces.
    pub fn thickness(&self) -> f64 {
        match self.shape {
            Shape::Plane { thickness } => thickness,
            Shape::Cylinder { radius } | Shape::Sphere { radius } => 2.0 * radius,
        }
    }

    /// Height of the object surface above base-plane point `(x, y)`;
    /// `+inf` where the object has no surface facing the membrane.
    pub fn surface_height(&self, x: f64, y: f64) -> f64 {
        let (s, c) = self.pose.yaw.sin_cos();
        let (dx, dy) = (x - self.pose.x, y - self.pose.y);
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let z = self.pose.z;
        match self.shape {
            Shape::Plane { .. } => z,
            Shape::Cylinder { radius } => cap(radius, ly * ly).map_or(f64::INFINITY, |h| z + h),
            Shape::Sphere { radius } => cap(radius, lx * lx + ly * ly).map_or(f64::INFINITY, |h| z + h),
        }
    }
}

fn cap(radius: f64, r2: f64) -> Option<f64> {
    let r2max = radius * radius;
    (r2 < r2max).then(|| radius - (r2max - r2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surfaces() {
        let mut o = ObjectPrimitive::cylinder(5.0);
        o.pose.z = 10.0;
        assert_eq!(o.surface_height(100.0, 0.0), 10.0);
        assert_eq!(o.surface_height(0.0, 3.0), 11.0);
        assert!(o.surface_height(0.0, 6.0).is_infinite());
        let o = o.with_yaw(std::f64::consts::FRAC_PI_2);
        assert_eq!(o.surface_height(3.0, 0.0), 11.0);
        let mut s = ObjectPrimitive::sphere(5.0).at(1.0, 1.0);
        s.pose.z = 2.0;
        assert_eq!(s.surface_height(1.0, 1.0), 2.0);
        assert!((s.surface_height(4.0, 5.0 - 1e-9) - 7.0).abs() < 1e-3);
        assert!(s.surface_height(4.0, 5.0).is_infinite());
        assert!(ObjectPrimitive::sphere(-1.0).validate().is_err());
        assert_eq!(ObjectPrimitive::plane(3.0).thickness(), 3.0);
    }
}
