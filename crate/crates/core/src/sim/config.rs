use super::SimError;

/// Lowest commanded bubble pressure, hPa.
pub const PRESSURE_MIN: f64 = 1010.0;
/// Highest commanded bubble pressure, hPa.
pub const PRESSURE_MAX: f64 = 1090.0;

/// Geometry, marker pattern, camera and grasp-stiffness parameters of one bubble.
///
/// Lengths are millimetres, pressures hPa, forces newtons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleConfig {
    pub semi_axis_major: f64,
    pub semi_axis_minor: f64,
    pub rest_pressure: f64,
    pub rest_apex_height: f64,
    /// Linear apex lift per hPa away from rest pressure.
    pub geometry_gain: f64,
    /// Quadratic apex lift per hPa².
    pub geometry_quad: f64,
    /// Superellipse exponent of the rest cap profile; 2 is an ellipsoid.
    pub profile_exponent: f64,
    /// Normalised radius where the pressure lift starts tapering to the rim.
    pub rim_taper_start: f64,
    pub marker_count: usize,
    pub marker_seed: u64,
    /// Gaussian radius of a marker splat, pixels.
    pub marker_sigma_px: f64,
    /// Minimum distance between marker centres, pixels.
    pub marker_spacing_px: f64,
    /// Radial in-plane stretch of the printed pattern per hPa.
    pub marker_stretch: f64,
    pub image_width: usize,
    pub image_height: usize,
    /// Millimetres per pixel on the base plane.
    pub pixel_pitch: f64,
    /// Distance from the camera to the base plane.
    pub camera_standoff: f64,
    /// Width of the band where the membrane lifts off an indenting object.
    pub contact_lift: f64,
    /// Grasp stiffness of the bubble pair at rest pressure, N/mm.
    pub contact_stiffness: f64,
    /// Quadratic grasp-force residual, N/hPa².
    pub force_quad: f64,
    /// Gripper jaw compliance, N/mm.
    pub jaw_stiffness: f64,
    pub max_jaw_width: f64,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        Self {
            semi_axis_major: 48.0,
            semi_axis_minor: 36.0,
            rest_pressure: 1050.0,
            rest_apex_height: 30.0,
            geometry_gain: 0.08,
            geometry_quad: 1.3e-4,
            profile_exponent: 2.0,
            rim_taper_start: 0.9,
            marker_count: 900,
            marker_seed: 7,
            marker_sigma_px: 0.9,
            marker_spacing_px: 4.0,
            marker_stretch: 4e-4,
            image_width: 224,
            image_height: 171,
            pixel_pitch: 0.25,
            camera_standoff: 20.0,
            contact_lift: 1.5,
            contact_stiffness: 1.25,
            force_quad: -0.00127,
            jaw_stiffness: 1.0e4,
            max_jaw_width: 66.0,
        }
    }
}

impl BubbleConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.semi_axis_minor > 0.0 && self.semi_axis_major >= self.semi_axis_minor) {
            return fail("semi axes must satisfy major >= minor > 0");
        }
        if !(self.rest_apex_height > 0.0) {
            return fail("rest apex height must be positive");
        }
        if !(PRESSURE_MIN..=PRESSURE_MAX).contains(&self.rest_pressure) {
            return fail("rest pressure outside the operating band");
        }
        if self.marker_count == 0 {
            return fail("marker count must be positive");
        }
        if self.image_width < 8 || self.image_height < 8 || !(self.pixel_pitch > 0.0) {
            return fail("image must be at least 8x8 with positive pitch");
        }
        if !(self.profile_exponent >= 1.0) || !(0.0..1.0).contains(&self.rim_taper_start) {
            return fail("profile exponent must be >= 1 and taper start in [0, 1)");
        }
        if !(self.contact_lift >= 0.0 && self.contact_stiffness > 0.0 && self.jaw_stiffness > 0.0) {
            return fail("contact lift, contact stiffness and jaw stiffness must be non-negative/positive");
        }
        if !(self.camera_standoff > 0.0 && self.marker_sigma_px > 0.0) {
            return fail("camera standoff and marker size must be positive");
        }
        let (hx, hy) = self.half_extent();
        let corner = ((hx / self.semi_axis_major).powi(2) + (hy / self.semi_axis_minor).powi(2)).sqrt();
        if corner >= self.rim_taper_start {
            return fail("camera field of view must lie inside the untapered membrane");
        }
        for p in [PRESSURE_MIN, PRESSURE_MAX] {
            let lowest = self.rest_apex_height * self.cap_profile(corner) + self.apex_offset(p);
            if lowest <= 0.0 {
                return fail("membrane would touch the base plate inside the field of view");
            }
        }
        Ok(())
    }

    pub fn check_pressure(p: f64) -> Result<(), SimError> {
        if (PRESSURE_MIN..=PRESSURE_MAX).contains(&p) {
            Ok(())
        } else {
            Err(SimError::PressureOutOfBand(p))
        }
    }

    /// Half width and height of the field of view on the base plane.
    pub fn half_extent(&self) -> (f64, f64) {
        (
            0.5 * self.image_width as f64 * self.pixel_pitch,
            0.5 * self.image_height as f64 * self.pixel_pitch,
        )
    }

    /// Apex lift relative to rest pressure.
    pub fn apex_offset(&self, pressure: f64) -> f64 {
        let dp = pressure - self.rest_pressure;
        self.geometry_gain * dp + self.geometry_quad * dp * dp
    }

    pub fn apex_height(&self, pressure: f64) -> f64 {
        self.rest_apex_height + self.apex_offset(pressure)
    }

    pub fn normalized_radius(&self, x: f64, y: f64) -> f64 {
        ((x / self.semi_axis_major).powi(2) + (y / self.semi_axis_minor).powi(2)).sqrt()
    }

    pub fn cap_profile(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            return 0.0;
        }
        let n = self.profile_exponent;
        (1.0 - rho.powf(n)).powf(1.0 / n)
    }

    /// Share of the apex lift that reaches normalised radius `rho`.
    pub fn lift_weight(&self, rho: f64) -> f64 {
        let t0 = self.rim_taper_start;
        if rho <= t0 {
            1.0
        } else if rho >= 1.0 {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (rho - t0) / (1.0 - t0)).cos())
        }
    }

    /// Unloaded membrane height above the base plane.
    pub fn free_height(&self, x: f64, y: f64, pressure: f64) -> f64 {
        let rho = self.normalized_radius(x, y);
        self.rest_apex_height * self.cap_profile(rho) + self.apex_offset(pressure) * self.lift_weight(rho)
    }

    /// Base-plane coordinates of a pixel centre.
    pub fn pixel_to_plane(&self, u: f64, v: f64) -> (f64, f64) {
        (
            (u + 0.5 - 0.5 * self.image_width as f64) * self.pixel_pitch,
            (v + 0.5 - 0.5 * self.image_height as f64) * self.pixel_pitch,
        )
    }

    pub fn plane_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            x / self.pixel_pitch + 0.5 * self.image_width as f64 - 0.5,
            y / self.pixel_pitch + 0.5 * self.image_height as f64 - 0.5,
        )
    }

    /// Distance along the ray from the base centre through `(x, y)` to the rim.
    pub fn rim_distance(&self, x: f64, y: f64) -> f64 {
        let rho = self.normalized_radius(x, y);
        if rho < 1e-9 {
            return self.semi_axis_minor;
        }
        ((x * x + y * y).sqrt() * (1.0 / rho - 1.0)).max(0.0)
    }
}
