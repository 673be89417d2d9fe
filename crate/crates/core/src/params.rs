//! Vehicle constants.

/// Gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;

/// Magic Formula shape coefficients for one force channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicCoeffs {
    /// Stiffness factor.
    pub b: f64,
    /// Shape factor.
    pub c: f64,
    /// Curvature factor.
    pub e: f64,
}

/// Parameters of the 14-DOF vehicle model.
///
/// Lengths in m, masses in kg, inertias in kg·m², stiffnesses in N/m and
/// damping in N·s/m. Defaults reproduce the reference mid-size passenger car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// CoG height.
    pub h: f64,
    /// Front axle to CoG.
    pub a: f64,
    /// Rear axle to CoG.
    pub b: f64,
    /// Track width.
    pub w: f64,
    pub m: f64,
    pub i_x: f64,
    pub i_y: f64,
    pub i_z: f64,
    /// Wheel spin inertia.
    pub i_w: f64,
    /// Wheel radius.
    pub r_w: f64,
    pub m_uf: f64,
    pub m_ur: f64,
    /// Tire vertical stiffness, front.
    pub k_uf: f64,
    /// Tire vertical stiffness, rear.
    pub k_ur: f64,
    pub k_sf: f64,
    pub c_sf: f64,
    pub k_sr: f64,
    pub c_sr: f64,
    /// Frontal area, m².
    pub a_f: f64,
    /// Drag coefficient.
    pub c_d: f64,
    /// Air density, kg/m³.
    pub rho: f64,
    /// Rolling resistance coefficients.
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// Longitudinal Magic Formula coefficients.
    pub long: MagicCoeffs,
    /// Lateral Magic Formula coefficients.
    pub lat: MagicCoeffs,
    /// Peak friction: the Magic Formula peak is `mu * N`.
    pub mu: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            h: 0.375,
            a: 1.125,
            b: 1.375,
            w: 1.6,
            m: 1300.0,
            i_x: 250.0,
            i_y: 1000.0,
            i_z: 1300.0,
            i_w: 2.7,
            r_w: 0.33,
            m_uf: 30.0,
            m_ur: 30.0,
            k_uf: 2.0e5,
            k_ur: 2.0e5,
            k_sf: 21.0e3,
            c_sf: 1000.0,
            k_sr: 21.0e3,
            c_sr: 1500.0,
            a_f: 2.2,
            c_d: 0.3,
            rho: 1.225,
            p0: 0.009,
            p1: 0.002,
            p2: 0.0003,
            long: MagicCoeffs { b: 10.0, c: 1.9, e: 0.97 },
            lat: MagicCoeffs { b: 8.5, c: 1.3, e: -1.2 },
            mu: 1.0,
        }
    }
}

impl VehicleParams {
    /// Wheelbase `a + b`.
    pub fn wheelbase(&self) -> f64 {
        self.a + self.b
    }

    pub fn weight(&self) -> f64 {
        self.m * GRAVITY
    }

    /// Front hub angle `atan(w / 2a)`.
    pub fn front_hub_angle(&self) -> f64 {
        libm::atan(self.w / (2.0 * self.a))
    }

    /// Rear hub angle `atan(w / 2b)`.
    pub fn rear_hub_angle(&self) -> f64 {
        libm::atan(self.w / (2.0 * self.b))
    }

    /// Static wheel loads from the weight split, in corner order.
    pub fn static_loads(&self) -> [f64; 4] {
        let front = self.weight() * self.b / (2.0 * self.wheelbase());
        let rear = self.weight() * self.a / (2.0 * self.wheelbase());
        [front, front, rear, rear]
    }

    /// Aerodynamic drag at longitudinal speed `vx`, signed against motion.
    pub fn drag(&self, vx: f64) -> f64 {
        0.5 * self.c_d * self.rho * self.a_f * vx * vx.abs()
    }

    /// Checks the physical-positivity invariants.
    pub fn validate(&self) -> Result<(), crate::Error> {
        let positive = [
            ("h", self.h),
            ("a", self.a),
            ("b", self.b),
            ("w", self.w),
            ("m", self.m),
            ("i_x", self.i_x),
            ("i_y", self.i_y),
            ("i_z", self.i_z),
            ("i_w", self.i_w),
            ("r_w", self.r_w),
            ("m_uf", self.m_uf),
            ("m_ur", self.m_ur),
            ("k_uf", self.k_uf),
            ("k_ur", self.k_ur),
            ("k_sf", self.k_sf),
            ("k_sr", self.k_sr),
            ("mu", self.mu),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(crate::Error::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("c_sf", self.c_sf), ("c_sr", self.c_sr)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(crate::Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    // Per-corner lookups, corner order fl, fr, rl, rr.

    pub(crate) fn corner_x(&self, corner: usize) -> f64 {
        if corner < 2 {
            self.a
        } else {
            -self.b
        }
    }

    pub(crate) fn corner_y(&self, corner: usize) -> f64 {
        if corner % 2 == 0 {
            0.5 * self.w
        } else {
            -0.5 * self.w
        }
    }

    pub(crate) fn spring(&self, corner: usize) -> f64 {
        if corner < 2 {
            self.k_sf
        } else {
            self.k_sr
        }
    }

    pub(crate) fn damper(&self, corner: usize) -> f64 {
        if corner < 2 {
            self.c_sf
        } else {
            self.c_sr
        }
    }

    pub(crate) fn tire_spring(&self, corner: usize) -> f64 {
        if corner < 2 {
            self.k_uf
        } else {
            self.k_ur
        }
    }

    pub(crate) fn unsprung_mass(&self, corner: usize) -> f64 {
        if corner < 2 {
            self.m_uf
        } else {
            self.m_ur
        }
    }
}
