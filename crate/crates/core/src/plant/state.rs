//! State, input and tire-output containers for the nonlinear plant.

use core::ops::{Add, Mul};

/// Number of entries in [`PlantState`] when flattened.
pub const STATE_LEN: usize = 24;

/// Number of control-oriented states (body, suspension and unsprung masses).
pub const CONTROL_STATE_LEN: usize = 17;

/// Steering saturation, rad (30°).
pub const MAX_STEER: f64 = 30.0 * core::f64::consts::PI / 180.0;
/// Wheel torque saturation, N·m.
pub const MAX_TORQUE: f64 = 1500.0;
/// Active suspension force saturation, N.
pub const MAX_SUSPENSION_FORCE: f64 = 5000.0;

/// Corner order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    FrontLeft = 0,
    FrontRight = 1,
    RearLeft = 2,
    RearRight = 3,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::FrontLeft,
        Corner::FrontRight,
        Corner::RearLeft,
        Corner::RearRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_front(self) -> bool {
        matches!(self, Corner::FrontLeft | Corner::FrontRight)
    }

    pub fn is_left(self) -> bool {
        matches!(self, Corner::FrontLeft | Corner::RearLeft)
    }

    /// Same axle, other side.
    pub fn mirrored(self) -> Corner {
        match self {
            Corner::FrontLeft => Corner::FrontRight,
            Corner::FrontRight => Corner::FrontLeft,
            Corner::RearLeft => Corner::RearRight,
            Corner::RearRight => Corner::RearLeft,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Corner::FrontLeft => "fl",
            Corner::FrontRight => "fr",
            Corner::RearLeft => "rl",
            Corner::RearRight => "rr",
        }
    }
}

/// Full plant state.
///
/// The first 17 entries of [`PlantState::to_array`] follow the control-oriented
/// ordering `[Vx, Vy, r, z, ż, φ, φ̇, θ, θ̇, z_ufl, ż_ufl, …, z_urr, ż_urr]`,
/// followed by the four wheel speeds and the inertial pose `(X, Y, ψ)`.
/// The same type doubles as the time derivative of a state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub heave: f64,
    pub heave_rate: f64,
    pub roll: f64,
    pub roll_rate: f64,
    pub pitch: f64,
    pub pitch_rate: f64,
    pub unsprung: [f64; 4],
    pub unsprung_rate: [f64; 4],
    pub wheel_speed: [f64; 4],
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl PlantState {
    /// Straight-line rolling at `vx` with zero wheel slip and all vertical
    /// deviations at zero.
    pub fn cruising(vx: f64, r_w: f64) -> Self {
        Self {
            vx,
            wheel_speed: [vx / r_w; 4],
            ..Default::default()
        }
    }

    pub fn to_array(&self) -> [f64; STATE_LEN] {
        let mut out = [0.0; STATE_LEN];
        out[0] = self.vx;
        out[1] = self.vy;
        out[2] = self.yaw_rate;
        out[3] = self.heave;
        out[4] = self.heave_rate;
        out[5] = self.roll;
        out[6] = self.roll_rate;
        out[7] = self.pitch;
        out[8] = self.pitch_rate;
        for i in 0..4 {
            out[9 + 2 * i] = self.unsprung[i];
            out[10 + 2 * i] = self.unsprung_rate[i];
            out[17 + i] = self.wheel_speed[i];
        }
        out[21] = self.x;
        out[22] = self.y;
        out[23] = self.yaw;
        out
    }

    pub fn from_array(v: &[f64; STATE_LEN]) -> Self {
        let mut s = Self {
            vx: v[0],
            vy: v[1],
            yaw_rate: v[2],
            heave: v[3],
            heave_rate: v[4],
            roll: v[5],
            roll_rate: v[6],
            pitch: v[7],
            pitch_rate: v[8],
            x: v[21],
            y: v[22],
            yaw: v[23],
            ..Default::default()
        };
        for i in 0..4 {
            s.unsprung[i] = v[9 + 2 * i];
            s.unsprung_rate[i] = v[10 + 2 * i];
            s.wheel_speed[i] = v[17 + i];
        }
        s
    }

    /// The 17 control-oriented entries.
    pub fn control_states(&self) -> [f64; CONTROL_STATE_LEN] {
        let full = self.to_array();
        let mut out = [0.0; CONTROL_STATE_LEN];
        out.copy_from_slice(&full[..CONTROL_STATE_LEN]);
        out
    }

    /// Replaces the 17 control-oriented entries, keeping wheel speeds and pose.
    pub fn with_control_states(&self, x: &[f64; CONTROL_STATE_LEN]) -> Self {
        let mut full = self.to_array();
        full[..CONTROL_STATE_LEN].copy_from_slice(x);
        Self::from_array(&full)
    }

    /// Vehicle side-slip angle `atan2(Vy, Vx)`.
    pub fn side_slip(&self) -> f64 {
        libm::atan2(self.vy, self.vx)
    }

    /// First entry whose magnitude is non-finite or above `bound`.
    pub fn first_divergent(&self, bound: f64) -> Option<(usize, f64)> {
        self.to_array()
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > bound)
            .map(|(i, v)| (i, *v))
    }

    /// Left/right mirror image: lateral quantities and roll change sign,
    /// corners swap sides.
    pub fn mirrored(&self) -> Self {
        let swap = |a: [f64; 4]| [a[1], a[0], a[3], a[2]];
        Self {
            vy: -self.vy,
            yaw_rate: -self.yaw_rate,
            roll: -self.roll,
            roll_rate: -self.roll_rate,
            unsprung: swap(self.unsprung),
            unsprung_rate: swap(self.unsprung_rate),
            wheel_speed: swap(self.wheel_speed),
            y: -self.y,
            yaw: -self.yaw,
            ..*self
        }
    }
}

impl Add for PlantState {
    type Output = PlantState;

    fn add(self, rhs: PlantState) -> PlantState {
        let a = self.to_array();
        let b = rhs.to_array();
        let mut out = [0.0; STATE_LEN];
        for i in 0..STATE_LEN {
            out[i] = a[i] + b[i];
        }
        PlantState::from_array(&out)
    }
}

impl Mul<f64> for PlantState {
    type Output = PlantState;

    fn mul(self, k: f64) -> PlantState {
        let mut a = self.to_array();
        a.iter_mut().for_each(|v| *v *= k);
        PlantState::from_array(&a)
    }
}

/// The 12-entry actuator vector
/// `[δ_fl, δ_fr, δ_rl, δ_rr, T_fl, T_fr, T_rl, T_rr, f_zfl, f_zfr, f_zrl, f_zrr]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorVector(pub [f64; 12]);

impl ActuatorVector {
    pub const LEN: usize = 12;

    pub fn new(steer: [f64; 4], torque: [f64; 4], suspension: [f64; 4]) -> Self {
        let mut u = [0.0; 12];
        u[..4].copy_from_slice(&steer);
        u[4..8].copy_from_slice(&torque);
        u[8..].copy_from_slice(&suspension);
        Self(u)
    }

    pub fn steer(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn torque(&self) -> [f64; 4] {
        [self.0[4], self.0[5], self.0[6], self.0[7]]
    }

    pub fn suspension(&self) -> [f64; 4] {
        [self.0[8], self.0[9], self.0[10], self.0[11]]
    }

    /// Clamps every entry to its actuator limit.
    pub fn saturated(&self) -> Self {
        let mut u = self.0;
        for (i, v) in u.iter_mut().enumerate() {
            let limit = match i {
                0..=3 => MAX_STEER,
                4..=7 => MAX_TORQUE,
                _ => MAX_SUSPENSION_FORCE,
            };
            *v = v.clamp(-limit, limit);
        }
        Self(u)
    }

    pub fn mirrored(&self) -> Self {
        let u = &self.0;
        let mut m = [0.0; 12];
        for group in 0..3 {
            let o = 4 * group;
            let sign = if group == 0 { -1.0 } else { 1.0 };
            m[o] = sign * u[o + 1];
            m[o + 1] = sign * u[o];
            m[o + 2] = sign * u[o + 3];
            m[o + 3] = sign * u[o + 2];
        }
        Self(m)
    }
}

/// Everything the plant receives besides its state. Constructing through
/// [`PlantInputs::new`] applies the actuator saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantInputs {
    pub actuators: ActuatorVector,
    /// Friction brake torques, N·m, non-negative.
    pub brake_torque: [f64; 4],
    /// Road elevation under each tire, m.
    pub road_elevation: [f64; 4],
    /// Longitudinal road slope, rad.
    pub road_slope: f64,
    /// Per-tire multiplier on the lateral friction peak.
    pub lateral_friction: [f64; 4],
}

impl Default for PlantInputs {
    fn default() -> Self {
        Self {
            actuators: ActuatorVector::default(),
            brake_torque: [0.0; 4],
            road_elevation: [0.0; 4],
            road_slope: 0.0,
            lateral_friction: [1.0; 4],
        }
    }
}

impl PlantInputs {
    pub fn new(actuators: ActuatorVector) -> Self {
        Self {
            actuators: actuators.saturated(),
            ..Default::default()
        }
    }

    pub fn with_brakes(mut self, brake_torque: [f64; 4]) -> Self {
        self.brake_torque = brake_torque.map(|t| t.max(0.0));
        self
    }

    pub fn with_road(mut self, elevation: [f64; 4], slope: f64) -> Self {
        self.road_elevation = elevation;
        self.road_slope = slope;
        self
    }

    pub fn with_lateral_friction(mut self, scale: [f64; 4]) -> Self {
        self.lateral_friction = scale;
        self
    }

    pub fn mirrored(&self) -> Self {
        let swap = |a: [f64; 4]| [a[1], a[0], a[3], a[2]];
        Self {
            actuators: self.actuators.mirrored(),
            brake_torque: swap(self.brake_torque),
            road_elevation: swap(self.road_elevation),
            road_slope: self.road_slope,
            lateral_friction: swap(self.lateral_friction),
        }
    }
}

/// Force-generation results for one tire.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TireOutputs {
    /// Longitudinal slip ratio.
    pub slip_ratio: f64,
    /// Slip angle, rad.
    pub slip_angle: f64,
    /// Tire-frame longitudinal force, N.
    pub fx: f64,
    /// Tire-frame lateral force, N.
    pub fy: f64,
    /// Normal force, N.
    pub normal: f64,
    /// Rolling resistance torque, N·m.
    pub rolling: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_layout_round_trips() {
        let mut v = [0.0; STATE_LEN];
        for (i, e) in v.iter_mut().enumerate() {
            *e = i as f64 + 0.5;
        }
        let s = PlantState::from_array(&v);
        assert_eq!(s.to_array(), v);
        assert_eq!(s.unsprung[1], 11.5);
        assert_eq!(s.unsprung_rate[1], 12.5);
        assert_eq!(s.wheel_speed[3], 20.5);
    }

    #[test]
    fn saturation_limits() {
        let u = ActuatorVector([1.0, -1.0, 0.1, 0.0, 2000.0, -2000.0, 10.0, 0.0, 6000.0, -6000.0, 1.0, 0.0]);
        let s = PlantInputs::new(u).actuators;
        assert!((s.0[0] - MAX_STEER).abs() < 1e-15);
        assert!((s.0[1] + MAX_STEER).abs() < 1e-15);
        assert_eq!(s.0[2], 0.1);
        assert_eq!(s.0[4], 1500.0);
        assert_eq!(s.0[5], -1500.0);
        assert_eq!(s.0[8], 5000.0);
        assert_eq!(s.0[9], -5000.0);
    }

    #[test]
    fn mirror_is_involution() {
        let u = ActuatorVector::new([0.1, 0.2, 0.3, 0.4], [1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0]);
        assert_eq!(u.mirrored().mirrored(), u);
        assert_eq!(u.mirrored().steer(), [-0.2, -0.1, -0.4, -0.3]);
    }
}
