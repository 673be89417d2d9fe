//! Linearized time-varying vehicle model and the effectiveness factorization
//! `B_u(t) = B_v · B_l · B_n(t)` used by the allocator.
//!
//! Virtual channel order is `[F, F_y, M_z, M_x, M_y]`: traction force,
//! lateral force, yaw, roll and pitch moment.

use libm::cos;
use nalgebra::{SMatrix, SVector};

use crate::params::VehicleParams;
use crate::plant::{quasi_static_derivative, ActuatorVector, PlantInputs, PlantState, CONTROL_STATE_LEN};
use crate::{Error, Result};

pub type StateMatrix = SMatrix<f64, CONTROL_STATE_LEN, CONTROL_STATE_LEN>;
pub type InputMatrix = SMatrix<f64, CONTROL_STATE_LEN, 12>;
pub type VirtualInputMatrix = SMatrix<f64, CONTROL_STATE_LEN, 5>;
pub type EffectivenessMatrix = SMatrix<f64, 5, 12>;

/// Linearized cornering gain per unit normal load, 1/rad.
pub const DEFAULT_CORNERING_GAIN: f64 = 8.0;

/// Row indices of the control-oriented state.
pub mod row {
    pub const VX: usize = 0;
    pub const VY: usize = 1;
    pub const YAW_RATE: usize = 2;
    pub const HEAVE: usize = 3;
    pub const HEAVE_RATE: usize = 4;
    pub const ROLL: usize = 5;
    pub const ROLL_RATE: usize = 6;
    pub const PITCH: usize = 7;
    pub const PITCH_RATE: usize = 8;
    /// First unsprung-mass row; the eight unsprung rows follow it.
    pub const UNSPRUNG: usize = 9;
}

/// `ẋ ≈ A x + B_u u + D` about a straight-driving operating point, in
/// deviation coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: StateMatrix,
    pub b_u: InputMatrix,
    pub d: SVector<f64, CONTROL_STATE_LEN>,
    pub speed: f64,
    pub steer: [f64; 4],
    pub normals: [f64; 4],
    /// Wheel torques holding the operating point against rolling resistance.
    pub trim_torque: [f64; 4],
}

/// Operating point used by [`linearize`].
pub fn operating_point(params: &VehicleParams, speed: f64) -> ([f64; CONTROL_STATE_LEN], PlantInputs) {
    let x0 = PlantState::cruising(speed, params.r_w).control_states();
    let trim = params
        .static_loads()
        .map(|n| crate::plant::rolling_resistance(n, speed, params.p0, params.p1, params.p2));
    let u0 = PlantInputs::new(ActuatorVector::new([0.0; 4], trim, [0.0; 4]));
    (x0, u0)
}

fn central_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Linearizes the quasi-static plant at straight driving with speed `speed`.
///
/// `A` and `B_u` come from central differences; `D` is the drift at the
/// operating point. Heave and unsprung rows of `B_u` are zeroed so the
/// actuators act as pure force and moment generators.
pub fn linearize(params: &VehicleParams, speed: f64) -> Result<LinearModel> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::InvalidOperatingPoint(speed));
    }
    let (x0, u0) = operating_point(params, speed);
    let f = |x: &[f64; CONTROL_STATE_LEN], u: &PlantInputs| quasi_static_derivative(x, u, params);

    let mut a = StateMatrix::zeros();
    for j in 0..CONTROL_STATE_LEN {
        let h = central_step(x0[j]);
        let (mut xp, mut xm) = (x0, x0);
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp, &u0), f(&xm, &u0));
        for i in 0..CONTROL_STATE_LEN {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }

    let mut b_u = InputMatrix::zeros();
    for j in 0..12 {
        let h = central_step(u0.actuators.0[j]);
        let (mut up, mut um) = (u0, u0);
        up.actuators.0[j] += h;
        um.actuators.0[j] -= h;
        let (fp, fm) = (f(&x0, &up), f(&x0, &um));
        for i in 0..CONTROL_STATE_LEN {
            b_u[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    for i in [row::HEAVE, row::HEAVE_RATE].into_iter().chain(row::UNSPRUNG..CONTROL_STATE_LEN) {
        b_u.row_mut(i).fill(0.0);
    }

    let d = SVector::from(f(&x0, &u0));
    Ok(LinearModel {
        a,
        b_u,
        d,
        speed,
        steer: [0.0; 4],
        normals: params.static_loads(),
        trim_torque: u0.actuators.torque(),
    })
}

/// Time-varying effectiveness `B_y(t)` mapping actuators to virtual channels.
///
/// Moment-arm signs follow the yaw, pitch and roll equations of the plant
/// (left wheels yaw with `-w/2`, roll with `+w/2`).
pub fn build_by(normals: &[f64; 4], steer: &[f64; 4], params: &VehicleParams, c_alpha: f64) -> EffectivenessMatrix {
    let mut by = EffectivenessMatrix::zeros();
    for i in 0..4 {
        let c = cos(steer[i]);
        let x = params.corner_x(i);
        // Yaw arm of a forward force: +w/2 on the right side.
        let yaw_arm = -params.corner_y(i);
        by[(1, i)] = c_alpha * normals[i] * c;
        by[(2, i)] = c_alpha * x * normals[i] * c;
        by[(0, 4 + i)] = c / params.r_w;
        by[(2, 4 + i)] = yaw_arm * c;
        by[(3, 8 + i)] = params.corner_y(i);
        by[(4, 8 + i)] = -x;
    }
    by
}

/// Constant part `B_l` of the effectiveness factorization.
pub fn build_bl(params: &VehicleParams, c_alpha: f64) -> EffectivenessMatrix {
    let mut bl = EffectivenessMatrix::zeros();
    let lateral = c_alpha * params.m / 4.0;
    for i in 0..4 {
        let x = params.corner_x(i);
        bl[(1, i)] = lateral;
        bl[(2, i)] = x * lateral;
        bl[(0, 4 + i)] = 1.0 / params.r_w;
        bl[(2, 4 + i)] = -params.corner_y(i);
        bl[(3, 8 + i)] = params.corner_y(i);
        bl[(4, 8 + i)] = -x;
    }
    bl
}

/// Maps the five virtual channels onto the accelerations of
/// `(Vx, Vy, r, φ̇, θ̇)`.
pub fn build_bv(params: &VehicleParams) -> VirtualInputMatrix {
    let mut bv = VirtualInputMatrix::zeros();
    bv[(row::VX, 0)] = 1.0 / params.m;
    bv[(row::VY, 1)] = 1.0 / params.m;
    bv[(row::YAW_RATE, 2)] = 1.0 / params.i_z;
    bv[(row::ROLL_RATE, 3)] = 1.0 / params.i_x;
    bv[(row::PITCH_RATE, 4)] = 1.0 / params.i_y;
    bv
}

/// Aerodynamic disturbance vector at the linearization speed.
pub fn build_d(speed: f64, params: &VehicleParams) -> SVector<f64, 5> {
    let drag = speed * speed * params.rho * params.c_d * params.a_f / 2.0;
    SVector::from([drag, 0.0, 0.0, -drag, 0.0])
}

/// Diagonal time-varying part `B_n(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub diag: [f64; 12],
}

/// Entries smaller than this make `B_n` non-invertible.
pub const INVERTIBILITY_FLOOR: f64 = 1e-9;

impl Normalization {
    pub fn matrix(&self) -> SMatrix<f64, 12, 12> {
        SMatrix::from_diagonal(&SVector::from(self.diag))
    }

    pub fn is_invertible(&self) -> bool {
        self.first_singular().is_none()
    }

    fn first_singular(&self) -> Option<usize> {
        self.diag.iter().position(|d| !(d.abs() > INVERTIBILITY_FLOOR))
    }

    /// `B_n⁻¹ ū`.
    pub fn solve(&self, u_bar: &[f64; 12]) -> Result<[f64; 12]> {
        if let Some(index) = self.first_singular() {
            return Err(Error::NonInvertible { index });
        }
        Ok(core::array::from_fn(|i| u_bar[i] / self.diag[i]))
    }

    /// `B_n u`.
    pub fn apply(&self, u: &[f64; 12]) -> [f64; 12] {
        core::array::from_fn(|i| self.diag[i] * u[i])
    }
}

pub fn build_bn(steer: &[f64; 4], normals: &[f64; 4], params: &VehicleParams) -> Normalization {
    let mut diag = [1.0; 12];
    for i in 0..4 {
        let c = cos(steer[i]);
        diag[i] = 4.0 * normals[i] / params.m * c;
        diag[4 + i] = c;
    }
    Normalization { diag }
}

/// All pieces of the factorization at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub b_v: VirtualInputMatrix,
    pub b_l: EffectivenessMatrix,
    pub b_n: Normalization,
    pub d: SVector<f64, 5>,
}

impl Factorization {
    pub fn new(params: &VehicleParams, c_alpha: f64, speed: f64, steer: &[f64; 4], normals: &[f64; 4]) -> Self {
        Self {
            b_v: build_bv(params),
            b_l: build_bl(params, c_alpha),
            b_n: build_bn(steer, normals, params),
            d: build_d(speed, params),
        }
    }

    /// `B_y(t) = B_l B_n(t)`.
    pub fn b_y(&self) -> EffectivenessMatrix {
        self.b_l * self.b_n.matrix()
    }
}
