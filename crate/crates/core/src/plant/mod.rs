//! Continuous-time 14-DOF vehicle model with Magic Formula tires and a
//! fixed-step RK4 integrator.
//!
//! Axes: x forward, y left, z up. Positive roll lifts the left side, positive
//! pitch lowers the nose.

pub mod body;
pub mod state;
pub mod tire;
pub mod vertical;

use libm::{cos, sin};

pub use body::{body_accelerations, wheel_spin_derivative, yaw_acceleration};
pub use state::{
    ActuatorVector, Corner, PlantInputs, PlantState, TireOutputs, CONTROL_STATE_LEN, MAX_STEER,
    MAX_SUSPENSION_FORCE, MAX_TORQUE, STATE_LEN,
};
pub use tire::{longitudinal_slip, magic_formula, rolling_resistance, slip_angles, wheel_frame_to_body};
pub use vertical::{normal_forces, tire_deflection_loads, vertical_derivatives, VerticalAccelerations};

use crate::params::VehicleParams;
use crate::{Error, Result};

/// Default blow-up bound on any state entry.
pub const DIVERGENCE_BOUND: f64 = 1.0e6;

/// Everything computed on the way to the state derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantOutputs {
    pub tires: [TireOutputs; 4],
    /// Body-frame longitudinal force per corner.
    pub body_fx: [f64; 4],
    /// Body-frame lateral force per corner.
    pub body_fy: [f64; 4],
    pub ax: f64,
    pub ay: f64,
    pub yaw_accel: f64,
    pub roll_accel: f64,
    pub pitch_accel: f64,
}

impl PlantOutputs {
    pub fn normals(&self) -> [f64; 4] {
        self.tires.map(|t| t.normal)
    }
}

// Smooth sign of wheel rotation so resistive torques vanish at standstill.
fn rotation_sign(omega: f64, r_w: f64) -> f64 {
    (omega * r_w / tire::SLIP_SPEED_FLOOR).clamp(-1.0, 1.0)
}

fn tire_outputs(state: &PlantState, inputs: &PlantInputs, params: &VehicleParams) -> [TireOutputs; 4] {
    let steer = inputs.actuators.steer();
    let normal = normal_forces(state, &inputs.road_elevation, params);
    let alpha = slip_angles(state, &steer, params);
    core::array::from_fn(|i| {
        let slip_ratio = longitudinal_slip(state.vx, state.wheel_speed[i], params.r_w);
        TireOutputs {
            slip_ratio,
            slip_angle: alpha[i],
            fx: magic_formula(slip_ratio, normal[i], &params.long, params.mu),
            fy: magic_formula(alpha[i], normal[i], &params.lat, params.mu * inputs.lateral_friction[i]),
            normal: normal[i],
            rolling: rolling_resistance(normal[i], state.vx, params.p0, params.p1, params.p2),
        }
    })
}

fn assemble(
    state: &PlantState,
    inputs: &PlantInputs,
    params: &VehicleParams,
    tires: [TireOutputs; 4],
    wheel_accel: [f64; 4],
) -> (PlantState, PlantOutputs) {
    let steer = inputs.actuators.steer();
    let mut body_fx = [0.0; 4];
    let mut body_fy = [0.0; 4];
    for i in 0..4 {
        let (fx, fy) = wheel_frame_to_body(tires[i].fx, tires[i].fy, steer[i]);
        body_fx[i] = fx;
        body_fy[i] = fy;
    }
    let (ax, ay) = body_accelerations(
        state.vx,
        body_fx.iter().sum(),
        body_fy.iter().sum(),
        params,
        inputs.road_slope,
    );
    let yaw_accel = yaw_acceleration(&body_fx, &body_fy, params);
    let vert = vertical_derivatives(
        state,
        &inputs.actuators.suspension(),
        ax,
        ay,
        &inputs.road_elevation,
        params,
    );
    let (sy, cy) = (sin(state.yaw), cos(state.yaw));
    let derivative = PlantState {
        // The body frame rotates with the vehicle.
        vx: ax + state.yaw_rate * state.vy,
        vy: ay - state.yaw_rate * state.vx,
        yaw_rate: yaw_accel,
        heave: state.heave_rate,
        heave_rate: vert.heave,
        roll: state.roll_rate,
        roll_rate: vert.roll,
        pitch: state.pitch_rate,
        pitch_rate: vert.pitch,
        unsprung: state.unsprung_rate,
        unsprung_rate: vert.unsprung,
        wheel_speed: wheel_accel,
        x: state.vx * cy - state.vy * sy,
        y: state.vx * sy + state.vy * cy,
        yaw: state.yaw_rate,
    };
    let outputs = PlantOutputs {
        tires,
        body_fx,
        body_fy,
        ax,
        ay,
        yaw_accel,
        roll_accel: vert.roll,
        pitch_accel: vert.pitch,
    };
    (derivative, outputs)
}

/// State derivative together with the intermediate tire and body quantities.
pub fn evaluate(state: &PlantState, inputs: &PlantInputs, params: &VehicleParams) -> (PlantState, PlantOutputs) {
    let tires = tire_outputs(state, inputs, params);
    let torque = inputs.actuators.torque();
    let wheel_accel = core::array::from_fn(|i| {
        let sign = rotation_sign(state.wheel_speed[i], params.r_w);
        wheel_spin_derivative(
            torque[i],
            inputs.brake_torque[i] * sign,
            tires[i].rolling * sign,
            tires[i].fx,
            params,
        )
    });
    assemble(state, inputs, params, tires, wheel_accel)
}

/// `ẋ = f(x, u)` for the full plant.
pub fn state_derivative(state: &PlantState, inputs: &PlantInputs, params: &VehicleParams) -> PlantState {
    evaluate(state, inputs, params).0
}

/// Derivative of the 17 control-oriented states with the wheel-spin modes
/// treated as instantaneous: each tire delivers `(T - T_b - T_r) / R_w` of
/// longitudinal force, limited by its friction peak.
pub fn quasi_static_derivative(
    x: &[f64; CONTROL_STATE_LEN],
    inputs: &PlantInputs,
    params: &VehicleParams,
) -> [f64; CONTROL_STATE_LEN] {
    let state = PlantState::cruising(x[0], params.r_w).with_control_states(x);
    let mut tires = tire_outputs(&state, inputs, params);
    let torque = inputs.actuators.torque();
    for (i, t) in tires.iter_mut().enumerate() {
        let limit = params.mu * t.normal;
        let drive = torque[i] - inputs.brake_torque[i] - t.rolling;
        t.fx = (drive / params.r_w).clamp(-limit, limit);
    }
    let (d, _) = assemble(&state, inputs, params, tires, [0.0; 4]);
    d.control_states()
}

/// One classical fourth-order Runge–Kutta step with inputs held over `dt`.
pub fn step_rk4(state: &PlantState, inputs: &PlantInputs, params: &VehicleParams, dt: f64) -> Result<PlantState> {
    step_rk4_bounded(state, inputs, params, dt, DIVERGENCE_BOUND)
}

/// [`step_rk4`] with an explicit blow-up bound.
pub fn step_rk4_bounded(
    state: &PlantState,
    inputs: &PlantInputs,
    params: &VehicleParams,
    dt: f64,
    bound: f64,
) -> Result<PlantState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter { name: "dt", value: dt });
    }
    let check = |s: PlantState| match s.first_divergent(bound) {
        Some((index, value)) => Err(Error::Diverged { index, value }),
        None => Ok(s),
    };
    let f = |s: &PlantState| state_derivative(s, inputs, params);
    let k1 = check(f(state))?;
    let k2 = check(f(&(*state + k1 * (0.5 * dt))))?;
    let k3 = check(f(&(*state + k2 * (0.5 * dt))))?;
    let k4 = check(f(&(*state + k3 * dt)))?;
    check(*state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}
