//! Sprung and unsprung vertical dynamics and tire normal loads.
//!
//! Vertical coordinates are deviations from static equilibrium, so gravity
//! enters only through the static tire preload.

use libm::{cos, sin};

use super::state::PlantState;
use crate::params::VehicleParams;

/// Vertical accelerations: heave, pitch, roll and the four unsprung masses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerticalAccelerations {
    pub heave: f64,
    pub pitch: f64,
    pub roll: f64,
    pub unsprung: [f64; 4],
}

/// Sprung-mass elevation and its rate above each corner.
pub fn sprung_corners(state: &PlantState, params: &VehicleParams) -> ([f64; 4], [f64; 4]) {
    let (st, ct) = (sin(state.pitch), cos(state.pitch));
    let (sp, cp) = (sin(state.roll), cos(state.roll));
    let mut z = [0.0; 4];
    let mut zd = [0.0; 4];
    for i in 0..4 {
        let (x, y) = (params.corner_x(i), params.corner_y(i));
        z[i] = state.heave - x * st + y * sp;
        zd[i] = state.heave_rate - x * state.pitch_rate * ct + y * state.roll_rate * cp;
    }
    (z, zd)
}

/// Upward force each suspension strut applies to the body, active force included.
pub fn suspension_forces(state: &PlantState, active: &[f64; 4], params: &VehicleParams) -> [f64; 4] {
    let (zs, zsd) = sprung_corners(state, params);
    core::array::from_fn(|i| {
        params.spring(i) * (state.unsprung[i] - zs[i]) + params.damper(i) * (state.unsprung_rate[i] - zsd[i]) + active[i]
    })
}

pub fn vertical_derivatives(
    state: &PlantState,
    active: &[f64; 4],
    ax: f64,
    ay: f64,
    road: &[f64; 4],
    params: &VehicleParams,
) -> VerticalAccelerations {
    let strut = suspension_forces(state, active, params);
    let mut heave = 0.0;
    let mut pitch = -params.m * ax * params.h;
    let mut roll = -params.m * ay * params.h;
    let mut unsprung = [0.0; 4];
    for i in 0..4 {
        heave += strut[i];
        pitch -= params.corner_x(i) * strut[i];
        roll += params.corner_y(i) * strut[i];
        let tire = params.tire_spring(i) * (state.unsprung[i] - road[i]);
        unsprung[i] = (-strut[i] - tire) / params.unsprung_mass(i);
    }
    VerticalAccelerations {
        heave: heave / params.m,
        pitch: pitch / params.i_y,
        roll: roll / params.i_x,
        unsprung,
    }
}

/// Dynamic part of the tire load: compression of the tire spring relative to
/// static equilibrium.
pub fn tire_deflection_loads(state: &PlantState, road: &[f64; 4], params: &VehicleParams) -> [f64; 4] {
    core::array::from_fn(|i| params.tire_spring(i) * (road[i] - state.unsprung[i]))
}

/// Normal loads: static preload plus tire deflection, clamped at zero on
/// lift-off.
pub fn normal_forces(state: &PlantState, road: &[f64; 4], params: &VehicleParams) -> [f64; 4] {
    let preload = params.static_loads();
    let dynamic = tire_deflection_loads(state, road, params);
    core::array::from_fn(|i| (preload[i] + dynamic[i]).max(0.0))
}
