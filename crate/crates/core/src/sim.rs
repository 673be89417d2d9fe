//! Scenarios, fault injection, closed-loop runs, metrics and the linear
//! closed-loop stability check.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use libm::sqrt;
use nalgebra::{DMatrix, DVector};

use crate::allocator::{measured_net, spectral_abscissa, Allocator, AllocatorConfig};
use crate::controllers::{
    baseline_step, baseline_suspension, virtual_control, yaw_rate_reference, ControllerState, DriverCommand,
    DriverInput, Gains, Measurements, Profile, VirtualControl,
};
use crate::linear::{build_bn, build_bv, linearize, row};
use crate::params::VehicleParams;
use crate::plant::{evaluate, step_rk4, ActuatorVector, PlantInputs, PlantOutputs, PlantState, CONTROL_STATE_LEN};
use crate::{Error, Result};

/// Which controller drives the actuators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControllerKind {
    /// Virtual control with adaptive allocation over all 12 actuators.
    #[default]
    Proposed,
    /// Proportional rear steering, normal-load torque split, PI suspension.
    Baseline,
    /// Adaptive allocation on the planar channels with baseline suspension.
    Hybrid,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Proposed, ControllerKind::Baseline, ControllerKind::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Proposed => "proposed",
            ControllerKind::Baseline => "baseline",
            ControllerKind::Hybrid => "hybrid",
        }
    }
}

impl core::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(ControllerKind::Proposed),
            "baseline" => Ok(ControllerKind::Baseline),
            "hybrid" => Ok(ControllerKind::Hybrid),
            other => Err(Error::InvalidScenario(alloc::format!("unknown controller `{other}`"))),
        }
    }
}

/// What an event changes from its start time on.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Actuator effectiveness multiplier, actuator index 0..12.
    Effectiveness { actuator: usize, multiplier: f64 },
    /// Lateral friction multiplier relative to the nominal road.
    LateralFriction { tires: [bool; 4], multiplier: f64 },
    /// Road elevation under the selected tires, as a function of the time
    /// elapsed since the event start.
    RoadElevation { tires: [bool; 4], profile: Profile },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Heading-error spin classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinCriterion {
    pub threshold: f64,
    pub duration: f64,
}

impl Default for SpinCriterion {
    fn default() -> Self {
        Self { threshold: FRAC_PI_2, duration: 0.5 }
    }
}

/// A complete closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub initial_speed: f64,
    pub horizon: f64,
    pub dt: f64,
    pub driver: DriverInput,
    pub events: Vec<Event>,
    pub controller: ControllerKind,
    pub gains: Gains,
    pub allocator: AllocatorConfig,
    pub params: VehicleParams,
    pub spin: SpinCriterion,
    /// Longitudinal position of the obstacle line, m.
    pub obstacle_x: f64,
}

/// Obstacle-avoidance steering followed by emergency braking.
pub fn avoidance_maneuver(steer_amplitude: f64, brake_force: f64) -> DriverInput {
    DriverInput {
        steer: Profile::sine(3.0, 6.0, steer_amplitude, 60),
        pedal: Profile::constant(0.0),
        brake: Profile::new(alloc::vec![(6.5, 0.0), (6.6, brake_force), (7.4, brake_force), (7.5, 0.0)])
            .expect("static breakpoints"),
    }
}

/// Steering amplitude of the shipped avoidance maneuver, rad.
pub const AVOIDANCE_STEER: f64 = 0.14;
/// Emergency braking force of the shipped maneuver, N.
pub const AVOIDANCE_BRAKE: f64 = 6000.0;

impl Scenario {
    /// Avoidance maneuver at `initial_speed` with defaults everywhere else.
    pub fn avoidance(name: &str, initial_speed: f64) -> Self {
        Self {
            name: name.into(),
            initial_speed,
            horizon: 10.0,
            dt: 1e-3,
            driver: avoidance_maneuver(AVOIDANCE_STEER, AVOIDANCE_BRAKE),
            events: Vec::new(),
            controller: ControllerKind::Proposed,
            gains: Gains::default(),
            allocator: AllocatorConfig::default(),
            params: VehicleParams::default(),
            spin: SpinCriterion::default(),
            obstacle_x: 100.0,
        }
    }

    pub fn with_controller(mut self, controller: ControllerKind) -> Self {
        self.controller = controller;
        self
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.initial_speed = speed;
        self
    }

    /// Number of integration steps covering the horizon.
    pub fn steps(&self) -> usize {
        libm::round(self.horizon / self.dt) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.initial_speed > 0.0 && self.initial_speed.is_finite()) {
            return bad(alloc::format!("initial speed must be positive, got {}", self.initial_speed));
        }
        if !(self.dt > 0.0 && self.horizon > 0.0 && self.dt.is_finite() && self.horizon.is_finite()) {
            return bad("dt and horizon must be positive".into());
        }
        let n = self.horizon / self.dt;
        if (n - libm::round(n)).abs() > 1e-6 * n.max(1.0) {
            return bad(alloc::format!("dt = {} does not divide horizon = {}", self.dt, self.horizon));
        }
        for w in self.events.windows(2) {
            if w[1].time < w[0].time {
                return bad("events must be sorted by time".into());
            }
        }
        for e in &self.events {
            if !(e.time >= 0.0 && e.time.is_finite()) {
                return bad(alloc::format!("event time {} is invalid", e.time));
            }
            match &e.kind {
                EventKind::Effectiveness { actuator, multiplier } => {
                    if *actuator >= 12 {
                        return bad(alloc::format!("actuator index {actuator} out of range"));
                    }
                    if !(*multiplier > 0.0 && *multiplier <= 1.0) {
                        return bad(alloc::format!("multiplier {multiplier} outside (0, 1]"));
                    }
                }
                EventKind::LateralFriction { multiplier, .. } => {
                    if !(*multiplier > 0.0 && *multiplier <= 1.0) {
                        return bad(alloc::format!("multiplier {multiplier} outside (0, 1]"));
                    }
                }
                EventKind::RoadElevation { .. } => {}
            }
        }
        if !(self.spin.threshold > 0.0 && self.spin.duration >= 0.0) {
            return bad("spin criterion must be positive".into());
        }
        self.driver.validate()?;
        self.gains.validate()?;
        self.allocator.validate()?;
        self.params.validate()
    }

    /// Actuator effectiveness multipliers active at `t`.
    pub fn effectiveness_at(&self, t: f64) -> [f64; 12] {
        let mut lambda = [1.0; 12];
        for e in self.events.iter().filter(|e| e.time <= t) {
            if let EventKind::Effectiveness { actuator, multiplier } = e.kind {
                lambda[actuator] = multiplier;
            }
        }
        lambda
    }

    /// Per-tire lateral friction multipliers active at `t`.
    pub fn lateral_friction_at(&self, t: f64) -> [f64; 4] {
        let mut mu = [1.0; 4];
        for e in self.events.iter().filter(|e| e.time <= t) {
            if let EventKind::LateralFriction { tires, multiplier } = e.kind {
                for i in 0..4 {
                    if tires[i] {
                        mu[i] = multiplier;
                    }
                }
            }
        }
        mu
    }

    /// Road elevation under each tire at `t`.
    pub fn road_at(&self, t: f64) -> [f64; 4] {
        let mut z = [0.0; 4];
        for e in self.events.iter().filter(|e| e.time <= t) {
            if let EventKind::RoadElevation { tires, profile } = &e.kind {
                for i in 0..4 {
                    if tires[i] {
                        z[i] = profile.value(t - e.time);
                    }
                }
            }
        }
        z
    }
}

/// Names of the shipped scenarios.
pub const PRESETS: [&str; 5] = ["low_speed", "high_speed", "varying_road", "actuator_fault", "suspension_fault"];

const RIGHT_TIRES: [bool; 4] = [false, true, false, true];
const ALL_TIRES: [bool; 4] = [true; 4];

impl Scenario {
    /// One of the shipped scenarios by name.
    pub fn preset(name: &str) -> Result<Self> {
        let effectiveness = |time, actuator, multiplier| Event { time, kind: EventKind::Effectiveness { actuator, multiplier } };
        let friction = |time, tires, multiplier| Event { time, kind: EventKind::LateralFriction { tires, multiplier } };
        let mut sc = match name {
            "low_speed" => Scenario::avoidance(name, 13.0),
            "high_speed" => Scenario::avoidance(name, 20.0),
            "varying_road" => Scenario::avoidance(name, 20.0),
            "actuator_fault" => Scenario::avoidance(name, 20.0),
            "suspension_fault" => Scenario::avoidance(name, 20.0),
            other => return Err(Error::InvalidScenario(alloc::format!("unknown preset `{other}`"))),
        };
        sc.events = match name {
            "varying_road" => alloc::vec![friction(4.0, RIGHT_TIRES, 0.6)],
            "actuator_fault" => alloc::vec![
                effectiveness(1.0, 3, 0.1),
                effectiveness(1.0, 7, 0.1),
                friction(4.0, ALL_TIRES, 0.9),
            ],
            "suspension_fault" => alloc::vec![effectiveness(1.0, 11, 0.1)],
            _ => Vec::new(),
        };
        Ok(sc)
    }
}

/// Element-wise effectiveness scaling of the commanded actuators.
pub fn apply_faults(u: &ActuatorVector, lambda: &[f64; 12]) -> ActuatorVector {
    ActuatorVector(core::array::from_fn(|i| lambda[i] * u.0[i]))
}

/// One logged sample: the state at `t` and everything applied over the
/// following step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Record {
    pub t: f64,
    pub state: PlantState,
    /// Saturated controller command.
    pub commanded: ActuatorVector,
    /// Command after effectiveness loss.
    pub effective: ActuatorVector,
    pub virtual_control: VirtualControl,
    pub residual: f64,
    pub normals: [f64; 4],
    pub side_slip: f64,
    pub yaw_rate_ref: f64,
    pub heading_ref: f64,
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub t: f64,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub records: Vec<Record>,
    pub divergence: Option<Divergence>,
    pub obstacle_x: f64,
    pub spin: SpinCriterion,
}

impl RunLog {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }
}

fn measurements(state: &PlantState, outputs: &PlantOutputs, params: &VehicleParams) -> Measurements {
    Measurements {
        speed: state.vx,
        force: params.m * outputs.ax,
        side_slip: state.side_slip(),
        yaw_rate: state.yaw_rate,
        roll: state.roll,
        roll_rate: state.roll_rate,
        pitch: state.pitch,
        pitch_rate: state.pitch_rate,
    }
}

enum Policy {
    Allocation(Allocator),
    Baseline,
}

/// Runs a scenario to its horizon or to the first divergent state.
pub fn run_scenario(scenario: &Scenario) -> Result<RunLog> {
    scenario.validate()?;
    let sc = scenario;
    let params = &sc.params;
    let dt = sc.dt;
    let mut policy = match sc.controller {
        ControllerKind::Proposed => Policy::Allocation(Allocator::new(sc.allocator, params)?),
        ControllerKind::Hybrid => Policy::Allocation(Allocator::new(sc.allocator.planar(), params)?),
        ControllerKind::Baseline => Policy::Baseline,
    };
    let mut ctrl = ControllerState::default();
    let mut state = PlantState::cruising(sc.initial_speed, params.r_w);
    let road0 = sc.road_at(0.0);
    let mut inputs = PlantInputs::default()
        .with_road(road0, 0.0)
        .with_lateral_friction(sc.lateral_friction_at(0.0));
    let (_, mut outputs) = evaluate(&state, &inputs, params);
    let mut heading_ref = 0.0;
    let steps = sc.steps();
    let mut log = RunLog {
        records: Vec::with_capacity(steps),
        divergence: None,
        obstacle_x: sc.obstacle_x,
        spin: sc.spin,
    };

    for k in 0..steps {
        let t = k as f64 * dt;
        let cmd: DriverCommand = sc.driver.at(t);
        let meas = measurements(&state, &outputs, params);
        let normals = outputs.normals();
        let r_ref = yaw_rate_reference(cmd.steer, state.vx, sc.gains.k_us, params);

        let (commanded, v, residual) = match &mut policy {
            Policy::Allocation(alloc) => {
                let v = virtual_control(&cmd, &meas, &sc.gains, &mut ctrl, params, dt);
                let realized = measured_net(&outputs, state.vx, params);
                let b_n = build_bn(&inputs.actuators.steer(), &normals, params);
                let mut u = alloc.step(&v, &realized, &b_n, cmd.steer, dt);
                if sc.controller == ControllerKind::Hybrid {
                    let susp = baseline_suspension(state.pitch, state.roll, &sc.gains, &mut ctrl, dt);
                    u.0[8..].copy_from_slice(&susp);
                }
                (u.saturated(), v, alloc.residual)
            }
            Policy::Baseline => {
                let u = baseline_step(&cmd, &meas, &normals, &sc.gains, &mut ctrl, params, dt);
                (u.saturated(), VirtualControl::default(), 0.0)
            }
        };
        let effective = apply_faults(&commanded, &sc.effectiveness_at(t));

        log.records.push(Record {
            t,
            state,
            commanded,
            effective,
            virtual_control: v,
            residual,
            normals,
            side_slip: state.side_slip(),
            yaw_rate_ref: r_ref,
            heading_ref,
        });

        inputs = PlantInputs { actuators: effective, ..inputs }
            .with_road(sc.road_at(t), 0.0)
            .with_lateral_friction(sc.lateral_friction_at(t));
        match step_rk4(&state, &inputs, params, dt) {
            Ok(next) => state = next,
            Err(Error::Diverged { index, value }) => {
                log.divergence = Some(Divergence { t: t + dt, index, value });
                break;
            }
            Err(e) => return Err(e),
        }
        heading_ref += r_ref * dt;
        outputs = evaluate(&state, &inputs, params).1;
    }
    Ok(log)
}

/// Summary statistics of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub max_side_slip: f64,
    pub spin: bool,
    pub rms_roll: f64,
    pub rms_pitch: f64,
    /// Lateral position where the path crosses the obstacle line, or the
    /// final lateral position if it never does.
    pub lateral_offset: f64,
    pub completed: bool,
}

/// Metrics computed from the log alone.
pub fn compute_metrics(log: &RunLog) -> Metrics {
    let rec = &log.records;
    if rec.is_empty() {
        return Metrics { completed: !log.diverged(), ..Default::default() };
    }
    let n = rec.len() as f64;
    let mut max_side_slip: f64 = 0.0;
    let mut roll2 = 0.0;
    let mut pitch2 = 0.0;
    let mut spin = false;
    let mut spin_start: Option<f64> = None;
    for r in rec {
        max_side_slip = max_side_slip.max(r.side_slip.abs());
        roll2 += r.state.roll * r.state.roll;
        pitch2 += r.state.pitch * r.state.pitch;
        // Unwrapped yaw minus reference, so full turns still count.
        let err = r.state.yaw - r.heading_ref;
        if err.abs() > log.spin.threshold || !err.is_finite() {
            let start = *spin_start.get_or_insert(r.t);
            if r.t - start >= log.spin.duration {
                spin = true;
            }
        } else {
            spin_start = None;
        }
    }
    let mut lateral_offset = rec.last().map(|r| r.state.y).unwrap_or(0.0);
    for w in rec.windows(2) {
        let (a, b) = (&w[0].state, &w[1].state);
        if a.x < log.obstacle_x && b.x >= log.obstacle_x {
            let f = (log.obstacle_x - a.x) / (b.x - a.x);
            lateral_offset = a.y + f * (b.y - a.y);
            break;
        }
    }
    Metrics {
        max_side_slip,
        spin,
        rms_roll: sqrt(roll2 / n),
        rms_pitch: sqrt(pitch2 / n),
        lateral_offset,
        completed: !log.diverged(),
    }
}

/// Largest side slip tolerated by [`sweep_max_speed`].
pub const SWEEP_SIDE_SLIP_LIMIT: f64 = 15.0 * PI / 180.0;

/// Completed, no spin and side slip below [`SWEEP_SIDE_SLIP_LIMIT`].
pub fn is_stable_run(m: &Metrics) -> bool {
    m.completed && !m.spin && m.max_side_slip < SWEEP_SIDE_SLIP_LIMIT
}

/// Largest initial speed in `[vmin, vmax]` with a stable run, by bisection
/// to `resolution`. `None` if the run at `vmin` is already unstable.
pub fn sweep_max_speed(
    template: &Scenario,
    controller: ControllerKind,
    vmin: f64,
    vmax: f64,
    resolution: f64,
) -> Result<Option<f64>> {
    if !(vmin > 0.0 && vmax >= vmin && resolution > 0.0) {
        return Err(Error::InvalidScenario(alloc::format!("bad sweep range [{vmin}, {vmax}]")));
    }
    let stable = |v: f64| -> Result<bool> {
        let sc = template.clone().with_controller(controller).with_speed(v);
        Ok(is_stable_run(&compute_metrics(&run_scenario(&sc)?)))
    };
    if !stable(vmin)? {
        return Ok(None);
    }
    if stable(vmax)? {
        return Ok(Some(vmax));
    }
    let (mut lo, mut hi) = (vmin, vmax);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Integrator states of the linear closed loop: yaw rate, side slip, roll
/// and pitch. With `F = m a_x` and a zero reference the traction integral
/// equals `−m ΔV_x`, so it is realized through the speed state instead of a
/// redundant integrator (that would only add a conserved mode at zero).
const INTEGRATORS: usize = 4;

/// Closed-loop state matrix of the linearized vehicle under the virtual
/// control law with ideal allocation (`ẋ = A x + B_v v`).
///
/// States are the 17 control states followed by the yaw-rate, side-slip,
/// roll and pitch integrators. References are zero.
pub fn closed_loop_matrix(gains: &Gains, speed: f64, params: &VehicleParams) -> Result<DMatrix<f64>> {
    let lm = linearize(params, speed)?;
    let bv = build_bv(params);
    let g = gains;
    let nx = CONTROL_STATE_LEN;
    let n = nx + INTEGRATORS;

    // v = Kx x + Kz z + Kv v, with the traction force F = m (A₀ x) + v₁
    // feeding straight through.
    let mut kx = DMatrix::<f64>::zeros(5, nx);
    let mut kz = DMatrix::<f64>::zeros(5, INTEGRATORS);
    let mut kv = DMatrix::<f64>::zeros(5, 5);
    let f_row = DVector::from_fn(nx, |j, _| params.m * lm.a[(row::VX, j)]);
    let beta = 1.0 / speed;
    for j in 0..nx {
        kx[(0, j)] = -g.k_pf * f_row[j];
    }
    kx[(0, row::VX)] -= g.k_if * params.m;
    kv[(0, 0)] = -g.k_pf;
    kx[(1, row::VY)] = -g.k_py * beta;
    kz[(1, 1)] = -g.k_iy;
    kx[(2, row::YAW_RATE)] = -g.k_pmz;
    kx[(2, row::VY)] = g.k_ps * beta;
    kz[(2, 0)] = g.k_imz;
    kz[(2, 1)] = g.k_is;
    kx[(3, row::ROLL)] = -g.k_pr;
    kx[(3, row::ROLL_RATE)] = -g.k_dr;
    kz[(3, 2)] = -g.k_ir;
    kx[(4, row::PITCH)] = -g.k_pp;
    kx[(4, row::PITCH_RATE)] = -g.k_dp;
    kz[(4, 3)] = -g.k_ip;

    let solve = (DMatrix::<f64>::identity(5, 5) - kv).try_inverse().ok_or(Error::SingularClosedLoop)?;
    if solve.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularClosedLoop);
    }
    let vx = &solve * kx;
    let vz = &solve * kz;

    // ż = [r_ref − r, β, φ, θ] with zero references.
    let mut zx = DMatrix::<f64>::zeros(INTEGRATORS, nx);
    zx[(0, row::YAW_RATE)] = -1.0;
    zx[(1, row::VY)] = beta;
    zx[(2, row::ROLL)] = 1.0;
    zx[(3, row::PITCH)] = 1.0;

    let a = DMatrix::from_column_slice(nx, nx, lm.a.as_slice());
    let b = DMatrix::from_column_slice(nx, 5, bv.as_slice());
    let mut cl = DMatrix::<f64>::zeros(n, n);
    cl.view_mut((0, 0), (nx, nx)).copy_from(&(&a + &b * &vx));
    cl.view_mut((0, nx), (nx, INTEGRATORS)).copy_from(&(&b * &vz));
    cl.view_mut((nx, 0), (INTEGRATORS, nx)).copy_from(&zx);

    // An integrator with zero gain is an unobservable controller state at
    // the origin; keep only those that reach the plant.
    let keep: Vec<usize> = (0..n).filter(|&j| j < nx || cl.column(j).amax() > 0.0).collect();
    Ok(cl.select_rows(keep.iter()).select_columns(keep.iter()))
}

/// Largest real part of the closed-loop eigenvalues at speed `speed`.
pub fn linear_closed_loop_stability(gains: &Gains, speed: f64, params: &VehicleParams) -> Result<f64> {
    let cl = closed_loop_matrix(gains, speed, params)?;
    if cl.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularClosedLoop);
    }
    Ok(spectral_abscissa(&cl))
}
