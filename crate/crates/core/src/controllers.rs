//! High-level control: the 5-entry virtual control from driver commands and
//! measurements, plus a conventional baseline controller for comparison.

use alloc::vec::Vec;

use crate::params::{VehicleParams, GRAVITY};
use crate::plant::{ActuatorVector, MAX_STEER};
use crate::{Error, Result};

/// Piecewise-linear time profile, held constant outside its breakpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    points: Vec<(f64, f64)>,
}

impl Profile {
    /// Breakpoints must be finite with strictly increasing times.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidScenario(alloc::format!(
                    "profile times must increase ({} after {})",
                    w[1].0,
                    w[0].0
                )));
            }
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidScenario("non-finite profile breakpoint".into()));
        }
        Ok(Self { points })
    }

    pub fn constant(value: f64) -> Self {
        Self { points: alloc::vec![(0.0, value)] }
    }

    /// One full sine period of amplitude `amplitude` between `start` and
    /// `end`, sampled at `segments + 1` breakpoints; zero outside.
    pub fn sine(start: f64, end: f64, amplitude: f64, segments: usize) -> Self {
        let n = segments.max(2);
        let points = (0..=n)
            .map(|k| {
                let f = k as f64 / n as f64;
                let v = if k == n { 0.0 } else { amplitude * libm::sin(2.0 * core::f64::consts::PI * f) };
                (start + f * (end - start), v)
            })
            .collect();
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn value(&self, t: f64) -> f64 {
        let p = &self.points;
        match p.len() {
            0 => 0.0,
            _ if t <= p[0].0 => p[0].1,
            n if t >= p[n - 1].0 => p[n - 1].1,
            _ => {
                let k = p.partition_point(|&(tk, _)| tk <= t);
                let (t0, v0) = p[k - 1];
                let (t1, v1) = p[k];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Largest magnitude reached by the profile.
    pub fn peak(&self) -> f64 {
        self.points.iter().fold(0.0, |m, &(_, v)| m.max(v.abs()))
    }
}

/// Driver steering, pedal and brake profiles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriverInput {
    /// Front steering command, rad.
    pub steer: Profile,
    /// Requested traction force, N.
    pub pedal: Profile,
    /// Requested braking force, N (positive decelerates).
    pub brake: Profile,
}

/// Driver command sampled at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriverCommand {
    pub steer: f64,
    pub pedal: f64,
    pub brake: f64,
}

impl DriverCommand {
    /// Reference traction force.
    pub fn force_ref(&self) -> f64 {
        self.pedal - self.brake
    }
}

impl DriverInput {
    pub fn validate(&self) -> Result<()> {
        if self.steer.peak() > MAX_STEER {
            return Err(Error::InvalidScenario("steering profile exceeds 30 degrees".into()));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> DriverCommand {
        DriverCommand {
            steer: self.steer.value(t),
            pedal: self.pedal.value(t),
            brake: self.brake.value(t),
        }
    }
}

/// Virtual control `[F_c, F_yc, M_z, M_x, M_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirtualControl(pub [f64; 5]);

impl VirtualControl {
    pub fn traction(&self) -> f64 {
        self.0[0]
    }
    pub fn lateral(&self) -> f64 {
        self.0[1]
    }
    pub fn yaw(&self) -> f64 {
        self.0[2]
    }
    pub fn roll(&self) -> f64 {
        self.0[3]
    }
    pub fn pitch(&self) -> f64 {
        self.0[4]
    }
}

/// Feedback signals available to the controllers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurements {
    /// Longitudinal speed, m/s.
    pub speed: f64,
    /// Traction force `m · a_x`, N.
    pub force: f64,
    pub side_slip: f64,
    pub yaw_rate: f64,
    pub roll: f64,
    pub roll_rate: f64,
    pub pitch: f64,
    pub pitch_rate: f64,
}

/// Gains of the conventional controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineGains {
    pub k_pf: f64,
    pub k_if: f64,
    /// Pitch PI, N per rad and N per rad·s.
    pub k_pp: f64,
    pub k_ip: f64,
    /// Roll PI.
    pub k_pr: f64,
    pub k_ir: f64,
    /// Cornering gain used in the rear-steer law, 1/rad.
    pub c_alpha: f64,
}

impl Default for BaselineGains {
    fn default() -> Self {
        Self {
            k_pf: 0.5,
            k_if: 20.0,
            k_pp: 2.0e4,
            k_ip: 2.0e4,
            k_pr: 1.0e4,
            k_ir: 1.0e4,
            c_alpha: crate::linear::DEFAULT_CORNERING_GAIN,
        }
    }
}

/// Anti-windup bounds on each integrator accumulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindupLimits {
    /// ∫F̃ dt, N·s.
    pub force: f64,
    /// ∫r̃ dt, rad.
    pub yaw_rate: f64,
    /// ∫β dt, rad·s.
    pub side_slip: f64,
    /// ∫φ dt, rad·s.
    pub roll: f64,
    /// ∫θ dt, rad·s.
    pub pitch: f64,
}

impl Default for WindupLimits {
    fn default() -> Self {
        Self { force: 1.0e3, yaw_rate: 0.5, side_slip: 0.2, roll: 0.05, pitch: 0.05 }
    }
}

/// Gains of the virtual-control law and the baseline controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k_pf: f64,
    pub k_if: f64,
    pub k_pmz: f64,
    pub k_imz: f64,
    pub k_ps: f64,
    pub k_is: f64,
    pub k_pr: f64,
    pub k_dr: f64,
    pub k_ir: f64,
    pub k_pp: f64,
    pub k_dp: f64,
    pub k_ip: f64,
    pub k_py: f64,
    pub k_iy: f64,
    /// Understeer gradient for the yaw-rate reference, s²/m.
    pub k_us: f64,
    pub baseline: BaselineGains,
    pub windup: WindupLimits,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k_pf: 0.5,
            k_if: 20.0,
            k_pmz: 2.0e4,
            k_imz: 4.0e4,
            k_ps: 3.0e4,
            k_is: 0.0,
            k_pr: 6.0e4,
            k_dr: 6.0e3,
            k_ir: 2.0e5,
            k_pp: 2.0e5,
            k_dp: 2.0e4,
            k_ip: 6.0e5,
            k_py: 1.0e5,
            k_iy: 0.0,
            k_us: 0.0,
            baseline: BaselineGains::default(),
            windup: WindupLimits::default(),
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        let b = &self.baseline;
        let w = &self.windup;
        let all = [
            ("k_pf", self.k_pf),
            ("k_if", self.k_if),
            ("k_pmz", self.k_pmz),
            ("k_imz", self.k_imz),
            ("k_ps", self.k_ps),
            ("k_is", self.k_is),
            ("k_pr", self.k_pr),
            ("k_dr", self.k_dr),
            ("k_ir", self.k_ir),
            ("k_pp", self.k_pp),
            ("k_dp", self.k_dp),
            ("k_ip", self.k_ip),
            ("k_py", self.k_py),
            ("k_iy", self.k_iy),
            ("k_us", self.k_us),
            ("baseline.k_pf", b.k_pf),
            ("baseline.k_if", b.k_if),
            ("baseline.k_pp", b.k_pp),
            ("baseline.k_ip", b.k_ip),
            ("baseline.k_pr", b.k_pr),
            ("baseline.k_ir", b.k_ir),
            ("baseline.c_alpha", b.c_alpha),
        ];
        for (name, value) in all {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        let limits = [
            ("windup.force", w.force),
            ("windup.yaw_rate", w.yaw_rate),
            ("windup.side_slip", w.side_slip),
            ("windup.roll", w.roll),
            ("windup.pitch", w.pitch),
        ];
        for (name, value) in limits {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Integrator accumulators of both controllers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    pub force: f64,
    pub yaw_rate: f64,
    pub side_slip: f64,
    pub roll: f64,
    pub pitch: f64,
    pub baseline_force: f64,
    pub baseline_roll: f64,
    pub baseline_pitch: f64,
}

fn accumulate(acc: &mut f64, error: f64, dt: f64, limit: f64) {
    *acc = (*acc + error * dt).clamp(-limit, limit);
}

/// Steady-state bicycle-model yaw rate, limited by the friction circle.
pub fn yaw_rate_reference(steer: f64, speed: f64, k_us: f64, params: &VehicleParams) -> f64 {
    if speed <= 0.0 {
        return 0.0;
    }
    let r = speed * steer / (params.wheelbase() + k_us * speed * speed);
    let limit = params.mu * GRAVITY / speed;
    r.clamp(-limit, limit)
}

/// One sample of the virtual-control law. Outputs use the accumulators
/// from before this sample; integrators then advance by explicit Euler.
pub fn virtual_control(
    cmd: &DriverCommand,
    meas: &Measurements,
    gains: &Gains,
    state: &mut ControllerState,
    params: &VehicleParams,
    dt: f64,
) -> VirtualControl {
    let g = gains;
    let f_err = cmd.force_ref() - meas.force;
    let r_err = yaw_rate_reference(cmd.steer, meas.speed, g.k_us, params) - meas.yaw_rate;
    let beta = meas.side_slip;

    let f_c = g.k_pf * f_err + g.k_if * state.force;
    let m1 = g.k_pmz * r_err + g.k_imz * state.yaw_rate;
    let m2 = g.k_ps * beta + g.k_is * state.side_slip;
    let m_x = -g.k_pr * meas.roll - g.k_dr * meas.roll_rate - g.k_ir * state.roll;
    let m_y = -g.k_pp * meas.pitch - g.k_dp * meas.pitch_rate - g.k_ip * state.pitch;
    let f_y = -g.k_py * beta - g.k_iy * state.side_slip;

    let w = &g.windup;
    accumulate(&mut state.force, f_err, dt, w.force);
    accumulate(&mut state.yaw_rate, r_err, dt, w.yaw_rate);
    accumulate(&mut state.side_slip, beta, dt, w.side_slip);
    accumulate(&mut state.roll, meas.roll, dt, w.roll);
    accumulate(&mut state.pitch, meas.pitch, dt, w.pitch);

    VirtualControl([f_c, f_y, m1 + m2, m_x, m_y])
}

/// Speed-dependent rear/front steering ratio from axle normal loads.
pub fn rear_steer_gain(speed: f64, n_front: f64, n_rear: f64, params: &VehicleParams, c_alpha: f64) -> f64 {
    let (m, a, b, l) = (params.m, params.a, params.b, params.wheelbase());
    let v2 = speed * speed;
    let num = m * v2 * a - b * l * c_alpha * n_rear;
    let den = m * v2 * b + a * l * c_alpha * n_front;
    num / den * (c_alpha * n_front) / (c_alpha * n_rear)
}

/// Rear steering angle commanded by the baseline for front angle `steer`.
pub fn baseline_rear_steer(
    steer: f64,
    speed: f64,
    n_front: f64,
    n_rear: f64,
    params: &VehicleParams,
    c_alpha: f64,
) -> f64 {
    rear_steer_gain(speed, n_front, n_rear, params, c_alpha) * steer
}

/// Wheel torques inversely proportional to each tire's normal force.
///
/// Kept in its original form, which maps a force-valued `F_c` onto a torque
/// without dividing by the wheel radius.
pub fn baseline_traction(f_c: f64, normals: &[f64; 4], params: &VehicleParams) -> [f64; 4] {
    normals.map(|n| f_c * params.weight() / (4.0 * n.max(1.0)))
}

/// Per-wheel suspension forces from the pitch and roll commands.
pub fn distribute_suspension(f_pitch: f64, f_roll: f64) -> [f64; 4] {
    [-f_pitch + f_roll, -f_pitch - f_roll, f_pitch + f_roll, f_pitch - f_roll]
}

/// Baseline roll and pitch PI controllers, distributed over the wheels.
pub fn baseline_suspension(
    pitch: f64,
    roll: f64,
    gains: &Gains,
    state: &mut ControllerState,
    dt: f64,
) -> [f64; 4] {
    let b = &gains.baseline;
    let f_pitch = -b.k_pp * pitch - b.k_ip * state.baseline_pitch;
    let f_roll = -b.k_pr * roll - b.k_ir * state.baseline_roll;
    accumulate(&mut state.baseline_pitch, pitch, dt, gains.windup.pitch);
    accumulate(&mut state.baseline_roll, roll, dt, gains.windup.roll);
    distribute_suspension(f_pitch, f_roll)
}

/// Complete baseline: proportional rear steering, normal-load torque split
/// and PI suspension.
pub fn baseline_step(
    cmd: &DriverCommand,
    meas: &Measurements,
    normals: &[f64; 4],
    gains: &Gains,
    state: &mut ControllerState,
    params: &VehicleParams,
    dt: f64,
) -> ActuatorVector {
    let b = &gains.baseline;
    let n_front = normals[0] + normals[1];
    let n_rear = normals[2] + normals[3];
    let rear = if n_front > 0.0 && n_rear > 0.0 {
        baseline_rear_steer(cmd.steer, meas.speed, n_front, n_rear, params, b.c_alpha)
    } else {
        0.0
    };
    let f_err = cmd.force_ref() - meas.force;
    let f_c = b.k_pf * f_err + b.k_if * state.baseline_force;
    accumulate(&mut state.baseline_force, f_err, dt, gains.windup.force);
    let torque = baseline_traction(f_c, normals, params);
    let susp = baseline_suspension(meas.pitch, meas.roll, gains, state, dt);
    ActuatorVector::new([cmd.steer, cmd.steer, rear, rear], torque, susp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zero_gains() -> Gains {
        Gains {
            k_pf: 0.0,
            k_if: 0.0,
            k_pmz: 0.0,
            k_imz: 0.0,
            k_ps: 0.0,
            k_is: 0.0,
            k_pr: 0.0,
            k_dr: 0.0,
            k_ir: 0.0,
            k_pp: 0.0,
            k_dp: 0.0,
            k_ip: 0.0,
            k_py: 0.0,
            k_iy: 0.0,
            ..Gains::default()
        }
    }

    #[test]
    fn profile_interpolates_and_holds() {
        let p = Profile::new(alloc::vec![(1.0, 0.0), (2.0, 10.0), (4.0, 0.0)]).unwrap();
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(1.5), 5.0);
        assert_eq!(p.value(2.0), 10.0);
        assert_eq!(p.value(3.0), 5.0);
        assert_eq!(p.value(9.0), 0.0);
        assert!(Profile::new(alloc::vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert_eq!(Profile::default().value(3.0), 0.0);
    }

    #[test]
    fn sine_profile_shape() {
        let p = Profile::sine(3.0, 6.0, 0.05, 60);
        assert_eq!(p.value(2.0), 0.0);
        assert_eq!(p.value(6.5), 0.0);
        assert_abs_diff_eq!(p.value(3.75), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(p.value(5.25), -0.05, epsilon = 1e-12);
        assert_eq!(p.points().len(), 61);
    }

    #[test]
    fn oversized_steer_rejected() {
        let d = DriverInput { steer: Profile::constant(0.6), ..Default::default() };
        assert!(d.validate().is_err());
    }

    #[test]
    fn yaw_reference_values() {
        let p = VehicleParams::default();
        assert_eq!(yaw_rate_reference(0.0, 20.0, 0.0, &p), 0.0);
        assert_abs_diff_eq!(yaw_rate_reference(0.05, 10.0, 0.0, &p), 0.2, epsilon = 1e-12);
        let r = yaw_rate_reference(0.3, 30.0, 0.0, &p);
        assert_abs_diff_eq!(r, 9.81 / 30.0, epsilon = 1e-12);
        assert!(r <= 0.327 + 1e-3);
    }

    #[test]
    fn zero_errors_give_zero_control() {
        let p = VehicleParams::default();
        let mut s = ControllerState::default();
        let v = virtual_control(&DriverCommand::default(), &Measurements::default(), &Gains::default(), &mut s, &p, 1e-3);
        assert_eq!(v, VirtualControl::default());
        assert_eq!(s, ControllerState::default());
    }

    #[test]
    fn single_term_values() {
        let p = VehicleParams::default();
        let g = Gains { k_py: 5000.0, k_pr: 2.0e4, ..zero_gains() };
        let mut s = ControllerState::default();
        let m = Measurements { side_slip: 0.1, roll: 0.05, ..Default::default() };
        let v = virtual_control(&DriverCommand::default(), &m, &g, &mut s, &p, 1e-3);
        assert_abs_diff_eq!(v.lateral(), -500.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.roll(), -1000.0, epsilon = 1e-12);
    }

    #[test]
    fn integrators_use_previous_sample() {
        let p = VehicleParams::default();
        let g = Gains { k_ir: 100.0, ..zero_gains() };
        let mut s = ControllerState::default();
        let m = Measurements { roll: 0.01, ..Default::default() };
        let v0 = virtual_control(&DriverCommand::default(), &m, &g, &mut s, &p, 0.1);
        assert_eq!(v0.roll(), 0.0);
        let v1 = virtual_control(&DriverCommand::default(), &m, &g, &mut s, &p, 0.1);
        assert_abs_diff_eq!(v1.roll(), -100.0 * 0.001, epsilon = 1e-15);
    }

    #[test]
    fn rear_steer_gain_limits() {
        let p = VehicleParams::default();
        let loads = p.static_loads();
        let (nf, nr) = (loads[0] + loads[1], loads[2] + loads[3]);
        assert_abs_diff_eq!(rear_steer_gain(0.0, nf, nr, &p, 8.0), -1.375 / 1.125, epsilon = 1e-12);
        let crossover = libm::sqrt(p.b * p.wheelbase() * 8.0 * nr / (p.m * p.a));
        assert_abs_diff_eq!(rear_steer_gain(crossover, nf, nr, &p, 8.0), 0.0, epsilon = 1e-12);
        assert!(rear_steer_gain(crossover - 1.0, nf, nr, &p, 8.0) < 0.0);
        assert!(rear_steer_gain(crossover + 1.0, nf, nr, &p, 8.0) > 0.0);
        let (v, n) = (15.0, 5000.0);
        let l = p.wheelbase();
        let expected = (p.m * v * v * p.a - p.b * l * 8.0 * n) / (p.m * v * v * p.b + p.a * l * 8.0 * n);
        assert_abs_diff_eq!(rear_steer_gain(v, n, n, &p, 8.0), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(baseline_rear_steer(0.1, v, n, n, &p, 8.0), expected * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn traction_split_values() {
        let p = VehicleParams::default();
        let q = p.weight() / 4.0;
        assert_eq!(baseline_traction(250.0, &[q; 4], &p), [250.0; 4]);
        let t = baseline_traction(250.0, &[2.0 * q, q, q, q], &p);
        assert_abs_diff_eq!(t[0], 125.0, epsilon = 1e-12);
        let t = baseline_traction(400.0, &[3507.1, 3507.1, 2869.0, 2869.0], &p);
        assert_abs_diff_eq!(t[0], 363.6, epsilon = 0.05);
    }

    #[test]
    fn suspension_distribution() {
        assert_eq!(distribute_suspension(10.0, 5.0), [-5.0, -15.0, 15.0, 5.0]);
        let f = distribute_suspension(0.0, 7.0);
        assert_eq!(f[0], f[2]);
        assert_eq!(f[1], f[3]);
        let mut s = ControllerState::default();
        assert_eq!(baseline_suspension(0.0, 0.0, &Gains::default(), &mut s, 1e-3), [0.0; 4]);
    }

    #[test]
    fn baseline_suspension_restores() {
        // Nose down and left side up: push the front up and the left down.
        let mut s = ControllerState::default();
        let f = baseline_suspension(0.01, 0.0, &Gains::default(), &mut s, 1e-3);
        assert!(f[0] > 0.0 && f[1] > 0.0 && f[2] < 0.0 && f[3] < 0.0);
        let f = baseline_suspension(0.0, 0.01, &Gains::default(), &mut ControllerState::default(), 1e-3);
        assert!(f[0] < 0.0 && f[2] < 0.0 && f[1] > 0.0 && f[3] > 0.0);
    }

    proptest! {
        #[test]
        fn mirror_symmetry(
            steer in -0.5f64..0.5, beta in -0.3f64..0.3, r in -1.0f64..1.0, roll in -0.1f64..0.1,
            pitch in -0.1f64..0.1, force in -5e3f64..5e3, speed in 1.0f64..40.0,
        ) {
            let p = VehicleParams::default();
            let g = Gains::default();
            let cmd = DriverCommand { steer, pedal: 800.0, brake: 0.0 };
            let m = Measurements {
                speed, force, side_slip: beta, yaw_rate: r, roll, roll_rate: 0.3 * roll,
                pitch, pitch_rate: -pitch,
            };
            let cmd_m = DriverCommand { steer: -steer, ..cmd };
            let m_m = Measurements { side_slip: -beta, yaw_rate: -r, roll: -roll, roll_rate: -m.roll_rate, ..m };
            let mut s1 = ControllerState::default();
            let mut s2 = ControllerState::default();
            for _ in 0..3 {
                let a = virtual_control(&cmd, &m, &g, &mut s1, &p, 1e-3);
                let b = virtual_control(&cmd_m, &m_m, &g, &mut s2, &p, 1e-3);
                prop_assert_eq!(a.traction(), b.traction());
                prop_assert_eq!(a.pitch(), b.pitch());
                prop_assert_eq!(a.lateral(), -b.lateral());
                prop_assert_eq!(a.yaw(), -b.yaw());
                prop_assert_eq!(a.roll(), -b.roll());
            }
        }

        #[test]
        fn accumulators_stay_bounded(
            errs in proptest::collection::vec((-1e5f64..1e5, -5.0f64..5.0, -2.0f64..2.0, -1.0f64..1.0, -1.0f64..1.0), 1..200),
            dt in 1e-4f64..0.5,
        ) {
            let p = VehicleParams::default();
            let g = Gains::default();
            let w = g.windup;
            let mut s = ControllerState::default();
            for (f, r, beta, roll, pitch) in errs {
                let cmd = DriverCommand { steer: 0.1, pedal: f, brake: 0.0 };
                let m = Measurements { speed: 15.0, side_slip: beta, yaw_rate: r, roll, pitch, ..Default::default() };
                virtual_control(&cmd, &m, &g, &mut s, &p, dt);
                baseline_step(&cmd, &m, &p.static_loads(), &g, &mut s, &p, dt);
                prop_assert!(s.force.abs() <= w.force && s.baseline_force.abs() <= w.force);
                prop_assert!(s.yaw_rate.abs() <= w.yaw_rate);
                prop_assert!(s.side_slip.abs() <= w.side_slip);
                prop_assert!(s.roll.abs() <= w.roll && s.baseline_roll.abs() <= w.roll);
                prop_assert!(s.pitch.abs() <= w.pitch && s.baseline_pitch.abs() <= w.pitch);
            }
        }
    }
}
