//! Tire kinematics and force generation.

use libm::{atan, cos, sin};

use super::state::PlantState;
use crate::params::{MagicCoeffs, VehicleParams};

/// Smallest speed magnitude allowed in a slip denominator, m/s.
pub const SLIP_SPEED_FLOOR: f64 = 0.1;

/// Pushes `x` away from zero to at least [`SLIP_SPEED_FLOOR`], keeping its sign
/// (zero maps to the positive floor).
pub fn regularize(x: f64) -> f64 {
    if x.abs() >= SLIP_SPEED_FLOOR {
        x
    } else if x < 0.0 {
        -SLIP_SPEED_FLOOR
    } else {
        SLIP_SPEED_FLOOR
    }
}

/// Longitudinal slip ratio, with the driving branch normalized by wheel
/// surface speed and the braking branch by vehicle speed. Clamped to [-1, 1].
pub fn longitudinal_slip(vx: f64, omega: f64, r_w: f64) -> f64 {
    let surface = omega * r_w;
    let driving = surface >= vx;
    let denom = if driving { regularize(surface) } else { regularize(vx) };
    ((surface - vx) / denom).clamp(-1.0, 1.0)
}

/// Slip angles of the four tires in corner order.
pub fn slip_angles(state: &PlantState, steer: &[f64; 4], params: &VehicleParams) -> [f64; 4] {
    let (gf, gr) = (params.front_hub_angle(), params.rear_hub_angle());
    let r = state.yaw_rate;
    let front_lat = state.vy + r * params.a * cos(gf);
    let rear_lat = state.vy - r * params.b * cos(gr);
    let front_long = r * params.a * sin(gf);
    let rear_long = r * params.b * sin(gr);
    [
        steer[0] - atan(front_lat / regularize(state.vx - front_long)),
        steer[1] - atan(front_lat / regularize(state.vx + front_long)),
        steer[2] - atan(rear_lat / regularize(state.vx - rear_long)),
        steer[3] - atan(rear_lat / regularize(state.vx + rear_long)),
    ]
}

/// Pacejka Magic Formula with peak `mu * normal`.
pub fn magic_formula(slip: f64, normal: f64, coeffs: &MagicCoeffs, mu: f64) -> f64 {
    let peak = mu * normal.max(0.0);
    let bs = coeffs.b * slip;
    peak * sin(coeffs.c * atan(bs - coeffs.e * (bs - atan(bs))))
}

/// Rolling resistance torque magnitude.
pub fn rolling_resistance(normal: f64, vx: f64, p0: f64, p1: f64, p2: f64) -> f64 {
    let v = vx / 30.0;
    normal * (p0 + p1 * v + p2 * v * v * v * v)
}

/// Rotates tire-frame forces through the steering angle into the body frame.
pub fn wheel_frame_to_body(fx: f64, fy: f64, steer: f64) -> (f64, f64) {
    let (s, c) = (sin(steer), cos(steer));
    (fx * c - fy * s, fy * c + fx * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn slip_zero_at_rolling_speed() {
        assert_eq!(longitudinal_slip(20.0, 20.0 / 0.33, 0.33), 0.0);
    }

    #[test]
    fn slip_driving_and_braking_branches() {
        assert_abs_diff_eq!(longitudinal_slip(20.0, 70.0, 0.33), 0.134199134, epsilon = 1e-8);
        assert_abs_diff_eq!(longitudinal_slip(20.0, 50.0, 0.33), -0.175, epsilon = 1e-12);
    }

    #[test]
    fn slip_is_finite_at_standstill() {
        assert_eq!(longitudinal_slip(0.0, 0.0, 0.33), 0.0);
        assert!(longitudinal_slip(0.0, 1.0, 0.33).is_finite());
        assert_eq!(longitudinal_slip(5.0, 0.0, 0.33), -1.0);
    }

    #[test]
    fn straight_rolling_has_no_slip_angle() {
        let s = PlantState::cruising(20.0, 0.33);
        assert_eq!(slip_angles(&s, &[0.0; 4], &VehicleParams::default()), [0.0; 4]);
    }

    #[test]
    fn slip_angle_front_left_hand_value() {
        let p = VehicleParams::default();
        let s = PlantState { vx: 20.0, vy: 0.4, yaw_rate: 0.1, ..Default::default() };
        let alpha = slip_angles(&s, &[0.05, 0.0, 0.0, 0.0], &p);
        assert_abs_diff_eq!(alpha[0], 0.025340473991, epsilon = 1e-10);
    }

    #[test]
    fn pure_lateral_velocity_gives_equal_angles() {
        let s = PlantState { vx: 20.0, vy: 1.0, ..Default::default() };
        let alpha = slip_angles(&s, &[0.0; 4], &VehicleParams::default());
        for a in alpha {
            assert_abs_diff_eq!(a, -libm::atan(1.0 / 20.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn magic_formula_scalar_value() {
        // D = 3500 with mu = 1 and N = 3500.
        let c = MagicCoeffs { b: 10.0, c: 1.9, e: 0.97 };
        assert_abs_diff_eq!(magic_formula(0.1, 3500.0, &c, 1.0), 3345.447360794494, epsilon = 1e-9);
        assert_eq!(magic_formula(0.0, 3500.0, &c, 1.0), 0.0);
    }

    #[test]
    fn rolling_resistance_values() {
        assert_eq!(rolling_resistance(0.0, 20.0, 0.009, 0.002, 0.0003), 0.0);
        assert_abs_diff_eq!(rolling_resistance(3000.0, 0.0, 0.009, 0.002, 0.0003), 27.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rolling_resistance(3000.0, 30.0, 0.009, 0.002, 0.0003), 33.9, epsilon = 1e-12);
    }

    #[test]
    fn frame_rotation() {
        assert_eq!(wheel_frame_to_body(100.0, 50.0, 0.0), (100.0, 50.0));
        let (x, y) = wheel_frame_to_body(100.0, 50.0, core::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(x, -50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 100.0, epsilon = 1e-12);
        let (x, y) = wheel_frame_to_body(100.0, 50.0, 30f64.to_radians());
        assert_abs_diff_eq!(x, 61.60254037844388, epsilon = 1e-9);
        assert_abs_diff_eq!(y, 93.30127018922192, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn magic_formula_bounded_by_peak(slip in -2.0f64..2.0, n in 0.0f64..8000.0, mu in 0.1f64..1.5) {
            let p = VehicleParams::default();
            for c in [p.long, p.lat] {
                prop_assert!(magic_formula(slip, n, &c, mu).abs() <= mu * n + 1e-9);
            }
        }

        #[test]
        fn slip_sign_follows_branch(vx in 1.0f64..40.0, ratio in 0.5f64..1.5) {
            let omega = ratio * vx / 0.33;
            let s = longitudinal_slip(vx, omega, 0.33);
            if omega * 0.33 > vx {
                prop_assert!(s > 0.0);
            } else if omega * 0.33 < vx {
                prop_assert!(s < 0.0);
            }
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
