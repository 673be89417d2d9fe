//! Planar body and wheel-spin dynamics.

use libm::sin;

use crate::params::{VehicleParams, GRAVITY};

/// Longitudinal and lateral accelerations from the summed body-frame tire
/// forces, with drag taken at airspeed `vx` (no wind) and road slope `slope`.
pub fn body_accelerations(vx: f64, fx_total: f64, fy_total: f64, params: &VehicleParams, slope: f64) -> (f64, f64) {
    let ax = (fx_total - params.drag(vx) - params.m * GRAVITY * sin(slope)) / params.m;
    let ay = fy_total / params.m;
    (ax, ay)
}

/// Yaw acceleration from body-frame tire forces in corner order.
pub fn yaw_acceleration(fx: &[f64; 4], fy: &[f64; 4], params: &VehicleParams) -> f64 {
    let half = 0.5 * params.w;
    let moment = half * (fx[1] + fx[3] - fx[0] - fx[2]) + params.a * (fy[0] + fy[1]) - params.b * (fy[2] + fy[3]);
    moment / params.i_z
}

/// Wheel angular acceleration: drive torque minus brake, rolling resistance
/// and the tire longitudinal force reaction.
pub fn wheel_spin_derivative(torque: f64, brake: f64, rolling: f64, fx_tire: f64, params: &VehicleParams) -> f64 {
    (torque - brake - rolling - fx_tire * params.r_w) / params.i_w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn at_rest_no_acceleration() {
        assert_eq!(body_accelerations(0.0, 0.0, 0.0, &VehicleParams::default(), 0.0), (0.0, 0.0));
    }

    #[test]
    fn drag_deceleration_and_lateral_ratio() {
        let p = VehicleParams::default();
        let (ax, _) = body_accelerations(20.0, 0.0, 0.0, &p, 0.0);
        assert_abs_diff_eq!(ax * p.m, -161.7, epsilon = 1e-9);
        let (_, ay) = body_accelerations(0.0, 0.0, 1300.0, &p, 0.0);
        assert_abs_diff_eq!(ay, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn uphill_slope_decelerates() {
        let p = VehicleParams::default();
        let (ax, _) = body_accelerations(0.0, 0.0, 0.0, &p, 0.1);
        assert_abs_diff_eq!(ax, -GRAVITY * libm::sin(0.1), epsilon = 1e-12);
    }

    #[test]
    fn yaw_moment_arms() {
        let p = VehicleParams::default();
        assert_eq!(yaw_acceleration(&[100.0; 4], &[0.0; 4], &p), 0.0);
        // Lateral forces balanced about the CoG: a * F_front = b * F_rear.
        let ff = 100.0;
        let fr = ff * p.a / p.b;
        assert_abs_diff_eq!(yaw_acceleration(&[0.0; 4], &[ff, ff, fr, fr], &p), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(yaw_acceleration(&[0.0, 100.0, 0.0, 0.0], &[0.0; 4], &p), 0.061538461538, epsilon = 1e-11);
        assert_abs_diff_eq!(yaw_acceleration(&[0.0; 4], &[100.0, 100.0, 0.0, 0.0], &p), 0.173076923077, epsilon = 1e-11);
    }

    #[test]
    fn wheel_spin_balance() {
        let p = VehicleParams::default();
        assert_eq!(wheel_spin_derivative(0.0, 0.0, 0.0, 0.0, &p), 0.0);
        assert_abs_diff_eq!(wheel_spin_derivative(100.0, 0.0, 0.0, 200.0, &p), 12.592592592592, epsilon = 1e-10);
        assert_abs_diff_eq!(wheel_spin_derivative(10.0 + 5.0 + 200.0 * 0.33, 10.0, 5.0, 200.0, &p), 0.0, epsilon = 1e-12);
    }
}
