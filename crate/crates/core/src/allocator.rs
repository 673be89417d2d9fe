//! Adaptive control allocation with parameter projection.
//!
//! An auxiliary state `ξ̇ = A_m ξ + realized − v` is driven toward the
//! reference model `ξ̇_m = A_m ξ_m`. The allocation matrix `θ` (virtual
//! channels × actuators) adapts with `θ̇ = −γ v eᵀ P B`, `e = ξ − ξ_m`,
//! projected onto a per-entry box, and the actuator command is `ū = θᵀ v`.
//! No estimate of actuator effectiveness is formed.
//!
//! [`AdaptiveLaw`] works on any dimensions; [`Allocator`] wraps it for the
//! vehicle with channel scaling, the time-varying normalization and the
//! driver's steering feed-through.

use nalgebra::{DMatrix, DVector, SMatrix};

use crate::controllers::VirtualControl;
use crate::linear::{build_bl, Normalization, DEFAULT_CORNERING_GAIN};
use crate::params::VehicleParams;
use crate::plant::{ActuatorVector, PlantOutputs};
use crate::{Error, Result};

/// Largest real part of the eigenvalues of a square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
}

fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    (a - a.transpose()).amax() <= tol * a.amax().max(1.0)
}

fn is_spd(a: &DMatrix<f64>) -> bool {
    is_symmetric(a, 1e-12) && a.clone().cholesky().is_some()
}

/// Solves `Aᵀ P + P A = −Q` for symmetric positive definite `P`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::InvalidParameter { name: "lyapunov dimensions", value: n as f64 });
    }
    let max_real = spectral_abscissa(a);
    if !(max_real < 0.0) {
        return Err(Error::NotHurwitz { max_real });
    }
    if !is_spd(q) {
        return Err(Error::NotPositiveDefinite);
    }
    // Column-major vec: vec(AᵀP) = (I ⊗ Aᵀ) vec P, vec(PA) = (Aᵀ ⊗ I) vec P.
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let vec_p = k.lu().solve(&rhs).ok_or(Error::NotHurwitz { max_real })?;
    let p = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    if p.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(p)
}

/// Minimum-norm initial allocation: returns `θ₀` with `θ₀ᵀ = Bᵀ (B Bᵀ)⁻¹`,
/// so `B θ₀ᵀ = I`.
pub fn init_theta(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = b.shape();
    if n > m {
        return Err(Error::RankDeficient);
    }
    let sv = b.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if !(hi > 0.0 && lo > 1e-10 * hi) {
        return Err(Error::RankDeficient);
    }
    let gram = b * b.transpose();
    let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
    Ok(inv * b)
}

/// Minimum-norm `θ*` with `B Λ θ*ᵀ = I`, for a known diagonal `Λ`.
pub fn ideal_theta(b: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<DMatrix<f64>> {
    let bl = b * DMatrix::from_diagonal(lambda);
    init_theta(&bl)
}

/// Smooth box projection of an adaptation rate.
///
/// Inside a boundary layer of `layer × box width` next to a bound, the
/// outward component of the rate is scaled down linearly, reaching zero at
/// the bound. Inward rates pass unchanged.
pub fn project(theta: &DMatrix<f64>, rate: &DMatrix<f64>, bounds: &DMatrix<f64>, layer: f64) -> DMatrix<f64> {
    let mut out = rate.clone();
    for ((r, &t), &b) in out.iter_mut().zip(theta.iter()).zip(bounds.iter()) {
        let band = layer * 2.0 * b;
        let start = b - band;
        if t.abs() > start && *r * t > 0.0 {
            let f = if band > 0.0 && t.abs() < b { (t.abs() - start) / band } else { 1.0 };
            *r *= 1.0 - f;
        }
    }
    out
}

/// Projection settings of an [`AdaptiveLaw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionBox {
    /// Bound as a multiple of `|θ₀|` per entry.
    pub factor: f64,
    /// Lower limit on any bound, covers `θ₀` entries that are zero.
    pub absolute: f64,
    /// Boundary-layer fraction of the box width.
    pub layer: f64,
}

impl Default for ProjectionBox {
    fn default() -> Self {
        Self { factor: 50.0, absolute: 10.0, layer: 0.05 }
    }
}

/// Dimension-generic adaptive allocation law.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveLaw {
    pub a_m: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub gamma: f64,
    /// Nominal effectiveness, channels × actuators.
    pub b: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub bounds: DMatrix<f64>,
    pub layer: f64,
    /// Divide the adaptation rate by `1 + vᵀv`. Keeps the discrete update
    /// stable when the demand is large.
    pub normalized: bool,
    pub xi: DVector<f64>,
    pub xi_m: DVector<f64>,
}

impl AdaptiveLaw {
    pub fn new(a_m: DMatrix<f64>, q: &DMatrix<f64>, gamma: f64, b: DMatrix<f64>, projection: ProjectionBox) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter { name: "gamma", value: gamma });
        }
        if b.nrows() != a_m.nrows() {
            return Err(Error::InvalidParameter { name: "effectiveness rows", value: b.nrows() as f64 });
        }
        let p = solve_lyapunov(&a_m, q)?;
        let theta = init_theta(&b)?;
        let bounds = theta.map(|t| (projection.factor * t.abs()).max(projection.absolute));
        let theta = theta.zip_map(&bounds, |t, bd| t.clamp(-bd, bd));
        let n = a_m.nrows();
        Ok(Self {
            a_m,
            p,
            gamma,
            b,
            theta,
            bounds,
            layer: projection.layer,
            normalized: true,
            xi: DVector::zeros(n),
            xi_m: DVector::zeros(n),
        })
    }

    /// Allocation error `e = ξ − ξ_m`.
    pub fn error(&self) -> DVector<f64> {
        &self.xi - &self.xi_m
    }

    /// Adaptation rate used for demand `v`.
    pub fn rate(&self, v: &DVector<f64>) -> f64 {
        if self.normalized {
            self.gamma / (1.0 + v.norm_squared())
        } else {
            self.gamma
        }
    }

    /// Current command `θᵀ v`.
    pub fn command(&self, v: &DVector<f64>) -> DVector<f64> {
        self.theta.tr_mul(v)
    }

    /// Advances `ξ`, `ξ_m` and `θ` by one explicit Euler step and returns
    /// the new command `ū = θᵀ v`.
    pub fn step(&mut self, v: &DVector<f64>, realized: &DVector<f64>, dt: f64) -> DVector<f64> {
        let dxi = &self.a_m * &self.xi + realized - v;
        let dxi_m = &self.a_m * &self.xi_m;
        self.xi += dxi * dt;
        self.xi_m += dxi_m * dt;
        let e = self.error();
        let raw = -(v * (e.transpose() * &self.p * &self.b));
        let rate = project(&self.theta, &raw, &self.bounds, self.layer);
        self.theta += rate * (self.rate(v) * dt);
        let bounds = &self.bounds;
        self.theta.zip_apply(bounds, |t, b| *t = t.clamp(-b, b));
        self.command(v)
    }

    /// `V = eᵀ P e + γ⁻¹ tr(θ̃ Λ θ̃ᵀ)` with `θ̃ = θ − θ*`, for a constant
    /// demand `v` (which sets the normalized rate).
    pub fn lyapunov(&self, theta_star: &DMatrix<f64>, lambda: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let e = self.error();
        let dt = &self.theta - theta_star;
        let quad = (e.transpose() * &self.p * &e)[(0, 0)];
        let tr = (&dt * DMatrix::from_diagonal(lambda) * dt.transpose()).trace();
        quad + tr / self.rate(v)
    }
}

/// Configuration of the vehicle allocator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocatorConfig {
    pub a_m: SMatrix<f64, 5, 5>,
    pub q: SMatrix<f64, 5, 5>,
    pub gamma: f64,
    /// Normalize the adaptation rate by `1 + vᵀv` (scaled demand).
    pub normalized: bool,
    /// Typical magnitude of each virtual channel; channels are divided by it.
    pub channel_scale: [f64; 5],
    /// Typical magnitude of each normalized actuator command.
    pub actuator_scale: [f64; 12],
    pub projection: ProjectionBox,
    /// Channels taking part in allocation. Disabled channels are ignored in
    /// both the demand and the measurement.
    pub channels: [bool; 5],
    pub c_alpha: f64,
}

impl Default for AllocatorConfig {
    fn default() -> Self {
        let mut actuator_scale = [2.0; 12];
        actuator_scale[4..8].fill(2000.0);
        actuator_scale[8..].fill(4000.0);
        Self {
            a_m: SMatrix::identity() * -10.0,
            q: SMatrix::identity(),
            gamma: 4000.0,
            normalized: true,
            channel_scale: [10000.0, 10000.0, 10000.0, 4000.0, 4000.0],
            actuator_scale,
            projection: ProjectionBox::default(),
            channels: [true; 5],
            c_alpha: DEFAULT_CORNERING_GAIN,
        }
    }
}

impl AllocatorConfig {
    /// Allocation on the planar channels only; roll and pitch are left to
    /// an external suspension controller.
    pub fn planar(self) -> Self {
        Self { channels: [true, true, true, false, false], ..self }
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..5).filter(|&i| self.channels[i])
    }

    fn sub(&self, m: &SMatrix<f64, 5, 5>) -> DMatrix<f64> {
        let idx: alloc::vec::Vec<usize> = self.active().collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter { name: "gamma", value: self.gamma });
        }
        for s in self.channel_scale.iter().chain(self.actuator_scale.iter()) {
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter { name: "scale", value: *s });
            }
        }
        let p = &self.projection;
        if !(p.factor > 0.0 && p.absolute > 0.0 && (0.0..0.5).contains(&p.layer)) {
            return Err(Error::InvalidParameter { name: "projection", value: p.layer });
        }
        if self.active().next().is_none() {
            return Err(Error::InvalidParameter { name: "channels", value: 0.0 });
        }
        let a = DMatrix::from_column_slice(5, 5, self.a_m.as_slice());
        let max_real = spectral_abscissa(&a);
        if !(max_real < 0.0) {
            return Err(Error::NotHurwitz { max_real });
        }
        if !is_spd(&DMatrix::from_column_slice(5, 5, self.q.as_slice())) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(())
    }
}

/// Generalized forces realized by the plant, in virtual-channel order:
/// `[m a_x + drag, m a_y, I_z ψ̈, I_x φ̈ + m a_y h, I_y θ̈ + m a_x h]`.
///
/// These are the summed tire forces (less grade), the tire yaw moment, and
/// the suspension roll and pitch moments about the CoG.
pub fn measured_net(outputs: &PlantOutputs, vx: f64, params: &VehicleParams) -> [f64; 5] {
    let p = params;
    [
        p.m * outputs.ax + p.drag(vx),
        p.m * outputs.ay,
        p.i_z * outputs.yaw_accel,
        p.i_x * outputs.roll_accel + p.m * outputs.ay * p.h,
        p.i_y * outputs.pitch_accel + p.m * outputs.ax * p.h,
    ]
}

/// Outcome flags of the last allocator step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AllocatorStatus {
    /// The normalization was singular and the previous command was held.
    pub held: bool,
    /// Number of steps held so far.
    pub held_steps: usize,
}

/// Vehicle allocator: 5 virtual channels onto 12 actuators.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocator {
    pub config: AllocatorConfig,
    pub law: AdaptiveLaw,
    active: alloc::vec::Vec<usize>,
    u_ca: [f64; 12],
    pub status: AllocatorStatus,
    /// Scaled norm of `realized − v` seen by the last step.
    pub residual: f64,
}

impl Allocator {
    pub fn new(config: AllocatorConfig, params: &VehicleParams) -> Result<Self> {
        config.validate()?;
        let active: alloc::vec::Vec<usize> = config.active().collect();
        let bl = build_bl(params, config.c_alpha);
        let b = DMatrix::from_fn(active.len(), 12, |i, j| {
            let r = active[i];
            bl[(r, j)] * config.actuator_scale[j] / config.channel_scale[r]
        });
        let mut law = AdaptiveLaw::new(config.sub(&config.a_m), &config.sub(&config.q), config.gamma, b, config.projection)?;
        law.normalized = config.normalized;
        Ok(Self { config, law, active, u_ca: [0.0; 12], status: AllocatorStatus::default(), residual: 0.0 })
    }

    fn scaled(&self, x: &[f64; 5]) -> DVector<f64> {
        DVector::from_iterator(self.active.len(), self.active.iter().map(|&r| x[r] / self.config.channel_scale[r]))
    }

    /// One allocation step. `driver_steer` is added to both front wheels.
    pub fn step(
        &mut self,
        v: &VirtualControl,
        realized: &[f64; 5],
        b_n: &Normalization,
        driver_steer: f64,
        dt: f64,
    ) -> ActuatorVector {
        let vs = self.scaled(&v.0);
        let rs = self.scaled(realized);
        self.residual = (&rs - &vs).norm();
        let u_s = self.law.step(&vs, &rs, dt);
        let u_bar: [f64; 12] = core::array::from_fn(|j| u_s[j] * self.config.actuator_scale[j]);
        match b_n.solve(&u_bar) {
            Ok(u) => {
                self.u_ca = u;
                self.status.held = false;
            }
            Err(_) => {
                self.status.held = true;
                self.status.held_steps += 1;
            }
        }
        let mut u = self.u_ca;
        u[0] += driver_steer;
        u[1] += driver_steer;
        ActuatorVector(u)
    }

    /// Allocation command before the driver feed-through.
    pub fn allocation(&self) -> [f64; 12] {
        self.u_ca
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn lyapunov_diagonal_closed_form() {
        let a = DMatrix::<f64>::identity(5, 5) * -10.0;
        let p = solve_lyapunov(&a, &DMatrix::identity(5, 5)).unwrap();
        assert_eq!(p, DMatrix::<f64>::identity(5, 5) * 0.05);
        let p = solve_lyapunov(&(DMatrix::<f64>::identity(3, 3) * -4.0), &DMatrix::identity(3, 3)).unwrap();
        assert_abs_diff_eq!(p[(1, 1)], 0.125, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let shift = spectral_abscissa(&m) + rng.random_range(0.5..3.0);
            let a = m - DMatrix::identity(5, 5) * shift;
            let g = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let q = &g * g.transpose() + DMatrix::identity(5, 5);
            let p = solve_lyapunov(&a, &q).unwrap();
            let res = a.transpose() * &p + &p * &a + &q;
            assert!(res.norm() < 1e-9, "{}", res.norm());
            assert!(p.clone().cholesky().is_some());
        }
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![-1.0, 0.5]));
        assert!(matches!(solve_lyapunov(&a, &DMatrix::identity(2, 2)), Err(Error::NotHurwitz { .. })));
        let a = DMatrix::<f64>::identity(2, 2) * -1.0;
        assert_eq!(solve_lyapunov(&a, &(DMatrix::identity(2, 2) * -1.0)), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn init_theta_is_right_inverse() {
        let p = VehicleParams::default();
        let bl = build_bl(&p, 8.0);
        let b = DMatrix::from_column_slice(5, 12, bl.as_slice());
        let theta = init_theta(&b).unwrap();
        assert!((&b * theta.transpose() - DMatrix::<f64>::identity(5, 5)).norm() < 1e-9);
        let sq = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 4.0]);
        let t = init_theta(&sq).unwrap();
        assert!((t.transpose() - sq.try_inverse().unwrap()).norm() < 1e-12);
        let deficient = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(init_theta(&deficient), Err(Error::RankDeficient));
    }

    #[test]
    fn theta0_within_bounds() {
        let a = Allocator::new(AllocatorConfig::default(), &VehicleParams::default()).unwrap();
        let l = &a.law;
        assert!(l.theta.iter().zip(l.bounds.iter()).all(|(t, b)| t.abs() <= *b));
    }

    #[test]
    fn zero_error_freezes_theta() {
        let a = DMatrix::<f64>::identity(5, 5) * -10.0;
        let b = DMatrix::from_fn(5, 7, |i, j| if i == j { 1.0 } else { 0.1 * (i + j) as f64 });
        let mut law = AdaptiveLaw::new(a, &DMatrix::identity(5, 5), 100.0, b, ProjectionBox::default()).unwrap();
        let before = law.theta.clone();
        let v = DVector::from_vec(alloc::vec![1.0, 0.0, -1.0, 0.5, 0.2]);
        law.step(&v, &v, 1e-3);
        assert_eq!(law.theta, before);
        assert_eq!(law.error(), DVector::zeros(5));
    }

    #[test]
    fn normalized_rate_shrinks_with_demand() {
        let b = DMatrix::from_fn(2, 3, |i, j| if i == j { 1.0 } else { 0.2 });
        let mut law =
            AdaptiveLaw::new(DMatrix::identity(2, 2) * -10.0, &DMatrix::identity(2, 2), 50.0, b, ProjectionBox::default()).unwrap();
        let v = DVector::from_vec(alloc::vec![1.0, 2.0]);
        assert_eq!(law.rate(&DVector::zeros(2)), 50.0);
        assert_eq!(law.rate(&v), 50.0 / 6.0);
        law.normalized = false;
        assert_eq!(law.rate(&v), 50.0);
    }

    #[test]
    fn projection_stops_outward_motion_at_bound() {
        let theta = DMatrix::from_row_slice(1, 3, &[2.0, 2.0, 0.0]);
        let bounds = DMatrix::from_element(1, 3, 2.0);
        let rate = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 1.0]);
        let out = project(&theta, &rate, &bounds, 0.05);
        assert_eq!(out.as_slice(), &[0.0, -1.0, 1.0]);
        // Halfway through the layer the outward rate is halved.
        let theta = DMatrix::from_element(1, 1, 1.9);
        let out = project(&theta, &scalar(1.0), &scalar(2.0), 0.05);
        assert_abs_diff_eq!(out[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn scalar_sanity_case() {
        let mut law = AdaptiveLaw::new(scalar(-10.0), &scalar(1.0), 2000.0, scalar(1.0), ProjectionBox::default()).unwrap();
        let v = DVector::from_element(1, 1.0);
        let mut u = law.command(&v);
        assert_eq!(u[0], 1.0);
        let dt = 1e-3;
        for _ in 0..20_000 {
            let realized = u.clone() * 0.5;
            u = law.step(&v, &realized, dt);
        }
        assert_abs_diff_eq!(u[0], 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(0.5 * u[0], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn scalar_error_dynamics_consistency() {
        let (lambda, dt) = (0.5, 1e-3);
        let mut law = AdaptiveLaw::new(scalar(-10.0), &scalar(1.0), 50.0, scalar(1.0), ProjectionBox::default()).unwrap();
        let v = DVector::from_element(1, 1.0);
        let theta_star = 1.0 / lambda;
        let mut u = law.command(&v);
        let mut worst: f64 = 0.0;
        for _ in 0..3000 {
            let e0 = law.error()[0];
            let theta0 = law.theta[(0, 0)];
            u = law.step(&v, &(u.clone() * lambda), dt);
            let de = (law.error()[0] - e0) / dt;
            let predicted = -10.0 * e0 + lambda * (theta0 - theta_star) * v[0];
            worst = worst.max((de - predicted).abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    fn bench(lambda: &DVector<f64>, v: &DVector<f64>, seconds: f64) -> (AdaptiveLaw, DVector<f64>, alloc::vec::Vec<f64>, f64) {
        let p = VehicleParams::default();
        let alloc = Allocator::new(AllocatorConfig::default(), &p).unwrap();
        let mut law = alloc.law;
        let b = law.b.clone();
        let star = ideal_theta(&b, lambda).unwrap();
        let dt = 1e-3;
        let mut u = law.command(v);
        let mut values = alloc::vec![law.lyapunov(&star, lambda, v)];
        for _ in 0..(seconds / dt) as usize {
            let realized = &b * lambda.component_mul(&u);
            u = law.step(v, &realized, dt);
            values.push(law.lyapunov(&star, lambda, v));
        }
        let residual = (&b * lambda.component_mul(&u) - v).norm() / v.norm();
        (law, u, values, residual)
    }

    #[test]
    fn allocation_converges_for_random_effectiveness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let lambda = DVector::from_fn(12, |_, _| rng.random_range(0.1..1.0));
            let v = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let (_, _, values, residual) = bench(&lambda, &v, 2.0);
            assert!(residual < 0.02, "residual {residual}");
            for w in values.windows(2) {
                assert!(w[1] <= w[0] + 1e-6, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn reference_model_stays_at_rest() {
        let (law, ..) = bench(&DVector::from_element(12, 0.3), &DVector::from_element(5, 0.5), 0.5);
        assert_eq!(law.xi_m, DVector::zeros(5));
    }

    #[test]
    fn measured_net_at_rest_is_zero() {
        let p = VehicleParams::default();
        let (_, out) = crate::plant::evaluate(&Default::default(), &Default::default(), &p);
        assert_eq!(measured_net(&out, 0.0, &p), [0.0; 5]);
    }

    #[test]
    fn measured_net_traction() {
        // Driving torques balanced by tire force: the first channel is the
        // total tire force.
        use crate::plant::{PlantInputs, PlantState};
        let p = VehicleParams { c_d: 0.0, ..Default::default() };
        let s = PlantState { wheel_speed: [20.0 * 1.03 / p.r_w; 4], ..PlantState::cruising(20.0, p.r_w) };
        let (_, out) = crate::plant::evaluate(&s, &PlantInputs::default(), &p);
        let net = measured_net(&out, s.vx, &p);
        let total: f64 = out.tires.iter().map(|t| t.fx).sum();
        assert_abs_diff_eq!(net[0], total, epsilon = 1e-9);
        assert!(net[0] > 0.0);
    }

    #[test]
    fn singular_normalization_holds_command() {
        use crate::linear::build_bn;
        let p = VehicleParams::default();
        let mut a = Allocator::new(AllocatorConfig::default(), &p).unwrap();
        let bn = build_bn(&[0.0; 4], &p.static_loads(), &p);
        let v = VirtualControl([1000.0, 500.0, 200.0, 100.0, -300.0]);
        let u1 = a.step(&v, &[0.0; 5], &bn, 0.0, 1e-3);
        let bad = build_bn(&[core::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0], &p.static_loads(), &p);
        let u2 = a.step(&v, &[0.0; 5], &bad, 0.1, 1e-3);
        assert!(a.status.held);
        assert_eq!(a.status.held_steps, 1);
        assert_eq!(u2.0[0], u1.0[0] + 0.1);
        assert_eq!(u2.0[5], u1.0[5]);
    }

    #[test]
    fn nominal_allocation_reproduces_demand() {
        // With Λ = I the initial allocation realizes v exactly.
        use crate::linear::build_bn;
        let p = VehicleParams::default();
        let mut a = Allocator::new(AllocatorConfig::default(), &p).unwrap();
        let bn = build_bn(&[0.02, 0.02, 0.0, 0.0], &[3400.0, 3600.0, 2800.0, 2900.0], &p);
        let v = VirtualControl([1200.0, -800.0, 400.0, 150.0, -600.0]);
        let u = a.step(&v, &v.0, &bn, 0.0, 1e-3);
        let u_bar = bn.apply(&u.0);
        let bl = build_bl(&p, 8.0);
        let realized = bl * nalgebra::SVector::<f64, 12>::from(u_bar);
        for i in 0..5 {
            assert_abs_diff_eq!(realized[i], v.0[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn planar_config_ignores_suspension() {
        let p = VehicleParams::default();
        let a = Allocator::new(AllocatorConfig::default().planar(), &p).unwrap();
        assert_eq!(a.law.theta.nrows(), 3);
        assert!(a.law.theta.columns(8, 4).iter().all(|&t| t == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = AllocatorConfig::default();
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        let mut c = AllocatorConfig::default();
        c.a_m[(2, 2)] = 1.0;
        assert!(matches!(c.validate(), Err(Error::NotHurwitz { .. })));
        let mut c = AllocatorConfig::default();
        c.channels = [false; 5];
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn theta_never_leaves_box(
            seq in proptest::collection::vec((proptest::array::uniform5(-50.0f64..50.0), proptest::array::uniform5(-50.0f64..50.0)), 1..100),
            dt in 1e-4f64..1e-2,
        ) {
            let p = VehicleParams::default();
            let mut law = Allocator::new(AllocatorConfig::default(), &p).unwrap().law;
            for (v, r) in seq {
                law.step(&DVector::from_row_slice(&v), &DVector::from_row_slice(&r), dt);
                prop_assert!(law.theta.iter().zip(law.bounds.iter()).all(|(t, b)| t.abs() <= *b));
            }
        }
    }
}
