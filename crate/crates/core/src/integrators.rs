//! Splitting integrators built from the exact sub-flows, and the projected
//! RK4 baseline.
//!
//! The lattice is split by site parity. During a sub-flow acting on one
//! parity class the other class is frozen, so every effective field it sees
//! is constant and the single-spin closed forms apply exactly. All
//! compositions are symmetric, hence second order and time reversible.

use crate::fields::FieldCoefficients;
use crate::flows::{alpha_rate_unchecked, gilbert_flow, precession_flow, FlowError};
use crate::lattice::{ModelParams, Parity, ParitySites, SpinLattice};
use crate::vec3::Vec3;

/// Spin lattice together with the thermostat variable `alpha`.
///
/// For the conservative and dissipative schemes `alpha` is carried along
/// untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoState {
    pub lattice: SpinLattice,
    pub alpha: f64,
}

impl ThermoState {
    pub fn new(lattice: SpinLattice, alpha: f64) -> Self {
        ThermoState { lattice, alpha }
    }

    /// The reversing symmetry `(z, alpha) -> (-z, -alpha)`.
    pub fn reflect(&mut self) {
        self.lattice.negate();
        self.alpha = -self.alpha;
    }

    /// Max-norm distance over all spin components and `alpha`.
    pub fn max_abs_diff(&self, other: &ThermoState) -> f64 {
        self.lattice
            .max_abs_diff(&other.lattice)
            .max((self.alpha - other.alpha).abs())
    }

    /// `[x11, y11, z11, x12, ..., z_nn, alpha]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.lattice.spins().len() + 1);
        for s in self.lattice.spins() {
            v.extend_from_slice(&s.to_array());
        }
        v.push(self.alpha);
        v
    }

    /// Inverse of [`ThermoState::to_flat`], keeping the lattice shape and
    /// boundary condition of `self`. No renormalization is applied.
    pub fn with_flat(&self, y: &[f64]) -> ThermoState {
        let mut out = self.clone();
        write_flat_spins(out.lattice.spins_mut(), y);
        out.alpha = y[y.len() - 1];
        out
    }
}

fn write_flat_spins(spins: &mut [Vec3], y: &[f64]) {
    for (k, s) in spins.iter_mut().enumerate() {
        *s = Vec3::new(y[3 * k], y[3 * k + 1], y[3 * k + 2]);
    }
}

/// The continuous model being integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    /// `z' = z x B`.
    Conservative,
    /// `z' = z x B + alpha0 z x (z x B)`.
    Dissipative,
    /// `z' = z x B + alpha z x (z x B)` with the thermostat equation for `alpha`.
    Thermostatted,
}

impl Dynamics {
    pub fn check(self, p: &ModelParams) -> Result<(), FlowError> {
        if self == Dynamics::Thermostatted && !(p.temperature > 0.0) {
            return Err(FlowError::NonPositiveTemperature(p.temperature));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Conservative,
    Dissipative,
    Thermostatted,
    Rk4Projected(Dynamics),
}

impl Scheme {
    pub fn dynamics(self) -> Dynamics {
        match self {
            Scheme::Conservative => Dynamics::Conservative,
            Scheme::Dissipative => Dynamics::Dissipative,
            Scheme::Thermostatted => Dynamics::Thermostatted,
            Scheme::Rk4Projected(d) => d,
        }
    }

    pub fn step(self, state: &mut ThermoState, p: &ModelParams, dt: f64) {
        match self {
            Scheme::Conservative => conservative_step(state, p, dt),
            Scheme::Dissipative => dissipative_step(state, p, dt),
            Scheme::Thermostatted => thermostat_step(state, p, dt),
            Scheme::Rk4Projected(d) => rk4_projected_step(state, p, d, dt),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Conservative => "conservative",
            Scheme::Dissipative => "dissipative",
            Scheme::Thermostatted => "thermostat",
            Scheme::Rk4Projected(Dynamics::Conservative) => "rk4-conservative",
            Scheme::Rk4Projected(Dynamics::Dissipative) => "rk4-dissipative",
            Scheme::Rk4Projected(Dynamics::Thermostatted) => "rk4",
        }
    }
}

/// The five elementary vector fields of the splitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubFlow {
    /// Precession of even sites.
    V1,
    /// Precession of odd sites.
    V2,
    /// Gilbert damping of even sites.
    V3,
    /// Gilbert damping of odd sites.
    V4,
    /// Thermostat variable with all spins frozen.
    V5,
}

/// Where the damping coefficient of V3/V4 comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Damping {
    /// `p.alpha0`.
    Constant,
    /// The evolving `state.alpha`.
    Thermostat,
}

/// Applies the exact flow of one sub-field for time `t`.
pub fn subflow(state: &mut ThermoState, p: &ModelParams, which: SubFlow, damping: Damping, t: f64) {
    let alpha = match damping {
        Damping::Constant => p.alpha0,
        Damping::Thermostat => state.alpha,
    };
    let coeffs = FieldCoefficients::new(p);
    match which {
        SubFlow::V1 => precess(&mut state.lattice, &coeffs, Parity::Even, t),
        SubFlow::V2 => precess(&mut state.lattice, &coeffs, Parity::Odd, t),
        SubFlow::V3 => damp(&mut state.lattice, &coeffs, Parity::Even, alpha, t),
        SubFlow::V4 => damp(&mut state.lattice, &coeffs, Parity::Odd, alpha, t),
        SubFlow::V5 => state.alpha += t * alpha_rate_unchecked(&state.lattice, p),
    }
}

fn precess(lat: &mut SpinLattice, coeffs: &FieldCoefficients, parity: Parity, t: f64) {
    if t == 0.0 {
        return;
    }
    // Neighbours of one parity class all belong to the other class, so
    // updating in place reads only frozen spins.
    for (i, j) in ParitySites::new(lat.n(), parity) {
        let b = coeffs.field(lat, i, j);
        let z = precession_flow(lat.at(i, j), b, t);
        lat.set_at(i, j, z);
    }
}

fn damp(lat: &mut SpinLattice, coeffs: &FieldCoefficients, parity: Parity, alpha: f64, t: f64) {
    if t == 0.0 || alpha == 0.0 {
        return;
    }
    for (i, j) in ParitySites::new(lat.n(), parity) {
        let b = coeffs.field(lat, i, j);
        let z = gilbert_flow(lat.at(i, j), b, alpha, t);
        lat.set_at(i, j, z);
    }
}

fn compose(state: &mut ThermoState, p: &ModelParams, damping: Damping, sequence: &[(SubFlow, f64)]) {
    for &(flow, t) in sequence {
        subflow(state, p, flow, damping, t);
    }
}

/// `Phi_{2,h/2} o Phi_{1,h} o Phi_{2,h/2}`.
pub fn conservative_step(state: &mut ThermoState, p: &ModelParams, dt: f64) {
    let h = 0.5 * dt;
    compose(
        state,
        p,
        Damping::Constant,
        &[(SubFlow::V2, h), (SubFlow::V1, dt), (SubFlow::V2, h)],
    );
}

/// `Phi_{4,h/2} o Phi_{3,h/2} o Phi_{2,h/2} o Phi_{1,h} o Phi_{2,h/2} o Phi_{3,h/2} o Phi_{4,h/2}`
/// with constant damping `p.alpha0`.
pub fn dissipative_step(state: &mut ThermoState, p: &ModelParams, dt: f64) {
    let h = 0.5 * dt;
    compose(
        state,
        p,
        Damping::Constant,
        &[
            (SubFlow::V4, h),
            (SubFlow::V3, h),
            (SubFlow::V2, h),
            (SubFlow::V1, dt),
            (SubFlow::V2, h),
            (SubFlow::V3, h),
            (SubFlow::V4, h),
        ],
    );
}

/// Nine-stage symmetric composition with the thermostat update in the middle:
/// `Phi_1 o Phi_2 o Phi_3 o Phi_4 o Phi_{5,h} o Phi_4 o Phi_3 o Phi_2 o Phi_1`,
/// each outer flow over `h/2`.
pub fn thermostat_step(state: &mut ThermoState, p: &ModelParams, dt: f64) {
    let h = 0.5 * dt;
    compose(
        state,
        p,
        Damping::Thermostat,
        &[
            (SubFlow::V1, h),
            (SubFlow::V2, h),
            (SubFlow::V3, h),
            (SubFlow::V4, h),
            (SubFlow::V5, dt),
            (SubFlow::V4, h),
            (SubFlow::V3, h),
            (SubFlow::V2, h),
            (SubFlow::V1, h),
        ],
    );
}

/// Evaluates the unsplit vector field. Spins are treated as unconstrained
/// vectors in R^3. Writes the spin derivatives into `dz` and returns the
/// derivative of `alpha` (zero unless thermostatted).
pub fn vector_field(
    lat: &SpinLattice,
    alpha: f64,
    p: &ModelParams,
    dynamics: Dynamics,
    dz: &mut [Vec3],
) -> f64 {
    let coeffs = FieldCoefficients::new(p);
    let damping = match dynamics {
        Dynamics::Conservative => 0.0,
        Dynamics::Dissipative => p.alpha0,
        Dynamics::Thermostatted => alpha,
    };
    let n = lat.n();
    let mut k = 0;
    for i in 1..=n {
        for j in 1..=n {
            let z = lat.at(i, j);
            let b = coeffs.field(lat, i, j);
            let w = z.cross(b);
            dz[k] = if damping == 0.0 { w } else { w + z.cross(w) * damping };
            k += 1;
        }
    }
    match dynamics {
        Dynamics::Thermostatted => alpha_rate_unchecked(lat, p),
        _ => 0.0,
    }
}

/// Flat-state right-hand side for the reference integrator.
pub fn flat_rhs<'a>(
    template: &'a ThermoState,
    p: &'a ModelParams,
    dynamics: Dynamics,
) -> impl FnMut(f64, &[f64], &mut [f64]) + 'a {
    let mut lat = template.lattice.clone();
    let mut dz = vec![Vec3::ZERO; lat.spins().len()];
    move |_t, y, dy| {
        write_flat_spins(lat.spins_mut(), y);
        let alpha = y[y.len() - 1];
        let da = vector_field(&lat, alpha, p, dynamics, &mut dz);
        for (k, d) in dz.iter().enumerate() {
            dy[3 * k] = d.x;
            dy[3 * k + 1] = d.y;
            dy[3 * k + 2] = d.z;
        }
        dy[y.len() - 1] = da;
    }
}

/// One classical RK4 step of the full coupled system followed by per-spin
/// normalization. `alpha` is not projected.
pub fn rk4_projected_step(state: &mut ThermoState, p: &ModelParams, dynamics: Dynamics, dt: f64) {
    let m = state.lattice.spins().len();
    let z0: Vec<Vec3> = state.lattice.spins().to_vec();
    let a0 = state.alpha;
    let mut stage = state.lattice.clone();
    let mut k = [vec![Vec3::ZERO; m], vec![Vec3::ZERO; m], vec![Vec3::ZERO; m], vec![Vec3::ZERO; m]];
    let mut ka = [0.0f64; 4];

    ka[0] = vector_field(&stage, a0, p, dynamics, &mut k[0]);
    for (s, frac) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
        let h = frac * dt;
        let (prev, rest) = k.split_at_mut(s);
        let kp = &prev[s - 1];
        for (dst, (z, d)) in stage.spins_mut().iter_mut().zip(z0.iter().zip(kp)) {
            *dst = *z + *d * h;
        }
        let a = a0 + h * ka[s - 1];
        ka[s] = vector_field(&stage, a, p, dynamics, &mut rest[0]);
    }

    let w = dt / 6.0;
    for (idx, s) in state.lattice.spins_mut().iter_mut().enumerate() {
        let inc = k[0][idx] + k[1][idx] * 2.0 + k[2][idx] * 2.0 + k[3][idx];
        let raw = z0[idx] + inc * w;
        *s = raw * (1.0 / raw.norm());
    }
    state.alpha = a0 + w * (ka[0] + 2.0 * ka[1] + 2.0 * ka[2] + ka[3]);
}

/// Deviation of `| |z| - 1 |` beyond which a state counts as blown up.
pub const BLOWUP_NORM_DEVIATION: f64 = 0.5;

/// True iff any spin component or `alpha` is non-finite, or any spin length
/// is off by more than [`BLOWUP_NORM_DEVIATION`].
pub fn detect_blowup(state: &ThermoState) -> bool {
    if !state.alpha.is_finite() {
        return true;
    }
    state
        .lattice
        .spins()
        .iter()
        .any(|s| !s.is_finite() || !((s.norm() - 1.0).abs() <= BLOWUP_NORM_DEVIATION))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::total_energy;
    use crate::lattice::{parity_sites, BoundaryCondition};

    fn example2(n: usize) -> ModelParams {
        ModelParams {
            temperature: 0.04,
            ..ModelParams::ferromagnet(n, 0.9)
        }
    }

    fn random_state(n: usize, seed: u64, alpha: f64) -> ThermoState {
        ThermoState::new(SpinLattice::random(n, seed, BoundaryCondition::Periodic).unwrap(), alpha)
    }

    #[test]
    fn v1_leaves_odd_sites_bitwise() {
        let p = example2(6);
        let mut s = random_state(6, 1, 0.3);
        let before = s.clone();
        subflow(&mut s, &p, SubFlow::V1, Damping::Thermostat, 0.37);
        for (i, j) in parity_sites(6, Parity::Odd) {
            assert_eq!(s.lattice.get(i, j).unwrap(), before.lattice.get(i, j).unwrap());
        }
        let changed = parity_sites(6, Parity::Even)
            .into_iter()
            .any(|(i, j)| s.lattice.get(i, j).unwrap() != before.lattice.get(i, j).unwrap());
        assert!(changed);
        assert_eq!(s.alpha, before.alpha);
    }

    #[test]
    fn v3_v4_touch_only_their_parity() {
        let p = ModelParams {
            alpha0: 0.7,
            ..example2(6)
        };
        let before = random_state(6, 2, 0.0);
        let mut s = before.clone();
        subflow(&mut s, &p, SubFlow::V4, Damping::Constant, 0.2);
        for (i, j) in parity_sites(6, Parity::Even) {
            assert_eq!(s.lattice.get(i, j).unwrap(), before.lattice.get(i, j).unwrap());
        }
    }

    #[test]
    fn v1_uniform_equilibrium() {
        let p = ModelParams {
            anisotropy: Vec3::ZERO,
            ..example2(4)
        };
        let lat = SpinLattice::uniform(4, Vec3::UP, BoundaryCondition::Periodic).unwrap();
        let mut s = ThermoState::new(lat, 0.0);
        let before = s.clone();
        subflow(&mut s, &p, SubFlow::V1, Damping::Constant, 0.9);
        assert_eq!(s, before);
    }

    #[test]
    fn v5_uniform_decrement() {
        let p = ModelParams {
            anisotropy: Vec3::ZERO,
            ..example2(50)
        };
        let lat = SpinLattice::uniform(50, Vec3::UP, BoundaryCondition::Periodic).unwrap();
        let mut s = ThermoState::new(lat, 1.5);
        subflow(&mut s, &p, SubFlow::V5, Damping::Thermostat, 0.01);
        assert!((s.alpha - (1.5 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_step_is_identity() {
        let p = ModelParams {
            alpha0: -0.5,
            ..example2(6)
        };
        for scheme in [Scheme::Conservative, Scheme::Dissipative, Scheme::Thermostatted] {
            let mut s = random_state(6, 3, 0.4);
            let before = s.clone();
            scheme.step(&mut s, &p, 0.0);
            assert_eq!(s, before, "{}", scheme.name());
        }
    }

    #[test]
    fn conservative_forward_backward() {
        let p = example2(8);
        let before = random_state(8, 4, 0.0);
        let mut s = before.clone();
        conservative_step(&mut s, &p, 0.1);
        conservative_step(&mut s, &p, -0.1);
        assert!(s.max_abs_diff(&before) <= 1e-13);
    }

    #[test]
    fn dissipative_without_damping_is_conservative() {
        let p = example2(8);
        for dt in [0.01, 0.05] {
            let mut a = random_state(8, 5, 0.0);
            let mut b = a.clone();
            dissipative_step(&mut a, &p, dt);
            conservative_step(&mut b, &p, dt);
            assert!(a.max_abs_diff(&b) <= 1e-12);
        }
    }

    #[test]
    fn thermostat_r_reversibility_single_step() {
        let p = example2(8);
        let before = random_state(8, 6, 0.8);
        let mut s = before.clone();
        thermostat_step(&mut s, &p, 0.01);
        s.reflect();
        thermostat_step(&mut s, &p, 0.01);
        s.reflect();
        assert!(s.max_abs_diff(&before) <= 1e-10);
    }

    #[test]
    fn splitting_preserves_lengths_and_uniform_energy() {
        let p = ModelParams {
            anisotropy: Vec3::new(1.0, 1.0, 1.0),
            ..example2(8)
        };
        let mut s = random_state(8, 7, 0.0);
        let e0 = total_energy(&s.lattice, &p);
        for _ in 0..500 {
            conservative_step(&mut s, &p, 0.1);
        }
        assert!(s.lattice.max_norm_drift() <= 1e-12);
        assert!(((total_energy(&s.lattice, &p) - e0) / e0).abs() <= 1e-10);
    }

    #[test]
    fn rk4_equilibrium_and_projection() {
        let p = ModelParams {
            anisotropy: Vec3::ZERO,
            ..example2(4)
        };
        let lat = SpinLattice::uniform(4, Vec3::UP, BoundaryCondition::Periodic).unwrap();
        let mut s = ThermoState::new(lat, 0.0);
        rk4_projected_step(&mut s, &p, Dynamics::Thermostatted, 0.05);
        assert!(s.lattice.spins().iter().all(|z| *z == Vec3::UP));
        // alpha' = -8/T is constant at equilibrium and integrated exactly.
        assert!((s.alpha + 0.05 * 8.0 / 0.04).abs() < 1e-12);

        let mut s = random_state(6, 8, 0.5);
        rk4_projected_step(&mut s, &example2(6), Dynamics::Thermostatted, 0.02);
        assert!(s.lattice.max_norm_drift() <= 1e-15);
    }

    #[test]
    fn blowup_detection() {
        let mut s = random_state(4, 9, 0.0);
        assert!(!detect_blowup(&s));
        s.alpha = f64::INFINITY;
        assert!(detect_blowup(&s));
        let mut s = random_state(4, 9, 0.0);
        s.lattice.set(2, 2, Vec3::new(f64::NAN, 0.0, 0.0)).unwrap();
        assert!(detect_blowup(&s));
        let mut s = random_state(4, 9, 0.0);
        s.lattice.set(2, 2, Vec3::new(0.0, 0.0, 1.6)).unwrap();
        assert!(detect_blowup(&s));
    }

    #[test]
    fn flat_round_trip() {
        let s = random_state(4, 10, -0.25);
        let back = s.with_flat(&s.to_flat());
        assert_eq!(back, s);
    }
}
