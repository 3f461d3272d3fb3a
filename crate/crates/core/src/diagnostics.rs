//! Time-series recording and verification harnesses.

use thiserror::Error;

use crate::fields::{max_laplacian_norm, total_energy};
use crate::flows::FlowError;
use crate::integrators::{detect_blowup, flat_rhs, Dynamics, Scheme, ThermoState};
use crate::lattice::{BoundaryCondition, LatticeError, ModelParams, SpinLattice};
use crate::reference::{self, ReferenceError, Tolerance};
use crate::vec3::Vec3;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("reference solver failed: {0}")]
    Reference(#[from] ReferenceError),
    #[error("record_every must be at least 1")]
    ZeroRecordInterval,
    #[error("need at least {0} step sizes")]
    TooFewStepSizes(usize),
    #[error("step size {dt} does not divide t_end = {t_end}")]
    IncommensurateStep { dt: f64, t_end: f64 },
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub alpha: f64,
    pub max_laplacian: f64,
    pub max_norm_drift: f64,
}

impl RunRecord {
    pub fn of(state: &ThermoState, p: &ModelParams, step: usize, dt: f64) -> Self {
        RunRecord {
            step,
            time: step as f64 * dt,
            energy: total_energy(&state.lattice, p),
            alpha: state.alpha,
            max_laplacian: max_laplacian_norm(&state.lattice),
            max_norm_drift: state.lattice.max_norm_drift(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub final_state: ThermoState,
    /// Step at which a blow-up was detected; the last record is taken there.
    pub halted_at: Option<usize>,
}

impl RunOutcome {
    pub fn blew_up(&self) -> bool {
        self.halted_at.is_some()
    }
}

/// Advances `steps` steps, recording at step 0, every `record_every` steps
/// and at the last step taken.
pub fn run(
    state: ThermoState,
    p: &ModelParams,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<RunOutcome, DiagnosticsError> {
    run_observed(state, p, scheme, dt, steps, record_every, |_, _| Ok(()))
}

/// Like [`run`], calling `observe(step, state)` after every step (and once
/// for step 0). An observer error aborts the run.
pub fn run_observed<F, E>(
    mut state: ThermoState,
    p: &ModelParams,
    scheme: Scheme,
    dt: f64,
    steps: usize,
    record_every: usize,
    mut observe: F,
) -> Result<RunOutcome, E>
where
    F: FnMut(usize, &ThermoState) -> Result<(), E>,
    E: From<DiagnosticsError>,
{
    if record_every == 0 {
        return Err(DiagnosticsError::ZeroRecordInterval.into());
    }
    scheme.dynamics().check(p).map_err(DiagnosticsError::from)?;

    let mut records = vec![RunRecord::of(&state, p, 0, dt)];
    observe(0, &state)?;
    let mut halted_at = None;
    for step in 1..=steps {
        scheme.step(&mut state, p, dt);
        if detect_blowup(&state) {
            records.push(RunRecord::of(&state, p, step, dt));
            halted_at = Some(step);
            break;
        }
        if step % record_every == 0 || step == steps {
            records.push(RunRecord::of(&state, p, step, dt));
        }
        observe(step, &state)?;
    }
    Ok(RunOutcome {
        records,
        final_state: state,
        halted_at,
    })
}

/// `max | s - R(Phi^n(R(Phi^n(s)))) |` where `R` negates spins and `alpha`.
pub fn reversibility_defect(state: &ThermoState, p: &ModelParams, scheme: Scheme, dt: f64, nsteps: usize) -> f64 {
    let mut s = state.clone();
    for _ in 0..nsteps {
        scheme.step(&mut s, p, dt);
    }
    s.reflect();
    for _ in 0..nsteps {
        scheme.step(&mut s, p, dt);
    }
    s.reflect();
    s.max_abs_diff(state)
}

/// `max | s - Phi_{-dt}^n(Phi_{dt}^n(s)) |`.
pub fn time_reversal_defect(state: &ThermoState, p: &ModelParams, scheme: Scheme, dt: f64, nsteps: usize) -> f64 {
    let mut s = state.clone();
    for _ in 0..nsteps {
        scheme.step(&mut s, p, dt);
    }
    for _ in 0..nsteps {
        scheme.step(&mut s, p, -dt);
    }
    s.max_abs_diff(state)
}

/// Integrates the unsplit equations from `state` over `[0, t_end]` with the
/// adaptive reference solver. Spins are renormalized afterwards.
pub fn reference_solution(
    state: &ThermoState,
    p: &ModelParams,
    dynamics: Dynamics,
    t_end: f64,
    tol: Tolerance,
) -> Result<ThermoState, DiagnosticsError> {
    dynamics.check(p)?;
    let y = reference::integrate(flat_rhs(state, p, dynamics), 0.0, t_end, &state.to_flat(), tol)?;
    let mut out = state.with_flat(&y);
    for s in out.lattice.spins_mut() {
        *s = s.normalized();
    }
    Ok(out)
}

/// Single spin under `z' = alpha z x (z x B)` integrated numerically.
pub fn gilbert_reference(z: Vec3, b: Vec3, alpha: f64, t: f64, tol: Tolerance) -> Result<Vec3, ReferenceError> {
    let y = reference::integrate(
        |_, y, dy| {
            let z = Vec3::new(y[0], y[1], y[2]);
            let d = z.cross(z.cross(b)) * alpha;
            dy.copy_from_slice(&d.to_array());
        },
        0.0,
        t,
        &z.to_array(),
        tol,
    )?;
    Ok(Vec3::new(y[0], y[1], y[2]))
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    /// `(dt, global error at t_end)` pairs.
    pub errors: Vec<(f64, f64)>,
    /// Least-squares slope of `log error` against `log dt`.
    pub order: f64,
}

/// Global errors at `t_end` for each `dt`, measured in max norm over all
/// spin components and `alpha` against the reference solution.
pub fn convergence_study(
    state: &ThermoState,
    p: &ModelParams,
    scheme: Scheme,
    t_end: f64,
    dts: &[f64],
) -> Result<ConvergenceStudy, DiagnosticsError> {
    if dts.len() < 3 {
        return Err(DiagnosticsError::TooFewStepSizes(3));
    }
    let reference = reference_solution(state, p, scheme.dynamics(), t_end, Tolerance::default())?;
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let steps = (t_end / dt).round();
        if !(steps >= 1.0) || ((steps * dt - t_end).abs() > 1e-9 * t_end.abs()) {
            return Err(DiagnosticsError::IncommensurateStep { dt, t_end });
        }
        let mut s = state.clone();
        for _ in 0..steps as usize {
            scheme.step(&mut s, p, dt);
        }
        errors.push((dt, s.max_abs_diff(&reference)));
    }
    let order = loglog_slope(&errors);
    Ok(ConvergenceStudy { errors, order })
}

pub fn convergence_order(
    state: &ThermoState,
    p: &ModelParams,
    scheme: Scheme,
    t_end: f64,
    dts: &[f64],
) -> Result<f64, DiagnosticsError> {
    convergence_study(state, p, scheme, t_end, dts).map(|c| c.order)
}

/// Least-squares slope through `(ln x, ln y)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), &(x, y)| {
        let dx = x.ln() - mx;
        (num + dx * (y.ln() - my), den + dx * dx)
    });
    num / den
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityScanResult {
    pub dt: f64,
    pub seed: u64,
    /// Time of the first blow-up, or the horizon if none occurred.
    pub survived_until: f64,
    pub blew_up: bool,
}

/// Runs every `(dt, seed)` combination from a random initial lattice until
/// blow-up or `horizon`. Results are ordered by `dt` (as given), then seed.
pub fn stability_scan(
    p: &ModelParams,
    scheme: Scheme,
    n: usize,
    bc: &BoundaryCondition,
    dts: &[f64],
    horizon: f64,
    seeds: &[u64],
) -> Result<Vec<StabilityScanResult>, DiagnosticsError> {
    if !(horizon > 0.0) {
        return Err(DiagnosticsError::BadHorizon(horizon));
    }
    scheme.dynamics().check(p)?;
    let mut out = Vec::with_capacity(dts.len() * seeds.len());
    for &dt in dts {
        for &seed in seeds {
            let lat = SpinLattice::random(n, seed, bc.clone())?;
            out.push(survival(ThermoState::new(lat, 0.0), p, scheme, dt, horizon, seed));
        }
    }
    Ok(out)
}

fn survival(mut state: ThermoState, p: &ModelParams, scheme: Scheme, dt: f64, horizon: f64, seed: u64) -> StabilityScanResult {
    let steps = (horizon / dt.abs()).ceil() as usize;
    for step in 1..=steps {
        scheme.step(&mut state, p, dt);
        if detect_blowup(&state) {
            return StabilityScanResult {
                dt,
                seed,
                survived_until: (step as f64 * dt.abs()).min(horizon),
                blew_up: true,
            };
        }
    }
    StabilityScanResult {
        dt,
        seed,
        survived_until: horizon,
        blew_up: false,
    }
}

/// True iff, for every seed, failure times do not decrease as `dt` shrinks.
pub fn failure_times_monotone(results: &[StabilityScanResult]) -> bool {
    let mut seeds: Vec<u64> = results.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds.iter().all(|&seed| {
        let mut rows: Vec<&StabilityScanResult> = results.iter().filter(|r| r.seed == seed).collect();
        rows.sort_by(|a, b| b.dt.abs().total_cmp(&a.dt.abs()));
        rows.windows(2).all(|w| w[1].survived_until >= w[0].survived_until)
    })
}

pub const DEFAULT_WINDOWS: [usize; 3] = [10, 100, 1000];

/// Means of `values` over consecutive non-overlapping windows of `window`
/// entries; a trailing partial window is dropped.
pub fn window_averages(values: &[f64], window: usize) -> Vec<f64> {
    if window == 0 {
        return Vec::new();
    }
    values
        .chunks_exact(window)
        .map(|c| c.iter().sum::<f64>() / window as f64)
        .collect()
}
