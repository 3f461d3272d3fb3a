//! Adaptive Dormand-Prince 5(4) integrator used as a ground-truth oracle.
//!
//! Works on flat `Vec<f64>` states so it can integrate the unsplit lattice
//! equations as well as single-spin problems.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `f(t, y, dy)` must write the derivative into `dy`.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    tol: Tolerance,
) -> Result<Vec<f64>, ReferenceError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    if t1 == t0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    let mut t = t0;
    f(t, &y, &mut k1);
    let mut h = initial_step(&y, &k1, tol, span);
    let mut steps = 0usize;

    while dir * (t1 - t) > 0.0 {
        if steps >= tol.max_steps {
            return Err(ReferenceError::TooManySteps(tol.max_steps));
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        for i in 0..dim {
            tmp[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &tmp, &mut k4);
        for i in 0..dim {
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &tmp, &mut k5);
        for i in 0..dim {
            tmp[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + hs, &tmp, &mut k6);
        for i in 0..dim {
            y_new[i] = y[i]
                + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + hs, &y_new, &mut k7);

        let mut err = 0.0f64;
        for i in 0..dim {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            if h.abs() < 1e-300 {
                return Err(ReferenceError::NonFinite(t));
            }
            h *= 0.1;
            continue;
        }

        steps += 1;
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            std::mem::swap(&mut y, &mut y_new);
            // First-same-as-last.
            std::mem::swap(&mut k1, &mut k7);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * span.max(t.abs()) {
                return Err(ReferenceError::StepUnderflow { t, h });
            }
        }
    }
    Ok(y)
}

fn initial_step(y: &[f64], dy: &[f64], tol: Tolerance, span: f64) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for (yi, fi) in y.iter().zip(dy) {
        let sc = tol.atol + tol.rtol * yi.abs();
        d0 = d0.max((yi / sc).abs());
        d1 = d1.max((fi / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let y = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            10.0,
            &[1.0, 0.0],
            Tolerance::default(),
        )
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn backward_in_time() {
        let y = integrate(|_, y, dy| dy[0] = y[0], 1.0, 0.0, &[1f64.exp()], Tolerance::default()).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = 3 t^2  =>  y(2) = 8
        let y = integrate(|t, _, dy| dy[0] = 3.0 * t * t, 0.0, 2.0, &[0.0], Tolerance::default()).unwrap();
        assert!((y[0] - 8.0).abs() < 1e-11);
    }
}
