//! Exact solutions of the elementary single-spin vector fields.
//!
//! * precession `z' = z x B`, a rigid rotation about `-B`;
//! * Gilbert damping `z' = alpha z x (z x B)`, a rotation in the plane of
//!   `z` and `B` about the fixed axis `w0 = z(0) x B` by the angle `g |w0|`;
//! * the thermostat variable rate with all spins frozen.
//!
//! For the damping flow write `v = <z, B>`, `b = |B|`, `E = exp(alpha b t)`
//! and `C = sqrt((b - v0) / (b + v0))`. Then
//!
//! ```text
//! g(t) = (C^2 + 1) / (b C) * (atan C - atan(C E))
//! ```
//!
//! `C = tan(phi/2)` where `phi` is the angle between `z` and `B`, so `C`
//! vanishes as `z` aligns with `B` and diverges as it anti-aligns. The
//! difference of arctangents is always evaluated as a single arctangent, and
//! the two degenerate regimes use `1/C` or an `atan(u)/u` series instead of
//! dividing by a vanishing `C`.

use thiserror::Error;

use crate::fields::FieldCoefficients;
use crate::lattice::{ModelParams, SpinLattice};
use crate::vec3::Vec3;

/// `| |B| -+ v0 |` below which the damping angle switches to its expansions.
pub const BRANCH_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("field magnitude must be positive and finite, got {0}")]
    NonPositiveField(f64),
    #[error("|v0| = {v0} exceeds the field magnitude {bnorm}")]
    ProjectionTooLarge { v0: f64, bnorm: f64 },
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
}

/// Exact precession flow: rotation of `z` about `u = -B/|B|` by `|B| t`.
pub fn precession_flow(z: Vec3, b: Vec3, t: f64) -> Vec3 {
    let bnorm = b.norm();
    if bnorm == 0.0 || t == 0.0 {
        return z;
    }
    let u = b * (-1.0 / bnorm);
    let theta = bnorm * t;
    let (s, c) = theta.sin_cos();
    let par = u * u.dot(z);
    par + (z - par) * c + u.cross(z) * s
}

/// Which evaluation of the damping angle was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleBranch {
    /// Closed arctangent form with `C` of moderate size.
    Direct,
    /// `z` almost parallel to `B` (`C -> 0`).
    NearParallel,
    /// `z` almost antiparallel to `B` (`C -> infinity`).
    NearAntiparallel,
}

/// Intermediate quantities of the closed-form damping solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GilbertSolution {
    pub v0: f64,
    pub bnorm: f64,
    /// `sqrt((|B| - v0) / (|B| + v0))`; infinite when exactly antiparallel.
    pub c: f64,
    /// `exp(alpha |B| t)`, possibly overflowing to infinity.
    pub e: f64,
    pub g: f64,
    pub w0: Vec3,
    pub b: Vec3,
    pub branch: AngleBranch,
}

impl GilbertSolution {
    /// Solves `z' = alpha z x (z x B)` from `z` over time `t`.
    ///
    /// Returns `None` in the degenerate cases where `z` is a fixed point:
    /// `B = 0` or `z` parallel to `B`.
    pub fn new(z: Vec3, b: Vec3, alpha: f64, t: f64) -> Option<Self> {
        let bnorm = b.norm();
        let w0 = z.cross(b);
        let wnorm = w0.norm();
        if bnorm == 0.0 || wnorm == 0.0 || !bnorm.is_finite() {
            return None;
        }
        let v0 = z.dot(b);
        // |w0|^2 = (b - v0)(b + v0) for unit z; take the larger gap directly
        // and the smaller one from the cross product.
        let (gap_minus, gap_plus) = if v0 >= 0.0 {
            let plus = bnorm + v0;
            (wnorm * wnorm / plus, plus)
        } else {
            let minus = bnorm - v0;
            (minus, wnorm * wnorm / minus)
        };
        let (g, c, e, branch) = damping_angle(bnorm, gap_minus, gap_plus, wnorm, alpha * bnorm * t);
        Some(GilbertSolution {
            v0,
            bnorm,
            c,
            e,
            g,
            w0,
            b,
            branch,
        })
    }

    /// Rotation angle `g |w0|` (the change of the angle between `z` and `B`).
    pub fn rotation_angle(&self) -> f64 {
        self.g * self.w0.norm()
    }

    /// `z(t) = exp(g hat(w0)) z0`, a rotation about `w0` by `g |w0|`.
    ///
    /// Evaluated in the plane of `z0` and `B` as
    /// `cos(phi) B/|B| + sin(phi) e` with `phi = angle(z0, B) - g |w0|`
    /// and `e` the unit perpendicular component of `z0`. Near (anti)parallel
    /// configurations the computed `w0` is mostly rounding and no longer
    /// orthogonal to `z0`; this form still lands on the sphere with the
    /// right projection onto `B`.
    pub fn apply(&self) -> Vec3 {
        let wnorm = self.w0.norm();
        let bhat = self.b * (1.0 / self.bnorm);
        let x = bhat.cross(self.w0);
        let x = x - bhat * bhat.dot(x);
        let xnorm = x.norm();
        if xnorm == 0.0 {
            return self.b * (self.v0.signum() / self.bnorm);
        }
        let e = x * (1.0 / xnorm);
        let phi = wnorm.atan2(self.v0) - self.g * wnorm;
        let (s, c) = phi.sin_cos();
        bhat * c + e * s
    }

    /// `v(t) = <z(t), B> = -|B| (E^2 C^2 - 1) / (E^2 C^2 + 1)`.
    pub fn v(&self) -> f64 {
        let y = self.c * self.e;
        if y <= 1.0 {
            let y2 = y * y;
            self.bnorm * (1.0 - y2) / (1.0 + y2)
        } else {
            let r = 1.0 / (y * y);
            self.bnorm * (r - 1.0) / (r + 1.0)
        }
    }
}

/// `atan(u) / u`, continuous through `u = 0`.
fn atanc(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        let u2 = u * u;
        1.0 - u2 * (1.0 / 3.0 - u2 * (1.0 / 5.0 - u2 / 7.0))
    } else {
        u.atan() / u
    }
}

/// Damping angle `g` from the gaps `|B| - v0`, `|B| + v0`, `|w0|` and the
/// exponent `x = alpha |B| t`. Returns `(g, C, E, branch)`.
fn damping_angle(
    bnorm: f64,
    gap_minus: f64,
    gap_plus: f64,
    wnorm: f64,
    x: f64,
) -> (f64, f64, f64, AngleBranch) {
    let e = x.exp();
    // With q = 1 - E and d = 1 + C^2 E we have
    //   atan C - atan(C E) = atan(C q / d).
    // For x > 0 numerator and denominator are divided by E, and in the
    // antiparallel regime by C^2, so that nothing overflows.
    let branch = if gap_plus < BRANCH_THRESHOLD && gap_plus <= gap_minus {
        AngleBranch::NearAntiparallel
    } else if gap_minus < BRANCH_THRESHOLD {
        AngleBranch::NearParallel
    } else {
        AngleBranch::Direct
    };
    match branch {
        AngleBranch::NearAntiparallel => {
            // s = 1/C
            let s = wnorm / gap_minus;
            let (q, d) = if x <= 0.0 {
                (-x.exp_m1(), s * s + e)
            } else {
                ((-x).exp_m1(), s * s * (-x).exp() + 1.0)
            };
            let ratio = q / d;
            let g = if s == 0.0 {
                ratio / bnorm
            } else {
                (1.0 + s * s) / bnorm * ratio * atanc(s * ratio)
            };
            (g, 1.0 / s, e, branch)
        }
        _ => {
            let c = wnorm / gap_plus;
            let (q, d) = if x <= 0.0 {
                (-x.exp_m1(), 1.0 + c * c * e)
            } else {
                ((-x).exp_m1(), (-x).exp() + c * c)
            };
            let ratio = q / d;
            let g = match branch {
                AngleBranch::Direct => (c + 1.0 / c) / bnorm * (c * ratio).atan(),
                _ => (1.0 + c * c) / bnorm * ratio * atanc(c * ratio),
            };
            (g, c, e, branch)
        }
    }
}

/// Damping angle `g(t)` for a unit spin with `<z0, B> = v0` and `|B| = bnorm`.
pub fn gilbert_angle(v0: f64, bnorm: f64, alpha: f64, t: f64) -> Result<f64, FlowError> {
    gilbert_angle_branch(v0, bnorm, alpha, t).map(|(g, _)| g)
}

/// Like [`gilbert_angle`] but also reports the branch taken.
pub fn gilbert_angle_branch(
    v0: f64,
    bnorm: f64,
    alpha: f64,
    t: f64,
) -> Result<(f64, AngleBranch), FlowError> {
    if !(bnorm > 0.0) || !bnorm.is_finite() {
        return Err(FlowError::NonPositiveField(bnorm));
    }
    if v0.abs() > bnorm * (1.0 + 1e-12) {
        return Err(FlowError::ProjectionTooLarge { v0, bnorm });
    }
    let v0 = v0.clamp(-bnorm, bnorm);
    let gap_minus = bnorm - v0;
    let gap_plus = bnorm + v0;
    let wnorm = (gap_minus * gap_plus).sqrt();
    let (g, _, _, branch) = damping_angle(bnorm, gap_minus, gap_plus, wnorm, alpha * bnorm * t);
    Ok((g, branch))
}

/// Exact Gilbert damping flow `z' = alpha z x (z x B)` over time `t`.
pub fn gilbert_flow(z: Vec3, b: Vec3, alpha: f64, t: f64) -> Vec3 {
    if alpha == 0.0 || t == 0.0 {
        return z;
    }
    match GilbertSolution::new(z, b, alpha, t) {
        Some(sol) => sol.apply(),
        None => z,
    }
}

/// Rate of the thermostat variable with frozen spins:
///
/// ```text
/// alpha' = -(coupling / T)^2 * sum_ij [ <z,B>^2 - <B,B> - 2 T <z,B> ]
/// ```
pub fn alpha_rate(lat: &SpinLattice, p: &ModelParams) -> Result<f64, FlowError> {
    let t = p.temperature;
    if !(t > 0.0) {
        return Err(FlowError::NonPositiveTemperature(t));
    }
    Ok(alpha_rate_unchecked(lat, p))
}

pub(crate) fn alpha_rate_unchecked(lat: &SpinLattice, p: &ModelParams) -> f64 {
    let t = p.temperature;
    let coeffs = FieldCoefficients::new(p);
    let n = lat.n();
    let mut acc = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let z = lat.at(i, j);
            let b = coeffs.field(lat, i, j);
            let zb = z.dot(b);
            acc += zb * zb - b.dot(b) - 2.0 * t * zb;
        }
    }
    let k = p.coupling / t;
    -(k * k) * acc
}
