//! Effective fields, total energy and the discrete Laplacian diagnostic.
//!
//! The energy is the Roberts-discretized Heisenberg Hamiltonian
//!
//! ```text
//! H = -(j_K / 2) * sum_ij < z_ij, M * sum_NN(ij) z >,   M = I + D/4
//! ```
//!
//! whose gradient with respect to `z_ij` is the effective field
//! `-j_K * M * sum_NN(ij) z`. Bonds between an interior spin and a constant
//! boundary vector appear only once in the double sum, so they are given unit
//! weight to keep that gradient identity at edge sites.

use crate::lattice::{LatticeError, ModelParams, SpinLattice};
use crate::vec3::Vec3;

/// Effective field at an interior site; independent of the spin at that site.
pub fn effective_field(
    lat: &SpinLattice,
    p: &ModelParams,
    i: usize,
    j: usize,
) -> Result<Vec3, LatticeError> {
    let sum = lat.neighbor_sum(i, j)?;
    Ok(sum.scale_by(p.m_diag()) * (-p.exchange))
}

/// Precomputed `-j_K * M` for the hot loops.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FieldCoefficients {
    diag: Vec3,
}

impl FieldCoefficients {
    pub(crate) fn new(p: &ModelParams) -> Self {
        FieldCoefficients {
            diag: p.m_diag() * (-p.exchange),
        }
    }

    #[inline]
    pub(crate) fn field(&self, lat: &SpinLattice, i: usize, j: usize) -> Vec3 {
        lat.neighbors_of(i, j).scale_by(self.diag)
    }
}

/// Effective field at every site, row-major.
pub fn all_fields(lat: &SpinLattice, p: &ModelParams) -> Vec<Vec3> {
    let coeffs = FieldCoefficients::new(p);
    let n = lat.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            out.push(coeffs.field(lat, i, j));
        }
    }
    out
}

/// Total energy, accumulated row-major.
pub fn total_energy(lat: &SpinLattice, p: &ModelParams) -> f64 {
    let m = p.m_diag();
    let n = lat.n();
    let mut acc = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let z = lat.at(i, j);
            let (interior, border) = lat.split_neighbor_sum(i, j);
            acc += 0.5 * z.dot(interior.scale_by(m)) + z.dot(border.scale_by(m));
        }
    }
    -p.exchange * acc
}

/// `max_ij | sum_NN(ij) z - 4 z_ij |`.
pub fn max_laplacian_norm(lat: &SpinLattice) -> f64 {
    let n = lat.n();
    let mut max = 0.0f64;
    for i in 1..=n {
        for j in 1..=n {
            let lap = lat.neighbors_of(i, j) - lat.at(i, j) * 4.0;
            max = max.max(lap.norm());
        }
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Border, BoundaryCondition};

    fn params(jk: f64, d: Vec3) -> ModelParams {
        ModelParams {
            exchange: jk,
            anisotropy: d,
            alpha0: 0.0,
            temperature: 1.0,
            coupling: 0.25,
        }
    }

    /// Energy by enumerating each bond once: right and down neighbours of
    /// every site plus, for non-periodic lattices, the bonds to the border.
    fn bond_energy(lat: &SpinLattice, p: &ModelParams) -> f64 {
        let n = lat.n();
        let m = p.m_diag();
        let mut e = 0.0;
        let s = |i: usize, j: usize| lat.get(i, j).unwrap();
        for i in 1..=n {
            for j in 1..=n {
                let z = s(i, j);
                match lat.bc() {
                    BoundaryCondition::Periodic => {
                        let right = s(i, j % n + 1);
                        let down = s(i % n + 1, j);
                        e += z.dot(right.scale_by(m)) + z.dot(down.scale_by(m));
                    }
                    bc => {
                        if j < n {
                            e += z.dot(s(i, j + 1).scale_by(m));
                        }
                        if i < n {
                            e += z.dot(s(i + 1, j).scale_by(m));
                        }
                        if let BoundaryCondition::Fixed(b) = bc {
                            if i == 1 {
                                e += z.dot(b.top[j - 1].scale_by(m));
                            }
                            if i == n {
                                e += z.dot(b.bottom[j - 1].scale_by(m));
                            }
                            if j == 1 {
                                e += z.dot(b.left[i - 1].scale_by(m));
                            }
                            if j == n {
                                e += z.dot(b.right[i - 1].scale_by(m));
                            }
                        }
                    }
                }
            }
        }
        -p.exchange * e
    }

    #[test]
    fn effective_field_uniform_examples() {
        let lat = SpinLattice::uniform(4, Vec3::UP, BoundaryCondition::Periodic).unwrap();
        let b = effective_field(&lat, &params(1.0, Vec3::ZERO), 2, 3).unwrap();
        assert_eq!(b, Vec3::new(0.0, 0.0, -4.0));
        let b = effective_field(&lat, &params(1.0, Vec3::new(1.0, 1.0, 1.0)), 1, 1).unwrap();
        assert_eq!(b, Vec3::new(0.0, 0.0, -5.0));
    }

    #[test]
    fn effective_field_matches_naive_oracle() {
        let p = params(-0.7, Vec3::new(1.0, 1.0, 0.9));
        let lat = SpinLattice::random(4, 9, BoundaryCondition::Periodic).unwrap();
        let n = 4usize;
        for i in 1..=n {
            for j in 1..=n {
                let mut sum = [0.0f64; 3];
                let w = |k: usize, d: isize| ((k as isize - 1 + d).rem_euclid(n as isize) + 1) as usize;
                for (a, b) in [(w(i, 0), w(j, -1)), (w(i, 0), w(j, 1)), (w(i, -1), w(j, 0)), (w(i, 1), w(j, 0))] {
                    let z = lat.get(a, b).unwrap().to_array();
                    for c in 0..3 {
                        sum[c] += z[c];
                    }
                }
                let m = [1.25, 1.25, 1.225];
                let expected = Vec3::new(0.7 * m[0] * sum[0], 0.7 * m[1] * sum[1], 0.7 * m[2] * sum[2]);
                let got = effective_field(&lat, &p, i, j).unwrap();
                assert!(got.max_abs_diff(expected) < 1e-14);
            }
        }
    }

    #[test]
    fn field_is_independent_of_own_spin() {
        let p = params(1.0, Vec3::new(1.0, 1.0, 0.9));
        let mut lat = SpinLattice::random(6, 1, BoundaryCondition::Periodic).unwrap();
        let before = effective_field(&lat, &p, 3, 4).unwrap();
        lat.set(3, 4, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(before, effective_field(&lat, &p, 3, 4).unwrap());
    }

    #[test]
    fn uniform_energy_examples() {
        let lat = SpinLattice::uniform(50, Vec3::UP, BoundaryCondition::Periodic).unwrap();
        let d = Vec3::new(1.0, 1.0, 1.0);
        assert!((total_energy(&lat, &params(1.0, d)) + 6250.0).abs() < 1e-9);
        assert!((total_energy(&lat, &params(-1.0, d)) - 6250.0).abs() < 1e-9);
    }

    #[test]
    fn energy_two_summation_orders_agree() {
        let p = params(1.0, Vec3::new(1.0, 1.0, 0.9));
        let border = Border::uniform(6, Vec3::new(0.5, -0.2, 1.5));
        for bc in [
            BoundaryCondition::Periodic,
            BoundaryCondition::Zero,
            BoundaryCondition::Fixed(border),
        ] {
            let lat = SpinLattice::random(6, 17, bc).unwrap();
            let a = total_energy(&lat, &p);
            let b = bond_energy(&lat, &p);
            assert!((a - b).abs() < 1e-12, "{}: {a} vs {b}", lat.bc().name());
        }
    }

    #[test]
    fn periodic_energy_is_half_field_contraction() {
        let p = params(0.8, Vec3::new(0.3, 1.0, 0.9));
        let lat = SpinLattice::random(6, 2, BoundaryCondition::Periodic).unwrap();
        let fields = all_fields(&lat, &p);
        let contraction: f64 = lat
            .spins()
            .iter()
            .zip(&fields)
            .map(|(z, b)| z.dot(*b))
            .sum::<f64>()
            * 0.5;
        assert!((contraction - total_energy(&lat, &p)).abs() < 1e-12);
    }

    fn fd_gradient_check(bc: BoundaryCondition) {
        let p = params(1.0, Vec3::new(1.0, 1.0, 0.9));
        let lat = SpinLattice::random(6, 23, bc).unwrap();
        let h = 1e-6;
        for i in 1..=6 {
            for j in 1..=6 {
                let field = effective_field(&lat, &p, i, j).unwrap().to_array();
                for c in 0..3 {
                    let bump = |delta: f64| {
                        let mut l = lat.clone();
                        let mut z = l.get(i, j).unwrap().to_array();
                        z[c] += delta;
                        l.set(i, j, Vec3::from_array(z)).unwrap();
                        total_energy(&l, &p)
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let rel = (fd - field[c]).abs() / field[c].abs().max(1.0);
                    assert!(rel <= 1e-6, "({i},{j})[{c}]: fd {fd} vs field {}", field[c]);
                }
            }
        }
    }

    #[test]
    fn gradient_consistency_periodic() {
        fd_gradient_check(BoundaryCondition::Periodic);
    }

    #[test]
    fn gradient_consistency_zero_and_fixed() {
        fd_gradient_check(BoundaryCondition::Zero);
        fd_gradient_check(BoundaryCondition::Fixed(Border::uniform(6, Vec3::new(0.0, 2.0, 0.5))));
    }

    #[test]
    fn isotropic_energy_rotation_invariant() {
        let p = params(1.3, Vec3::ZERO);
        let border = Border::uniform(6, Vec3::new(0.2, 0.4, -0.9));
        let lat = SpinLattice::random(6, 4, BoundaryCondition::Fixed(border.clone())).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = |v: Vec3| Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
        let rot_axis = |v: Vec3| Vec3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z);
        let rotate_all = |v: Vec3| rot_axis(rot(v));
        let map = |b: &[Vec3]| b.iter().map(|&v| rotate_all(v)).collect::<Vec<_>>();
        let border_r = Border {
            top: map(&border.top),
            bottom: map(&border.bottom),
            left: map(&border.left),
            right: map(&border.right),
        };
        let spins = lat.spins().iter().map(|&v| rotate_all(v)).collect();
        let rotated = SpinLattice::from_spins(6, spins, BoundaryCondition::Fixed(border_r)).unwrap();
        assert!((total_energy(&lat, &p) - total_energy(&rotated, &p)).abs() < 1e-12);
    }

    #[test]
    fn aligned_along_largest_m_minimizes_uniform_energy() {
        let p = params(1.0, Vec3::new(1.0, 1.0, 1.4));
        let e_of = |s: Vec3| {
            let lat = SpinLattice::uniform(4, s, BoundaryCondition::Periodic).unwrap();
            total_energy(&lat, &p)
        };
        let best = e_of(Vec3::UP);
        for k in 0..50 {
            let th = k as f64 * 0.13;
            let ph = k as f64 * 0.71;
            let s = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            assert!(e_of(s) >= best - 1e-12);
        }
    }

    #[test]
    fn laplacian_examples() {
        let mut lat = SpinLattice::uniform(6, Vec3::UP, BoundaryCondition::Periodic).unwrap();
        assert_eq!(max_laplacian_norm(&lat), 0.0);
        lat.set(3, 3, Vec3::DOWN).unwrap();
        assert!((max_laplacian_norm(&lat) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_matches_naive_oracle() {
        let lat = SpinLattice::random(5, 8, BoundaryCondition::Zero).unwrap();
        let n = 5;
        let mut best = 0.0f64;
        for i in 1..=n {
            for j in 1..=n {
                let mut lap = lat.get(i, j).unwrap() * -4.0;
                if i > 1 {
                    lap += lat.get(i - 1, j).unwrap();
                }
                if i < n {
                    lap += lat.get(i + 1, j).unwrap();
                }
                if j > 1 {
                    lap += lat.get(i, j - 1).unwrap();
                }
                if j < n {
                    lap += lat.get(i, j + 1).unwrap();
                }
                best = best.max(lap.norm());
            }
        }
        assert!((max_laplacian_norm(&lat) - best).abs() < 1e-14);
    }
}
