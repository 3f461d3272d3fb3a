//! Square spin lattice, boundary handling and even/odd site classes.
//!
//! Sites use 1-based logical indices `(i, j)` with `1 <= i, j <= n`. Index 0
//! and `n + 1` denote the boundary layer, which is never stored alongside the
//! interior spins; lookups there are resolved through [`BoundaryCondition`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::vec3::{Spin, Vec3};

/// Tolerance on `| |z| - 1 |` accepted for interior spins at construction.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice side must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("periodic boundaries need an even lattice side, got n = {0}")]
    OddPeriodic(usize),
    #[error("site ({i}, {j}) is outside the interior 1..={n}")]
    SiteOutOfRange { i: usize, j: usize, n: usize },
    #[error("expected {expected} spins, got {got}")]
    WrongSpinCount { expected: usize, got: usize },
    #[error("fixed border side `{side}` has {got} vectors, expected {expected}")]
    WrongBorderLength {
        side: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("spin at ({i}, {j}) has norm {norm}, expected 1")]
    NotUnit { i: usize, j: usize, norm: f64 },
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// Constant border vectors for [`BoundaryCondition::Fixed`].
///
/// `top[j-1]` is the ghost at `(0, j)`, `bottom[j-1]` at `(n+1, j)`,
/// `left[i-1]` at `(i, 0)` and `right[i-1]` at `(i, n+1)`. The vectors need
/// not have unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct Border {
    pub top: Vec<Vec3>,
    pub bottom: Vec<Vec3>,
    pub left: Vec<Vec3>,
    pub right: Vec<Vec3>,
}

impl Border {
    pub fn uniform(n: usize, v: Vec3) -> Self {
        Border {
            top: vec![v; n],
            bottom: vec![v; n],
            left: vec![v; n],
            right: vec![v; n],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        for (side, v) in [
            ("top", &self.top),
            ("bottom", &self.bottom),
            ("left", &self.left),
            ("right", &self.right),
        ] {
            if v.len() != n {
                return Err(LatticeError::WrongBorderLength {
                    side,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    fn negated(&self) -> Self {
        let neg = |v: &Vec<Vec3>| v.iter().map(|&x| -x).collect();
        Border {
            top: neg(&self.top),
            bottom: neg(&self.bottom),
            left: neg(&self.left),
            right: neg(&self.right),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Periodic,
    Zero,
    Fixed(Border),
}

impl BoundaryCondition {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::Zero => "zero",
            BoundaryCondition::Fixed(_) => "fixed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(i: usize, j: usize) -> Parity {
        if (i + j) % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn other(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Sites `(i, j)` whose `i + j` has the requested parity, row-major.
pub fn parity_sites(n: usize, parity: Parity) -> Vec<(usize, usize)> {
    ParitySites::new(n, parity).collect()
}

/// Row-major iterator over one parity class of an `n x n` lattice.
#[derive(Clone, Debug)]
pub struct ParitySites {
    n: usize,
    i: usize,
    j: usize,
}

impl ParitySites {
    pub fn new(n: usize, parity: Parity) -> Self {
        let first_j = match parity {
            Parity::Even => 1,
            Parity::Odd => 2,
        };
        ParitySites { n, i: 1, j: first_j }
    }
}

impl Iterator for ParitySites {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        while self.i <= self.n {
            if self.j <= self.n {
                let site = (self.i, self.j);
                self.j += 2;
                return Some(site);
            }
            // Shift the column start so that i + j keeps its parity.
            let start_parity = self.j % 2;
            self.i += 1;
            self.j = if start_parity == 1 { 2 } else { 1 };
        }
        None
    }
}

/// Parameters of the discretized Heisenberg model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Exchange integral `j_K`; positive for a ferromagnet.
    pub exchange: f64,
    /// Diagonal of the anisotropy matrix `D`.
    pub anisotropy: Vec3,
    /// Gilbert damping constant, and the initial thermostat variable.
    pub alpha0: f64,
    pub temperature: f64,
    /// Ratio of thermostat coupling strength to the number of degrees of freedom.
    pub coupling: f64,
}

impl ModelParams {
    /// Ferromagnet with `D = diag(1, 1, lambda)` and coupling `1/n`.
    pub fn ferromagnet(n: usize, lambda: f64) -> Self {
        ModelParams {
            exchange: 1.0,
            anisotropy: Vec3::new(1.0, 1.0, lambda),
            alpha0: 0.0,
            temperature: 1.0,
            coupling: 1.0 / n as f64,
        }
    }

    /// Diagonal of `M = I + D/4`.
    pub fn m_diag(&self) -> Vec3 {
        Vec3::new(1.0, 1.0, 1.0) + self.anisotropy * 0.25
    }

    /// Number of degrees of freedom `3 n^2`.
    pub fn degrees_of_freedom(n: usize) -> usize {
        3 * n * n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinLattice {
    n: usize,
    spins: Vec<Spin>,
    bc: BoundaryCondition,
}

impl SpinLattice {
    fn check_shape(n: usize, bc: &BoundaryCondition) -> Result<()> {
        if n < 2 {
            return Err(LatticeError::TooSmall(n));
        }
        match bc {
            BoundaryCondition::Periodic if n % 2 != 0 => Err(LatticeError::OddPeriodic(n)),
            BoundaryCondition::Fixed(border) => border.check(n),
            _ => Ok(()),
        }
    }

    /// Builds a lattice from row-major spins; every spin must be unit length.
    pub fn from_spins(n: usize, spins: Vec<Spin>, bc: BoundaryCondition) -> Result<Self> {
        Self::check_shape(n, &bc)?;
        if spins.len() != n * n {
            return Err(LatticeError::WrongSpinCount {
                expected: n * n,
                got: spins.len(),
            });
        }
        for (k, s) in spins.iter().enumerate() {
            let norm = s.norm();
            if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
                return Err(LatticeError::NotUnit {
                    i: k / n + 1,
                    j: k % n + 1,
                    norm,
                });
            }
        }
        Ok(SpinLattice { n, spins, bc })
    }

    pub fn uniform(n: usize, spin: Spin, bc: BoundaryCondition) -> Result<Self> {
        Self::from_spins(n, vec![spin; n * n], bc)
    }

    /// Independent spins uniform on the unit sphere, from normalized Gaussians.
    pub fn random(n: usize, seed: u64, bc: BoundaryCondition) -> Result<Self> {
        Self::check_shape(n, &bc)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spins = (0..n * n)
            .map(|_| loop {
                let v = Vec3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                let norm = v.norm();
                if norm > 1e-8 {
                    break v * (1.0 / norm);
                }
            })
            .collect();
        Ok(SpinLattice { n, spins, bc })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    /// Raw access to the spins. Callers are responsible for unit lengths.
    pub fn spins_mut(&mut self) -> &mut [Spin] {
        &mut self.spins
    }

    #[inline]
    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n + (j - 1)
    }

    fn check_site(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(LatticeError::SiteOutOfRange { i, j, n: self.n });
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Result<Spin> {
        self.check_site(i, j)?;
        Ok(self.spins[self.index(i, j)])
    }

    /// Overwrites one spin without a length check.
    pub fn set(&mut self, i: usize, j: usize, spin: Spin) -> Result<()> {
        self.check_site(i, j)?;
        let k = self.index(i, j);
        self.spins[k] = spin;
        Ok(())
    }

    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize) -> Spin {
        self.spins[self.index(i, j)]
    }

    #[inline]
    pub(crate) fn set_at(&mut self, i: usize, j: usize, spin: Spin) {
        let k = self.index(i, j);
        self.spins[k] = spin;
    }

    /// Value at logical position `(i, j)` with `0 <= i, j <= n + 1`, at most
    /// one of them in the boundary layer.
    ///
    /// Returns the vector and whether it came from the boundary rather than
    /// from interior storage (periodic images count as interior).
    #[inline]
    fn resolve(&self, i: usize, j: usize) -> (Vec3, bool) {
        let n = self.n;
        let inside = |k: usize| k >= 1 && k <= n;
        if inside(i) && inside(j) {
            return (self.at(i, j), false);
        }
        match &self.bc {
            BoundaryCondition::Periodic => {
                let wrap = |k: usize| {
                    if k == 0 {
                        n
                    } else if k == n + 1 {
                        1
                    } else {
                        k
                    }
                };
                (self.at(wrap(i), wrap(j)), false)
            }
            BoundaryCondition::Zero => (Vec3::ZERO, true),
            BoundaryCondition::Fixed(b) => {
                let v = if i == 0 {
                    b.top[j - 1]
                } else if i == n + 1 {
                    b.bottom[j - 1]
                } else if j == 0 {
                    b.left[i - 1]
                } else {
                    b.right[i - 1]
                };
                (v, true)
            }
        }
    }

    /// Sum over the four nearest neighbours split into contributions from
    /// interior spins and from boundary vectors.
    #[inline]
    pub(crate) fn split_neighbor_sum(&self, i: usize, j: usize) -> (Vec3, Vec3) {
        let mut interior = Vec3::ZERO;
        let mut border = Vec3::ZERO;
        for (a, b) in [(i, j - 1), (i, j + 1), (i - 1, j), (i + 1, j)] {
            let (v, from_border) = self.resolve(a, b);
            if from_border {
                border += v;
            } else {
                interior += v;
            }
        }
        (interior, border)
    }

    #[inline]
    pub(crate) fn neighbors_of(&self, i: usize, j: usize) -> Vec3 {
        debug_assert!(i >= 1 && j >= 1 && i <= self.n && j <= self.n);
        let (a, b) = self.split_neighbor_sum(i, j);
        a + b
    }

    /// `z_{i,j-1} + z_{i,j+1} + z_{i-1,j} + z_{i+1,j}` with boundary
    /// positions resolved through the boundary condition.
    pub fn neighbor_sum(&self, i: usize, j: usize) -> Result<Vec3> {
        self.check_site(i, j)?;
        Ok(self.neighbors_of(i, j))
    }

    /// Largest `| |z| - 1 |` over the interior.
    pub fn max_norm_drift(&self) -> f64 {
        self.spins
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.spins.iter().all(|s| s.is_finite())
    }

    /// Flips every spin, and with it any fixed border.
    pub fn negate(&mut self) {
        for s in &mut self.spins {
            *s = -*s;
        }
        if let BoundaryCondition::Fixed(b) = &self.bc {
            self.bc = BoundaryCondition::Fixed(b.negated());
        }
    }

    /// Largest absolute component difference between two same-size lattices.
    pub fn max_abs_diff(&self, other: &SpinLattice) -> f64 {
        assert_eq!(self.n, other.n, "lattice sizes differ");
        self.spins
            .iter()
            .zip(&other.spins)
            .map(|(a, b)| a.max_abs_diff(*b))
            .fold(0.0, f64::max)
    }
}
