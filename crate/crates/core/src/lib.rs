//! Structure-preserving integrators for 2D Heisenberg spin lattices.

pub mod cli;
pub mod diagnostics;
pub mod fields;
pub mod flows;
pub mod integrators;
pub mod lattice;
pub mod reference;
pub mod vec3;
pub mod verify;

pub use fields::{effective_field, total_energy};
pub use integrators::{Dynamics, Scheme, ThermoState};
pub use lattice::{BoundaryCondition, Border, ModelParams, SpinLattice};
pub use vec3::{Spin, Vec3};
