//! Finite element toolkit for a coupled free-flow / poroelastic (Stokes-Biot)
//! interaction problem on matching 2D triangular meshes.
//!
//! The crate provides three time-stepping schemes around a shared spatial
//! discretization: a non-iterative Robin-Robin splitting (one Stokes solve and
//! one Biot solve per step, coupled through an auxiliary interface variable),
//! an iterative variant that sub-iterates the two solves to convergence, and a
//! monolithic scheme in which the interface variable acts as a Robin Lagrange
//! multiplier. Energy diagnostics, a manufactured-solution convergence
//! harness, and a pulsatile blood-flow benchmark are included.

pub mod assembly;
pub mod biot;
pub mod dofmap;
pub mod element;
pub mod experiments;
pub mod fields;
pub mod interface;
pub mod io;
pub mod la;
pub mod mesh;
pub mod params;
pub mod problem;
pub mod quadrature;
pub mod schemes;
pub mod sparse;
pub mod stokes;

mod parallel;

pub use dofmap::DofMap;
pub use element::ElementFamily;
pub use interface::{LambdaSpace, MuState};
pub use mesh::{BoundaryTag, InterfaceMesh, TriMesh};
pub use params::PhysicalParams;
pub use quadrature::QuadratureRule;
pub use schemes::{CoupledState, EnergyReport, SchemeKind};
pub use sparse::SparseSystem;
