//! Boundary-condition roles, time-dependent problem data, and the error type
//! shared by the solver builders.

use crate::dofmap::DofMap;
use crate::mesh::BoundaryTag;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Assembly(#[from] crate::assembly::AssemblyError),
    #[error(transparent)]
    Solve(#[from] crate::sparse::SolveError),
    #[error(transparent)]
    Interface(#[from] crate::interface::InterfaceError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Params(#[from] crate::params::ParamError),
    #[error("mesh has no interface segments tagged")]
    EmptyInterface,
    #[error("the monolithic scheme requires gamma_f == gamma_p, got {gamma_f} and {gamma_p}")]
    GammaMismatch { gamma_f: f64, gamma_p: f64 },
    #[error("boundary edge is not axis-aligned; symmetry/tangent pins expect axis-aligned edges")]
    NotAxisAligned,
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("final time {t_end} is not an integer multiple of dt = {dt}")]
    NonIntegralSteps { t_end: f64, dt: f64 },
}

/// Which boundary tags play which role for each field. One tagged edge can
/// carry several roles (a clamped drained edge constrains both the
/// displacement and the Darcy flux).
#[derive(Debug, Clone)]
pub struct BoundaryRoles {
    pub fluid_dirichlet: Vec<BoundaryTag>,
    /// u . n = 0 strongly on the normal component; tangential traction-free.
    pub fluid_symmetry: Vec<BoundaryTag>,
    pub fluid_traction: Vec<BoundaryTag>,
    pub disp_dirichlet: Vec<BoundaryTag>,
    /// eta . tau = 0 strongly on the tangential component; normal natural.
    pub disp_tangent_pin: Vec<BoundaryTag>,
    pub disp_traction: Vec<BoundaryTag>,
    /// Natural Darcy pressure data.
    pub darcy_pressure: Vec<BoundaryTag>,
    /// Essential Darcy flux data.
    pub darcy_flux: Vec<BoundaryTag>,
}

impl Default for BoundaryRoles {
    fn default() -> Self {
        use BoundaryTag::*;
        Self {
            fluid_dirichlet: vec![FluidDirichlet],
            fluid_symmetry: vec![FluidSymmetry],
            fluid_traction: vec![FluidNeumann, FluidInflow, FluidOutflow],
            disp_dirichlet: vec![PoroDispDirichlet],
            disp_tangent_pin: vec![PoroExternal],
            disp_traction: vec![PoroTraction],
            darcy_pressure: vec![PoroDispDirichlet, DarcyPressure, PoroExternal],
            darcy_flux: vec![PoroTraction, DarcyFlux],
        }
    }
}

pub type VecFn = Box<dyn Fn(f64, f64, f64) -> [f64; 2] + Sync + Send>;
pub type ScalarFn = Box<dyn Fn(f64, f64, f64) -> f64 + Sync + Send>;
/// (t, x, y, outward normal) -> traction vector.
pub type TractionFn = Box<dyn Fn(f64, f64, f64, [f64; 2]) -> [f64; 2] + Sync + Send>;

/// Forcing terms and boundary data as functions of time and position.
/// Everything defaults to zero (homogeneous data).
pub struct ProblemData {
    pub f_f: VecFn,
    pub q_f: ScalarFn,
    pub f_p: VecFn,
    pub q_p: ScalarFn,
    pub fluid_dirichlet: VecFn,
    pub fluid_traction: TractionFn,
    pub disp_dirichlet: VecFn,
    pub poro_traction: TractionFn,
    pub darcy_pressure: ScalarFn,
    pub darcy_flux: VecFn,
}

impl Default for ProblemData {
    fn default() -> Self {
        Self {
            f_f: Box::new(|_, _, _| [0.0, 0.0]),
            q_f: Box::new(|_, _, _| 0.0),
            f_p: Box::new(|_, _, _| [0.0, 0.0]),
            q_p: Box::new(|_, _, _| 0.0),
            fluid_dirichlet: Box::new(|_, _, _| [0.0, 0.0]),
            fluid_traction: Box::new(|_, _, _, _| [0.0, 0.0]),
            disp_dirichlet: Box::new(|_, _, _| [0.0, 0.0]),
            poro_traction: Box::new(|_, _, _, _| [0.0, 0.0]),
            darcy_pressure: Box::new(|_, _, _| 0.0),
            darcy_flux: Box::new(|_, _, _| [0.0, 0.0]),
        }
    }
}

impl ProblemData {
    pub fn zero() -> Self {
        Self::default()
    }
}

/// Pins one Cartesian component to zero on axis-aligned tagged edges:
/// the normal component when `pin_normal` (symmetry conditions), else the
/// tangential one (external-wall tangent pins).
pub fn axis_component_pins(
    map: &DofMap,
    tags: &[BoundaryTag],
    pin_normal: bool,
) -> Result<Vec<(usize, f64)>, BuildError> {
    let mesh = &map.mesh;
    let nv = mesh.n_vertices();
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for &tag in tags {
        for e in mesh.boundary_edges(tag) {
            let cell = mesh.boundary_cell(e);
            let n = mesh.outward_normal(cell, mesh.local_edge(cell, e));
            let dir = if pin_normal { n } else { [-n[1], n[0]] };
            let comp = if dir[0].abs() > dir[1].abs() { 0 } else { 1 };
            if dir[comp].abs() < 1.0 - 1e-10 {
                return Err(BuildError::NotAxisAligned);
            }
            let edge = &mesh.edges[e];
            for node in [edge.v[0], edge.v[1], nv + e] {
                pairs.push((2 * node + comp, 0.0));
            }
        }
    }
    pairs.sort_unstable_by_key(|&(d, _)| d);
    pairs.dedup();
    Ok(pairs)
}
