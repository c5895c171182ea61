//! Pulsatile flow through a compliant channel: a pressure pulse at the inlet
//! of a fluid channel coupled to a poroelastic wall, solved on the half
//! domain with a symmetry condition at the channel axis.

use crate::element::ElementFamily;
use crate::mesh::{
    build_rect_mesh, tag_boundaries, BoundaryTag, DiagonalRule, DomainLabel, TriMesh,
};
use crate::params::PhysicalParams;
use crate::problem::{BoundaryRoles, BuildError, ProblemData};
use crate::schemes::{CoupledState, SchemeContext};
use std::f64::consts::PI;
use std::sync::Arc;

/// Inlet pressure pulse: a single raised-cosine of height `p_max` over
/// `[0, t_max]`, zero afterwards.
#[derive(Debug, Clone, Copy)]
pub struct PulseBc {
    pub p_max: f64,
    pub t_max: f64,
}

impl Default for PulseBc {
    fn default() -> Self {
        Self { p_max: 13334.0, t_max: 0.003 }
    }
}

impl PulseBc {
    pub fn p_in(&self, t: f64) -> f64 {
        if t <= self.t_max {
            self.p_max / 2.0 * (1.0 - (2.0 * PI * t / self.t_max).cos())
        } else {
            0.0
        }
    }
}

/// Half-channel geometry and mesh resolution (lengths in cm).
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub radius: f64,
    pub length: f64,
    pub wall_thickness: f64,
    pub nx: usize,
    pub ny_fluid: usize,
    pub ny_wall: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { radius: 0.5, length: 6.0, wall_thickness: 0.1, nx: 60, ny_fluid: 10, ny_wall: 2 }
    }
}

impl Geometry {
    pub fn meshes(&self) -> Result<(Arc<TriMesh>, Arc<TriMesh>), BuildError> {
        let (l, r, w) = (self.length, self.radius, self.wall_thickness);
        let fluid = tag_boundaries(
            build_rect_mesh(0.0, l, 0.0, r, self.nx, self.ny_fluid, DiagonalRule::LowerLeft, DomainLabel::Fluid)?,
            &[
                (&|m: [f64; 2]| m[1] > r - 1e-12, BoundaryTag::Interface),
                (&|m: [f64; 2]| m[1] < 1e-12, BoundaryTag::FluidSymmetry),
                (&|m: [f64; 2]| m[0] < 1e-12, BoundaryTag::FluidInflow),
                (&|_m: [f64; 2]| true, BoundaryTag::FluidOutflow),
            ],
        )?;
        let poro = tag_boundaries(
            build_rect_mesh(0.0, l, r, r + w, self.nx, self.ny_wall, DiagonalRule::LowerLeft, DomainLabel::Poroelastic)?,
            &[
                (&|m: [f64; 2]| m[1] < r + 1e-12, BoundaryTag::Interface),
                (&|m: [f64; 2]| m[1] > r + w - 1e-12, BoundaryTag::PoroExternal),
                (&|_m: [f64; 2]| true, BoundaryTag::PoroDispDirichlet),
            ],
        )?;
        Ok((Arc::new(fluid), Arc::new(poro)))
    }
}

/// Boundary roles of this benchmark: the wall inlet/outlet edges are both
/// clamped and drained (essential flux), the outer wall has a tangent pin
/// with zero Darcy pressure, the channel axis is a symmetry boundary.
pub fn roles() -> BoundaryRoles {
    BoundaryRoles {
        darcy_pressure: vec![BoundaryTag::PoroExternal],
        darcy_flux: vec![BoundaryTag::PoroDispDirichlet, BoundaryTag::DarcyFlux],
        ..BoundaryRoles::default()
    }
}

/// Problem data: zero forcing; the inlet traction is the pulse, the outlet
/// is stress-free.
pub fn problem_data(pulse: PulseBc) -> ProblemData {
    ProblemData {
        fluid_traction: Box::new(move |t, x, _y, n| {
            if x < 1e-9 {
                let p = pulse.p_in(t);
                [-p * n[0], -p * n[1]]
            } else {
                [0.0, 0.0]
            }
        }),
        ..ProblemData::zero()
    }
}

/// Builds the context; the benchmark starts from rest.
pub fn setup(
    geometry: Geometry,
    pulse: PulseBc,
    dt: f64,
    params: PhysicalParams,
    darcy_family: ElementFamily,
) -> Result<(SchemeContext, CoupledState), BuildError> {
    let (fluid, poro) = geometry.meshes()?;
    let ctx = SchemeContext::build(
        params,
        dt,
        fluid,
        poro,
        darcy_family,
        roles(),
        problem_data(pulse),
    )?;
    let ic = ctx.zero_state();
    Ok((ctx, ic))
}

/// Interface slice at one time level: rows (arc, p_f, u_f vertical,
/// u_p vertical, eta vertical), ordered by arc length.
pub fn interface_slice(ctx: &SchemeContext, state: &CoupledState) -> Vec<[f64; 5]> {
    let lam = &ctx.lambda;
    let pf = lam.sample_scalar(&ctx.stokes.pres, &state.p_f);
    let uf = lam.sample_vector(&ctx.stokes.vel, &state.u_f);
    let up = lam.sample_vector(&ctx.biot.darcy, &state.u_p);
    let eta = lam.sample_vector(&ctx.biot.disp, &state.eta_p);
    lam.nodes_by_arc()
        .into_iter()
        .map(|i| [lam.arc[i], pf[i], uf[i][1], up[i][1], eta[i][1]])
        .collect()
}

pub const SLICE_HEADER: [&str; 5] = ["arc", "p_f", "u_f_y", "u_p_y", "eta_y"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{run, SchemeKind};

    #[test]
    fn pulse_values() {
        let p = PulseBc::default();
        assert_eq!(p.p_in(0.0), 0.0);
        // peak at t_max / 2
        assert!((p.p_in(0.0015) - 13334.0).abs() < 1e-9);
        assert_eq!(p.p_in(0.004), 0.0);
        // continuity at t_max
        assert!(p.p_in(0.003).abs() < 1e-9);
    }

    #[test]
    fn geometry_counts_and_matching_interface() {
        let g = Geometry { nx: 12, ny_fluid: 4, ny_wall: 2, ..Geometry::default() };
        let (fluid, poro) = g.meshes().unwrap();
        let gamma = crate::mesh::extract_interface(&fluid, &poro).unwrap();
        assert_eq!(gamma.n_segments(), 12);
        for seg in &gamma.segments {
            assert_eq!(seg.normal_f, [0.0, 1.0]);
            assert_eq!(seg.normal_p, [0.0, -1.0]);
        }
        assert!((gamma.total_length() - 6.0).abs() < 1e-12);
    }

    /// The rest state with a zero pulse is a fixed point of every scheme.
    #[test]
    fn rest_state_is_fixed_point() {
        let g = Geometry { nx: 10, ny_fluid: 3, ny_wall: 2, ..Geometry::default() };
        let params = PhysicalParams::blood_flow();
        let (mut ctx, ic) = setup(
            g,
            PulseBc { p_max: 0.0, t_max: 0.003 },
            1e-4,
            params,
            ElementFamily::Rt0,
        )
        .unwrap();
        for kind in [
            SchemeKind::NonIterative,
            SchemeKind::Monolithic,
            SchemeKind::Iterative { eps: 1e-10, k_max: 100 },
        ] {
            let (fin, _) = run(&mut ctx, kind, ic.clone(), 10e-4, &mut []).unwrap();
            assert!(fin.u_f.iter().all(|v| v.abs() < 1e-12), "{kind:?}");
            assert!(fin.eta_p.iter().all(|v| v.abs() < 1e-12));
            assert!(fin.p_p.iter().all(|v| v.abs() < 1e-12));
            assert!(fin.mu.mu_n.iter().all(|v| v.abs() < 1e-12));
        }
    }
}
