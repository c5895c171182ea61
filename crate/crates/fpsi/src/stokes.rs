//! The fluid (Stokes) subdomain solver with Robin interface data.
//!
//! One backward-Euler step solves the saddle system
//!   [ rho_f/dt M + a_f + gamma_f(G_nn + G_tt)   -D^T ] [u]   [F]
//!   [ -D                                          0  ] [p] = [-Q]
//! where the interface loads <mu_n, v.n_f> + <mu_tau, v.tau_f> enter F. The
//! matrix is constant in time; its factorization is cached.

use crate::assembly::{
    assemble_form, assemble_interface_mass, boundary_traction_load, volume_load_scalar,
    volume_load_vector, FormKind, TraceVec, Triplet,
};
use crate::dofmap::{BasisCache, DofMap};
use crate::interface::{InterfaceOps, LambdaSpace, MuState};
use crate::la::CooMat;
use crate::mesh::InterfaceMesh;
use crate::params::PhysicalParams;
use crate::problem::{axis_component_pins, BoundaryRoles, BuildError, ProblemData};
use crate::quadrature::quadrature;
use crate::sparse::{SolveError, SparseSystem};
use std::sync::Arc;

pub struct StokesSolver {
    pub vel: Arc<DofMap>,
    pub pres: Arc<DofMap>,
    pub n_u: usize,
    pub n_p: usize,
    pub n: usize,
    pub system: SparseSystem,
    /// Raw blocks for reuse in the monolithic assembly.
    pub a_block: Vec<Triplet>,
    pub div_block: Vec<Triplet>,
    mass: CooMat,
    pub cache_vel: BasisCache,
    pub cache_pres: BasisCache,
    quad_weights: Vec<f64>,
    roles: BoundaryRoles,
    rho_dt: f64,
    pub dt: f64,
}

impl StokesSolver {
    pub fn new(
        params: &PhysicalParams,
        dt: f64,
        vel: Arc<DofMap>,
        pres: Arc<DofMap>,
        interface: &InterfaceMesh,
        roles: &BoundaryRoles,
    ) -> Result<Self, BuildError> {
        if dt <= 0.0 {
            return Err(BuildError::InvalidTimeStep(dt));
        }
        if interface.n_segments() == 0 {
            return Err(BuildError::EmptyInterface);
        }
        let quad = quadrature(6).expect("degree 6");
        let rho_dt = params.rho_f_eff() / dt;

        let mass_trips = assemble_form(FormKind::Mass { coeff: 1.0 }, &vel, &vel, &quad)?;
        let mut a_block = assemble_form(
            FormKind::SymGradStiffness { two_mu: 2.0 * params.mu_f },
            &vel,
            &vel,
            &quad,
        )?;
        if rho_dt > 0.0 {
            a_block.extend(mass_trips.iter().map(|&(r, c, v)| (r, c, rho_dt * v)));
        }
        if params.gamma_f != 0.0 {
            for dir in [TraceVec::NormalF, TraceVec::TangentF] {
                let g = assemble_interface_mass((&vel, dir), (&vel, dir), interface);
                a_block.extend(g.into_iter().map(|(r, c, v)| (r, c, params.gamma_f * v)));
            }
        }
        let div_block = assemble_form(FormKind::DivCoupling, &vel, &pres, &quad)?;

        let n_u = vel.n_dofs;
        let n_p = pres.n_dofs;
        let n = n_u + n_p;
        let mut system = SparseSystem::new("stokes", n);
        system.add_block(0, 0, 1.0, &a_block);
        for &(k, j, v) in &div_block {
            system.add(j, n_u + k, -v); // -D^T in the momentum rows
            system.add(n_u + k, j, -v); // -D in the continuity rows
        }

        // essential velocity constraints, values filled per step
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for &tag in &roles.fluid_dirichlet {
            for d in vel.boundary_dofs(tag, &[0, 1]) {
                pairs.push((d, 0.0));
            }
        }
        pairs.extend(axis_component_pins(&vel, &roles.fluid_symmetry, true)?);
        system.set_essential(&pairs)?;

        let mut mass = CooMat::new(n_u, n_u);
        for (r, c, v) in mass_trips {
            mass.push(r, c, v);
        }

        let cache_vel = BasisCache::build(&vel, &quad.points);
        let cache_pres = BasisCache::build(&pres, &quad.points);
        Ok(Self {
            vel,
            pres,
            n_u,
            n_p,
            n,
            system,
            a_block,
            div_block,
            mass,
            cache_vel,
            cache_pres,
            quad_weights: quad.weights,
            roles: roles.clone(),
            rho_dt,
            dt,
        })
    }

    /// Essential velocity values at time `t` in local velocity numbering.
    pub fn essential_pairs(&self, t: f64, data: &ProblemData) -> Result<Vec<(usize, f64)>, BuildError> {
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for &tag in &self.roles.fluid_dirichlet {
            pairs.extend(self.vel.essential_values(tag, &[0, 1], &|x, y| {
                (data.fluid_dirichlet)(t, x, y)
            }));
        }
        pairs.extend(axis_component_pins(&self.vel, &self.roles.fluid_symmetry, true)?);
        Ok(pairs)
    }

    /// Right-hand side of one step at the new time level. `u_prev` supplies
    /// the inertia history; interface loads use the current interface data.
    pub fn rhs(
        &self,
        t_new: f64,
        u_prev: &[f64],
        mu: &MuState,
        ops: &InterfaceOps,
        data: &ProblemData,
    ) -> Vec<f64> {
        let mut rhs = vec![0.0; self.n];
        let f = |x: f64, y: f64| (data.f_f)(t_new, x, y);
        let body = volume_load_vector(&self.vel, &self.cache_vel, &f);
        rhs[..self.n_u].copy_from_slice(&body);
        if self.rho_dt > 0.0 {
            self.mass.add_mul_vec(u_prev, self.rho_dt, &mut rhs[..self.n_u]);
        }
        ops.r_fn.add_mul_transpose_vec(&mu.mu_n, 1.0, &mut rhs[..self.n_u]);
        ops.r_ftau.add_mul_transpose_vec(&mu.mu_tau, 1.0, &mut rhs[..self.n_u]);
        let traction = boundary_traction_load(&self.vel, &self.roles.fluid_traction, &|x, y, n| {
            (data.fluid_traction)(t_new, x, y, n)
        });
        for (r, v) in rhs[..self.n_u].iter_mut().zip(&traction) {
            *r += v;
        }
        let qf = |x: f64, y: f64| (data.q_f)(t_new, x, y);
        let qload = volume_load_scalar(&self.pres, &self.cache_pres, &qf);
        for (k, v) in qload.iter().enumerate() {
            rhs[self.n_u + k] = -v;
        }
        rhs
    }

    /// Updates the time-dependent essential values and solves the cached
    /// system, returning (velocity, pressure) coefficients.
    pub fn step(
        &mut self,
        t_new: f64,
        u_prev: &[f64],
        mu: &MuState,
        ops: &InterfaceOps,
        data: &ProblemData,
    ) -> Result<(Vec<f64>, Vec<f64>), BuildError> {
        let pairs = self.essential_pairs(t_new, data)?;
        self.system.update_essential_values(&pairs)?;
        let rhs = self.rhs(t_new, u_prev, mu, ops, data);
        let x = self.solve(&rhs)?;
        Ok(split(&x, self.n_u))
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.system.solve(rhs)
    }

    /// a_f energy norm squared of a velocity coefficient vector.
    pub fn af_norm_sq(&self, params: &PhysicalParams, u: &[f64]) -> f64 {
        crate::fields::sym_grad_norm_sq(
            crate::fields::FieldRef::new(&self.vel, u),
            &self.cache_vel,
            &self.quad_weights,
            2.0 * params.mu_f,
        )
    }
}

pub(crate) fn split(x: &[f64], at: usize) -> (Vec<f64>, Vec<f64>) {
    (x[..at].to_vec(), x[at..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementFamily;
    use crate::mesh::{
        build_rect_mesh, extract_interface, tag_boundaries, BoundaryTag, DiagonalRule, DomainLabel,
    };

    pub(crate) fn unit_square_pair(
        n: usize,
    ) -> (Arc<crate::mesh::TriMesh>, Arc<crate::mesh::TriMesh>, InterfaceMesh) {
        let fluid = Arc::new(
            tag_boundaries(
                build_rect_mesh(0.0, 1.0, 0.0, 1.0, n, n, DiagonalRule::LowerLeft, DomainLabel::Fluid)
                    .unwrap(),
                &[
                    (&|m: [f64; 2]| m[1] < 1e-12, BoundaryTag::Interface),
                    (&|m: [f64; 2]| m[1] > 1.0 - 1e-12, BoundaryTag::FluidDirichlet),
                    (&|_m: [f64; 2]| true, BoundaryTag::FluidNeumann),
                ],
            )
            .unwrap(),
        );
        let poro = Arc::new(
            tag_boundaries(
                build_rect_mesh(
                    0.0,
                    1.0,
                    -1.0,
                    0.0,
                    n,
                    n,
                    DiagonalRule::LowerLeft,
                    DomainLabel::Poroelastic,
                )
                .unwrap(),
                &[
                    (&|m: [f64; 2]| m[1] > -1e-12, BoundaryTag::Interface),
                    (&|m: [f64; 2]| m[1] < -1.0 + 1e-12, BoundaryTag::PoroDispDirichlet),
                    (&|_m: [f64; 2]| true, BoundaryTag::PoroTraction),
                ],
            )
            .unwrap(),
        );
        let gamma = extract_interface(&fluid, &poro).unwrap();
        (fluid, poro, gamma)
    }

    #[test]
    fn zero_data_gives_zero_fields() {
        let (fluid, poro, gamma) = unit_square_pair(4);
        let params = PhysicalParams::default();
        let vel = Arc::new(DofMap::new(ElementFamily::VecP2, fluid));
        let pres = Arc::new(DofMap::new(ElementFamily::P1, vel.mesh.clone()));
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt0, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, params.mu_f);
        let mut solver = StokesSolver::new(
            &params,
            0.1,
            vel.clone(),
            pres,
            &gamma,
            &BoundaryRoles::default(),
        )
        .unwrap();
        let mu = MuState::zeros(&lam);
        let data = ProblemData::zero();
        let u0 = vec![0.0; vel.n_dofs];
        let (u, p) = solver.step(0.1, &u0, &mu, &ops, &data).unwrap();
        assert!(u.iter().all(|v| v.abs() < 1e-12));
        assert!(p.iter().all(|v| v.abs() < 1e-12));
    }

    /// Steady polynomial solution reproduced to solver accuracy: u = (y^2, x^2),
    /// p = x - 1 + c with consistent forcing, traction, Dirichlet, and Robin data.
    #[test]
    fn quadratic_patch_test_with_robin_interface() {
        let (fluid, _poro, gamma) = unit_square_pair(3);
        let mut params = PhysicalParams::default();
        params.mu_f = 0.7;
        params.gamma_f = 2.5;
        let mu_f = params.mu_f;
        let u_ex = |x: f64, y: f64| [y * y, x * x];
        let grad_ex = |x: f64, y: f64| [[0.0, 2.0 * y], [2.0 * x, 0.0]];
        let p_ex = |x: f64, _y: f64| x - 0.5;
        let sigma = move |x: f64, y: f64| {
            let g = grad_ex(x, y);
            let d01 = 0.5 * (g[0][1] + g[1][0]);
            [
                [2.0 * mu_f * g[0][0] - p_ex(x, y), 2.0 * mu_f * d01],
                [2.0 * mu_f * d01, 2.0 * mu_f * g[1][1] - p_ex(x, y)],
            ]
        };
        // f = rho_f d_t u - div sigma = -div(2 mu D) + grad p (steady state)
        let f_ex = move |x: f64, _y: f64| {
            let _ = x;
            [1.0 - 2.0 * mu_f, -2.0 * mu_f]
        };

        let vel = Arc::new(DofMap::new(ElementFamily::VecP2, fluid));
        let pres = Arc::new(DofMap::new(ElementFamily::P1, vel.mesh.clone()));
        let (_f2, poro, _g2) = unit_square_pair(3);
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt0, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, params.mu_f);

        let dt = 0.25;
        let mut solver =
            StokesSolver::new(&params, dt, vel.clone(), pres.clone(), &gamma, &BoundaryRoles::default())
                .unwrap();

        // Robin data on the interface (y = 0, n_f = (0,-1), tau_f = (1,0)):
        // mu_n = gamma u.n + (sigma n).n, mu_tau = gamma u.tau + (sigma n).tau
        let gamma_f = params.gamma_f;
        let mu = MuState {
            mu_n: lam.project(&|_i, _s, xy| {
                let (x, y) = (xy[0], xy[1]);
                let s = sigma(x, y);
                let u = u_ex(x, y);
                let n = [0.0, -1.0];
                let sn = [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]];
                gamma_f * (u[0] * n[0] + u[1] * n[1]) + sn[0] * n[0] + sn[1] * n[1]
            }),
            mu_tau: lam.project(&|_i, _s, xy| {
                let (x, y) = (xy[0], xy[1]);
                let s = sigma(x, y);
                let u = u_ex(x, y);
                let n = [0.0, -1.0];
                let t = [1.0, 0.0];
                let sn = [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]];
                gamma_f * (u[0] * t[0] + u[1] * t[1]) + sn[0] * t[0] + sn[1] * t[1]
            }),
        };

        let data = ProblemData {
            f_f: Box::new(move |_t, x, y| f_ex(x, y)),
            fluid_dirichlet: Box::new(move |_t, x, y| u_ex(x, y)),
            fluid_traction: Box::new(move |_t, x, y, n| {
                let s = sigma(x, y);
                [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]]
            }),
            ..ProblemData::zero()
        };

        // steady state: history term uses the exact solution itself
        let u_prev = vel.interpolate_vector(&|x, y| u_ex(x, y));
        let (u, p) = solver.step(1.0, &u_prev, &mu, &ops, &data).unwrap();
        for (a, b) in u.iter().zip(&u_prev) {
            assert!((a - b).abs() < 1e-9, "velocity not reproduced: {a} vs {b}");
        }
        let p_nodes = pres.interpolate_scalar(&|x, y| p_ex(x, y));
        for (a, b) in p.iter().zip(&p_nodes) {
            assert!((a - b).abs() < 1e-8, "pressure not reproduced: {a} vs {b}");
        }
    }
}
