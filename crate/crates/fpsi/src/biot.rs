//! The poroelastic (Biot) subdomain solver: displacement plus mixed Darcy
//! velocity/pressure, with Robin interface data and the optional spring term
//! of the axially symmetric wall model.
//!
//! Unknown layout per step: [eta | u_p | p_p]. The interface combination
//! gamma_p <(u_p + d_t eta) . n_p, (v + xi) . n_p> expands into four blocks;
//! the d_t eta factor contributes 1/dt on the eta columns and puts the eta^n
//! part on the right-hand side.

use crate::assembly::{
    assemble_form, assemble_interface_mass, boundary_traction_load, darcy_pressure_load,
    volume_load_scalar, volume_load_vector, FormKind, TraceVec, Triplet,
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

pub struct BiotSolver {
    pub disp: Arc<DofMap>,
    pub darcy: Arc<DofMap>,
    pub pres: Arc<DofMap>,
    pub n_x: usize,
    pub n_d: usize,
    pub n_w: usize,
    pub n: usize,
    pub system: SparseSystem,
    // diagonal and coupling blocks in local numbering, for monolithic reuse
    pub xx_block: Vec<Triplet>,
    pub xd_block: Vec<Triplet>,
    pub xw_block: Vec<Triplet>,
    pub dx_block: Vec<Triplet>,
    pub dd_block: Vec<Triplet>,
    pub dw_block: Vec<Triplet>,
    pub wx_block: Vec<Triplet>,
    pub wd_block: Vec<Triplet>,
    pub ww_block: Vec<Triplet>,
    // interface couplings to the fluid velocity (split schemes: rhs terms)
    pub g_xf: CooMat,
    pub g_df: CooMat,
    pub s_xf: CooMat,
    // history operators
    mass_x: CooMat,
    mass_w: CooMat,
    g_xx: CooMat,
    g_dx: CooMat,
    div_x: CooMat,
    pub cache_disp: BasisCache,
    pub cache_darcy: BasisCache,
    pub cache_pres: BasisCache,
    quad_weights: Vec<f64>,
    roles: BoundaryRoles,
    params: PhysicalParams,
    pub dt: f64,
}

impl BiotSolver {
    pub fn new(
        params: &PhysicalParams,
        dt: f64,
        disp: Arc<DofMap>,
        darcy: Arc<DofMap>,
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
        let gp = params.gamma_p;

        let mass_x_trips = assemble_form(FormKind::Mass { coeff: 1.0 }, &disp, &disp, &quad)?;
        let mass_w_trips = assemble_form(FormKind::Mass { coeff: 1.0 }, &pres, &pres, &quad)?;
        let div_x_trips = assemble_form(FormKind::DivCoupling, &disp, &pres, &quad)?;
        let div_d_trips = assemble_form(FormKind::DivCoupling, &darcy, &pres, &quad)?;

        // interface normal/tangential masses
        let gxx_n = assemble_interface_mass(
            (&disp, TraceVec::NormalP),
            (&disp, TraceVec::NormalP),
            interface,
        );
        let gxx_t = assemble_interface_mass(
            (&disp, TraceVec::TangentP),
            (&disp, TraceVec::TangentP),
            interface,
        );
        let gdd_n = assemble_interface_mass(
            (&darcy, TraceVec::NormalP),
            (&darcy, TraceVec::NormalP),
            interface,
        );
        let gxd_n = assemble_interface_mass(
            (&darcy, TraceVec::NormalP),
            (&disp, TraceVec::NormalP),
            interface,
        );
        let gdx_n = assemble_interface_mass(
            (&disp, TraceVec::NormalP),
            (&darcy, TraceVec::NormalP),
            interface,
        );

        // displacement diagonal block
        let mut xx_block = assemble_form(
            FormKind::Elasticity {
                two_mu: 2.0 * params.mu_p,
                lambda: params.lambda_p,
                extra_mass: params.beta,
            },
            &disp,
            &disp,
            &quad,
        )?;
        let rho_dt2 = params.rho_p / (dt * dt);
        if rho_dt2 > 0.0 {
            xx_block.extend(mass_x_trips.iter().map(|&(r, c, v)| (r, c, rho_dt2 * v)));
        }
        xx_block.extend(gxx_n.iter().map(|&(r, c, v)| (r, c, gp / dt * v)));
        xx_block.extend(gxx_t.iter().map(|&(r, c, v)| (r, c, gp / dt * v)));

        let xd_block: Vec<Triplet> = gxd_n.iter().map(|&(r, c, v)| (r, c, gp * v)).collect();
        let xw_block: Vec<Triplet> =
            div_x_trips.iter().map(|&(k, j, v)| (j, k, -params.alpha * v)).collect();

        let mut dd_block = assemble_form(
            FormKind::WeightedVectorMass { w: params.darcy_weight() },
            &darcy,
            &darcy,
            &quad,
        )?;
        dd_block.extend(gdd_n.iter().map(|&(r, c, v)| (r, c, gp * v)));
        let dx_block: Vec<Triplet> = gdx_n.iter().map(|&(r, c, v)| (r, c, gp / dt * v)).collect();
        let dw_block: Vec<Triplet> = div_d_trips.iter().map(|&(k, j, v)| (j, k, -v)).collect();

        let wx_block: Vec<Triplet> =
            div_x_trips.iter().map(|&(k, j, v)| (k, j, params.alpha / dt * v)).collect();
        let wd_block: Vec<Triplet> = div_d_trips.clone();
        let ww_block: Vec<Triplet> =
            mass_w_trips.iter().map(|&(r, c, v)| (r, c, params.s0 / dt * v)).collect();

        let n_x = disp.n_dofs;
        let n_d = darcy.n_dofs;
        let n_w = pres.n_dofs;
        let n = n_x + n_d + n_w;
        let mut system = SparseSystem::new("biot", n);
        system.add_block(0, 0, 1.0, &xx_block);
        system.add_block(0, n_x, 1.0, &xd_block);
        system.add_block(0, n_x + n_d, 1.0, &xw_block);
        system.add_block(n_x, 0, 1.0, &dx_block);
        system.add_block(n_x, n_x, 1.0, &dd_block);
        system.add_block(n_x, n_x + n_d, 1.0, &dw_block);
        system.add_block(n_x + n_d, 0, 1.0, &wx_block);
        system.add_block(n_x + n_d, n_x, 1.0, &wd_block);
        system.add_block(n_x + n_d, n_x + n_d, 1.0, &ww_block);

        // essential constraints: clamped displacement, tangent pins, Darcy flux
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for &tag in &roles.disp_dirichlet {
            for d in disp.boundary_dofs(tag, &[0, 1]) {
                pairs.push((d, 0.0));
            }
        }
        pairs.extend(axis_component_pins(&disp, &roles.disp_tangent_pin, false)?);
        for &tag in &roles.darcy_flux {
            for d in darcy.boundary_dofs(tag, &[]) {
                pairs.push((n_x + d, 0.0));
            }
        }
        system.set_essential(&pairs)?;

        // fluid velocity couplings, filled by bind_fluid
        let g_xf = CooMat::new(n_x, 0);
        let g_df = CooMat::new(n_d, 0);
        let s_xf = CooMat::new(n_x, 0);

        let to_coo = |trips: Vec<Triplet>, rows: usize, cols: usize| {
            let mut m = CooMat::new(rows, cols);
            for (r, c, v) in trips {
                m.push(r, c, v);
            }
            m
        };

        let mass_x = to_coo(mass_x_trips, n_x, n_x);
        let mass_w = to_coo(mass_w_trips, n_w, n_w);
        let mut g_xx = CooMat::new(n_x, n_x);
        for &(r, c, v) in gxx_n.iter().chain(&gxx_t) {
            g_xx.push(r, c, v);
        }
        let g_dx = to_coo(gdx_n, n_d, n_x);
        let div_x = to_coo(div_x_trips, n_w, n_x);

        let cache_disp = BasisCache::build(&disp, &quad.points);
        let cache_darcy = BasisCache::build(&darcy, &quad.points);
        let cache_pres = BasisCache::build(&pres, &quad.points);

        Ok(Self {
            disp,
            darcy,
            pres,
            n_x,
            n_d,
            n_w,
            n,
            system,
            xx_block,
            xd_block,
            xw_block,
            dx_block,
            dd_block,
            dw_block,
            wx_block,
            wd_block,
            ww_block,
            g_xf,
            g_df,
            s_xf,
            mass_x,
            mass_w,
            g_xx,
            g_dx,
            div_x,
            cache_disp,
            cache_darcy,
            cache_pres,
            quad_weights: quad.weights,
            roles: roles.clone(),
            params: params.clone(),
            dt,
        })
    }

    /// Assembles the couplings from the fluid velocity space into the Biot
    /// right-hand side (and the monolithic off-diagonal blocks).
    pub fn bind_fluid(&mut self, fluid_vel: &DofMap, interface: &InterfaceMesh) {
        let gxf_n = assemble_interface_mass(
            (fluid_vel, TraceVec::NormalF),
            (&self.disp, TraceVec::NormalP),
            interface,
        );
        let gxf_t = assemble_interface_mass(
            (fluid_vel, TraceVec::TangentF),
            (&self.disp, TraceVec::TangentP),
            interface,
        );
        let gdf_n = assemble_interface_mass(
            (fluid_vel, TraceVec::NormalF),
            (&self.darcy, TraceVec::NormalP),
            interface,
        );
        let mut g_xf = CooMat::new(self.n_x, fluid_vel.n_dofs);
        for &(r, c, v) in gxf_n.iter().chain(&gxf_t) {
            g_xf.push(r, c, v);
        }
        let mut g_df = CooMat::new(self.n_d, fluid_vel.n_dofs);
        for (r, c, v) in gdf_n {
            g_df.push(r, c, v);
        }
        let mut s_xf = CooMat::new(self.n_x, fluid_vel.n_dofs);
        if self.params.gamma_bjs > 0.0 {
            let trips = crate::assembly::assemble_interface_stress_tangential(
                fluid_vel,
                (&self.disp, TraceVec::TangentP),
                interface,
                self.params.mu_f,
            );
            for (r, c, v) in trips {
                s_xf.push(r, c, v);
            }
        }
        self.g_xf = g_xf;
        self.g_df = g_df;
        self.s_xf = s_xf;
    }

    /// Essential values at time `t` in local [eta | u_p | p_p] numbering.
    pub fn essential_pairs(&self, t: f64, data: &ProblemData) -> Result<Vec<(usize, f64)>, BuildError> {
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for &tag in &self.roles.disp_dirichlet {
            pairs.extend(self.disp.essential_values(tag, &[0, 1], &|x, y| {
                (data.disp_dirichlet)(t, x, y)
            }));
        }
        pairs.extend(axis_component_pins(&self.disp, &self.roles.disp_tangent_pin, false)?);
        for &tag in &self.roles.darcy_flux {
            pairs.extend(
                self.darcy
                    .essential_values(tag, &[], &|x, y| (data.darcy_flux)(t, x, y))
                    .into_iter()
                    .map(|(d, v)| (self.n_x + d, v)),
            );
        }
        Ok(pairs)
    }

    /// Right-hand side at the new time level given the previous state, the
    /// interface data, and the freshly computed fluid velocity.
    #[allow(clippy::too_many_arguments)]
    pub fn rhs(
        &self,
        t_new: f64,
        eta_prev: &[f64],
        dt_eta_prev: &[f64],
        p_prev: &[f64],
        mu: &MuState,
        u_f_new: &[f64],
        ops: &InterfaceOps,
        data: &ProblemData,
    ) -> Vec<f64> {
        let p = &self.params;
        let (n_x, n_d) = (self.n_x, self.n_d);
        let mut rhs = vec![0.0; self.n];

        // displacement rows
        let f = |x: f64, y: f64| (data.f_p)(t_new, x, y);
        let body = volume_load_vector(&self.disp, &self.cache_disp, &f);
        rhs[..n_x].copy_from_slice(&body);
        let rho_dt2 = p.rho_p / (self.dt * self.dt);
        if rho_dt2 > 0.0 {
            let hist: Vec<f64> = eta_prev
                .iter()
                .zip(dt_eta_prev)
                .map(|(e, de)| e + self.dt * de)
                .collect();
            self.mass_x.add_mul_vec(&hist, rho_dt2, &mut rhs[..n_x]);
        }
        self.g_xx.add_mul_vec(eta_prev, p.gamma_p / self.dt, &mut rhs[..n_x]);
        ops.r_xn.add_mul_transpose_vec(&mu.mu_n, 1.0, &mut rhs[..n_x]);
        ops.r_xtau.add_mul_transpose_vec(&mu.mu_tau, 1.0, &mut rhs[..n_x]);
        let gsum = p.gamma_p + p.gamma_f;
        self.g_xf.add_mul_vec(u_f_new, -gsum, &mut rhs[..n_x]);
        if p.gamma_bjs > 0.0 {
            self.s_xf.add_mul_vec(u_f_new, -p.gamma_p * p.gamma_bjs, &mut rhs[..n_x]);
        }
        let traction = boundary_traction_load(&self.disp, &self.roles.disp_traction, &|x, y, n| {
            (data.poro_traction)(t_new, x, y, n)
        });
        for (r, v) in rhs[..n_x].iter_mut().zip(&traction) {
            *r += v;
        }

        // Darcy velocity rows
        self.g_dx.add_mul_vec(eta_prev, p.gamma_p / self.dt, &mut rhs[n_x..n_x + n_d]);
        ops.r_dn.add_mul_transpose_vec(&mu.mu_n, 1.0, &mut rhs[n_x..n_x + n_d]);
        self.g_df.add_mul_vec(u_f_new, -gsum, &mut rhs[n_x..n_x + n_d]);
        let pd = |x: f64, y: f64| (data.darcy_pressure)(t_new, x, y);
        let pdload = darcy_pressure_load(&self.darcy, &self.roles.darcy_pressure, &pd);
        for (r, v) in rhs[n_x..n_x + n_d].iter_mut().zip(&pdload) {
            *r += v;
        }

        // pressure rows
        let q = |x: f64, y: f64| (data.q_p)(t_new, x, y);
        let qload = volume_load_scalar(&self.pres, &self.cache_pres, &q);
        let w0 = n_x + n_d;
        rhs[w0..].copy_from_slice(&qload);
        self.mass_w.add_mul_vec(p_prev, p.s0 / self.dt, &mut rhs[w0..]);
        self.div_x.add_mul_vec(eta_prev, p.alpha / self.dt, &mut rhs[w0..]);

        rhs
    }

    /// One Biot solve; returns (eta, u_p, p_p).
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        t_new: f64,
        eta_prev: &[f64],
        dt_eta_prev: &[f64],
        p_prev: &[f64],
        mu: &MuState,
        u_f_new: &[f64],
        ops: &InterfaceOps,
        data: &ProblemData,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), BuildError> {
        let pairs = self.essential_pairs(t_new, data)?;
        self.system.update_essential_values(&pairs)?;
        let rhs = self.rhs(t_new, eta_prev, dt_eta_prev, p_prev, mu, u_f_new, ops, data);
        let x = self.solve(&rhs)?;
        let eta = x[..self.n_x].to_vec();
        let up = x[self.n_x..self.n_x + self.n_d].to_vec();
        let pp = x[self.n_x + self.n_d..].to_vec();
        Ok((eta, up, pp))
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.system.solve(rhs)
    }

    /// Elastic energy norm squared (includes the spring term when beta > 0).
    pub fn elastic_norm_sq(&self, eta: &[f64]) -> f64 {
        crate::fields::elastic_norm_sq(
            crate::fields::FieldRef::new(&self.disp, eta),
            &self.cache_disp,
            &self.quad_weights,
            2.0 * self.params.mu_p,
            self.params.lambda_p,
            self.params.beta,
        )
    }

    /// Darcy dissipation norm squared.
    pub fn darcy_norm_sq(&self, u_p: &[f64]) -> f64 {
        crate::fields::darcy_norm_sq(
            crate::fields::FieldRef::new(&self.darcy, u_p),
            &self.cache_darcy,
            &self.quad_weights,
            self.params.darcy_weight(),
        )
    }
}
