//! The three time-stepping schemes over the shared spatial discretization:
//! the non-iterative Robin-Robin splitting, its iterated variant, and the
//! monolithic scheme with the interface variable as a Robin Lagrange
//! multiplier; plus the energy diagnostics used by the stability checks.

use crate::biot::BiotSolver;
use crate::dofmap::DofMap;
use crate::fields::{self, FieldRef};
use crate::interface::{
    continuity_residual_norm, update_mu, InterfaceOps, LambdaSpace, MuInit, MuState,
};
use crate::mesh::{InterfaceMesh, TriMesh};
use crate::params::PhysicalParams;
use crate::problem::{BoundaryRoles, BuildError, ProblemData};
use crate::sparse::SparseSystem;
use crate::stokes::StokesSolver;
use std::sync::Arc;

/// All discrete unknowns at one time level.
#[derive(Debug, Clone)]
pub struct CoupledState {
    pub t: f64,
    pub u_f: Vec<f64>,
    pub p_f: Vec<f64>,
    pub eta_p: Vec<f64>,
    pub dt_eta_p: Vec<f64>,
    pub u_p: Vec<f64>,
    pub p_p: Vec<f64>,
    pub mu: MuState,
}

/// The diagnostic triple: stored energy, physical dissipation rate, and
/// numerical-dissipation increment.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyReport {
    pub e: f64,
    pub d: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    NonIterative,
    /// Sub-iterate Stokes/Biot until the interface velocity stagnates below
    /// `eps` in L2(interface), capped at `k_max` iterations.
    Iterative { eps: f64, k_max: usize },
    /// Run exactly `iterations` sub-iterations per step.
    IterativeFixed { iterations: usize },
    Monolithic,
}

/// Everything needed to advance one configuration in time: spaces, cached
/// factorizations, interface operators, and problem data.
pub struct SchemeContext {
    pub params: PhysicalParams,
    pub dt: f64,
    pub interface: InterfaceMesh,
    pub lambda: LambdaSpace,
    pub ops: InterfaceOps,
    pub stokes: StokesSolver,
    pub biot: BiotSolver,
    pub data: ProblemData,
    mono: Option<MonolithicSolver>,
}

impl SchemeContext {
    /// Builds the full discretization from two tagged meshes. `darcy_family`
    /// selects the mixed Darcy pair: Rt0 with P0 pressure or Rt1 with
    /// discontinuous P1 pressure.
    pub fn build(
        params: PhysicalParams,
        dt: f64,
        fluid_mesh: Arc<TriMesh>,
        poro_mesh: Arc<TriMesh>,
        darcy_family: crate::element::ElementFamily,
        roles: BoundaryRoles,
        data: ProblemData,
    ) -> Result<Self, BuildError> {
        params.validate()?;
        let interface = crate::mesh::extract_interface(&fluid_mesh, &poro_mesh)?;
        let vel = Arc::new(DofMap::new(crate::element::ElementFamily::VecP2, fluid_mesh.clone()));
        let f_pres = Arc::new(DofMap::new(crate::element::ElementFamily::P1, fluid_mesh));
        let disp = Arc::new(DofMap::new(crate::element::ElementFamily::VecP2, poro_mesh.clone()));
        let darcy = Arc::new(DofMap::new(darcy_family, poro_mesh.clone()));
        let p_family = match darcy_family {
            crate::element::ElementFamily::Rt0 => crate::element::ElementFamily::P0,
            crate::element::ElementFamily::Rt1 => crate::element::ElementFamily::P1Disc,
            other => panic!("unsupported Darcy family {other:?}"),
        };
        let p_pres = Arc::new(DofMap::new(p_family, poro_mesh));

        let lambda = LambdaSpace::new(&interface, &vel)?;
        let ops = InterfaceOps::build(&lambda, &vel, &disp, &darcy, params.mu_f);
        let stokes = StokesSolver::new(&params, dt, vel.clone(), f_pres, &interface, &roles)?;
        let mut biot = BiotSolver::new(&params, dt, disp, darcy, p_pres, &interface, &roles)?;
        biot.bind_fluid(&vel, &interface);
        Ok(Self { params, dt, interface, lambda, ops, stokes, biot, data, mono: None })
    }

    pub fn vel(&self) -> &Arc<DofMap> {
        &self.stokes.vel
    }

    pub fn zero_state(&self) -> CoupledState {
        CoupledState {
            t: 0.0,
            u_f: vec![0.0; self.stokes.n_u],
            p_f: vec![0.0; self.stokes.n_p],
            eta_p: vec![0.0; self.biot.n_x],
            dt_eta_p: vec![0.0; self.biot.n_x],
            u_p: vec![0.0; self.biot.n_d],
            p_p: vec![0.0; self.biot.n_w],
            mu: MuState::zeros(&self.lambda),
        }
    }

    /// Initial state by L2-orthogonal projection of the given fields; the
    /// seeded discrete structure velocity is the projection of `u_s0`.
    #[allow(clippy::too_many_arguments)]
    pub fn project_initial_state(
        &self,
        u_f0: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
        p_f0: &(dyn Fn(f64, f64) -> f64 + Sync),
        eta0: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
        u_s0: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
        u_p0: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
        p_p0: &(dyn Fn(f64, f64) -> f64 + Sync),
        mu0: MuInit<'_>,
    ) -> Result<CoupledState, BuildError> {
        let mu = crate::interface::init_mu(&self.lambda, &self.params, mu0)?;
        Ok(CoupledState {
            t: 0.0,
            u_f: crate::assembly::l2_project_vector(&self.stokes.vel, u_f0),
            p_f: crate::assembly::l2_project_scalar(&self.stokes.pres, p_f0),
            eta_p: crate::assembly::l2_project_vector(&self.biot.disp, eta0),
            dt_eta_p: crate::assembly::l2_project_vector(&self.biot.disp, u_s0),
            u_p: crate::assembly::l2_project_vector(&self.biot.darcy, u_p0),
            p_p: crate::assembly::l2_project_scalar(&self.biot.pres, p_p0),
            mu,
        })
    }

    /// Stored energy E at a state (the interface terms enter only when
    /// gamma_f == gamma_p, matching the regime of the stability analysis).
    pub fn energy(&self, state: &CoupledState) -> f64 {
        let p = &self.params;
        let qw = &crate::quadrature::quadrature(6).unwrap().weights;
        let mut e = 0.0;
        e += 0.5
            * p.rho_f_eff()
            * fields::l2_norm_sq(
                FieldRef::new(&self.stokes.vel, &state.u_f),
                &self.stokes.cache_vel,
                qw,
            );
        e += 0.5
            * p.rho_p
            * fields::l2_norm_sq(
                FieldRef::new(&self.biot.disp, &state.dt_eta_p),
                &self.biot.cache_disp,
                qw,
            );
        e += 0.5 * self.biot.elastic_norm_sq(&state.eta_p);
        e += 0.5
            * p.s0
            * fields::l2_norm_sq(
                FieldRef::new(&self.biot.pres, &state.p_p),
                &self.biot.cache_pres,
                qw,
            );
        if (p.gamma_f - p.gamma_p).abs() <= 1e-14 * p.gamma_f.abs() {
            let gamma = p.gamma_f;
            let mu_sq = self.lambda.l2_inner(&state.mu.mu_n, &state.mu.mu_n)
                + self.lambda.l2_inner(&state.mu.mu_tau, &state.mu.mu_tau);
            e += self.dt / (4.0 * gamma) * mu_sq;
        }
        e
    }

    /// Stored energy without the interface-variable terms (the monolithic
    /// stability estimate).
    pub fn energy_no_mu(&self, state: &CoupledState) -> f64 {
        let p = &self.params;
        let qw = &crate::quadrature::quadrature(6).unwrap().weights;
        0.5 * p.rho_f_eff()
            * fields::l2_norm_sq(
                FieldRef::new(&self.stokes.vel, &state.u_f),
                &self.stokes.cache_vel,
                qw,
            )
            + 0.5
                * p.rho_p
                * fields::l2_norm_sq(
                    FieldRef::new(&self.biot.disp, &state.dt_eta_p),
                    &self.biot.cache_disp,
                    qw,
                )
            + 0.5 * self.biot.elastic_norm_sq(&state.eta_p)
            + 0.5
                * p.s0
                * fields::l2_norm_sq(
                    FieldRef::new(&self.biot.pres, &state.p_p),
                    &self.biot.cache_pres,
                    qw,
                )
    }

    /// Physical dissipation D = |u_f|_f^2 + |u_p|_d^2.
    pub fn dissipation(&self, state: &CoupledState) -> f64 {
        self.stokes.af_norm_sq(&self.params, &state.u_f) + self.biot.darcy_norm_sq(&state.u_p)
    }

    /// Numerical-dissipation increment S between two consecutive states.
    pub fn numerical_increment(&self, state: &CoupledState, prev: &CoupledState) -> f64 {
        let p = &self.params;
        let qw = &crate::quadrature::quadrature(6).unwrap().weights;
        let mut s = 0.0;
        s += 0.5
            * p.rho_p
            * fields::l2_diff_sq(
                &self.biot.disp,
                &state.dt_eta_p,
                &prev.dt_eta_p,
                &self.biot.cache_disp,
                qw,
            );
        s += 0.5
            * p.rho_f_eff()
            * fields::l2_diff_sq(
                &self.stokes.vel,
                &state.u_f,
                &prev.u_f,
                &self.stokes.cache_vel,
                qw,
            );
        let deta: Vec<f64> =
            state.eta_p.iter().zip(&prev.eta_p).map(|(a, b)| a - b).collect();
        s += 0.5 * self.biot.elastic_norm_sq(&deta);
        s += 0.5
            * p.s0
            * fields::l2_diff_sq(&self.biot.pres, &state.p_p, &prev.p_p, &self.biot.cache_pres, qw);
        s
    }

    pub fn energy_report(&self, state: &CoupledState, prev: Option<&CoupledState>) -> EnergyReport {
        EnergyReport {
            e: self.energy(state),
            d: self.dissipation(state),
            s: prev.map(|p| self.numerical_increment(state, p)).unwrap_or(0.0),
        }
    }

    /// Functional norm of the weak interface-continuity residual.
    pub fn interface_residual(&self, state: &CoupledState) -> f64 {
        let rn =
            self.ops.continuity_load_normal(&state.dt_eta_p, &state.u_p, &state.u_f);
        let rt = self.ops.continuity_load_tangential(&state.dt_eta_p, &state.u_f);
        let a = continuity_residual_norm(&self.lambda, &rn);
        let b = continuity_residual_norm(&self.lambda, &rt);
        (a * a + b * b).sqrt()
    }

    /// L2(interface) norm of the normal-trace difference of two fluid
    /// velocity coefficient vectors (the sub-iteration stopping quantity).
    pub fn normal_trace_diff_norm(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut c = self.lambda.zeros();
        for (i, seg) in self.lambda.interface.segments.iter().enumerate() {
            let nf = seg.normal_f;
            for &node in &self.lambda.seg_nodes[i] {
                let fnode = self.lambda.fluid_nodes[node];
                let d0 = a[2 * fnode] - b[2 * fnode];
                let d1 = a[2 * fnode + 1] - b[2 * fnode + 1];
                c[node] = d0 * nf[0] + d1 * nf[1];
            }
        }
        self.lambda.l2_norm(&c)
    }
}

/// One step of the non-iterative splitting: Stokes with the current
/// interface data, Biot with the fresh fluid velocity, then the interface
/// update.
pub fn step_noniterative(
    ctx: &mut SchemeContext,
    state: &CoupledState,
) -> Result<CoupledState, BuildError> {
    let t1 = state.t + ctx.dt;
    let (u_f, p_f) = ctx.stokes.step(t1, &state.u_f, &state.mu, &ctx.ops, &ctx.data)?;
    let (eta_p, u_p, p_p) = ctx.biot.step(
        t1,
        &state.eta_p,
        &state.dt_eta_p,
        &state.p_p,
        &state.mu,
        &u_f,
        &ctx.ops,
        &ctx.data,
    )?;
    let dt_eta_p: Vec<f64> =
        eta_p.iter().zip(&state.eta_p).map(|(a, b)| (a - b) / ctx.dt).collect();
    let mu = update_mu(
        &ctx.lambda,
        &ctx.ops,
        &state.mu,
        &ctx.params,
        &u_f,
        &u_p,
        &dt_eta_p,
        ctx.params.gamma_bjs > 0.0,
    )?;
    Ok(CoupledState { t: t1, u_f, p_f, eta_p, dt_eta_p, u_p, p_p, mu })
}

/// One step of the iterated splitting. History terms stay frozen at the
/// previous time level; the interface variable is re-seeded from it and
/// updated per sub-iteration. Returns the accepted state, the number of
/// iterations, and whether the tolerance was met.
pub fn step_iterative(
    ctx: &mut SchemeContext,
    state: &CoupledState,
    eps: f64,
    k_max: usize,
    fixed: Option<usize>,
) -> Result<(CoupledState, usize, bool), BuildError> {
    if ctx.params.gamma_bjs > 0.0 {
        return Err(BuildError::GammaMismatch {
            gamma_f: ctx.params.gamma_bjs,
            gamma_p: 0.0,
        });
    }
    let t1 = state.t + ctx.dt;
    let mut mu_k = state.mu.clone();
    let mut u_f_prev = state.u_f.clone();
    let mut accepted: Option<CoupledState> = None;
    let limit = fixed.unwrap_or(k_max).max(1);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < limit {
        let (u_f, p_f) = ctx.stokes.step(t1, &state.u_f, &mu_k, &ctx.ops, &ctx.data)?;
        let (eta_p, u_p, p_p) = ctx.biot.step(
            t1,
            &state.eta_p,
            &state.dt_eta_p,
            &state.p_p,
            &mu_k,
            &u_f,
            &ctx.ops,
            &ctx.data,
        )?;
        let dt_eta_p: Vec<f64> =
            eta_p.iter().zip(&state.eta_p).map(|(a, b)| (a - b) / ctx.dt).collect();
        mu_k = update_mu(
            &ctx.lambda,
            &ctx.ops,
            &mu_k,
            &ctx.params,
            &u_f,
            &u_p,
            &dt_eta_p,
            false,
        )?;
        iterations += 1;
        let crit = ctx.normal_trace_diff_norm(&u_f, &u_f_prev);
        u_f_prev = u_f.clone();
        accepted = Some(CoupledState {
            t: t1,
            u_f,
            p_f,
            eta_p,
            dt_eta_p,
            u_p,
            p_p,
            mu: mu_k.clone(),
        });
        if fixed.is_none() && crit < eps {
            converged = true;
            break;
        }
        if fixed == Some(iterations) {
            converged = true;
            break;
        }
    }
    Ok((accepted.expect("at least one iteration"), iterations, converged))
}

/// One step of the fully coupled scheme.
pub fn step_monolithic(
    ctx: &mut SchemeContext,
    state: &CoupledState,
) -> Result<CoupledState, BuildError> {
    if ctx.mono.is_none() {
        let mono = MonolithicSolver::new(ctx)?;
        ctx.mono = Some(mono);
    }
    let t1 = state.t + ctx.dt;
    // borrow dance: the monolithic solver needs the subsolvers immutably
    let mut mono = ctx.mono.take().expect("built above");
    let result = mono.step(ctx, t1, state);
    ctx.mono = Some(mono);
    result
}

/// The fully coupled solver: a single sparse system over all subdomain
/// unknowns plus the interface multiplier, with weak velocity continuity as
/// constraint rows.
pub struct MonolithicSolver {
    system: SparseSystem,
    off_pf: usize,
    off_x: usize,
    off_mun: usize,
    off_mut: usize,
    n: usize,
}

impl MonolithicSolver {
    pub fn new(ctx: &SchemeContext) -> Result<Self, BuildError> {
        let p = &ctx.params;
        if (p.gamma_f - p.gamma_p).abs() > 1e-14 * p.gamma_f.abs() {
            return Err(BuildError::GammaMismatch { gamma_f: p.gamma_f, gamma_p: p.gamma_p });
        }
        if p.gamma_bjs > 0.0 {
            return Err(BuildError::GammaMismatch { gamma_f: p.gamma_bjs, gamma_p: 0.0 });
        }
        let gamma = p.gamma_f;
        let dt = ctx.dt;
        let (n_u, n_pf) = (ctx.stokes.n_u, ctx.stokes.n_p);
        let (n_x, n_d, n_w) = (ctx.biot.n_x, ctx.biot.n_d, ctx.biot.n_w);
        let n_lam = ctx.lambda.n_nodes;
        let off_pf = n_u;
        let off_x = n_u + n_pf;
        let off_d = off_x + n_x;
        let off_w = off_d + n_d;
        let off_mun = off_w + n_w;
        let off_mut = off_mun + n_lam;
        let n = off_mut + n_lam;

        let mut system = SparseSystem::new("monolithic", n);
        // fluid block
        system.add_block(0, 0, 1.0, &ctx.stokes.a_block);
        for &(k, j, v) in &ctx.stokes.div_block {
            system.add(j, off_pf + k, -v);
            system.add(off_pf + k, j, -v);
        }
        // poroelastic block
        system.add_block(off_x, off_x, 1.0, &ctx.biot.xx_block);
        system.add_block(off_x, off_d, 1.0, &ctx.biot.xd_block);
        system.add_block(off_x, off_w, 1.0, &ctx.biot.xw_block);
        system.add_block(off_d, off_x, 1.0, &ctx.biot.dx_block);
        system.add_block(off_d, off_d, 1.0, &ctx.biot.dd_block);
        system.add_block(off_d, off_w, 1.0, &ctx.biot.dw_block);
        system.add_block(off_w, off_x, 1.0, &ctx.biot.wx_block);
        system.add_block(off_w, off_d, 1.0, &ctx.biot.wd_block);
        system.add_block(off_w, off_w, 1.0, &ctx.biot.ww_block);
        // fluid velocity enters the Biot rows implicitly: + 2 gamma (...)
        for &(r, c, v) in &ctx.biot.g_xf.entries {
            system.add(off_x + r, c, 2.0 * gamma * v);
        }
        for &(r, c, v) in &ctx.biot.g_df.entries {
            system.add(off_d + r, c, 2.0 * gamma * v);
        }
        // interface multiplier columns: -<mu_n, v.n_f> etc.
        for &(i, j, v) in &ctx.ops.r_fn.entries {
            system.add(j, off_mun + i, -v);
        }
        for &(i, j, v) in &ctx.ops.r_ftau.entries {
            system.add(j, off_mut + i, -v);
        }
        for &(i, j, v) in &ctx.ops.r_xn.entries {
            system.add(off_x + j, off_mun + i, -v);
        }
        for &(i, j, v) in &ctx.ops.r_xtau.entries {
            system.add(off_x + j, off_mut + i, -v);
        }
        for &(i, j, v) in &ctx.ops.r_dn.entries {
            system.add(off_d + j, off_mun + i, -v);
        }
        // weak continuity constraint rows
        for &(i, j, v) in &ctx.ops.r_xn.entries {
            system.add(off_mun + i, off_x + j, v / dt);
        }
        for &(i, j, v) in &ctx.ops.r_dn.entries {
            system.add(off_mun + i, off_d + j, v);
        }
        for &(i, j, v) in &ctx.ops.r_fn.entries {
            system.add(off_mun + i, j, v);
        }
        for &(i, j, v) in &ctx.ops.r_xtau.entries {
            system.add(off_mut + i, off_x + j, v / dt);
        }
        for &(i, j, v) in &ctx.ops.r_ftau.entries {
            system.add(off_mut + i, j, v);
        }

        // essential constraints from both subsolvers (zero values; updated per step)
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for d in ctx.stokes.system.constrained_dofs() {
            pairs.push((d, 0.0));
        }
        for d in ctx.biot.system.constrained_dofs() {
            pairs.push((off_x + d, 0.0));
        }
        system.set_essential(&pairs)?;

        Ok(Self { system, off_pf, off_x, off_mun, off_mut, n })
    }

    pub fn step(
        &mut self,
        ctx: &SchemeContext,
        t1: f64,
        state: &CoupledState,
    ) -> Result<CoupledState, BuildError> {
        let dt = ctx.dt;
        let n_lam = ctx.lambda.n_nodes;
        // essential values at the new time
        let mut pairs = ctx.stokes.essential_pairs(t1, &ctx.data)?;
        pairs.extend(
            ctx.biot
                .essential_pairs(t1, &ctx.data)?
                .into_iter()
                .map(|(d, v)| (self.off_x + d, v)),
        );
        self.system.update_essential_values(&pairs)?;

        // subdomain loads with zero interface data (mu and u_f are unknowns)
        let zero_mu = MuState::zeros(&ctx.lambda);
        let stokes_rhs = ctx.stokes.rhs(t1, &state.u_f, &zero_mu, &ctx.ops, &ctx.data);
        let zero_uf = vec![0.0; ctx.stokes.n_u];
        let biot_rhs = ctx.biot.rhs(
            t1,
            &state.eta_p,
            &state.dt_eta_p,
            &state.p_p,
            &zero_mu,
            &zero_uf,
            &ctx.ops,
            &ctx.data,
        );
        let mut rhs = vec![0.0; self.n];
        rhs[..stokes_rhs.len()].copy_from_slice(&stokes_rhs);
        rhs[self.off_x..self.off_x + biot_rhs.len()].copy_from_slice(&biot_rhs);
        // constraint rows carry the eta^n history of d_t eta
        let hist_n = ctx.ops.r_xn.mul_vec(&state.eta_p);
        let hist_t = ctx.ops.r_xtau.mul_vec(&state.eta_p);
        for i in 0..n_lam {
            rhs[self.off_mun + i] = hist_n[i] / dt;
            rhs[self.off_mut + i] = hist_t[i] / dt;
        }

        let x = self.system.solve(&rhs)?;
        let u_f = x[..ctx.stokes.n_u].to_vec();
        let p_f = x[self.off_pf..self.off_pf + ctx.stokes.n_p].to_vec();
        let eta_p = x[self.off_x..self.off_x + ctx.biot.n_x].to_vec();
        let off_d = self.off_x + ctx.biot.n_x;
        let u_p = x[off_d..off_d + ctx.biot.n_d].to_vec();
        let off_w = off_d + ctx.biot.n_d;
        let p_p = x[off_w..off_w + ctx.biot.n_w].to_vec();
        let mu = MuState {
            mu_n: x[self.off_mun..self.off_mun + n_lam].to_vec(),
            mu_tau: x[self.off_mut..self.off_mut + n_lam].to_vec(),
        };
        let dt_eta_p: Vec<f64> =
            eta_p.iter().zip(&state.eta_p).map(|(a, b)| (a - b) / dt).collect();
        Ok(CoupledState { t: t1, u_f, p_f, eta_p, dt_eta_p, u_p, p_p, mu })
    }
}

/// Per-step diagnostics handed to observers.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// Sub-iterations used (iterative schemes only) and whether the
    /// tolerance was met.
    pub iterations: Option<(usize, bool)>,
    pub energy: EnergyReport,
    pub interface_residual: f64,
}

pub trait StepObserver {
    fn observe(&mut self, record: &StepRecord, state: &CoupledState, ctx: &SchemeContext);
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub total_iterations: usize,
    pub avg_iterations: f64,
    pub not_converged_steps: usize,
    pub final_t: f64,
}

/// Runs `n = (t_end - ic.t)/dt` steps of the chosen scheme. Observers see
/// the initial state as step 0, then every accepted step.
pub fn run(
    ctx: &mut SchemeContext,
    kind: SchemeKind,
    ic: CoupledState,
    t_end: f64,
    observers: &mut [&mut dyn StepObserver],
) -> Result<(CoupledState, RunSummary), BuildError> {
    let span = t_end - ic.t;
    let n_steps = (span / ctx.dt).round();
    if n_steps < 0.0 || (span - n_steps * ctx.dt).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(BuildError::NonIntegralSteps { t_end, dt: ctx.dt });
    }
    let n_steps = n_steps as usize;

    let mut state = ic;
    let record0 = StepRecord {
        step: 0,
        t: state.t,
        iterations: None,
        energy: ctx.energy_report(&state, None),
        interface_residual: ctx.interface_residual(&state),
    };
    for obs in observers.iter_mut() {
        obs.observe(&record0, &state, ctx);
    }

    let mut summary = RunSummary::default();
    for step in 1..=n_steps {
        let prev = state.clone();
        let iterations;
        state = match kind {
            SchemeKind::NonIterative => {
                iterations = None;
                step_noniterative(ctx, &prev)?
            }
            SchemeKind::Iterative { eps, k_max } => {
                let (s, its, conv) = step_iterative(ctx, &prev, eps, k_max, None)?;
                iterations = Some((its, conv));
                s
            }
            SchemeKind::IterativeFixed { iterations: k } => {
                let (s, its, conv) = step_iterative(ctx, &prev, 0.0, k, Some(k))?;
                iterations = Some((its, conv));
                s
            }
            SchemeKind::Monolithic => {
                iterations = None;
                step_monolithic(ctx, &prev)?
            }
        };
        if let Some((its, conv)) = iterations {
            summary.total_iterations += its;
            if !conv {
                summary.not_converged_steps += 1;
            }
        }
        let record = StepRecord {
            step,
            t: state.t,
            iterations,
            energy: ctx.energy_report(&state, Some(&prev)),
            interface_residual: ctx.interface_residual(&state),
        };
        for obs in observers.iter_mut() {
            obs.observe(&record, &state, ctx);
        }
    }
    summary.steps = n_steps;
    summary.avg_iterations = if n_steps > 0 {
        summary.total_iterations as f64 / n_steps as f64
    } else {
        0.0
    };
    summary.final_t = state.t;
    Ok((state, summary))
}
