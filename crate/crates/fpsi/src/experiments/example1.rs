//! Manufactured-solution convergence test on the stacked unit squares
//! (fluid above, poroelastic below, interface at y = 0), with closed-form
//! fields, derived forcing and boundary data, space-time error norms, and
//! the time-step / Robin-parameter study drivers.

use crate::dofmap::DofMap;
use crate::element::ElementFamily;
use crate::fields::{self, FieldRef};
use crate::interface::MuInit;
use crate::mesh::{
    build_rect_mesh, tag_boundaries, BoundaryTag, DiagonalRule, DomainLabel, TriMesh,
};
use crate::params::PhysicalParams;
use crate::parallel;
use crate::problem::{BoundaryRoles, BuildError, ProblemData};
use crate::schemes::{run, CoupledState, SchemeContext, SchemeKind, StepObserver, StepRecord};
use std::f64::consts::PI;
use std::sync::Arc;

/// Closed-form solution fields and everything derived from them.
#[derive(Clone)]
pub struct ExactSolution {
    pub params: PhysicalParams,
}

impl ExactSolution {
    pub fn new(params: PhysicalParams) -> Self {
        Self { params }
    }

    /// The shared spatial profile (-3x + cos y, y + 1).
    fn profile(x: f64, y: f64) -> [f64; 2] {
        [-3.0 * x + y.cos(), y + 1.0]
    }

    pub fn u_f(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let a = PI * (PI * t).cos();
        let p = Self::profile(x, y);
        [a * p[0], a * p[1]]
    }

    pub fn grad_u_f(&self, t: f64, _x: f64, y: f64) -> [[f64; 2]; 2] {
        let a = PI * (PI * t).cos();
        [[-3.0 * a, -a * y.sin()], [0.0, a]]
    }

    pub fn p_f(&self, t: f64, x: f64, y: f64) -> f64 {
        t.exp() * (PI * x).sin() * (PI * y / 2.0).cos() + 2.0 * PI * (PI * t).cos()
    }

    pub fn p_p(&self, t: f64, x: f64, y: f64) -> f64 {
        t.exp() * (PI * x).sin() * (PI * y / 2.0).cos()
    }

    pub fn grad_p_p(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        [
            PI * t.exp() * (PI * x).cos() * (PI * y / 2.0).cos(),
            -PI / 2.0 * t.exp() * (PI * x).sin() * (PI * y / 2.0).sin(),
        ]
    }

    pub fn u_p(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let g = self.grad_p_p(t, x, y);
        let k = self.params.k;
        [
            -(k[0][0] * g[0] + k[0][1] * g[1]) / self.params.mu_f,
            -(k[1][0] * g[0] + k[1][1] * g[1]) / self.params.mu_f,
        ]
    }

    pub fn div_u_p(&self, t: f64, x: f64, y: f64) -> f64 {
        // second derivatives of p_p
        let e = t.exp();
        let pxx = -PI * PI * e * (PI * x).sin() * (PI * y / 2.0).cos();
        let pyy = -PI * PI / 4.0 * e * (PI * x).sin() * (PI * y / 2.0).cos();
        let pxy = -PI * PI / 2.0 * e * (PI * x).cos() * (PI * y / 2.0).sin();
        let k = self.params.k;
        -(k[0][0] * pxx + 2.0 * k[0][1] * pxy + k[1][1] * pyy) / self.params.mu_f
    }

    pub fn eta(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let a = (PI * t).sin();
        let p = Self::profile(x, y);
        [a * p[0], a * p[1]]
    }

    pub fn grad_eta(&self, t: f64, _x: f64, y: f64) -> [[f64; 2]; 2] {
        let a = (PI * t).sin();
        [[-3.0 * a, -a * y.sin()], [0.0, a]]
    }

    pub fn d_eta(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let a = PI * (PI * t).cos();
        let p = Self::profile(x, y);
        [a * p[0], a * p[1]]
    }

    pub fn sigma_f(&self, t: f64, x: f64, y: f64) -> [[f64; 2]; 2] {
        let g = self.grad_u_f(t, x, y);
        let p = self.p_f(t, x, y);
        let d01 = 0.5 * (g[0][1] + g[1][0]);
        let m = self.params.mu_f;
        [
            [2.0 * m * g[0][0] - p, 2.0 * m * d01],
            [2.0 * m * d01, 2.0 * m * g[1][1] - p],
        ]
    }

    pub fn sigma_p(&self, t: f64, x: f64, y: f64) -> [[f64; 2]; 2] {
        let g = self.grad_eta(t, x, y);
        let div = g[0][0] + g[1][1];
        let d01 = 0.5 * (g[0][1] + g[1][0]);
        let (mu, la) = (self.params.mu_p, self.params.lambda_p);
        let ap = self.params.alpha * self.p_p(t, x, y);
        [
            [la * div + 2.0 * mu * g[0][0] - ap, 2.0 * mu * d01],
            [2.0 * mu * d01, la * div + 2.0 * mu * g[1][1] - ap],
        ]
    }

    pub fn f_f(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let p = &self.params;
        let st = (PI * t).sin();
        let ct = (PI * t).cos();
        let e = t.exp();
        [
            PI * (p.mu_f * y.cos() * ct
                + PI * p.rho_f * (3.0 * x - y.cos()) * st
                + e * (PI * x).cos() * (PI * y / 2.0).cos()),
            PI / 2.0
                * (-2.0 * PI * p.rho_f * (y + 1.0) * st - e * (PI * x).sin() * (PI * y / 2.0).sin()),
        ]
    }

    pub fn q_f(&self, t: f64, _x: f64, _y: f64) -> f64 {
        -2.0 * PI * (PI * t).cos()
    }

    pub fn f_p(&self, t: f64, x: f64, y: f64) -> [f64; 2] {
        let p = &self.params;
        let st = (PI * t).sin();
        let e = t.exp();
        [
            PI * p.alpha * e * (PI * x).cos() * (PI * y / 2.0).cos()
                + p.mu_p * st * y.cos()
                + PI * PI * p.rho_p * (3.0 * x - y.cos()) * st,
            -PI / 2.0 * p.alpha * e * (PI * x).sin() * (PI * y / 2.0).sin()
                - PI * PI * p.rho_p * (y + 1.0) * st,
        ]
    }

    pub fn q_p(&self, t: f64, x: f64, y: f64) -> f64 {
        let p = &self.params;
        p.s0 * self.p_p(t, x, y) - 2.0 * PI * p.alpha * (PI * t).cos() + self.div_u_p(t, x, y)
    }

    /// Exact Robin data on the interface (flat, n_p = (0,1), tau_p = (-1,0)):
    /// mu_n = -gamma_f (d_t eta + u_p) . n_p + (sigma_p n_p) . n_p.
    pub fn mu_n(&self, t: f64, x: f64, y: f64) -> f64 {
        let de = self.d_eta(t, x, y);
        let up = self.u_p(t, x, y);
        let s = self.sigma_p(t, x, y);
        let np = [0.0, 1.0];
        let sn = [s[0][0] * np[0] + s[0][1] * np[1], s[1][0] * np[0] + s[1][1] * np[1]];
        -self.params.gamma_f * ((de[0] + up[0]) * np[0] + (de[1] + up[1]) * np[1])
            + sn[0] * np[0]
            + sn[1] * np[1]
    }

    /// mu_tau = -gamma_f d_t eta . tau_p + (sigma_p n_p) . tau_p
    ///          - gamma_f gamma_bjs (sigma_f n_f) . tau_f.
    pub fn mu_tau(&self, t: f64, x: f64, y: f64) -> f64 {
        let de = self.d_eta(t, x, y);
        let s = self.sigma_p(t, x, y);
        let np = [0.0, 1.0];
        let tp = [-1.0, 0.0];
        let sn = [s[0][0] * np[0] + s[0][1] * np[1], s[1][0] * np[0] + s[1][1] * np[1]];
        let mut v = -self.params.gamma_f * (de[0] * tp[0] + de[1] * tp[1])
            + sn[0] * tp[0]
            + sn[1] * tp[1];
        if self.params.gamma_bjs > 0.0 {
            let sf = self.sigma_f(t, x, y);
            let nf = [0.0, -1.0];
            let tf = [1.0, 0.0];
            let sfn = [sf[0][0] * nf[0] + sf[0][1] * nf[1], sf[1][0] * nf[0] + sf[1][1] * nf[1]];
            v -= self.params.gamma_f * self.params.gamma_bjs * (sfn[0] * tf[0] + sfn[1] * tf[1]);
        }
        v
    }

    /// Problem data wiring all forcing and boundary functions.
    pub fn problem_data(&self) -> ProblemData {
        let a = self.clone();
        let b = self.clone();
        let c = self.clone();
        let d = self.clone();
        let e = self.clone();
        let f = self.clone();
        let g = self.clone();
        let h = self.clone();
        let i = self.clone();
        ProblemData {
            f_f: Box::new(move |t, x, y| a.f_f(t, x, y)),
            q_f: Box::new(move |t, x, y| b.q_f(t, x, y)),
            f_p: Box::new(move |t, x, y| c.f_p(t, x, y)),
            q_p: Box::new(move |t, x, y| d.q_p(t, x, y)),
            fluid_dirichlet: Box::new(move |t, x, y| e.u_f(t, x, y)),
            fluid_traction: Box::new(move |t, x, y, n| {
                let s = f.sigma_f(t, x, y);
                [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]]
            }),
            disp_dirichlet: Box::new(move |t, x, y| g.eta(t, x, y)),
            poro_traction: Box::new(move |t, x, y, n| {
                let s = h.sigma_p(t, x, y);
                [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]]
            }),
            darcy_pressure: Box::new(move |t, x, y| i.p_p(t, x, y)),
            darcy_flux: {
                let j = self.clone();
                Box::new(move |t, x, y| j.u_p(t, x, y))
            },
        }
    }
}

/// The stacked-squares geometry: fluid (0,1)^2 with Dirichlet top and
/// traction sides, poroelastic (0,1)x(-1,0) with clamped drained-pressure
/// bottom and traction/flux sides.
pub fn geometry(n: usize) -> Result<(Arc<TriMesh>, Arc<TriMesh>), BuildError> {
    let fluid = tag_boundaries(
        build_rect_mesh(0.0, 1.0, 0.0, 1.0, n, n, DiagonalRule::LowerLeft, DomainLabel::Fluid)?,
        &[
            (&|m: [f64; 2]| m[1] < 1e-12, BoundaryTag::Interface),
            (&|m: [f64; 2]| m[1] > 1.0 - 1e-12, BoundaryTag::FluidDirichlet),
            (&|_m: [f64; 2]| true, BoundaryTag::FluidNeumann),
        ],
    )?;
    let poro = tag_boundaries(
        build_rect_mesh(
            0.0,
            1.0,
            -1.0,
            0.0,
            n,
            n,
            DiagonalRule::LowerLeft,
            DomainLabel::Poroelastic,
        )?,
        &[
            (&|m: [f64; 2]| m[1] > -1e-12, BoundaryTag::Interface),
            (&|m: [f64; 2]| m[1] < -1.0 + 1e-12, BoundaryTag::PoroDispDirichlet),
            (&|_m: [f64; 2]| true, BoundaryTag::PoroTraction),
        ],
    )?;
    Ok((Arc::new(fluid), Arc::new(poro)))
}

/// Builds the scheme context and the projected initial state at t = 0.
pub fn setup(
    n: usize,
    dt: f64,
    params: PhysicalParams,
    darcy_family: ElementFamily,
) -> Result<(SchemeContext, CoupledState), BuildError> {
    let exact = ExactSolution::new(params.clone());
    let (fluid, poro) = geometry(n)?;
    let ctx = SchemeContext::build(
        params,
        dt,
        fluid,
        poro,
        darcy_family,
        BoundaryRoles::default(),
        exact.problem_data(),
    )?;
    let e = &exact;
    let ic = ctx.project_initial_state(
        &|x, y| e.u_f(0.0, x, y),
        &|x, y| e.p_f(0.0, x, y),
        &|x, y| e.eta(0.0, x, y),
        &|x, y| e.d_eta(0.0, x, y),
        &|x, y| e.u_p(0.0, x, y),
        &|x, y| e.p_p(0.0, x, y),
        MuInit::Analytic {
            mu_n: &|x, y| e.mu_n(0.0, x, y),
            mu_tau: &|x, y| e.mu_tau(0.0, x, y),
        },
    )?;
    Ok((ctx, ic))
}

/// The seven space-time error norms of the convergence tables, accumulated
/// streaming over the trajectory: L-infinity-in-time of the H1 fluid
/// velocity, displacement and of the L2 Darcy/structure-rate pressures, and
/// L2-in-time of the fluid pressure L2 and Darcy H(div) errors, plus the
/// interface-variable L2 error.
pub struct ErrorNorms {
    exact: ExactSolution,
    dt: f64,
    pub uf_h1_max: f64,
    pub pf_l2_acc: f64,
    pub up_hdiv_acc: f64,
    pub pp_l2_max: f64,
    pub eta_h1_max: f64,
    pub deta_l2_max: f64,
    pub mu_l2_max: f64,
}

impl ErrorNorms {
    pub fn new(exact: ExactSolution, dt: f64) -> Self {
        Self {
            exact,
            dt,
            uf_h1_max: 0.0,
            pf_l2_acc: 0.0,
            up_hdiv_acc: 0.0,
            pp_l2_max: 0.0,
            eta_h1_max: 0.0,
            deta_l2_max: 0.0,
            mu_l2_max: 0.0,
        }
    }

    /// Error table row in the column order (u_f, p_f, u_p, p_p, eta, d_t eta, mu).
    pub fn row(&self) -> [f64; 7] {
        [
            self.uf_h1_max,
            self.pf_l2_acc.sqrt(),
            self.up_hdiv_acc.sqrt(),
            self.pp_l2_max,
            self.eta_h1_max,
            self.deta_l2_max,
            self.mu_l2_max,
        ]
    }
}

impl StepObserver for ErrorNorms {
    fn observe(&mut self, r: &StepRecord, state: &CoupledState, ctx: &SchemeContext) {
        let t = state.t;
        let e = &self.exact;
        let qw = &crate::quadrature::quadrature(6).unwrap().weights;

        let uf = fields::h1_error_sq(
            FieldRef::new(&ctx.stokes.vel, &state.u_f),
            &ctx.stokes.cache_vel,
            qw,
            &|x, y| e.u_f(t, x, y),
            &|x, y| e.grad_u_f(t, x, y),
        )
        .sqrt();
        self.uf_h1_max = self.uf_h1_max.max(uf);

        let eta = fields::h1_error_sq(
            FieldRef::new(&ctx.biot.disp, &state.eta_p),
            &ctx.biot.cache_disp,
            qw,
            &|x, y| e.eta(t, x, y),
            &|x, y| e.grad_eta(t, x, y),
        )
        .sqrt();
        self.eta_h1_max = self.eta_h1_max.max(eta);

        let deta = fields::l2_error_vector_sq(
            FieldRef::new(&ctx.biot.disp, &state.dt_eta_p),
            &ctx.biot.cache_disp,
            qw,
            &|x, y| e.d_eta(t, x, y),
        )
        .sqrt();
        self.deta_l2_max = self.deta_l2_max.max(deta);

        let pp = fields::l2_error_scalar_sq(
            FieldRef::new(&ctx.biot.pres, &state.p_p),
            &ctx.biot.cache_pres,
            qw,
            &|x, y| e.p_p(t, x, y),
        )
        .sqrt();
        self.pp_l2_max = self.pp_l2_max.max(pp);

        let mu_err = (ctx
            .lambda
            .l2_error_sq(&state.mu.mu_n, &|_i, _s, xy| e.mu_n(t, xy[0], xy[1]))
            + ctx
                .lambda
                .l2_error_sq(&state.mu.mu_tau, &|_i, _s, xy| e.mu_tau(t, xy[0], xy[1])))
        .sqrt();
        self.mu_l2_max = self.mu_l2_max.max(mu_err);

        if r.step > 0 {
            let pf = fields::l2_error_scalar_sq(
                FieldRef::new(&ctx.stokes.pres, &state.p_f),
                &ctx.stokes.cache_pres,
                qw,
                &|x, y| e.p_f(t, x, y),
            );
            self.pf_l2_acc += self.dt * pf;

            let up = fields::hdiv_error_sq(
                FieldRef::new(&ctx.biot.darcy, &state.u_p),
                &ctx.biot.cache_darcy,
                qw,
                &|x, y| e.u_p(t, x, y),
                &|x, y| e.div_u_p(t, x, y),
            );
            self.up_hdiv_acc += self.dt * up;
        }
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// (u_f H1, p_f L2L2, u_p L2Hdiv, p_p L2, eta H1, d_t eta L2, mu L2)
    pub errors: [f64; 7],
    pub avg_iterations: f64,
    pub not_converged_steps: usize,
}

/// Successive observed orders log2(e(2 dt) / e(dt)) per column.
pub fn observed_rates(rows: &[ConvergenceRow]) -> Vec<[f64; 7]> {
    rows.windows(2)
        .map(|w| {
            let mut r = [0.0; 7];
            for k in 0..7 {
                r[k] = (w[0].errors[k] / w[1].errors[k]).log2();
            }
            r
        })
        .collect()
}

/// Runs one full trajectory to T = 1 and returns its error row.
pub fn run_case(
    n: usize,
    dt: f64,
    t_end: f64,
    params: &PhysicalParams,
    darcy_family: ElementFamily,
    kind: SchemeKind,
) -> Result<ConvergenceRow, BuildError> {
    let (mut ctx, ic) = setup(n, dt, params.clone(), darcy_family)?;
    let mut norms = ErrorNorms::new(ExactSolution::new(params.clone()), dt);
    let (_, summary) = {
        let mut obs: [&mut dyn StepObserver; 1] = [&mut norms];
        run(&mut ctx, kind, ic, t_end, &mut obs)?
    };
    Ok(ConvergenceRow {
        dt,
        errors: norms.row(),
        avg_iterations: summary.avg_iterations,
        not_converged_steps: summary.not_converged_steps,
    })
}

/// Temporal convergence study over a sequence of time steps (independent
/// runs, farmed out in parallel builds).
pub fn convergence_study(
    n: usize,
    dts: &[f64],
    t_end: f64,
    params: &PhysicalParams,
    darcy_family: ElementFamily,
    kind: SchemeKind,
) -> Result<Vec<ConvergenceRow>, BuildError> {
    let results = parallel::map_indexed(dts.len(), |i| {
        run_case(n, dts[i], t_end, params, darcy_family, kind)
    });
    results.into_iter().collect()
}

/// Robin-parameter sweep: one convergence study per gamma value.
pub fn gamma_study(
    n: usize,
    dts: &[f64],
    t_end: f64,
    gammas: &[f64],
    base: &PhysicalParams,
    darcy_family: ElementFamily,
    kind: SchemeKind,
) -> Result<Vec<(f64, Vec<ConvergenceRow>)>, BuildError> {
    let results = parallel::map_indexed(gammas.len(), |i| {
        let params = base.clone().with_gamma(gammas[i]);
        convergence_study(n, dts, t_end, &params, darcy_family, kind)
            .map(|rows| (gammas[i], rows))
    });
    results.into_iter().collect()
}

/// Flattens a convergence table into CSV rows in the tables' column order:
/// dt, then (error, rate) pairs for all seven norms, then avg iterations.
pub fn table_rows(rows: &[ConvergenceRow]) -> Vec<Vec<f64>> {
    let rates = observed_rates(rows);
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = vec![row.dt];
            for k in 0..7 {
                out.push(row.errors[k]);
                out.push(if i == 0 { f64::NAN } else { rates[i - 1][k] });
            }
            out.push(row.avg_iterations);
            out
        })
        .collect()
}

pub const TABLE_HEADER: [&str; 16] = [
    "dt",
    "err_uf_LinfH1",
    "rate_uf",
    "err_pf_L2L2",
    "rate_pf",
    "err_up_L2Hdiv",
    "rate_up",
    "err_pp_LinfL2",
    "rate_pp",
    "err_eta_LinfH1",
    "rate_eta",
    "err_dteta_LinfL2",
    "rate_dteta",
    "err_mu_LinfL2",
    "rate_mu",
    "avg_iterations",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> ExactSolution {
        ExactSolution::new(PhysicalParams::default())
    }

    #[test]
    fn pointwise_values() {
        let e = ex1();
        // eta(0, x, y) = 0
        let eta0 = e.eta(0.0, 0.3, -0.4);
        assert_eq!(eta0, [0.0, 0.0]);
        // u_f(0, 0, 0) = (pi, pi)
        let u = e.u_f(0.0, 0.0, 0.0);
        assert!((u[0] - PI).abs() < 1e-15 && (u[1] - PI).abs() < 1e-15);
        // p_f(0, 0.5, 0) = 1 + 2 pi
        let p = e.p_f(0.0, 0.5, 0.0);
        assert!((p - (1.0 + 2.0 * PI)).abs() < 1e-14);
        // q_f = -2 pi cos(pi t); at t = 0.5 the cosine kills it
        assert!((e.q_f(0.0, 0.1, 0.9) + 2.0 * PI).abs() < 1e-14);
        assert!(e.q_f(0.5, 0.7, 0.2).abs() < 1e-13);
    }

    #[test]
    fn forcing_matches_frozen_symbolic_values() {
        let e = ex1();
        let f = e.f_f(0.3, 0.2, 0.6);
        assert!((f[0] - 1.7413932753815743).abs() < 1e-13, "{}", f[0]);
        assert!((f[1] - -13.783772191966322).abs() < 1e-12, "{}", f[1]);
        assert!((e.q_f(0.3, 0.2, 0.6) - -3.6931636609809135).abs() < 1e-13);
        let fp = e.f_p(0.3, 0.2, -0.6);
        assert!((fp[0] - 0.88505406335752085).abs() < 1e-13, "{}", fp[0]);
        assert!((fp[1] - -2.1855831845118102).abs() < 1e-13, "{}", fp[1]);
        assert!((e.q_p(0.3, 0.2, -0.6) - 2.5267455489250746).abs() < 1e-13);
    }

    /// Central-difference substitution of the strong equations at scattered
    /// points: the derived forcing terms must satisfy the PDEs.
    #[test]
    fn forcing_satisfies_strong_equations() {
        let e = ex1();
        let h = 1e-5;
        let pts = [
            (0.31, 0.42, 0.57),
            (0.11, 0.83, 0.29),
            (0.77, 0.15, 0.66),
            (0.5, 0.5, 0.5),
            (0.93, 0.61, 0.08),
        ];
        for &(t, x, y) in &pts {
            // fluid momentum: rho_f du/dt - div sigma_f = f_f (y > 0)
            let dudt = {
                let a = e.u_f(t + h, x, y);
                let b = e.u_f(t - h, x, y);
                [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
            };
            let div_sigma = |f: &dyn Fn(f64, f64, f64) -> [[f64; 2]; 2]| {
                let sxp = f(t, x + h, y);
                let sxm = f(t, x - h, y);
                let syp = f(t, x, y + h);
                let sym = f(t, x, y - h);
                [
                    (sxp[0][0] - sxm[0][0]) / (2.0 * h) + (syp[0][1] - sym[0][1]) / (2.0 * h),
                    (sxp[1][0] - sxm[1][0]) / (2.0 * h) + (syp[1][1] - sym[1][1]) / (2.0 * h),
                ]
            };
            let ds = div_sigma(&|t, x, y| e.sigma_f(t, x, y));
            let f = e.f_f(t, x, y);
            for c in 0..2 {
                let r = e.params.rho_f * dudt[c] - ds[c] - f[c];
                assert!(r.abs() < 1e-6, "fluid momentum residual {r}");
            }
            // mass: div u_f = q_f
            let div_u = {
                let a = e.u_f(t, x + h, y);
                let b = e.u_f(t, x - h, y);
                let c2 = e.u_f(t, x, y + h);
                let d = e.u_f(t, x, y - h);
                (a[0] - b[0]) / (2.0 * h) + (c2[1] - d[1]) / (2.0 * h)
            };
            assert!((div_u - e.q_f(t, x, y)).abs() < 1e-6);

            // poroelastic momentum at (x, -y): rho_p dtt eta - div sigma_p = f_p
            let ym = -y;
            let ddeta = {
                let a = e.eta(t + h, x, ym);
                let b = e.eta(t, x, ym);
                let c2 = e.eta(t - h, x, ym);
                [
                    (a[0] - 2.0 * b[0] + c2[0]) / (h * h),
                    (a[1] - 2.0 * b[1] + c2[1]) / (h * h),
                ]
            };
            let dsp = {
                let f2 = |t: f64, x: f64, yy: f64| e.sigma_p(t, x, yy);
                let sxp = f2(t, x + h, ym);
                let sxm = f2(t, x - h, ym);
                let syp = f2(t, x, ym + h);
                let sym = f2(t, x, ym - h);
                [
                    (sxp[0][0] - sxm[0][0]) / (2.0 * h) + (syp[0][1] - sym[0][1]) / (2.0 * h),
                    (sxp[1][0] - sxm[1][0]) / (2.0 * h) + (syp[1][1] - sym[1][1]) / (2.0 * h),
                ]
            };
            let fp = e.f_p(t, x, ym);
            for c in 0..2 {
                let r = e.params.rho_p * ddeta[c] - dsp[c] - fp[c];
                assert!(r.abs() < 1e-5, "poro momentum residual {r}");
            }
            // storage: d_t(s0 p_p + alpha div eta) + div u_p = q_p
            let dstore = {
                let at = |tt: f64| {
                    let g = e.grad_eta(tt, x, ym);
                    e.params.s0 * e.p_p(tt, x, ym) + e.params.alpha * (g[0][0] + g[1][1])
                };
                (at(t + h) - at(t - h)) / (2.0 * h)
            };
            let r = dstore + e.div_u_p(t, x, ym) - e.q_p(t, x, ym);
            assert!(r.abs() < 1e-6, "storage residual {r}");
        }
    }

    /// The exact solution satisfies the interface conditions pointwise with
    /// the reference parameters: mass conservation, stress balance, and the
    /// normal-stress/pressure identity.
    #[test]
    fn interface_conditions_hold() {
        let e = ex1();
        for i in 0..20 {
            let x = (i as f64 + 0.5) / 20.0;
            for &t in &[0.0, 0.3, 0.7, 1.0] {
                let uf = e.u_f(t, x, 0.0);
                let de = e.d_eta(t, x, 0.0);
                let up = e.u_p(t, x, 0.0);
                // u_f . n_f + (d_t eta + u_p) . n_p with n_f = (0,-1), n_p = (0,1)
                let mass = -uf[1] + (de[1] + up[1]);
                assert!(mass.abs() < 1e-10, "mass conservation {mass}");

                let sf = e.sigma_f(t, x, 0.0);
                let sp = e.sigma_p(t, x, 0.0);
                // sigma_f n_f + sigma_p n_p = 0
                for c in 0..2 {
                    let bal = -sf[c][1] + sp[c][1];
                    assert!(bal.abs() < 1e-10, "stress balance {bal}");
                }
                // -(sigma_f n_f) . n_f = p_p
                let pn = -(sf[1][1]);
                assert!((pn - e.p_p(t, x, 0.0)).abs() < 1e-10);
                // no-slip tangential: u_f = d_t eta on the interface
                assert!((uf[0] - de[0]).abs() < 1e-12);
            }
        }
    }

    /// exact trajectory injected -> all errors at the interpolation floor
    #[test]
    fn error_norms_vanish_on_exact_trajectory() {
        let params = PhysicalParams::default();
        let (ctx, ic) = setup(8, 0.25, params.clone(), ElementFamily::Rt1).unwrap();
        let mut norms = ErrorNorms::new(ExactSolution::new(params), 0.25);
        let rec = StepRecord {
            step: 0,
            t: 0.0,
            iterations: None,
            energy: Default::default(),
            interface_residual: 0.0,
        };
        norms.observe(&rec, &ic, &ctx);
        let row = norms.row();
        // projections of smooth fields on h = 1/8: small but nonzero floors
        assert!(row[0] < 5e-2, "u_f floor {}", row[0]);
        assert!(row[4] < 5e-2, "eta floor {}", row[4]);
        assert!(row[6] < 5e-2, "mu floor {}", row[6]);
    }

    #[test]
    fn rate_arithmetic_matches_reported_convention() {
        // log2(1.663 / 0.9071) as in the reference tables
        let rows = vec![
            ConvergenceRow {
                dt: 0.2,
                errors: [1.663, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
                avg_iterations: 0.0,
                not_converged_steps: 0,
            },
            ConvergenceRow {
                dt: 0.1,
                errors: [0.9071, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
                avg_iterations: 0.0,
                not_converged_steps: 0,
            },
        ];
        let rates = observed_rates(&rows);
        assert!((rates[0][0] - 0.87456).abs() < 1e-3, "{}", rates[0][0]);
        assert!((rates[0][1] - 1.0).abs() < 1e-12);
    }
}
