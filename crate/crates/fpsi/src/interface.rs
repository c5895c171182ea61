//! The interface trace space, the auxiliary Robin-data variable, its
//! initialization and per-step update, one-sided stress traces, and the
//! coupling operators used by the monolithic scheme.

use crate::assembly::{side_basis, TraceVec};
use crate::dofmap::DofMap;
use crate::fields::FieldRef;
use crate::la::{CooMat, DenseLu, DenseMat};
use crate::mesh::{DomainLabel, InterfaceMesh};
use crate::params::PhysicalParams;
use crate::quadrature::gauss_legendre_01;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InterfaceError {
    #[error("interface segments are not contiguous at index {0}")]
    NonContiguous(usize),
    #[error("interface mass matrix is singular")]
    SingularMass,
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("stress trace requested from the wrong subdomain: field lives on {found:?}")]
    WrongSide { found: DomainLabel },
}

/// Quadratic scalar basis on a segment, nodes ordered (left end, right end,
/// midpoint) in the parametrization s of [0,1].
#[inline]
pub fn p2_line(s: f64) -> [f64; 3] {
    [1.0 - 3.0 * s + 2.0 * s * s, -s + 2.0 * s * s, 4.0 * s * (1.0 - s)]
}

/// The trace of the discrete fluid velocity space on the interface: a
/// quadratic scalar space per (normal, tangential) component, with one node
/// per segment endpoint and midpoint.
pub struct LambdaSpace {
    pub interface: InterfaceMesh,
    pub n_nodes: usize,
    /// Per segment: node indices (left end, right end, midpoint).
    pub seg_nodes: Vec<[usize; 3]>,
    /// Arc-length coordinate of every node.
    pub arc: Vec<f64>,
    /// Fluid-mesh scalar node backing each interface node.
    pub fluid_nodes: Vec<usize>,
    mass: DenseMat,
    mass_lu: DenseLu,
}

impl LambdaSpace {
    pub fn new(interface: &InterfaceMesh, fluid_vel: &DofMap) -> Result<Self, InterfaceError> {
        let nseg = interface.n_segments();
        assert!(nseg > 0, "empty interface");
        for i in 0..nseg.saturating_sub(1) {
            let b = interface.segments[i].b;
            let a = interface.segments[i + 1].a;
            let gap = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            if gap > 1e-12 {
                return Err(InterfaceError::NonContiguous(i));
            }
        }
        let n_nodes = 2 * nseg + 1;
        let mut seg_nodes = Vec::with_capacity(nseg);
        let mut arc = vec![0.0; n_nodes];
        let mut fluid_nodes = vec![usize::MAX; n_nodes];
        let nv = fluid_vel.mesh.n_vertices();
        let mut s_acc = 0.0;
        for (i, seg) in interface.segments.iter().enumerate() {
            let (na, nb, nm) = (i, i + 1, nseg + 1 + i);
            seg_nodes.push([na, nb, nm]);
            arc[na] = s_acc;
            arc[nm] = s_acc + 0.5 * seg.length();
            s_acc += seg.length();
            arc[nb] = s_acc;

            let edge = &fluid_vel.mesh.edges[seg.fluid_edge];
            let va = fluid_vel.mesh.vertices[edge.v[0]];
            let (left, right) = if (va[0] - seg.a[0]).abs() + (va[1] - seg.a[1]).abs() < 1e-12 {
                (edge.v[0], edge.v[1])
            } else {
                (edge.v[1], edge.v[0])
            };
            fluid_nodes[na] = left;
            fluid_nodes[nb] = right;
            fluid_nodes[nm] = nv + seg.fluid_edge;
        }

        let mut mass = DenseMat::zeros(n_nodes, n_nodes);
        for (i, seg) in interface.segments.iter().enumerate() {
            let h = seg.length();
            let m = [
                [4.0, -1.0, 2.0],
                [-1.0, 4.0, 2.0],
                [2.0, 2.0, 16.0],
            ];
            for a in 0..3 {
                for b in 0..3 {
                    mass.add(seg_nodes[i][a], seg_nodes[i][b], h / 30.0 * m[a][b]);
                }
            }
        }
        let mass_lu = mass.lu().ok_or(InterfaceError::SingularMass)?;
        Ok(Self {
            interface: interface.clone(),
            n_nodes,
            seg_nodes,
            arc,
            fluid_nodes,
            mass,
            mass_lu,
        })
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.n_nodes]
    }

    pub fn node_coord(&self, node: usize) -> [f64; 2] {
        for (i, seg) in self.interface.segments.iter().enumerate() {
            let [na, nb, nm] = self.seg_nodes[i];
            if node == na {
                return seg.a;
            }
            if node == nb {
                return seg.b;
            }
            if node == nm {
                return seg.point(0.5);
            }
        }
        unreachable!("node out of range")
    }

    /// Load vector <g, chi_i> by per-segment Gauss quadrature; `g` receives
    /// (segment index, parameter, physical point).
    pub fn load(&self, g: &dyn Fn(usize, f64, [f64; 2]) -> f64) -> Vec<f64> {
        let (gs, gw) = gauss_legendre_01(5);
        let mut out = self.zeros();
        for (i, seg) in self.interface.segments.iter().enumerate() {
            let h = seg.length();
            for (&s, &w) in gs.iter().zip(&gw) {
                let x = seg.point(s);
                let gval = g(i, s, x) * w * h;
                let basis = p2_line(s);
                for a in 0..3 {
                    out[self.seg_nodes[i][a]] += gval * basis[a];
                }
            }
        }
        out
    }

    /// L2-orthogonal projection onto the trace space: solves M c = <g, chi>.
    pub fn project(&self, g: &dyn Fn(usize, f64, [f64; 2]) -> f64) -> Vec<f64> {
        self.mass_lu.solve(&self.load(g))
    }

    pub fn apply_mass(&self, c: &[f64]) -> Vec<f64> {
        self.mass.mul_vec(c)
    }

    pub fn solve_mass(&self, rhs: &[f64]) -> Vec<f64> {
        self.mass_lu.solve(rhs)
    }

    pub fn l2_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.mul_vec(a).iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn l2_norm(&self, a: &[f64]) -> f64 {
        self.l2_inner(a, a).max(0.0).sqrt()
    }

    /// Evaluates a coefficient vector at (segment, parameter).
    pub fn eval(&self, c: &[f64], seg: usize, s: f64) -> f64 {
        let basis = p2_line(s);
        let nodes = self.seg_nodes[seg];
        (0..3).map(|a| c[nodes[a]] * basis[a]).sum()
    }

    /// Squared L2(interface) error of a coefficient vector against a closure.
    pub fn l2_error_sq(&self, c: &[f64], exact: &dyn Fn(usize, f64, [f64; 2]) -> f64) -> f64 {
        let (gs, gw) = gauss_legendre_01(5);
        let mut acc = 0.0;
        for (i, seg) in self.interface.segments.iter().enumerate() {
            let h = seg.length();
            for (&s, &w) in gs.iter().zip(&gw) {
                let x = seg.point(s);
                let d = self.eval(c, i, s) - exact(i, s, x);
                acc += w * h * d * d;
            }
        }
        acc
    }

    /// Coupling operator R with R[i,j] = <(phi_j . dir), chi_i> where phi_j
    /// runs over the dofs of `map`, evaluated one-sided from its subdomain.
    pub fn coupling(&self, map: &DofMap, dir: TraceVec) -> CooMat {
        let (gs, gw) = gauss_legendre_01(crate::assembly::INTERFACE_GAUSS);
        let mut r = CooMat::new(self.n_nodes, map.n_dofs);
        for (i, seg) in self.interface.segments.iter().enumerate() {
            let d = dir.resolve(seg);
            let h = seg.length();
            let (cell, basis) = side_basis(map, seg, &gs);
            let dofs = map.cell_dofs(cell);
            let nodes = self.seg_nodes[i];
            let mut local = vec![0.0; 3 * dofs.len()];
            for (k, (&s, &w)) in gs.iter().zip(&gw).enumerate() {
                let chi = p2_line(s);
                for (j, _) in dofs.iter().enumerate() {
                    let tj = basis.value(k, j, 0) * d[0] + basis.value(k, j, 1) * d[1];
                    if tj == 0.0 {
                        continue;
                    }
                    for a in 0..3 {
                        local[a * dofs.len() + j] += w * h * chi[a] * tj;
                    }
                }
            }
            for a in 0..3 {
                for (j, &dof) in dofs.iter().enumerate() {
                    r.push(nodes[a], dof, local[a * dofs.len() + j]);
                }
            }
        }
        r
    }

    /// Convenience: coupling of the fluid velocity against the fluid normal.
    pub fn coupling_fluid_normal(&self, vel: &DofMap) -> CooMat {
        self.coupling(vel, TraceVec::NormalF)
    }

    /// Coupling of the tangential fluid stress trace:
    /// R[i,j] = <(2 mu_f D(phi_j) n_f) . tau_f, chi_i>, the pressure part of
    /// the stress dropping out since n . tau = 0.
    pub fn coupling_fluid_stress_tangential(&self, vel: &DofMap, mu_f: f64) -> CooMat {
        let (gs, gw) = gauss_legendre_01(crate::assembly::INTERFACE_GAUSS);
        let mut r = CooMat::new(self.n_nodes, vel.n_dofs);
        for (i, seg) in self.interface.segments.iter().enumerate() {
            let nf = seg.normal_f;
            let tf = seg.tangent_f;
            let h = seg.length();
            let (cell, basis) = side_basis(vel, seg, &gs);
            let dofs = vel.cell_dofs(cell);
            let nodes = self.seg_nodes[i];
            for (k, (&s, &w)) in gs.iter().zip(&gw).enumerate() {
                let chi = p2_line(s);
                for (j, &dof) in dofs.iter().enumerate() {
                    // D(phi_j) n_f . tau_f
                    let gxx = basis.grad(k, j, 0, 0);
                    let gxy = basis.grad(k, j, 0, 1);
                    let gyx = basis.grad(k, j, 1, 0);
                    let gyy = basis.grad(k, j, 1, 1);
                    let d = [
                        [gxx, 0.5 * (gxy + gyx)],
                        [0.5 * (gxy + gyx), gyy],
                    ];
                    let dn = [d[0][0] * nf[0] + d[0][1] * nf[1], d[1][0] * nf[0] + d[1][1] * nf[1]];
                    let val = 2.0 * mu_f * (dn[0] * tf[0] + dn[1] * tf[1]);
                    if val == 0.0 {
                        continue;
                    }
                    for a in 0..3 {
                        r.push(nodes[a], dof, w * h * chi[a] * val);
                    }
                }
            }
        }
        r
    }

    /// Samples a vector field one-sided at every interface node, ordered by
    /// arc length (endpoints then covered midpoints share the segment order).
    pub fn sample_vector(&self, map: &DofMap, coeffs: &[f64]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.n_nodes];
        for (i, seg) in self.interface.segments.iter().enumerate() {
            let params = [0.0, 1.0, 0.5];
            let (cell, basis) = side_basis(map, seg, &params);
            let dofs = map.cell_dofs(cell);
            for (k, &node) in self.seg_nodes[i].iter().enumerate() {
                let mut v = [0.0, 0.0];
                for (j, &d) in dofs.iter().enumerate() {
                    v[0] += coeffs[d] * basis.value(k, j, 0);
                    if basis.ncomp > 1 {
                        v[1] += coeffs[d] * basis.value(k, j, 1);
                    }
                }
                out[node] = v;
            }
        }
        out
    }

    /// Scalar variant of [`Self::sample_vector`].
    pub fn sample_scalar(&self, map: &DofMap, coeffs: &[f64]) -> Vec<f64> {
        self.sample_vector(map, coeffs).iter().map(|v| v[0]).collect()
    }

    /// Nodes sorted by arc-length coordinate, for slice exports.
    pub fn nodes_by_arc(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_nodes).collect();
        idx.sort_by(|&a, &b| self.arc[a].partial_cmp(&self.arc[b]).unwrap());
        idx
    }
}

/// The auxiliary interface variable approximating the Robin data, stored as
/// normal and tangential trace-space coefficients.
#[derive(Debug, Clone)]
pub struct MuState {
    pub mu_n: Vec<f64>,
    pub mu_tau: Vec<f64>,
}

impl MuState {
    pub fn zeros(space: &LambdaSpace) -> Self {
        Self { mu_n: space.zeros(), mu_tau: space.zeros() }
    }

    pub fn check_dims(&self, space: &LambdaSpace) -> Result<(), InterfaceError> {
        for v in [&self.mu_n, &self.mu_tau] {
            if v.len() != space.n_nodes {
                return Err(InterfaceError::DimensionMismatch {
                    got: v.len(),
                    expected: space.n_nodes,
                });
            }
        }
        Ok(())
    }
}

/// Which stress tensor to evaluate on the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressKind {
    /// sigma_f = -p_f I + 2 mu_f D(u_f), from the fluid side.
    Fluid,
    /// sigma_p = sigma_e - alpha p_p I, from the poroelastic side.
    Poro,
    /// sigma_e = lambda div eta I + 2 mu_p D(eta) only.
    Elastic,
}

/// One-sided stress tensor on interface segment `seg` at parameter `s`,
/// evaluated from the interior element that owns the segment on the
/// requested side. `vel_or_disp` is the fluid velocity (Fluid) or the
/// displacement (Poro/Elastic); `pressure` is the matching pressure field
/// and may be omitted for `Elastic`.
pub fn eval_stress_trace(
    kind: StressKind,
    params: &PhysicalParams,
    vel_or_disp: FieldRef<'_>,
    pressure: Option<FieldRef<'_>>,
    interface: &InterfaceMesh,
    seg: usize,
    s: f64,
) -> Result<[[f64; 2]; 2], InterfaceError> {
    let segment = &interface.segments[seg];
    let domain = vel_or_disp.map.mesh.domain;
    let expected = match kind {
        StressKind::Fluid => DomainLabel::Fluid,
        StressKind::Poro | StressKind::Elastic => DomainLabel::Poroelastic,
    };
    if domain != expected {
        return Err(InterfaceError::WrongSide { found: domain });
    }
    let (cell, basis) = side_basis(vel_or_disp.map, segment, &[s]);
    let dofs = vel_or_disp.map.cell_dofs(cell);
    let mut g = [[0.0; 2]; 2];
    for (j, &d) in dofs.iter().enumerate() {
        let c = vel_or_disp.coeffs[d];
        for comp in 0..2 {
            g[comp][0] += c * basis.grad(0, j, comp, 0);
            g[comp][1] += c * basis.grad(0, j, comp, 1);
        }
    }
    let dsym = [
        [g[0][0], 0.5 * (g[0][1] + g[1][0])],
        [0.5 * (g[0][1] + g[1][0]), g[1][1]],
    ];
    let p_at = |f: FieldRef<'_>| -> f64 {
        let (pcell, pbasis) = side_basis(f.map, segment, &[s]);
        let pdofs = f.map.cell_dofs(pcell);
        pdofs.iter().enumerate().map(|(j, &d)| f.coeffs[d] * pbasis.value(0, j, 0)).sum()
    };
    let mut sigma = [[0.0; 2]; 2];
    match kind {
        StressKind::Fluid => {
            let p = pressure.map(&p_at).unwrap_or(0.0);
            for a in 0..2 {
                for b in 0..2 {
                    sigma[a][b] = 2.0 * params.mu_f * dsym[a][b] - if a == b { p } else { 0.0 };
                }
            }
        }
        StressKind::Poro | StressKind::Elastic => {
            let div = g[0][0] + g[1][1];
            let p = if kind == StressKind::Poro {
                params.alpha * pressure.map(&p_at).unwrap_or(0.0)
            } else {
                0.0
            };
            for a in 0..2 {
                for b in 0..2 {
                    sigma[a][b] = 2.0 * params.mu_p * dsym[a][b]
                        + if a == b { params.lambda_p * div - p } else { 0.0 };
                }
            }
        }
    }
    Ok(sigma)
}

/// Assembled trace couplings between the subdomain spaces and the interface
/// space, built once and reused by every step and iteration.
pub struct InterfaceOps {
    /// <(u_f phi_j) . n_f, chi_i>
    pub r_fn: CooMat,
    /// <(u_f phi_j) . tau_f, chi_i>
    pub r_ftau: CooMat,
    /// <(disp phi_j) . n_p, chi_i>
    pub r_xn: CooMat,
    /// <(disp phi_j) . tau_p, chi_i>
    pub r_xtau: CooMat,
    /// <(darcy phi_j) . n_p, chi_i>
    pub r_dn: CooMat,
    /// <(2 mu_f D(phi_j) n_f) . tau_f, chi_i>
    pub r_fstress_tau: CooMat,
}

impl InterfaceOps {
    pub fn build(
        space: &LambdaSpace,
        fluid_vel: &DofMap,
        disp: &DofMap,
        darcy: &DofMap,
        mu_f: f64,
    ) -> Self {
        Self {
            r_fn: space.coupling(fluid_vel, TraceVec::NormalF),
            r_ftau: space.coupling(fluid_vel, TraceVec::TangentF),
            r_xn: space.coupling(disp, TraceVec::NormalP),
            r_xtau: space.coupling(disp, TraceVec::TangentP),
            r_dn: space.coupling(darcy, TraceVec::NormalP),
            r_fstress_tau: space.coupling_fluid_stress_tangential(fluid_vel, mu_f),
        }
    }

    /// Load of the weak normal-continuity residual
    /// <(dt_eta + u_p) . n_p + u_f . n_f, chi>.
    pub fn continuity_load_normal(&self, dt_eta: &[f64], u_p: &[f64], u_f: &[f64]) -> Vec<f64> {
        let mut r = self.r_xn.mul_vec(dt_eta);
        self.r_dn.add_mul_vec(u_p, 1.0, &mut r);
        self.r_fn.add_mul_vec(u_f, 1.0, &mut r);
        r
    }

    /// Load of the weak tangential-continuity residual
    /// <dt_eta . tau_p + u_f . tau_f, chi>.
    pub fn continuity_load_tangential(&self, dt_eta: &[f64], u_f: &[f64]) -> Vec<f64> {
        let mut r = self.r_xtau.mul_vec(dt_eta);
        self.r_ftau.add_mul_vec(u_f, 1.0, &mut r);
        r
    }
}

/// How to seed the auxiliary interface variable at the initial time.
pub enum MuInit<'a> {
    /// Project closed-form Robin data (manufactured solutions); closures
    /// receive the physical point.
    Analytic {
        mu_n: &'a dyn Fn(f64, f64) -> f64,
        mu_tau: &'a dyn Fn(f64, f64) -> f64,
    },
    /// Evaluate the Robin combinations from the discrete initial fields,
    /// one-sided on the interface.
    Discrete {
        dt_eta0: FieldRef<'a>,
        disp0: FieldRef<'a>,
        darcy0: FieldRef<'a>,
        poro_pres0: FieldRef<'a>,
        /// Fluid state, required only when gamma_bjs > 0.
        fluid0: Option<(FieldRef<'a>, FieldRef<'a>)>,
    },
}

/// Initializes mu from the Robin combinations
/// mu_n = -gamma_f (dt_eta + u_p) . n_p + (sigma_p n_p) . n_p and
/// mu_tau = -gamma_f dt_eta . tau_p + (sigma_p n_p) . tau_p
///          - gamma_f gamma_bjs (sigma_f n_f) . tau_f.
pub fn init_mu(
    space: &LambdaSpace,
    params: &PhysicalParams,
    init: MuInit<'_>,
) -> Result<MuState, InterfaceError> {
    match init {
        MuInit::Analytic { mu_n, mu_tau } => Ok(MuState {
            mu_n: space.project(&|_i, _s, x| mu_n(x[0], x[1])),
            mu_tau: space.project(&|_i, _s, x| mu_tau(x[0], x[1])),
        }),
        MuInit::Discrete { dt_eta0, disp0, darcy0, poro_pres0, fluid0 } => {
            if params.gamma_bjs > 0.0 && fluid0.is_none() {
                return Err(InterfaceError::WrongSide { found: DomainLabel::Fluid });
            }
            let gf = params.gamma_f;
            let interface = &space.interface;
            let mu_n = space.project(&|i, s, _x| {
                let seg = &interface.segments[i];
                let np = seg.normal_p;
                let veta = eval_vec(dt_eta0, seg, s);
                let vup = eval_vec(darcy0, seg, s);
                let sig = eval_stress_trace(
                    StressKind::Poro,
                    params,
                    disp0,
                    Some(poro_pres0),
                    interface,
                    i,
                    s,
                )
                .expect("poro stress");
                let sn = [
                    sig[0][0] * np[0] + sig[0][1] * np[1],
                    sig[1][0] * np[0] + sig[1][1] * np[1],
                ];
                -gf * ((veta[0] + vup[0]) * np[0] + (veta[1] + vup[1]) * np[1])
                    + sn[0] * np[0]
                    + sn[1] * np[1]
            });
            let mu_tau = space.project(&|i, s, _x| {
                let seg = &interface.segments[i];
                let np = seg.normal_p;
                let tp = seg.tangent_p();
                let veta = eval_vec(dt_eta0, seg, s);
                let sig = eval_stress_trace(
                    StressKind::Poro,
                    params,
                    disp0,
                    Some(poro_pres0),
                    interface,
                    i,
                    s,
                )
                .expect("poro stress");
                let sn = [
                    sig[0][0] * np[0] + sig[0][1] * np[1],
                    sig[1][0] * np[0] + sig[1][1] * np[1],
                ];
                let mut v = -gf * (veta[0] * tp[0] + veta[1] * tp[1]) + sn[0] * tp[0] + sn[1] * tp[1];
                if params.gamma_bjs > 0.0 {
                    let (vel, pres) = fluid0.expect("checked above");
                    let nf = seg.normal_f;
                    let tf = seg.tangent_f;
                    let sf = eval_stress_trace(
                        StressKind::Fluid,
                        params,
                        vel,
                        Some(pres),
                        interface,
                        i,
                        s,
                    )
                    .expect("fluid stress");
                    let sfn = [
                        sf[0][0] * nf[0] + sf[0][1] * nf[1],
                        sf[1][0] * nf[0] + sf[1][1] * nf[1],
                    ];
                    v -= gf * params.gamma_bjs * (sfn[0] * tf[0] + sfn[1] * tf[1]);
                }
                v
            });
            Ok(MuState { mu_n, mu_tau })
        }
    }
}

fn eval_vec(field: FieldRef<'_>, seg: &crate::mesh::InterfaceSegment, s: f64) -> [f64; 2] {
    let (cell, basis) = side_basis(field.map, seg, &[s]);
    let dofs = field.map.cell_dofs(cell);
    let mut v = [0.0, 0.0];
    for (j, &d) in dofs.iter().enumerate() {
        v[0] += field.coeffs[d] * basis.value(0, j, 0);
        if basis.ncomp > 1 {
            v[1] += field.coeffs[d] * basis.value(0, j, 1);
        }
    }
    v
}

/// The per-step update of the auxiliary interface variable:
/// <mu_n_new, chi> = <mu_n - (gamma_f + gamma_p)((dt_eta + u_p) . n_p + u_f . n_f), chi>
/// and the tangential analogue; with_bjs_stress adds
/// gamma_bjs (sigma_f n_f) . tau_f inside the tangential bracket.
pub fn update_mu(
    space: &LambdaSpace,
    ops: &InterfaceOps,
    mu: &MuState,
    params: &PhysicalParams,
    u_f: &[f64],
    u_p: &[f64],
    dt_eta: &[f64],
    with_bjs_stress: bool,
) -> Result<MuState, InterfaceError> {
    mu.check_dims(space)?;
    let g = params.gamma_f + params.gamma_p;

    let load_n = ops.continuity_load_normal(dt_eta, u_p, u_f);
    let mut mu_n = mu.mu_n.clone();
    for (m, d) in mu_n.iter_mut().zip(space.solve_mass(&load_n)) {
        *m -= g * d;
    }

    let mut load_t = ops.continuity_load_tangential(dt_eta, u_f);
    if with_bjs_stress && params.gamma_bjs > 0.0 {
        ops.r_fstress_tau.add_mul_vec(u_f, params.gamma_bjs, &mut load_t);
    }
    let mut mu_tau = mu.mu_tau.clone();
    for (m, d) in mu_tau.iter_mut().zip(space.solve_mass(&load_t)) {
        *m -= g * d;
    }
    Ok(MuState { mu_n, mu_tau })
}

/// Functional norm of the weak continuity residual: for load r = <expr, chi>
/// this is sup over chi of <expr, chi> / |chi| = |M^{-1} r|_M.
pub fn continuity_residual_norm(space: &LambdaSpace, load: &[f64]) -> f64 {
    let c = space.solve_mass(load);
    c.iter().zip(load).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementFamily;
    use crate::mesh::{
        build_rect_mesh, extract_interface, tag_boundaries, BoundaryTag, DiagonalRule,
    };
    use std::sync::Arc;

    fn setup(n: usize) -> (Arc<crate::mesh::TriMesh>, Arc<crate::mesh::TriMesh>, InterfaceMesh) {
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
    fn projection_of_constant_gives_constant_coefficients() {
        let (fluid, _, gamma) = setup(8);
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let c = lam.project(&|_i, _s, _x| 3.25);
        for v in &c {
            assert!((v - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_reproduces_quadratics() {
        let (fluid, _, gamma) = setup(8);
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        // g(x) = x^2 is in the quadratic trace space on a straight interface
        let c1 = lam.project(&|_i, _s, x| x[0] * x[0]);
        for (node, &v) in c1.iter().enumerate() {
            let x = lam.node_coord(node);
            assert!((v - x[0] * x[0]).abs() < 1e-12, "node {node}");
        }
        // project the projection: coefficients unchanged
        let lam2 = &lam;
        let c2 = lam2.project(&|i, s, _x| lam.eval(&c1, i, s));
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_self_adjointness_on_random_data() {
        let (fluid, _, gamma) = setup(4);
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let g = |i: usize, s: f64, x: [f64; 2]| (3.1 * x[0]).sin() + 0.3 * (i as f64) * s;
        let pg = lam.project(&g);
        // <P g - g, chi> = 0 for all chi: check against every nodal basis vector
        let load_g = lam.load(&g);
        let load_pg = lam.apply_mass(&pg);
        for (a, b) in load_g.iter().zip(&load_pg) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mu_fixed_point_when_velocities_vanish() {
        let (fluid, poro, gamma) = setup(4);
        let params = PhysicalParams::default();
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt0, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, params.mu_f);
        let mu = MuState {
            mu_n: (0..lam.n_nodes).map(|i| i as f64).collect(),
            mu_tau: (0..lam.n_nodes).map(|i| -(i as f64)).collect(),
        };
        let zf = vec![0.0; vel.n_dofs];
        let zp = vec![0.0; darcy.n_dofs];
        let zx = vec![0.0; disp.n_dofs];
        let new = update_mu(&lam, &ops, &mu, &params, &zf, &zp, &zx, false).unwrap();
        for (a, b) in mu.mu_n.iter().zip(&new.mu_n) {
            assert_eq!(a, b);
        }
        for (a, b) in mu.mu_tau.iter().zip(&new.mu_tau) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mu_update_with_representable_constant_traces() {
        // gamma_f = gamma_p = 1 and traces summing to a constant c in the
        // trace space: mu_new = mu_old - 2c at every node
        let (fluid, poro, gamma) = setup(4);
        let params = PhysicalParams::default();
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt0, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, params.mu_f);
        // u_f . n_f = -u_y = 0.75 on the interface (n_f = (0,-1))
        let uf = vel.interpolate_vector(&|_x, _y| [0.5, -0.75]);
        // dt_eta . n_p = +e_y . (0,1) = 0.25; u_p = 0
        let deta = disp.interpolate_vector(&|_x, _y| [0.0, 0.25]);
        let zp = vec![0.0; darcy.n_dofs];
        let mu = MuState { mu_n: vec![1.0; lam.n_nodes], mu_tau: vec![2.0; lam.n_nodes] };
        let new = update_mu(&lam, &ops, &mu, &params, &uf, &zp, &deta, false).unwrap();
        // normal: c = 0.75 + 0.25 = 1.0, mu_n - 2c = -1
        for v in &new.mu_n {
            assert!((v + 1.0).abs() < 1e-12, "{v}");
        }
        // tangential: dt_eta . tau_p = 0, u_f . tau_f = 0.5 -> c = 0.5, 2 - 1 = 1
        for v in &new.mu_tau {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn mu_update_matches_dense_projection_oracle() {
        // the weak update must equal the explicit matrix form
        // mu - 2 gamma (P_Lambda[poro traces] + fluid trace) for gamma_f = gamma_p
        let (fluid, poro, gamma) = setup(4);
        let params = PhysicalParams::default().with_gamma(0.85);
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt0, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, params.mu_f);

        let mut rng_state = 12345u64;
        let mut rnd = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let uf: Vec<f64> = (0..vel.n_dofs).map(|_| rnd()).collect();
        let up: Vec<f64> = (0..darcy.n_dofs).map(|_| rnd()).collect();
        let deta: Vec<f64> = (0..disp.n_dofs).map(|_| rnd()).collect();
        let mu = MuState {
            mu_n: (0..lam.n_nodes).map(|_| rnd()).collect(),
            mu_tau: (0..lam.n_nodes).map(|_| rnd()).collect(),
        };

        let new = update_mu(&lam, &ops, &mu, &params, &uf, &up, &deta, false).unwrap();

        // dense route: P_Lambda of the one-sided poro traces by quadrature,
        // plus the exact fluid trace coefficients through the node map
        let g2 = params.gamma_f + params.gamma_p;
        let poro_n = lam.project(&|i, s, _x| {
            let seg = &lam.interface.segments[i];
            let e = eval_vec(FieldRef::new(&disp, &deta), seg, s);
            let u = eval_vec(FieldRef::new(&darcy, &up), seg, s);
            (e[0] + u[0]) * seg.normal_p[0] + (e[1] + u[1]) * seg.normal_p[1]
        });
        let poro_t = lam.project(&|i, s, _x| {
            let seg = &lam.interface.segments[i];
            let tp = seg.tangent_p();
            let e = eval_vec(FieldRef::new(&disp, &deta), seg, s);
            e[0] * tp[0] + e[1] * tp[1]
        });
        let nf = lam.interface.segments[0].normal_f;
        let tf = lam.interface.segments[0].tangent_f;
        for node in 0..lam.n_nodes {
            let fnode = lam.fluid_nodes[node];
            let utrace = [uf[2 * fnode], uf[2 * fnode + 1]];
            let expect_n =
                mu.mu_n[node] - g2 * (poro_n[node] + utrace[0] * nf[0] + utrace[1] * nf[1]);
            let expect_t =
                mu.mu_tau[node] - g2 * (poro_t[node] + utrace[0] * tf[0] + utrace[1] * tf[1]);
            assert!((new.mu_n[node] - expect_n).abs() < 1e-12);
            assert!((new.mu_tau[node] - expect_t).abs() < 1e-12);
        }
    }

    #[test]
    fn stress_trace_closed_forms() {
        let (fluid, poro, gamma) = setup(2);
        let params = PhysicalParams::default();
        // eta = (x, 0): sigma_e = [[3,0],[0,1]] for lambda = mu = 1, so
        // sigma_p n_p = (0, 1) on the flat interface with n_p = (0,1)
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let eta = disp.interpolate_vector(&|x, _y| [x, 0.0]);
        let sig = eval_stress_trace(
            StressKind::Elastic,
            &params,
            FieldRef::new(&disp, &eta),
            None,
            &gamma,
            0,
            0.5,
        )
        .unwrap();
        assert!((sig[0][0] - 3.0).abs() < 1e-12);
        assert!((sig[1][1] - 1.0).abs() < 1e-12);
        assert!(sig[0][1].abs() < 1e-12 && sig[1][0].abs() < 1e-12);

        // u_f = 0, p_f = c: sigma_f n = -c n
        let vel = DofMap::new(ElementFamily::VecP2, fluid.clone());
        let pres = DofMap::new(ElementFamily::P1, fluid);
        let u0 = vec![0.0; vel.n_dofs];
        let pc = pres.interpolate_scalar(&|_x, _y| 2.5);
        let sf = eval_stress_trace(
            StressKind::Fluid,
            &params,
            FieldRef::new(&vel, &u0),
            Some(FieldRef::new(&pres, &pc)),
            &gamma,
            1,
            0.25,
        )
        .unwrap();
        assert!((sf[0][0] + 2.5).abs() < 1e-12 && (sf[1][1] + 2.5).abs() < 1e-12);

        // eta = 0, p_p = c, alpha = 1: sigma_p n = -c n
        let pp = DofMap::new(ElementFamily::P0, poro.clone());
        let e0 = vec![0.0; disp.n_dofs];
        let pcc = pp.interpolate_scalar(&|_x, _y| 1.5);
        let sp = eval_stress_trace(
            StressKind::Poro,
            &params,
            FieldRef::new(&disp, &e0),
            Some(FieldRef::new(&pp, &pcc)),
            &gamma,
            0,
            0.75,
        )
        .unwrap();
        assert!((sp[0][0] + 1.5).abs() < 1e-12 && (sp[1][1] + 1.5).abs() < 1e-12);

        // requesting poro stress from fluid-side fields is an error
        let r = eval_stress_trace(
            StressKind::Poro,
            &params,
            FieldRef::new(&vel, &u0),
            None,
            &gamma,
            0,
            0.5,
        );
        assert!(matches!(r, Err(InterfaceError::WrongSide { .. })));
    }

    #[test]
    fn constraint_load_of_constant_mismatch_equals_mass_row_sums() {
        let (fluid, poro, gamma) = setup(4);
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt0, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, 1.0);
        // u_f . n_f = c = 0.4 (u_y = -0.4), everything else zero
        let uf = vel.interpolate_vector(&|_x, _y| [0.0, 0.4]);
        let zx = vec![0.0; disp.n_dofs];
        let zd = vec![0.0; darcy.n_dofs];
        let load = ops.continuity_load_normal(&zx, &zd, &uf);
        let row_sums = lam.apply_mass(&vec![1.0; lam.n_nodes]);
        for (l, r) in load.iter().zip(&row_sums) {
            assert!((l - (-0.4) * r).abs() < 1e-13);
        }
        // exact-continuity state: residual load vanishes
        let deta = disp.interpolate_vector(&|_x, _y| [0.0, 0.4]);
        let load0 = ops.continuity_load_normal(&deta, &zd, &uf);
        for l in &load0 {
            assert!(l.abs() < 1e-13);
        }
    }

    #[test]
    fn coupling_rows_match_quadrature_oracle() {
        let (fluid, poro, gamma) = setup(3);
        let vel = DofMap::new(ElementFamily::VecP2, fluid);
        let disp = DofMap::new(ElementFamily::VecP2, poro.clone());
        let darcy = DofMap::new(ElementFamily::Rt1, poro);
        let lam = LambdaSpace::new(&gamma, &vel).unwrap();
        let ops = InterfaceOps::build(&lam, &vel, &disp, &darcy, 1.0);

        let mut state = 999u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let up: Vec<f64> = (0..darcy.n_dofs).map(|_| rnd()).collect();
        // assembled row action vs direct numerical integration of <u_p . n_p, chi_i>
        let assembled = ops.r_dn.mul_vec(&up);
        let oracle = lam.load(&|i, s, _x| {
            let seg = &lam.interface.segments[i];
            let u = eval_vec(FieldRef::new(&darcy, &up), seg, s);
            u[0] * seg.normal_p[0] + u[1] * seg.normal_p[1]
        });
        for (a, b) in assembled.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
