//! Cell- and edge-wise assembly of the bilinear forms and load vectors.
//!
//! Cell loops run in parallel (feature `parallel`) with per-cell local
//! matrices collected in index order, so the reduction into triplets is
//! deterministic regardless of thread count.

use crate::dofmap::{BasisCache, DofMap};
use crate::element::eval_basis;
use crate::mesh::{BoundaryTag, DomainLabel, InterfaceMesh};
use crate::parallel;
use crate::quadrature::QuadratureRule;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("trial and test spaces live on different meshes")]
    MeshMismatch,
    #[error("form {form} requires gradients, unsupported for {family:?}", family = .family)]
    UnsupportedFamily { form: &'static str, family: crate::element::ElementFamily },
}

pub type Triplet = (usize, usize, f64);

/// Volume bilinear forms. The div-coupling assembles (div trial, test) with a
/// plus sign; callers apply the sign conventions of their weak forms.
#[derive(Debug, Clone, Copy)]
pub enum FormKind {
    /// (c u, v) for scalar or vector families.
    Mass { coeff: f64 },
    /// (2 mu D(u), D(v)) on a vector H1 family.
    SymGradStiffness { two_mu: f64 },
    /// (W u, v) with a constant symmetric 2x2 weight, e.g. mu_f K^{-1}.
    WeightedVectorMass { w: [[f64; 2]; 2] },
    /// (2 mu D(u), D(v)) + (lambda div u, div v) + (extra_mass u, v).
    Elasticity { two_mu: f64, lambda: f64, extra_mass: f64 },
    /// (div u, w): vector trial against scalar test.
    DivCoupling,
}

/// Assembles a volume form into triplets (rows = test dofs, cols = trial dofs).
pub fn assemble_form(
    kind: FormKind,
    trial: &DofMap,
    test: &DofMap,
    quad: &QuadratureRule,
) -> Result<Vec<Triplet>, AssemblyError> {
    if !Arc::ptr_eq(&trial.mesh, &test.mesh) {
        return Err(AssemblyError::MeshMismatch);
    }
    let mesh = &trial.mesh;
    let same_space = std::ptr::eq(trial, test) || trial.family == test.family;
    let locals = parallel::map_indexed(mesh.n_cells(), |c| {
        let tr = eval_basis(trial.family, mesh, c, &quad.points).expect("trial basis");
        let te = if same_space {
            None
        } else {
            Some(eval_basis(test.family, mesh, c, &quad.points).expect("test basis"))
        };
        let te_ref = te.as_ref().unwrap_or(&tr);
        let geo = crate::element::CellGeometry::new(c, mesh.cell_coords(c)).expect("valid cell");
        let det = geo.det.abs();
        let (nt, ns) = (te_ref.ndof, tr.ndof);
        let mut local = vec![0.0; nt * ns];
        for q in 0..quad.len() {
            let w = quad.weights[q] * det;
            match kind {
                FormKind::Mass { coeff } => {
                    let cw = coeff * w;
                    for i in 0..nt {
                        for j in 0..ns {
                            let mut dot = 0.0;
                            for comp in 0..tr.ncomp.min(te_ref.ncomp) {
                                dot += te_ref.value(q, i, comp) * tr.value(q, j, comp);
                            }
                            local[i * ns + j] += cw * dot;
                        }
                    }
                }
                FormKind::SymGradStiffness { two_mu } => {
                    let cw = two_mu * w;
                    for i in 0..nt {
                        let (ixx, iyy, ixy) = sym_grad(te_ref, q, i);
                        for j in 0..ns {
                            let (jxx, jyy, jxy) = sym_grad(&tr, q, j);
                            local[i * ns + j] +=
                                cw * (ixx * jxx + iyy * jyy + 2.0 * ixy * jxy);
                        }
                    }
                }
                FormKind::WeightedVectorMass { w: wt } => {
                    for i in 0..nt {
                        let vi = [te_ref.value(q, i, 0), te_ref.value(q, i, 1)];
                        for j in 0..ns {
                            let vj = [tr.value(q, j, 0), tr.value(q, j, 1)];
                            let wv = [
                                wt[0][0] * vj[0] + wt[0][1] * vj[1],
                                wt[1][0] * vj[0] + wt[1][1] * vj[1],
                            ];
                            local[i * ns + j] += w * (vi[0] * wv[0] + vi[1] * wv[1]);
                        }
                    }
                }
                FormKind::Elasticity { two_mu, lambda, extra_mass } => {
                    for i in 0..nt {
                        let (ixx, iyy, ixy) = sym_grad(te_ref, q, i);
                        let di = te_ref.div(q, i);
                        let vi = [te_ref.value(q, i, 0), te_ref.value(q, i, 1)];
                        for j in 0..ns {
                            let (jxx, jyy, jxy) = sym_grad(&tr, q, j);
                            let dj = tr.div(q, j);
                            let vj = [tr.value(q, j, 0), tr.value(q, j, 1)];
                            local[i * ns + j] += w
                                * (two_mu * (ixx * jxx + iyy * jyy + 2.0 * ixy * jxy)
                                    + lambda * di * dj
                                    + extra_mass * (vi[0] * vj[0] + vi[1] * vj[1]));
                        }
                    }
                }
                FormKind::DivCoupling => {
                    for i in 0..nt {
                        let ti = te_ref.value(q, i, 0);
                        for j in 0..ns {
                            local[i * ns + j] += w * ti * tr.div(q, j);
                        }
                    }
                }
            }
        }
        local
    });

    let mut triplets = Vec::new();
    for (c, local) in locals.iter().enumerate() {
        let rows = test.cell_dofs(c);
        let cols = trial.cell_dofs(c);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &col) in cols.iter().enumerate() {
                let v = local[i * cols.len() + j];
                if v != 0.0 {
                    triplets.push((r, col, v));
                }
            }
        }
    }
    Ok(triplets)
}

/// Strictly sequential variant of [`assemble_form`], kept for benchmarking
/// the parallel path against a baseline.
pub fn assemble_form_seq(
    kind: FormKind,
    trial: &DofMap,
    test: &DofMap,
    quad: &QuadratureRule,
) -> Result<Vec<Triplet>, AssemblyError> {
    if !Arc::ptr_eq(&trial.mesh, &test.mesh) {
        return Err(AssemblyError::MeshMismatch);
    }
    // the parallel dispatcher degenerates to this loop without the feature;
    // force the sequential path explicitly for benches built with rayon on
    let mesh = &trial.mesh;
    let mut triplets = Vec::new();
    for c in 0..mesh.n_cells() {
        let chunk = assemble_form_cell(kind, trial, test, quad, c)?;
        triplets.extend(chunk);
    }
    Ok(triplets)
}

fn assemble_form_cell(
    kind: FormKind,
    trial: &DofMap,
    test: &DofMap,
    quad: &QuadratureRule,
    cell: usize,
) -> Result<Vec<Triplet>, AssemblyError> {
    let mesh = &trial.mesh;
    let tr = eval_basis(trial.family, mesh, cell, &quad.points).expect("trial basis");
    let te = eval_basis(test.family, mesh, cell, &quad.points).expect("test basis");
    let geo = crate::element::CellGeometry::new(cell, mesh.cell_coords(cell)).expect("valid cell");
    let det = geo.det.abs();
    let mut out = Vec::new();
    let rows = test.cell_dofs(cell);
    let cols = trial.cell_dofs(cell);
    for q in 0..quad.len() {
        let w = quad.weights[q] * det;
        for (i, &r) in rows.iter().enumerate() {
            for (j, &cg) in cols.iter().enumerate() {
                let v = match kind {
                    FormKind::Mass { coeff } => {
                        let mut dot = 0.0;
                        for comp in 0..tr.ncomp.min(te.ncomp) {
                            dot += te.value(q, i, comp) * tr.value(q, j, comp);
                        }
                        coeff * dot
                    }
                    FormKind::SymGradStiffness { two_mu } => {
                        let (ixx, iyy, ixy) = sym_grad(&te, q, i);
                        let (jxx, jyy, jxy) = sym_grad(&tr, q, j);
                        two_mu * (ixx * jxx + iyy * jyy + 2.0 * ixy * jxy)
                    }
                    FormKind::WeightedVectorMass { w: wt } => {
                        let vi = [te.value(q, i, 0), te.value(q, i, 1)];
                        let vj = [tr.value(q, j, 0), tr.value(q, j, 1)];
                        vi[0] * (wt[0][0] * vj[0] + wt[0][1] * vj[1])
                            + vi[1] * (wt[1][0] * vj[0] + wt[1][1] * vj[1])
                    }
                    FormKind::Elasticity { two_mu, lambda, extra_mass } => {
                        let (ixx, iyy, ixy) = sym_grad(&te, q, i);
                        let (jxx, jyy, jxy) = sym_grad(&tr, q, j);
                        let vi = [te.value(q, i, 0), te.value(q, i, 1)];
                        let vj = [tr.value(q, j, 0), tr.value(q, j, 1)];
                        two_mu * (ixx * jxx + iyy * jyy + 2.0 * ixy * jxy)
                            + lambda * te.div(q, i) * tr.div(q, j)
                            + extra_mass * (vi[0] * vj[0] + vi[1] * vj[1])
                    }
                    FormKind::DivCoupling => te.value(q, i, 0) * tr.div(q, j),
                };
                if v != 0.0 {
                    out.push((r, cg, w * v));
                }
            }
        }
    }
    Ok(out)
}

#[inline]
fn sym_grad(basis: &crate::element::CellBasis, q: usize, i: usize) -> (f64, f64, f64) {
    let gxx = basis.grad(q, i, 0, 0);
    let gxy = basis.grad(q, i, 0, 1);
    let gyx = basis.grad(q, i, 1, 0);
    let gyy = basis.grad(q, i, 1, 1);
    (gxx, gyy, 0.5 * (gxy + gyx))
}

/// Direction against which a trace is contracted on an interface segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceVec {
    NormalF,
    NormalP,
    TangentF,
    TangentP,
}

impl TraceVec {
    pub fn resolve(self, seg: &crate::mesh::InterfaceSegment) -> [f64; 2] {
        match self {
            TraceVec::NormalF => seg.normal_f,
            TraceVec::NormalP => seg.normal_p,
            TraceVec::TangentF => seg.tangent_f,
            TraceVec::TangentP => seg.tangent_p(),
        }
    }
}

/// Number of Gauss points per interface segment; exact for the quartic
/// products of quadratic traces.
pub const INTERFACE_GAUSS: usize = 4;

/// Assembles the interface boundary mass
/// `sum_segments <(trial . d_trial), (test . d_test)>` where each side is
/// evaluated one-sided from its own subdomain (determined by the mesh label
/// of its DofMap).
pub fn assemble_interface_mass(
    trial: (&DofMap, TraceVec),
    test: (&DofMap, TraceVec),
    interface: &InterfaceMesh,
) -> Vec<Triplet> {
    let (gs, gw) = crate::quadrature::gauss_legendre_01(INTERFACE_GAUSS);
    let mut triplets = Vec::new();
    for seg in &interface.segments {
        let dt = trial.1.resolve(seg);
        let de = test.1.resolve(seg);
        let len = seg.length();
        let (tr_cell, tr_basis) = side_basis(trial.0, seg, &gs);
        let (te_cell, te_basis) = side_basis(test.0, seg, &gs);
        let cols = trial.0.cell_dofs(tr_cell);
        let rows = test.0.cell_dofs(te_cell);
        for (k, &w) in gw.iter().enumerate() {
            let ws = w * len;
            for (i, &r) in rows.iter().enumerate() {
                let ti = te_basis.value(k, i, 0) * de[0] + te_basis.value(k, i, 1) * de[1];
                if ti == 0.0 {
                    continue;
                }
                for (j, &c) in cols.iter().enumerate() {
                    let tj = tr_basis.value(k, j, 0) * dt[0] + tr_basis.value(k, j, 1) * dt[1];
                    if tj != 0.0 {
                        triplets.push((r, c, ws * ti * tj));
                    }
                }
            }
        }
    }
    triplets
}

/// Assembles the tangential fluid-stress interface coupling
/// `sum_segments <(2 mu_f D(phi_j) n_f) . tau_f, (psi_i . d_test)>`; the
/// pressure part of the full stress drops since n . tau = 0. Used by the
/// slip-with-friction terms.
pub fn assemble_interface_stress_tangential(
    fluid_vel: &DofMap,
    test: (&DofMap, TraceVec),
    interface: &InterfaceMesh,
    mu_f: f64,
) -> Vec<Triplet> {
    let (gs, gw) = crate::quadrature::gauss_legendre_01(INTERFACE_GAUSS);
    let mut triplets = Vec::new();
    for seg in &interface.segments {
        let nf = seg.normal_f;
        let tf = seg.tangent_f;
        let de = test.1.resolve(seg);
        let len = seg.length();
        let (tr_cell, tr_basis) = side_basis(fluid_vel, seg, &gs);
        let (te_cell, te_basis) = side_basis(test.0, seg, &gs);
        let cols = fluid_vel.cell_dofs(tr_cell);
        let rows = test.0.cell_dofs(te_cell);
        for (k, &w) in gw.iter().enumerate() {
            let ws = w * len;
            for (i, &r) in rows.iter().enumerate() {
                let ti = te_basis.value(k, i, 0) * de[0] + te_basis.value(k, i, 1) * de[1];
                if ti == 0.0 {
                    continue;
                }
                for (j, &c) in cols.iter().enumerate() {
                    let gxx = tr_basis.grad(k, j, 0, 0);
                    let gxy = tr_basis.grad(k, j, 0, 1);
                    let gyx = tr_basis.grad(k, j, 1, 0);
                    let gyy = tr_basis.grad(k, j, 1, 1);
                    let dsym = [[gxx, 0.5 * (gxy + gyx)], [0.5 * (gxy + gyx), gyy]];
                    let dn = [
                        dsym[0][0] * nf[0] + dsym[0][1] * nf[1],
                        dsym[1][0] * nf[0] + dsym[1][1] * nf[1],
                    ];
                    let tj = 2.0 * mu_f * (dn[0] * tf[0] + dn[1] * tf[1]);
                    if tj != 0.0 {
                        triplets.push((r, c, ws * ti * tj));
                    }
                }
            }
        }
    }
    triplets
}

/// Evaluates the basis of `map` on the subdomain cell adjacent to the
/// segment, at the given segment parameters.
pub fn side_basis(
    map: &DofMap,
    seg: &crate::mesh::InterfaceSegment,
    params: &[f64],
) -> (usize, crate::element::CellBasis) {
    let cell = match map.mesh.domain {
        DomainLabel::Fluid => seg.fluid_cell,
        DomainLabel::Poroelastic => seg.poro_cell,
    };
    let geo = crate::element::CellGeometry::new(cell, map.mesh.cell_coords(cell))
        .expect("valid cell");
    let refs: Vec<[f64; 2]> = params.iter().map(|&s| geo.pull_back(seg.point(s))).collect();
    let basis = eval_basis(map.family, &map.mesh, cell, &refs).expect("side basis");
    (cell, basis)
}

/// Volume load (f, v) for a vector test space, using cached basis tables.
pub fn volume_load_vector(
    map: &DofMap,
    cache: &BasisCache,
    f: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
) -> Vec<f64> {
    let mesh = &map.mesh;
    let quadw: Vec<f64> = crate::quadrature::quadrature(6).unwrap().weights;
    let chunks = parallel::map_indexed(mesh.n_cells(), |c| {
        let basis = &cache.cells[c];
        let geo = &cache.geo[c];
        let det = geo.det.abs();
        let mut local = vec![0.0; basis.ndof];
        for (q, &w) in quadw.iter().enumerate() {
            let x = geo.push_forward(cache.points[q]);
            let fv = f(x[0], x[1]);
            let ws = w * det;
            for (i, li) in local.iter_mut().enumerate() {
                *li += ws
                    * (basis.value(q, i, 0) * fv[0]
                        + if basis.ncomp > 1 { basis.value(q, i, 1) * fv[1] } else { 0.0 });
            }
        }
        local
    });
    let mut out = vec![0.0; map.n_dofs];
    for (c, local) in chunks.iter().enumerate() {
        for (i, &d) in map.cell_dofs(c).iter().enumerate() {
            out[d] += local[i];
        }
    }
    out
}

/// Volume load (f, w) for a scalar test space.
pub fn volume_load_scalar(
    map: &DofMap,
    cache: &BasisCache,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Vec<f64> {
    let mesh = &map.mesh;
    let quadw: Vec<f64> = crate::quadrature::quadrature(6).unwrap().weights;
    let chunks = parallel::map_indexed(mesh.n_cells(), |c| {
        let basis = &cache.cells[c];
        let geo = &cache.geo[c];
        let det = geo.det.abs();
        let mut local = vec![0.0; basis.ndof];
        for (q, &w) in quadw.iter().enumerate() {
            let x = geo.push_forward(cache.points[q]);
            let ws = w * det * f(x[0], x[1]);
            for (i, li) in local.iter_mut().enumerate() {
                *li += ws * basis.value(q, i, 0);
            }
        }
        local
    });
    let mut out = vec![0.0; map.n_dofs];
    for (c, local) in chunks.iter().enumerate() {
        for (i, &d) in map.cell_dofs(c).iter().enumerate() {
            out[d] += local[i];
        }
    }
    out
}

/// Boundary traction load `<g, v>` over the tagged edges; `g` receives the
/// outward unit normal of the subdomain.
pub fn boundary_traction_load(
    map: &DofMap,
    tags: &[BoundaryTag],
    g: &dyn Fn(f64, f64, [f64; 2]) -> [f64; 2],
) -> Vec<f64> {
    let mesh = &map.mesh;
    let (gs, gw) = crate::quadrature::gauss_legendre_01(4);
    let mut out = vec![0.0; map.n_dofs];
    for &tag in tags {
        for e in mesh.boundary_edges(tag) {
            let cell = mesh.boundary_cell(e);
            let le = mesh.local_edge(cell, e);
            let n = mesh.outward_normal(cell, le);
            let [a, b] = mesh.edge_coords(e);
            let len = mesh.edge_length(e);
            let geo = crate::element::CellGeometry::new(cell, mesh.cell_coords(cell))
                .expect("valid cell");
            let refs: Vec<[f64; 2]> = gs
                .iter()
                .map(|&s| geo.pull_back([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
                .collect();
            let basis = eval_basis(map.family, mesh, cell, &refs).expect("edge basis");
            let dofs = map.cell_dofs(cell);
            for (k, (&s, &w)) in gs.iter().zip(&gw).enumerate() {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let gv = g(x[0], x[1], n);
                let ws = w * len;
                for (i, &d) in dofs.iter().enumerate() {
                    out[d] += ws
                        * (basis.value(k, i, 0) * gv[0]
                            + if basis.ncomp > 1 { basis.value(k, i, 1) * gv[1] } else { 0.0 });
                }
            }
        }
    }
    out
}

/// Natural Darcy pressure load `-<p, v . n>` over the tagged edges of an
/// H(div) test space.
pub fn darcy_pressure_load(
    map: &DofMap,
    tags: &[BoundaryTag],
    p: &dyn Fn(f64, f64) -> f64,
) -> Vec<f64> {
    boundary_traction_load(map, tags, &|x, y, n| {
        let pv = p(x, y);
        [-pv * n[0], -pv * n[1]]
    })
}

/// L2 projection onto the space of `map` (mass solve, no boundary handling).
pub fn l2_project_vector(map: &DofMap, f: &(dyn Fn(f64, f64) -> [f64; 2] + Sync)) -> Vec<f64> {
    let quad = crate::quadrature::quadrature(6).unwrap();
    let kind = if map.family.is_hdiv() {
        FormKind::WeightedVectorMass { w: [[1.0, 0.0], [0.0, 1.0]] }
    } else {
        FormKind::Mass { coeff: 1.0 }
    };
    let trips = assemble_form(kind, map, map, &quad).expect("mass form");
    let mut sys = crate::sparse::SparseSystem::new("l2-projection", map.n_dofs);
    sys.add_triplets(trips);
    let cache = BasisCache::build(map, &quad.points);
    let rhs = volume_load_vector(map, &cache, f);
    sys.solve(&rhs).expect("projection solve")
}

/// Scalar variant of [`l2_project_vector`].
pub fn l2_project_scalar(map: &DofMap, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> Vec<f64> {
    let quad = crate::quadrature::quadrature(6).unwrap();
    let trips = assemble_form(FormKind::Mass { coeff: 1.0 }, map, map, &quad).expect("mass form");
    let mut sys = crate::sparse::SparseSystem::new("l2-projection", map.n_dofs);
    sys.add_triplets(trips);
    let cache = BasisCache::build(map, &quad.points);
    let rhs = volume_load_scalar(map, &cache, f);
    sys.solve(&rhs).expect("projection solve")
}
