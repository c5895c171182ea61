//! Reference elements and per-cell basis evaluation.
//!
//! Lagrange families are tabulated on the reference triangle and pushed
//! forward through the affine map; H(div) families are constructed directly
//! on the physical cell against globally oriented edge functionals, which
//! keeps normal components single-valued across shared edges (the usual
//! contravariant Piola convention).

use crate::la::DenseMat;
use crate::mesh::TriMesh;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ElementError {
    #[error("degenerate cell {cell}: Jacobian determinant {det:e}")]
    DegenerateCell { cell: usize, det: f64 },
    #[error("reference point ({x}, {y}) lies outside the reference triangle")]
    PointOutsideReference { x: f64, y: f64 },
    #[error("moment matrix for H(div) element on cell {cell} is singular")]
    SingularMoments { cell: usize },
}

/// Finite element family on triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    /// Continuous piecewise linear scalar.
    P1,
    /// Continuous piecewise quadratic scalar.
    P2,
    /// Piecewise constant scalar.
    P0,
    /// Discontinuous piecewise linear scalar.
    P1Disc,
    /// Lowest-order Raviart-Thomas H(div) vector.
    Rt0,
    /// First-order Raviart-Thomas H(div) vector (two moments per edge plus
    /// two interior moments).
    Rt1,
    /// Continuous vector field, componentwise quadratic.
    VecP2,
}

impl ElementFamily {
    pub fn degree(&self) -> usize {
        match self {
            Self::P0 => 0,
            Self::P1 | Self::P1Disc | Self::Rt0 => 1,
            Self::P2 | Self::VecP2 | Self::Rt1 => 2,
        }
    }

    pub fn n_components(&self) -> usize {
        match self {
            Self::Rt0 | Self::Rt1 | Self::VecP2 => 2,
            _ => 1,
        }
    }

    pub fn dofs_per_cell(&self) -> usize {
        match self {
            Self::P0 => 1,
            Self::P1 | Self::P1Disc => 3,
            Self::P2 => 6,
            Self::Rt0 => 3,
            Self::Rt1 => 8,
            Self::VecP2 => 12,
        }
    }

    pub fn is_hdiv(&self) -> bool {
        matches!(self, Self::Rt0 | Self::Rt1)
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Self::P1 | Self::P2 | Self::VecP2)
    }
}

/// Affine geometry of one triangle: x = origin + B x_ref.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    pub b: [[f64; 2]; 2],
    /// Inverse-transpose of B, for gradient pushforward.
    pub inv_bt: [[f64; 2]; 2],
    pub det: f64,
    pub area: f64,
}

impl CellGeometry {
    pub fn new(cell: usize, coords: [[f64; 2]; 3]) -> Result<Self, ElementError> {
        let b = [
            [coords[1][0] - coords[0][0], coords[2][0] - coords[0][0]],
            [coords[1][1] - coords[0][1], coords[2][1] - coords[0][1]],
        ];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let scale = b.iter().flatten().map(|v| v.abs()).fold(0.0f64, f64::max);
        if det.abs() <= 1e-14 * scale * scale {
            return Err(ElementError::DegenerateCell { cell, det });
        }
        let inv_bt = [
            [b[1][1] / det, -b[1][0] / det],
            [-b[0][1] / det, b[0][0] / det],
        ];
        Ok(Self { origin: coords[0], b, inv_bt, det, area: 0.5 * det.abs() })
    }

    #[inline]
    pub fn push_forward(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.b[0][0] * r[0] + self.b[0][1] * r[1],
            self.origin[1] + self.b[1][0] * r[0] + self.b[1][1] * r[1],
        ]
    }

    /// Reference coordinates of a physical point.
    pub fn pull_back(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            (self.b[1][1] * d[0] - self.b[0][1] * d[1]) / self.det,
            (-self.b[1][0] * d[0] + self.b[0][0] * d[1]) / self.det,
        ]
    }
}

/// Basis data of one family on one cell at a fixed set of reference points.
///
/// Layouts: `values[q * ndof * ncomp + i * ncomp + c]`,
/// `grads[((q * ndof + i) * ncomp + c) * 2 + d]`, `divs[q * ndof + i]`.
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub ndof: usize,
    pub ncomp: usize,
    pub nq: usize,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
    pub divs: Vec<f64>,
}

impl CellBasis {
    #[inline]
    pub fn value(&self, q: usize, i: usize, c: usize) -> f64 {
        self.values[(q * self.ndof + i) * self.ncomp + c]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize, c: usize, d: usize) -> f64 {
        self.grads[(((q * self.ndof + i) * self.ncomp) + c) * 2 + d]
    }

    #[inline]
    pub fn div(&self, q: usize, i: usize) -> f64 {
        self.divs[q * self.ndof + i]
    }
}

fn p1_ref(r: [f64; 2]) -> ([f64; 3], [[f64; 2]; 3]) {
    let l = [1.0 - r[0] - r[1], r[0], r[1]];
    let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    (l, g)
}

/// P2 shape functions ordered [vertex 0..3, midpoint of edge opposite vertex 0..3].
fn p2_ref(r: [f64; 2]) -> ([f64; 6], [[f64; 2]; 6]) {
    let (l, gl) = p1_ref(r);
    let mut v = [0.0; 6];
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        v[i] = l[i] * (2.0 * l[i] - 1.0);
        for d in 0..2 {
            g[i][d] = (4.0 * l[i] - 1.0) * gl[i][d];
        }
    }
    for i in 0..3 {
        // edge i is opposite vertex i, joining vertices i+1 and i+2
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        v[3 + i] = 4.0 * l[a] * l[b];
        for d in 0..2 {
            g[3 + i][d] = 4.0 * (gl[a][d] * l[b] + l[a] * gl[b][d]);
        }
    }
    (v, g)
}

/// Evaluates the basis of `family` on `cell` at the given reference points.
pub fn eval_basis(
    family: ElementFamily,
    mesh: &TriMesh,
    cell: usize,
    ref_points: &[[f64; 2]],
) -> Result<CellBasis, ElementError> {
    let geo = CellGeometry::new(cell, mesh.cell_coords(cell))?;
    let nq = ref_points.len();
    let ndof = family.dofs_per_cell();
    let ncomp = family.n_components();
    let mut out = CellBasis {
        ndof,
        ncomp,
        nq,
        values: vec![0.0; nq * ndof * ncomp],
        grads: vec![0.0; nq * ndof * ncomp * 2],
        divs: vec![0.0; nq * ndof],
    };

    match family {
        ElementFamily::P0 => {
            for q in 0..nq {
                out.values[q] = 1.0;
            }
        }
        ElementFamily::P1 | ElementFamily::P1Disc => {
            for (q, &r) in ref_points.iter().enumerate() {
                let (v, g) = p1_ref(r);
                for i in 0..3 {
                    out.values[q * 3 + i] = v[i];
                    let (gx, gy) = push_grad(&geo, g[i]);
                    out.grads[(q * 3 + i) * 2] = gx;
                    out.grads[(q * 3 + i) * 2 + 1] = gy;
                }
            }
        }
        ElementFamily::P2 => {
            for (q, &r) in ref_points.iter().enumerate() {
                let (v, g) = p2_ref(r);
                for i in 0..6 {
                    out.values[q * 6 + i] = v[i];
                    let (gx, gy) = push_grad(&geo, g[i]);
                    out.grads[(q * 6 + i) * 2] = gx;
                    out.grads[(q * 6 + i) * 2 + 1] = gy;
                }
            }
        }
        ElementFamily::VecP2 => {
            for (q, &r) in ref_points.iter().enumerate() {
                let (v, g) = p2_ref(r);
                for k in 0..6 {
                    let (gx, gy) = push_grad(&geo, g[k]);
                    for c in 0..2 {
                        let i = 2 * k + c;
                        out.values[(q * 12 + i) * 2 + c] = v[k];
                        out.grads[((q * 12 + i) * 2 + c) * 2] = gx;
                        out.grads[((q * 12 + i) * 2 + c) * 2 + 1] = gy;
                        out.divs[q * 12 + i] = if c == 0 { gx } else { gy };
                    }
                }
            }
        }
        ElementFamily::Rt0 => {
            let coords = mesh.cell_coords(cell);
            let area = geo.area;
            for (q, &r) in ref_points.iter().enumerate() {
                let x = geo.push_forward(r);
                for i in 0..3 {
                    let s = mesh.cell_edge_signs[cell][i] as f64;
                    let p = coords[i];
                    out.values[(q * 3 + i) * 2] = s / (2.0 * area) * (x[0] - p[0]);
                    out.values[(q * 3 + i) * 2 + 1] = s / (2.0 * area) * (x[1] - p[1]);
                    out.divs[q * 3 + i] = s / area;
                }
            }
        }
        ElementFamily::Rt1 => {
            let coeffs = rt1_coefficients(mesh, cell, &geo)?;
            let centroid = cell_centroid(mesh, cell);
            for (q, &r) in ref_points.iter().enumerate() {
                let xp = geo.push_forward(r);
                let x = xp[0] - centroid[0];
                let y = xp[1] - centroid[1];
                let (vals, divs) = rt1_monomials(x, y);
                for i in 0..8 {
                    let mut vx = 0.0;
                    let mut vy = 0.0;
                    let mut dv = 0.0;
                    for m in 0..8 {
                        let c = coeffs[m * 8 + i];
                        vx += c * vals[m][0];
                        vy += c * vals[m][1];
                        dv += c * divs[m];
                    }
                    out.values[(q * 8 + i) * 2] = vx;
                    out.values[(q * 8 + i) * 2 + 1] = vy;
                    out.divs[q * 8 + i] = dv;
                }
            }
        }
    }
    Ok(out)
}

#[inline]
fn push_grad(geo: &CellGeometry, g: [f64; 2]) -> (f64, f64) {
    (
        geo.inv_bt[0][0] * g[0] + geo.inv_bt[0][1] * g[1],
        geo.inv_bt[1][0] * g[0] + geo.inv_bt[1][1] * g[1],
    )
}

fn cell_centroid(mesh: &TriMesh, cell: usize) -> [f64; 2] {
    let c = mesh.cell_coords(cell);
    [
        (c[0][0] + c[1][0] + c[2][0]) / 3.0,
        (c[0][1] + c[1][1] + c[2][1]) / 3.0,
    ]
}

/// The eight monomial fields spanning the first-order Raviart-Thomas space,
/// in coordinates centered at the cell centroid: (P1)^2 plus x * P1_hom.
fn rt1_monomials(x: f64, y: f64) -> ([[f64; 2]; 8], [f64; 8]) {
    (
        [
            [1.0, 0.0],
            [x, 0.0],
            [y, 0.0],
            [0.0, 1.0],
            [0.0, x],
            [0.0, y],
            [x * x, x * y],
            [x * y, y * y],
        ],
        [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 3.0 * x, 3.0 * y],
    )
}

/// Degrees of freedom of the first-order Raviart-Thomas element on a cell:
/// for each local edge, the moments of v.n against 1 and (2s-1) in the global
/// edge parametrization; then the two interior component averages.
fn rt1_coefficients(
    mesh: &TriMesh,
    cell: usize,
    geo: &CellGeometry,
) -> Result<Vec<f64>, ElementError> {
    let centroid = cell_centroid(mesh, cell);
    let mut v = DenseMat::zeros(8, 8);

    // 3-point Gauss on [0,1] is exact for the cubic edge integrands
    let (gs, gw) = crate::quadrature::gauss_legendre_01(3);
    for le in 0..3 {
        let e = mesh.cell_edges[cell][le];
        let [a, b] = mesh.edge_coords(e);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        for (&s, &w) in gs.iter().zip(&gw) {
            let x = a[0] + s * (b[0] - a[0]) - centroid[0];
            let y = a[1] + s * (b[1] - a[1]) - centroid[1];
            let (vals, _) = rt1_monomials(x, y);
            let leg = 2.0 * s - 1.0;
            for m in 0..8 {
                let vn = vals[m][0] * n[0] + vals[m][1] * n[1];
                v.add(2 * le, m, w * len * vn);
                v.add(2 * le + 1, m, w * len * vn * leg);
            }
        }
    }
    // interior moments: component averages over the cell
    let q = crate::quadrature::quadrature(2).expect("degree 2 rule");
    for (p, w) in q.points.iter().zip(&q.weights) {
        let xp = geo.push_forward(*p);
        let x = xp[0] - centroid[0];
        let y = xp[1] - centroid[1];
        let (vals, _) = rt1_monomials(x, y);
        let scale = w * geo.det.abs() / geo.area;
        for m in 0..8 {
            v.add(6, m, scale * vals[m][0]);
            v.add(7, m, scale * vals[m][1]);
        }
    }

    let lu = v.lu().ok_or(ElementError::SingularMoments { cell })?;
    // column j of the result holds the monomial coefficients of basis j
    let mut coeffs = vec![0.0; 64];
    for j in 0..8 {
        let mut e = vec![0.0; 8];
        e[j] = 1.0;
        let col = lu.solve(&e);
        for m in 0..8 {
            coeffs[m * 8 + j] = col[m];
        }
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, DiagonalRule, DomainLabel};
    use crate::quadrature::quadrature;

    fn mesh2() -> TriMesh {
        build_rect_mesh(0.0, 1.0, 0.0, 1.0, 2, 2, DiagonalRule::LowerLeft, DomainLabel::Fluid)
            .unwrap()
    }

    #[test]
    fn p1_is_nodal_at_vertices() {
        let mesh = mesh2();
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let basis = eval_basis(ElementFamily::P1, &mesh, 0, &verts).unwrap();
        for q in 0..3 {
            for i in 0..3 {
                let expect = if q == i { 1.0 } else { 0.0 };
                assert!((basis.value(q, i, 0) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rt0_divergence_is_constant_per_cell() {
        let mesh = mesh2();
        let pts = [[0.2, 0.3], [0.5, 0.1], [0.1, 0.7]];
        for cell in 0..mesh.n_cells() {
            let basis = eval_basis(ElementFamily::Rt0, &mesh, cell, &pts).unwrap();
            for i in 0..3 {
                let d0 = basis.div(0, i);
                for q in 1..3 {
                    assert!((basis.div(q, i) - d0).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let mesh = mesh2();
        for cell in 0..mesh.n_cells() {
            let coords = mesh.cell_coords(cell);
            let geo = CellGeometry::new(cell, coords).unwrap();
            // nodal interpolation of f(x,y) = x^2 at vertices and edge midpoints
            let mut nodal = [0.0; 6];
            for i in 0..3 {
                nodal[i] = coords[i][0] * coords[i][0];
            }
            for i in 0..3 {
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                let mx = 0.5 * (coords[a][0] + coords[b][0]);
                nodal[3 + i] = mx * mx;
            }
            let centroid_ref = [[1.0 / 3.0, 1.0 / 3.0]];
            let basis = eval_basis(ElementFamily::P2, &mesh, cell, &centroid_ref).unwrap();
            let val: f64 = (0..6).map(|i| nodal[i] * basis.value(0, i, 0)).sum();
            let c = geo.push_forward(centroid_ref[0]);
            assert!((val - c[0] * c[0]).abs() < 1e-14);
        }
    }

    /// Normal components of H(div) basis functions must agree across every
    /// interior edge for any coefficient vector; checked at edge quadrature
    /// points through both adjacent cells.
    #[test]
    fn rt_normal_trace_continuity() {
        let mesh = build_rect_mesh(
            0.0,
            1.0,
            0.0,
            1.0,
            3,
            3,
            DiagonalRule::Alternating,
            DomainLabel::Poroelastic,
        )
        .unwrap();
        for family in [ElementFamily::Rt0, ElementFamily::Rt1] {
            let map = crate::dofmap::DofMap::new(family, std::sync::Arc::new(mesh.clone()));
            let mut coeffs = vec![0.0; map.n_dofs];
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c = ((k * 2654435761) % 1000) as f64 / 1000.0 - 0.5;
            }
            let (gs, _) = crate::quadrature::gauss_legendre_01(3);
            for e in 0..mesh.n_edges() {
                let edge = &mesh.edges[e];
                let (Some(c0), Some(c1)) = (edge.cells[0], edge.cells[1]) else {
                    continue;
                };
                let [a, b] = mesh.edge_coords(e);
                let n = mesh.edge_normal(e);
                for &s in &gs {
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    let tr = |cell: usize| -> f64 {
                        let geo = CellGeometry::new(cell, mesh.cell_coords(cell)).unwrap();
                        let r = geo.pull_back(x);
                        let basis = eval_basis(family, &mesh, cell, &[r]).unwrap();
                        let dofs = map.cell_dofs(cell);
                        let mut vn = 0.0;
                        for (i, &g) in dofs.iter().enumerate() {
                            vn += coeffs[g]
                                * (basis.value(0, i, 0) * n[0] + basis.value(0, i, 1) * n[1]);
                        }
                        vn
                    };
                    let jump = (tr(c0) - tr(c1)).abs();
                    assert!(jump < 1e-12, "{family:?} edge {e}: jump {jump:e}");
                }
            }
        }
    }

    /// RT1 must reproduce arbitrary linear vector fields exactly.
    #[test]
    fn rt1_reproduces_linear_fields() {
        let mesh = mesh2();
        let f = |x: f64, y: f64| [0.3 + 1.2 * x - 0.7 * y, -0.1 + 0.4 * x + 0.9 * y];
        let map = crate::dofmap::DofMap::new(ElementFamily::Rt1, std::sync::Arc::new(mesh.clone()));
        let coeffs = map.interpolate_hdiv(&|x, y| f(x, y));
        let q = quadrature(3).unwrap();
        for cell in 0..mesh.n_cells() {
            let geo = CellGeometry::new(cell, mesh.cell_coords(cell)).unwrap();
            let basis = eval_basis(ElementFamily::Rt1, &mesh, cell, &q.points).unwrap();
            let dofs = map.cell_dofs(cell);
            for (qi, p) in q.points.iter().enumerate() {
                let x = geo.push_forward(*p);
                let exact = f(x[0], x[1]);
                let mut v = [0.0, 0.0];
                for (i, &g) in dofs.iter().enumerate() {
                    v[0] += coeffs[g] * basis.value(qi, i, 0);
                    v[1] += coeffs[g] * basis.value(qi, i, 1);
                }
                assert!((v[0] - exact[0]).abs() < 1e-12 && (v[1] - exact[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let mut mesh = mesh2();
        // collapse one vertex onto another
        mesh.vertices[0] = mesh.vertices[1];
        let r = eval_basis(ElementFamily::P1, &mesh, 0, &[[0.3, 0.3]]);
        assert!(matches!(r, Err(ElementError::DegenerateCell { .. })));
    }
}
