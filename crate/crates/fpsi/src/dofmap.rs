//! Global degree-of-freedom numbering, boundary DOF lookup, and nodal /
//! moment interpolation for each element family.

use crate::element::{eval_basis, CellBasis, CellGeometry, ElementFamily};
use crate::mesh::{BoundaryTag, TriMesh};
use crate::parallel;
use std::sync::Arc;

/// Global DOF numbering of one field on one mesh.
///
/// Scalar node order for the quadratic families is vertices first, then edge
/// midpoints; vector fields interleave components per node. Raviart-Thomas
/// edge DOFs are numbered consecutively per edge, with the interior DOFs of
/// the first-order family appended after all edge DOFs.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub family: ElementFamily,
    pub mesh: Arc<TriMesh>,
    pub n_dofs: usize,
    cell_dofs: Vec<usize>,
    width: usize,
}

impl DofMap {
    pub fn new(family: ElementFamily, mesh: Arc<TriMesh>) -> Self {
        let nv = mesh.n_vertices();
        let ne = mesh.n_edges();
        let nt = mesh.n_cells();
        let width = family.dofs_per_cell();
        let mut cell_dofs = Vec::with_capacity(nt * width);
        let n_dofs = match family {
            ElementFamily::P1 => {
                for t in &mesh.triangles {
                    cell_dofs.extend_from_slice(&[t[0], t[1], t[2]]);
                }
                nv
            }
            ElementFamily::P2 => {
                for (c, t) in mesh.triangles.iter().enumerate() {
                    cell_dofs.extend_from_slice(&[t[0], t[1], t[2]]);
                    for le in 0..3 {
                        cell_dofs.push(nv + mesh.cell_edges[c][le]);
                    }
                }
                nv + ne
            }
            ElementFamily::P0 => {
                cell_dofs.extend(0..nt);
                nt
            }
            ElementFamily::P1Disc => {
                for c in 0..nt {
                    cell_dofs.extend_from_slice(&[3 * c, 3 * c + 1, 3 * c + 2]);
                }
                3 * nt
            }
            ElementFamily::Rt0 => {
                for c in 0..nt {
                    for le in 0..3 {
                        cell_dofs.push(mesh.cell_edges[c][le]);
                    }
                }
                ne
            }
            ElementFamily::Rt1 => {
                for c in 0..nt {
                    for le in 0..3 {
                        let e = mesh.cell_edges[c][le];
                        cell_dofs.push(2 * e);
                        cell_dofs.push(2 * e + 1);
                    }
                    cell_dofs.push(2 * ne + 2 * c);
                    cell_dofs.push(2 * ne + 2 * c + 1);
                }
                2 * ne + 2 * nt
            }
            ElementFamily::VecP2 => {
                for (c, t) in mesh.triangles.iter().enumerate() {
                    for &v in t {
                        cell_dofs.push(2 * v);
                        cell_dofs.push(2 * v + 1);
                    }
                    for le in 0..3 {
                        let n = nv + mesh.cell_edges[c][le];
                        cell_dofs.push(2 * n);
                        cell_dofs.push(2 * n + 1);
                    }
                }
                2 * (nv + ne)
            }
        };
        Self { family, mesh, n_dofs, cell_dofs, width }
    }

    #[inline]
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.width..(c + 1) * self.width]
    }

    /// Number of scalar nodes underlying the quadratic families.
    pub fn n_scalar_nodes(&self) -> usize {
        self.mesh.n_vertices() + self.mesh.n_edges()
    }

    /// Coordinates of a scalar node (vertex or edge midpoint).
    pub fn scalar_node_coord(&self, node: usize) -> [f64; 2] {
        let nv = self.mesh.n_vertices();
        if node < nv {
            self.mesh.vertices[node]
        } else {
            self.mesh.edge_midpoint(node - nv)
        }
    }

    /// Scalar nodes lying on edges with the given tag (quadratic families).
    pub fn boundary_scalar_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let nv = self.mesh.n_vertices();
        let mut nodes: Vec<usize> = Vec::new();
        for e in self.mesh.boundary_edges(tag) {
            let edge = &self.mesh.edges[e];
            nodes.push(edge.v[0]);
            nodes.push(edge.v[1]);
            nodes.push(nv + e);
        }
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// All DOFs constrained by an essential condition on the tagged edges.
    /// For vector nodal families `components` selects which Cartesian
    /// components are constrained (both, or a single one for symmetry-type
    /// conditions); it is ignored for scalar and H(div) families.
    pub fn boundary_dofs(&self, tag: BoundaryTag, components: &[usize]) -> Vec<usize> {
        match self.family {
            ElementFamily::P1 => {
                let mut dofs: Vec<usize> = Vec::new();
                for e in self.mesh.boundary_edges(tag) {
                    dofs.extend_from_slice(&self.mesh.edges[e].v);
                }
                dofs.sort_unstable();
                dofs.dedup();
                dofs
            }
            ElementFamily::P2 => self.boundary_scalar_nodes(tag),
            ElementFamily::VecP2 => {
                let mut dofs: Vec<usize> = Vec::new();
                for n in self.boundary_scalar_nodes(tag) {
                    for &c in components {
                        dofs.push(2 * n + c);
                    }
                }
                dofs.sort_unstable();
                dofs
            }
            ElementFamily::Rt0 => self.mesh.boundary_edges(tag).collect(),
            ElementFamily::Rt1 => {
                let mut dofs: Vec<usize> = Vec::new();
                for e in self.mesh.boundary_edges(tag) {
                    dofs.push(2 * e);
                    dofs.push(2 * e + 1);
                }
                dofs
            }
            ElementFamily::P0 | ElementFamily::P1Disc => Vec::new(),
        }
    }

    /// Essential values for a vector-valued boundary function on the tagged
    /// edges: nodal values for the nodal families, normal-flux moments for
    /// the H(div) families.
    pub fn essential_values(
        &self,
        tag: BoundaryTag,
        components: &[usize],
        g: &dyn Fn(f64, f64) -> [f64; 2],
    ) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        match self.family {
            ElementFamily::VecP2 => {
                for n in self.boundary_scalar_nodes(tag) {
                    let x = self.scalar_node_coord(n);
                    let v = g(x[0], x[1]);
                    for &c in components {
                        out.push((2 * n + c, v[c]));
                    }
                }
            }
            ElementFamily::Rt0 | ElementFamily::Rt1 => {
                let (gs, gw) = crate::quadrature::gauss_legendre_01(4);
                for e in self.mesh.boundary_edges(tag) {
                    let [a, b] = self.mesh.edge_coords(e);
                    let n = self.mesh.edge_normal(e);
                    let len = self.mesh.edge_length(e);
                    let mut m0 = 0.0;
                    let mut m1 = 0.0;
                    for (&s, &w) in gs.iter().zip(&gw) {
                        let x = a[0] + s * (b[0] - a[0]);
                        let y = a[1] + s * (b[1] - a[1]);
                        let v = g(x, y);
                        let vn = v[0] * n[0] + v[1] * n[1];
                        m0 += w * len * vn;
                        m1 += w * len * vn * (2.0 * s - 1.0);
                    }
                    if self.family == ElementFamily::Rt0 {
                        out.push((e, m0));
                    } else {
                        out.push((2 * e, m0));
                        out.push((2 * e + 1, m1));
                    }
                }
            }
            _ => panic!("essential_values with vector data requires a vector family"),
        }
        out.sort_unstable_by_key(|&(d, _)| d);
        out
    }

    /// Scalar variant of [`Self::essential_values`] for P1/P2 fields.
    pub fn essential_values_scalar(
        &self,
        tag: BoundaryTag,
        g: &dyn Fn(f64, f64) -> f64,
    ) -> Vec<(usize, f64)> {
        let nodes = match self.family {
            ElementFamily::P2 => self.boundary_scalar_nodes(tag),
            ElementFamily::P1 => self.boundary_dofs(tag, &[]),
            _ => panic!("scalar essential values require a scalar nodal family"),
        };
        nodes
            .into_iter()
            .map(|n| {
                let x = self.scalar_node_coord(n);
                (n, g(x[0], x[1]))
            })
            .collect()
    }

    /// Nodal interpolation of a scalar function.
    pub fn interpolate_scalar(&self, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_dofs];
        match self.family {
            ElementFamily::P1 => {
                for (v, x) in self.mesh.vertices.iter().enumerate() {
                    coeffs[v] = f(x[0], x[1]);
                }
            }
            ElementFamily::P2 => {
                for n in 0..self.n_scalar_nodes() {
                    let x = self.scalar_node_coord(n);
                    coeffs[n] = f(x[0], x[1]);
                }
            }
            ElementFamily::P0 => {
                for c in 0..self.mesh.n_cells() {
                    let co = self.mesh.cell_coords(c);
                    let cx = (co[0][0] + co[1][0] + co[2][0]) / 3.0;
                    let cy = (co[0][1] + co[1][1] + co[2][1]) / 3.0;
                    coeffs[c] = f(cx, cy);
                }
            }
            ElementFamily::P1Disc => {
                for c in 0..self.mesh.n_cells() {
                    let co = self.mesh.cell_coords(c);
                    for k in 0..3 {
                        coeffs[3 * c + k] = f(co[k][0], co[k][1]);
                    }
                }
            }
            _ => panic!("interpolate_scalar requires a scalar family"),
        }
        coeffs
    }

    /// Nodal interpolation of a vector function (componentwise quadratic).
    pub fn interpolate_vector(&self, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.family, ElementFamily::VecP2);
        let mut coeffs = vec![0.0; self.n_dofs];
        for n in 0..self.n_scalar_nodes() {
            let x = self.scalar_node_coord(n);
            let v = f(x[0], x[1]);
            coeffs[2 * n] = v[0];
            coeffs[2 * n + 1] = v[1];
        }
        coeffs
    }

    /// Moment interpolation of a vector function into an H(div) family.
    pub fn interpolate_hdiv(&self, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        assert!(self.family.is_hdiv());
        let mut coeffs = vec![0.0; self.n_dofs];
        let (gs, gw) = crate::quadrature::gauss_legendre_01(4);
        for e in 0..self.mesh.n_edges() {
            let [a, b] = self.mesh.edge_coords(e);
            let n = self.mesh.edge_normal(e);
            let len = self.mesh.edge_length(e);
            let mut m0 = 0.0;
            let mut m1 = 0.0;
            for (&s, &w) in gs.iter().zip(&gw) {
                let v = f(a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]));
                let vn = v[0] * n[0] + v[1] * n[1];
                m0 += w * len * vn;
                m1 += w * len * vn * (2.0 * s - 1.0);
            }
            if self.family == ElementFamily::Rt0 {
                coeffs[e] = m0;
            } else {
                coeffs[2 * e] = m0;
                coeffs[2 * e + 1] = m1;
            }
        }
        if self.family == ElementFamily::Rt1 {
            let ne = self.mesh.n_edges();
            let q = crate::quadrature::quadrature(4).expect("degree 4 rule");
            for c in 0..self.mesh.n_cells() {
                let geo = CellGeometry::new(c, self.mesh.cell_coords(c)).expect("valid cell");
                let mut ax = 0.0;
                let mut ay = 0.0;
                for (p, w) in q.points.iter().zip(&q.weights) {
                    let x = geo.push_forward(*p);
                    let v = f(x[0], x[1]);
                    let scale = w * geo.det.abs() / geo.area;
                    ax += scale * v[0];
                    ay += scale * v[1];
                }
                coeffs[2 * ne + 2 * c] = ax;
                coeffs[2 * ne + 2 * c + 1] = ay;
            }
        }
        coeffs
    }
}

/// Per-cell basis tables of one family at a fixed set of reference points,
/// built once per mesh and reused by assembly, load evaluation, and norms.
pub struct BasisCache {
    pub family: ElementFamily,
    pub points: Vec<[f64; 2]>,
    pub cells: Vec<CellBasis>,
    pub geo: Vec<CellGeometry>,
}

impl BasisCache {
    pub fn build(map: &DofMap, points: &[[f64; 2]]) -> Self {
        let mesh = &map.mesh;
        let cells = parallel::map_indexed(mesh.n_cells(), |c| {
            eval_basis(map.family, mesh, c, points).expect("basis evaluation failed")
        });
        let geo = (0..mesh.n_cells())
            .map(|c| CellGeometry::new(c, mesh.cell_coords(c)).expect("valid cell"))
            .collect();
        Self { family: map.family, points: points.to_vec(), cells, geo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, tag_boundaries, DiagonalRule, DomainLabel};

    fn tagged_square() -> Arc<TriMesh> {
        let m = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4, DiagonalRule::LowerLeft, DomainLabel::Fluid)
            .unwrap();
        Arc::new(
            tag_boundaries(
                m,
                &[
                    (&|p: [f64; 2]| p[1] > 1.0 - 1e-12, BoundaryTag::FluidDirichlet),
                    (&|_p: [f64; 2]| true, BoundaryTag::FluidNeumann),
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn every_dof_is_referenced_and_continuity_classes_hold() {
        let mesh = tagged_square();
        for family in [
            ElementFamily::P1,
            ElementFamily::P2,
            ElementFamily::P0,
            ElementFamily::P1Disc,
            ElementFamily::Rt0,
            ElementFamily::Rt1,
            ElementFamily::VecP2,
        ] {
            let map = DofMap::new(family, mesh.clone());
            let mut seen = vec![0usize; map.n_dofs];
            for c in 0..mesh.n_cells() {
                for &d in map.cell_dofs(c) {
                    seen[d] += 1;
                }
            }
            assert!(seen.iter().all(|&s| s >= 1), "{family:?}: unreferenced dof");
            if matches!(family, ElementFamily::P0 | ElementFamily::P1Disc) {
                assert!(seen.iter().all(|&s| s == 1), "{family:?}: discontinuous family shares dofs");
            }
        }
    }

    #[test]
    fn vec_p2_boundary_dofs_count() {
        let mesh = tagged_square();
        let map = DofMap::new(ElementFamily::VecP2, mesh);
        // top boundary: 4 edges -> 5 vertices + 4 midpoints = 9 nodes
        let both = map.boundary_dofs(BoundaryTag::FluidDirichlet, &[0, 1]);
        assert_eq!(both.len(), 18);
        let y_only = map.boundary_dofs(BoundaryTag::FluidDirichlet, &[1]);
        assert_eq!(y_only.len(), 9);
        assert!(y_only.iter().all(|d| d % 2 == 1));
    }

    #[test]
    fn rt0_essential_flux_moments_match_constant_field() {
        let mesh = tagged_square();
        let map = DofMap::new(ElementFamily::Rt0, mesh.clone());
        // constant field (0, 1): flux through a top edge of length h is h * (n . e_y)
        let vals = map.essential_values(BoundaryTag::FluidDirichlet, &[], &|_x, _y| [0.0, 1.0]);
        for (dof, v) in vals {
            let n = map.mesh.edge_normal(dof);
            let len = map.mesh.edge_length(dof);
            assert!((v - len * n[1]).abs() < 1e-14);
        }
    }
}
