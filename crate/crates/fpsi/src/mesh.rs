//! Structured triangular meshes of axis-aligned rectangles with boundary
//! tagging and extraction of a matched fluid/poroelastic interface.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision counts must be at least 1, got nx={nx}, ny={ny}")]
    InvalidSubdivision { nx: usize, ny: usize },
    #[error("rectangle extents must satisfy x1 > x0 and y1 > y0")]
    InvalidExtents,
    #[error(
        "{count} boundary edge(s) matched no tagging rule; first untagged edge has midpoint ({x}, {y})"
    )]
    UntaggedBoundary { count: usize, x: f64, y: f64 },
    #[error("interface edge counts differ: fluid side has {fluid}, poroelastic side has {poro}")]
    InterfaceCountMismatch { fluid: usize, poro: usize },
    #[error("interface segment {index} endpoints differ by {gap:e} (matching meshes required)")]
    InterfaceEndpointMismatch { index: usize, gap: f64 },
    #[error("interface normals are not opposite on segment {index}")]
    InterfaceNormalMismatch { index: usize },
    #[error("mesh has no edges tagged Interface on the {side} side")]
    MissingInterfaceTags { side: &'static str },
}

/// Physical role of a tagged boundary segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    FluidDirichlet,
    FluidNeumann,
    Interface,
    PoroDispDirichlet,
    PoroTraction,
    DarcyPressure,
    DarcyFlux,
    FluidInflow,
    FluidOutflow,
    PoroExternal,
    FluidSymmetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainLabel {
    Fluid,
    Poroelastic,
}

/// Which diagonal splits each grid quad into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalRule {
    /// Diagonal from the lower-left to the upper-right corner.
    #[default]
    LowerLeft,
    /// Diagonal from the upper-left to the lower-right corner.
    UpperLeft,
    /// Alternate the two diagonals in a checkerboard pattern.
    Alternating,
}

/// Undirected mesh edge. Vertices are stored with `v[0] < v[1]`; the global
/// edge normal and tangent derive from that ordering, which is what makes
/// Raviart-Thomas normal fluxes single-valued across cells.
#[derive(Debug, Clone)]
pub struct Edge {
    pub v: [usize; 2],
    /// Adjacent cells; boundary edges have exactly one.
    pub cells: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Conforming triangle mesh of one subdomain.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// `cell_edges[c][i]` is the global edge opposite local vertex `i`.
    pub cell_edges: Vec<[usize; 3]>,
    /// +1 where the global edge normal points out of the cell, -1 otherwise.
    pub cell_edge_signs: Vec<[i8; 3]>,
    /// One tag per boundary edge, `None` on interior edges.
    pub boundary_tags: Vec<Option<BoundaryTag>>,
    pub domain: DomainLabel,
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[c];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn signed_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cell_coords(c);
        0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_coords(e);
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    pub fn edge_coords(&self, e: usize) -> [[f64; 2]; 2] {
        let ed = &self.edges[e];
        [self.vertices[ed.v[0]], self.vertices[ed.v[1]]]
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edge_coords(e);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Unit normal of the global edge orientation: the 90-degree clockwise
    /// rotation of the direction from the lower to the higher vertex index.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edge_coords(e);
        let len = self.edge_length(e);
        [(b[1] - a[1]) / len, -(b[0] - a[0]) / len]
    }

    /// Outward unit normal of cell `c` on its local edge `le`.
    pub fn outward_normal(&self, c: usize, le: usize) -> [f64; 2] {
        let n = self.edge_normal(self.cell_edges[c][le]);
        let s = self.cell_edge_signs[c][le] as f64;
        [s * n[0], s * n[1]]
    }

    pub fn boundary_edges(&self, tag: BoundaryTag) -> impl Iterator<Item = usize> + '_ {
        self.boundary_tags
            .iter()
            .enumerate()
            .filter(move |(_, t)| **t == Some(tag))
            .map(|(e, _)| e)
    }

    /// The unique cell adjacent to a boundary edge.
    pub fn boundary_cell(&self, e: usize) -> usize {
        self.edges[e].cells[0].expect("edge has no adjacent cell")
    }

    /// Local edge index of global edge `e` within cell `c`.
    pub fn local_edge(&self, c: usize, e: usize) -> usize {
        self.cell_edges[c]
            .iter()
            .position(|&ge| ge == e)
            .expect("edge does not belong to cell")
    }
}

impl TriMesh {
    /// Builds a mesh from raw vertices and counterclockwise triangles,
    /// deriving all edge connectivity. Boundary tags start empty.
    pub fn from_cells(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        domain: DomainLabel,
    ) -> Self {
        let (edges, cell_edges, cell_edge_signs) = build_edges(&vertices, &triangles);
        let boundary_tags = vec![None; edges.len()];
        Self { vertices, triangles, edges, cell_edges, cell_edge_signs, boundary_tags, domain }
    }
}

/// Builds a structured triangulation of `(x0,x1) x (y0,y1)` with `nx` by `ny`
/// grid quads, each split along the chosen diagonal.
pub fn build_rect_mesh(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    rule: DiagonalRule,
    domain: DomainLabel,
) -> Result<TriMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidSubdivision { nx, ny });
    }
    if !(x1 > x0 && y1 > y0) {
        return Err(MeshError::InvalidExtents);
    }

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // exact endpoints so interface coordinates of matching meshes agree bitwise
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let lower_left = match rule {
                DiagonalRule::LowerLeft => true,
                DiagonalRule::UpperLeft => false,
                DiagonalRule::Alternating => (i + j) % 2 == 0,
            };
            if lower_left {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    let (edges, cell_edges, cell_edge_signs) = build_edges(&vertices, &triangles);
    let boundary_tags = vec![None; edges.len()];
    Ok(TriMesh {
        vertices,
        triangles,
        edges,
        cell_edges,
        cell_edge_signs,
        boundary_tags,
        domain,
    })
}

fn build_edges(
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> (Vec<Edge>, Vec<[usize; 3]>, Vec<[i8; 3]>) {
    use std::collections::HashMap;
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut cell_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut cell_edge_signs = vec![[0i8; 3]; triangles.len()];

    for (c, tri) in triangles.iter().enumerate() {
        for le in 0..3 {
            // local edge `le` is opposite local vertex `le`
            let a = tri[(le + 1) % 3];
            let b = tri[(le + 2) % 3];
            let key = (a.min(b), a.max(b));
            let e = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge { v: [key.0, key.1], cells: [None, None] });
                edges.len() - 1
            });
            let slot = if edges[e].cells[0].is_none() { 0 } else { 1 };
            edges[e].cells[slot] = Some(c);
            cell_edges[c][le] = e;

            // outward direction for a CCW triangle: rotate the edge vector
            // a->b clockwise, then compare with the global edge normal
            let pa = vertices[a];
            let pb = vertices[b];
            let out = [pb[1] - pa[1], -(pb[0] - pa[0])];
            let pk0 = vertices[key.0];
            let pk1 = vertices[key.1];
            let glob = [pk1[1] - pk0[1], -(pk1[0] - pk0[0])];
            let dot = out[0] * glob[0] + out[1] * glob[1];
            cell_edge_signs[c][le] = if dot > 0.0 { 1 } else { -1 };
        }
    }
    (edges, cell_edges, cell_edge_signs)
}

/// A tagging rule: a geometric predicate on the edge midpoint plus the tag to
/// assign. The first matching rule wins.
pub type TagRule<'a> = (&'a dyn Fn([f64; 2]) -> bool, BoundaryTag);

/// Assigns a tag to every boundary edge. Errs if any boundary edge matches no
/// rule; re-tagging with the same rules is idempotent.
pub fn tag_boundaries(mut mesh: TriMesh, rules: &[TagRule<'_>]) -> Result<TriMesh, MeshError> {
    let mut untagged = 0usize;
    let mut first = [f64::NAN; 2];
    for e in 0..mesh.n_edges() {
        if !mesh.edges[e].is_boundary() {
            mesh.boundary_tags[e] = None;
            continue;
        }
        let mid = mesh.edge_midpoint(e);
        match rules.iter().find(|(pred, _)| pred(mid)) {
            Some((_, tag)) => mesh.boundary_tags[e] = Some(*tag),
            None => {
                if untagged == 0 {
                    first = mid;
                }
                untagged += 1;
            }
        }
    }
    if untagged > 0 {
        return Err(MeshError::UntaggedBoundary { count: untagged, x: first[0], y: first[1] });
    }
    Ok(mesh)
}

/// One interface segment shared by a fluid edge and a poroelastic edge.
#[derive(Debug, Clone)]
pub struct InterfaceSegment {
    pub fluid_edge: usize,
    pub poro_edge: usize,
    pub fluid_cell: usize,
    pub poro_cell: usize,
    /// Endpoints in ascending lexicographic order.
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub normal_f: [f64; 2],
    pub normal_p: [f64; 2],
    /// Unit tangent on the fluid side; the poro-side tangent is its negative,
    /// so that (n, tau) is right-handed on both sides.
    pub tangent_f: [f64; 2],
}

impl InterfaceSegment {
    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }

    pub fn tangent_p(&self) -> [f64; 2] {
        [-self.tangent_f[0], -self.tangent_f[1]]
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        [self.a[0] + s * (self.b[0] - self.a[0]), self.a[1] + s * (self.b[1] - self.a[1])]
    }
}

/// Matched decomposition of the interface, ordered ascending along the
/// interface coordinate.
#[derive(Debug, Clone)]
pub struct InterfaceMesh {
    pub segments: Vec<InterfaceSegment>,
}

impl InterfaceMesh {
    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }
}

const MATCH_TOL: f64 = 1e-12;

/// Pairs the `Interface`-tagged edges of the two meshes. The meshes must
/// match: same segment count, endpoints within 1e-12.
pub fn extract_interface(fluid: &TriMesh, poro: &TriMesh) -> Result<InterfaceMesh, MeshError> {
    let collect = |mesh: &TriMesh, side: &'static str| -> Result<Vec<usize>, MeshError> {
        let mut edges: Vec<usize> = mesh.boundary_edges(BoundaryTag::Interface).collect();
        if edges.is_empty() {
            return Err(MeshError::MissingInterfaceTags { side });
        }
        edges.sort_by(|&a, &b| {
            let ma = mesh.edge_midpoint(a);
            let mb = mesh.edge_midpoint(b);
            ma.partial_cmp(&mb).unwrap()
        });
        Ok(edges)
    };
    let f_edges = collect(fluid, "fluid")?;
    let p_edges = collect(poro, "poroelastic")?;
    if f_edges.len() != p_edges.len() {
        return Err(MeshError::InterfaceCountMismatch {
            fluid: f_edges.len(),
            poro: p_edges.len(),
        });
    }

    let mut segments = Vec::with_capacity(f_edges.len());
    for (idx, (&fe, &pe)) in f_edges.iter().zip(&p_edges).enumerate() {
        let mut fc = fluid.edge_coords(fe);
        let mut pc = poro.edge_coords(pe);
        if fc[0] > fc[1] {
            fc.swap(0, 1);
        }
        if pc[0] > pc[1] {
            pc.swap(0, 1);
        }
        let gap = (0..2)
            .map(|k| {
                ((fc[k][0] - pc[k][0]).powi(2) + (fc[k][1] - pc[k][1]).powi(2)).sqrt()
            })
            .fold(0.0f64, f64::max);
        if gap > MATCH_TOL {
            return Err(MeshError::InterfaceEndpointMismatch { index: idx, gap });
        }

        let fluid_cell = fluid.boundary_cell(fe);
        let poro_cell = poro.boundary_cell(pe);
        let normal_f = fluid.outward_normal(fluid_cell, fluid.local_edge(fluid_cell, fe));
        let normal_p = poro.outward_normal(poro_cell, poro.local_edge(poro_cell, pe));
        if (normal_f[0] * normal_p[0] + normal_f[1] * normal_p[1] + 1.0).abs() > 1e-10 {
            return Err(MeshError::InterfaceNormalMismatch { index: idx });
        }
        let tangent_f = [-normal_f[1], normal_f[0]];
        segments.push(InterfaceSegment {
            fluid_edge: fe,
            poro_edge: pe,
            fluid_cell,
            poro_cell,
            a: fc[0],
            b: fc[1],
            normal_f,
            normal_p,
            tangent_f,
        });
    }
    Ok(InterfaceMesh { segments })
}
