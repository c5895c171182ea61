//! The two built-in experiments: a manufactured-solution convergence test
//! and a pulsatile blood-flow benchmark, plus shared export sampling.

pub mod example1;
pub mod example2;

use crate::dofmap::DofMap;
use crate::element::{eval_basis, CellGeometry, ElementFamily};

/// Vertex samples of a componentwise-quadratic vector field (its vertex
/// coefficients are the vertex values).
pub fn vertex_vector_samples(map: &DofMap, coeffs: &[f64]) -> Vec<[f64; 2]> {
    assert_eq!(map.family, ElementFamily::VecP2);
    (0..map.mesh.n_vertices()).map(|v| [coeffs[2 * v], coeffs[2 * v + 1]]).collect()
}

/// Vertex samples of a P1 scalar field.
pub fn vertex_scalar_samples(map: &DofMap, coeffs: &[f64]) -> Vec<f64> {
    assert_eq!(map.family, ElementFamily::P1);
    coeffs[..map.mesh.n_vertices()].to_vec()
}

/// Cell-centroid samples of an H(div) vector field.
pub fn centroid_vector_samples(map: &DofMap, coeffs: &[f64]) -> Vec<[f64; 2]> {
    let centroid = [[1.0 / 3.0, 1.0 / 3.0]];
    (0..map.mesh.n_cells())
        .map(|c| {
            let basis = eval_basis(map.family, &map.mesh, c, &centroid).expect("basis");
            let dofs = map.cell_dofs(c);
            let mut v = [0.0, 0.0];
            for (i, &d) in dofs.iter().enumerate() {
                v[0] += coeffs[d] * basis.value(0, i, 0);
                v[1] += coeffs[d] * basis.value(0, i, 1);
            }
            v
        })
        .collect()
}

/// Cell-centroid samples of a P0 or discontinuous P1 scalar field.
pub fn centroid_scalar_samples(map: &DofMap, coeffs: &[f64]) -> Vec<f64> {
    match map.family {
        ElementFamily::P0 => coeffs.to_vec(),
        ElementFamily::P1Disc => (0..map.mesh.n_cells())
            .map(|c| (coeffs[3 * c] + coeffs[3 * c + 1] + coeffs[3 * c + 2]) / 3.0)
            .collect(),
        _ => panic!("centroid samples require a cellwise scalar family"),
    }
}

/// Physical coordinates of cell centroids (for locating samples).
pub fn centroids(map: &DofMap) -> Vec<[f64; 2]> {
    (0..map.mesh.n_cells())
        .map(|c| {
            let geo = CellGeometry::new(c, map.mesh.cell_coords(c)).expect("valid cell");
            geo.push_forward([1.0 / 3.0, 1.0 / 3.0])
        })
        .collect()
}
