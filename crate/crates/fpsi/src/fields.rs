//! Evaluation of discrete fields at quadrature points and the integral
//! quantities built from them (norms, energy terms, error measures).

use crate::dofmap::{BasisCache, DofMap};
use crate::parallel;

/// A discrete field: coefficients over a DOF map, evaluated through a basis
/// cache that was built on the same mesh and quadrature points.
#[derive(Clone, Copy)]
pub struct FieldRef<'a> {
    pub map: &'a DofMap,
    pub coeffs: &'a [f64],
}

impl<'a> FieldRef<'a> {
    pub fn new(map: &'a DofMap, coeffs: &'a [f64]) -> Self {
        debug_assert_eq!(map.n_dofs, coeffs.len());
        Self { map, coeffs }
    }

    #[inline]
    pub fn value(&self, cache: &BasisCache, cell: usize, q: usize) -> [f64; 2] {
        let basis = &cache.cells[cell];
        let dofs = self.map.cell_dofs(cell);
        let mut v = [0.0, 0.0];
        for (i, &d) in dofs.iter().enumerate() {
            let c = self.coeffs[d];
            v[0] += c * basis.value(q, i, 0);
            if basis.ncomp > 1 {
                v[1] += c * basis.value(q, i, 1);
            }
        }
        v
    }

    #[inline]
    pub fn gradient(&self, cache: &BasisCache, cell: usize, q: usize) -> [[f64; 2]; 2] {
        let basis = &cache.cells[cell];
        let dofs = self.map.cell_dofs(cell);
        let mut g = [[0.0; 2]; 2];
        for (i, &d) in dofs.iter().enumerate() {
            let c = self.coeffs[d];
            for comp in 0..basis.ncomp {
                g[comp][0] += c * basis.grad(q, i, comp, 0);
                g[comp][1] += c * basis.grad(q, i, comp, 1);
            }
        }
        g
    }

    #[inline]
    pub fn divergence(&self, cache: &BasisCache, cell: usize, q: usize) -> f64 {
        let basis = &cache.cells[cell];
        let dofs = self.map.cell_dofs(cell);
        let mut dv = 0.0;
        for (i, &d) in dofs.iter().enumerate() {
            dv += self.coeffs[d] * basis.div(q, i);
        }
        dv
    }
}

/// Integrates `f(cell, q, x)` over the mesh underlying `cache` with the
/// quadrature the cache was built on.
pub fn integrate(
    cache: &BasisCache,
    weights: &[f64],
    f: impl Fn(usize, usize, [f64; 2]) -> f64 + Sync,
) -> f64 {
    parallel::sum_indexed(cache.cells.len(), |cell| {
        let geo = &cache.geo[cell];
        let det = geo.det.abs();
        let mut acc = 0.0;
        for (q, &w) in weights.iter().enumerate() {
            let x = geo.push_forward(cache.points[q]);
            acc += w * det * f(cell, q, x);
        }
        acc
    })
}

/// Squared L2 norm of a (scalar or vector) field.
pub fn l2_norm_sq(field: FieldRef<'_>, cache: &BasisCache, weights: &[f64]) -> f64 {
    integrate(cache, weights, |cell, q, _x| {
        let v = field.value(cache, cell, q);
        v[0] * v[0] + v[1] * v[1]
    })
}

/// Squared L2 norm of the difference of two coefficient vectors on one map.
pub fn l2_diff_sq(
    map: &DofMap,
    a: &[f64],
    b: &[f64],
    cache: &BasisCache,
    weights: &[f64],
) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm_sq(FieldRef::new(map, &diff), cache, weights)
}

/// 2 mu |D(u)|^2 integrated over the domain: the squared a_f-norm.
pub fn sym_grad_norm_sq(field: FieldRef<'_>, cache: &BasisCache, weights: &[f64], two_mu: f64) -> f64 {
    integrate(cache, weights, |cell, q, _x| {
        let g = field.gradient(cache, cell, q);
        let dxx = g[0][0];
        let dyy = g[1][1];
        let dxy = 0.5 * (g[0][1] + g[1][0]);
        two_mu * (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy)
    })
}

/// Squared elastic energy norm: 2 mu |D|^2 + lambda (div)^2 + beta |u|^2.
pub fn elastic_norm_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    two_mu: f64,
    lambda: f64,
    beta: f64,
) -> f64 {
    integrate(cache, weights, |cell, q, _x| {
        let g = field.gradient(cache, cell, q);
        let dxx = g[0][0];
        let dyy = g[1][1];
        let dxy = 0.5 * (g[0][1] + g[1][0]);
        let div = dxx + dyy;
        let v = field.value(cache, cell, q);
        two_mu * (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy)
            + lambda * div * div
            + beta * (v[0] * v[0] + v[1] * v[1])
    })
}

/// Squared Darcy dissipation norm: mu_f (K^{-1} u) . u.
pub fn darcy_norm_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    w_mat: [[f64; 2]; 2],
) -> f64 {
    integrate(cache, weights, |cell, q, _x| {
        let v = field.value(cache, cell, q);
        v[0] * (w_mat[0][0] * v[0] + w_mat[0][1] * v[1])
            + v[1] * (w_mat[1][0] * v[0] + w_mat[1][1] * v[1])
    })
}

/// Squared full H1 error against an exact vector field with gradient.
pub fn h1_error_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    exact: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
    exact_grad: &(dyn Fn(f64, f64) -> [[f64; 2]; 2] + Sync),
) -> f64 {
    integrate(cache, weights, |cell, q, x| {
        let v = field.value(cache, cell, q);
        let g = field.gradient(cache, cell, q);
        let ve = exact(x[0], x[1]);
        let ge = exact_grad(x[0], x[1]);
        let mut acc = (v[0] - ve[0]).powi(2) + (v[1] - ve[1]).powi(2);
        for c in 0..2 {
            for d in 0..2 {
                acc += (g[c][d] - ge[c][d]).powi(2);
            }
        }
        acc
    })
}

/// Squared scalar H1 error (value plus gradient misfit).
pub fn h1_error_scalar_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    exact: &(dyn Fn(f64, f64) -> f64 + Sync),
    exact_grad: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
) -> f64 {
    integrate(cache, weights, |cell, q, x| {
        let v = field.value(cache, cell, q)[0];
        let g = field.gradient(cache, cell, q);
        let ge = exact_grad(x[0], x[1]);
        (v - exact(x[0], x[1])).powi(2) + (g[0][0] - ge[0]).powi(2) + (g[0][1] - ge[1]).powi(2)
    })
}

/// Squared L2 error of a scalar field.
pub fn l2_error_scalar_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    exact: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> f64 {
    integrate(cache, weights, |cell, q, x| {
        (field.value(cache, cell, q)[0] - exact(x[0], x[1])).powi(2)
    })
}

/// Squared L2 error of a vector field.
pub fn l2_error_vector_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    exact: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
) -> f64 {
    integrate(cache, weights, |cell, q, x| {
        let v = field.value(cache, cell, q);
        let e = exact(x[0], x[1]);
        (v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2)
    })
}

/// Squared H(div) error of an H(div) field: L2 misfit plus divergence misfit.
pub fn hdiv_error_sq(
    field: FieldRef<'_>,
    cache: &BasisCache,
    weights: &[f64],
    exact: &(dyn Fn(f64, f64) -> [f64; 2] + Sync),
    exact_div: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> f64 {
    integrate(cache, weights, |cell, q, x| {
        let v = field.value(cache, cell, q);
        let e = exact(x[0], x[1]);
        let dv = field.divergence(cache, cell, q) - exact_div(x[0], x[1]);
        (v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2) + dv * dv
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ElementFamily;
    use crate::mesh::{build_rect_mesh, DiagonalRule, DomainLabel};
    use crate::quadrature::quadrature;
    use std::sync::Arc;

    #[test]
    fn sym_grad_norm_of_identity_deformation() {
        // u = (x, y) has D(u) = I: 2 mu int |D|^2 = 2 * 2 * area = 4 on the unit square
        let mesh = Arc::new(
            build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4, DiagonalRule::LowerLeft, DomainLabel::Fluid)
                .unwrap(),
        );
        let map = DofMap::new(ElementFamily::VecP2, mesh);
        let quad = quadrature(6).unwrap();
        let cache = BasisCache::build(&map, &quad.points);
        let coeffs = map.interpolate_vector(&|x, y| [x, y]);
        let v = sym_grad_norm_sq(FieldRef::new(&map, &coeffs), &cache, &quad.weights, 2.0);
        assert!((v - 4.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn l2_norm_of_known_function() {
        let mesh = Arc::new(
            build_rect_mesh(0.0, 1.0, 0.0, 1.0, 8, 8, DiagonalRule::LowerLeft, DomainLabel::Fluid)
                .unwrap(),
        );
        let map = DofMap::new(ElementFamily::P2, mesh);
        let quad = quadrature(6).unwrap();
        let cache = BasisCache::build(&map, &quad.points);
        // int over unit square of (x y)^2 = 1/9
        let coeffs = map.interpolate_scalar(&|x, y| x * y);
        let v = l2_norm_sq(FieldRef::new(&map, &coeffs), &cache, &quad.weights);
        assert!((v - 1.0 / 9.0).abs() < 1e-14, "{v}");
    }
}
