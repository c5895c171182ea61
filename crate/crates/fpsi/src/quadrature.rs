//! Quadrature rules: Gauss-Legendre on intervals and collapsed product rules
//! on the reference triangle {(x,y) : x,y >= 0, x + y <= 1}.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("unsupported quadrature degree {0}, expected 1..=8")]
    UnsupportedDegree(usize),
}

/// Quadrature rule on the reference triangle. Weights sum to the reference
/// area 1/2 and the rule integrates all polynomials of total degree up to
/// `exactness_degree` exactly.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre rule with `n` points on [0,1], exact for degree 2n-1.
/// Nodes are found by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess on [-1,1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map to [0,1]
        points[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (points, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Product Gauss rule collapsed onto the triangle (x = u, y = v(1-u), with
/// Jacobian 1-u). Exactness for total degree `degree` follows from the 1D
/// exactness in each direction.
pub fn quadrature(degree: usize) -> Result<QuadratureRule, QuadratureError> {
    if degree == 0 || degree > 8 {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    // x^a y^b with a+b <= d maps to a polynomial of degree <= d+1 in u and <= d in v
    let nu = (degree + 2).div_ceil(2);
    let nv = (degree + 1).div_ceil(2);
    let (pu, wu) = gauss_legendre_01(nu);
    let (pv, wv) = gauss_legendre_01(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (i, &u) in pu.iter().enumerate() {
        for (j, &v) in pv.iter().enumerate() {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu[i] * wv[j] * (1.0 - u));
        }
    }
    Ok(QuadratureRule { points, weights, exactness_degree: degree })
}

/// 1D rule on [0,1] for edge/interface integrals, exact for degree `degree`.
pub fn edge_quadrature(degree: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre_01(degree / 2 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!
    fn exact_monomial(a: u32, b: u32) -> f64 {
        let fact = |k: u32| (1..=k as u64).product::<u64>() as f64;
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn weights_sum_to_reference_area() {
        for d in 1..=8 {
            let q = quadrature(d).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s - 0.5).abs() < 1e-14, "degree {d}: weight sum {s}");
        }
    }

    #[test]
    fn exactness_over_full_monomial_basis() {
        for d in 1..=8usize {
            let q = quadrature(d).unwrap();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let num: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = exact_monomial(a, b);
                    assert!(
                        (num - exact).abs() < 1e-14,
                        "degree {d} monomial x^{a} y^{b}: {num} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn named_values() {
        let q1 = quadrature(1).unwrap();
        let one: f64 = q1.weights.iter().sum();
        assert!((one - 0.5).abs() < 1e-15);

        let qx: f64 = q1.points.iter().zip(&q1.weights).map(|(p, w)| w * p[0]).sum();
        assert!((qx - 1.0 / 6.0).abs() < 1e-15);

        let q4 = quadrature(4).unwrap();
        let v: f64 = q4
            .points
            .iter()
            .zip(&q4.weights)
            .map(|(p, w)| w * p[0] * p[0] * p[1] * p[1])
            .sum();
        assert!((v - 1.0 / 180.0).abs() < 1e-16, "x^2 y^2: {v}");
    }

    #[test]
    fn unsupported_degrees_rejected() {
        assert!(quadrature(0).is_err());
        assert!(quadrature(9).is_err());
    }

    #[test]
    fn edge_rule_integrates_quartics() {
        let (p, w) = edge_quadrature(4);
        let v: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((v - 0.2).abs() < 1e-15);
    }
}
