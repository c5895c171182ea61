//! Small dense and coordinate-format helpers used by element construction,
//! interface operators, and tests. The large subdomain systems go through
//! [`crate::sparse`] instead.

/// Column-major dense matrix with LU solve, sized for interface-scale
/// problems (a few hundred unknowns at most).
#[derive(Debug, Clone)]
pub struct DenseMat {
    pub n_rows: usize,
    pub n_cols: usize,
    data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n_rows + i] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n_rows + i] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for j in 0..self.n_cols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = &self.data[j * self.n_rows..(j + 1) * self.n_rows];
            for (yi, &aij) in y.iter_mut().zip(col) {
                *yi += aij * xj;
            }
        }
        y
    }

    /// LU factorization with partial pivoting. Returns `None` for singular
    /// (to working precision) matrices.
    pub fn lu(&self) -> Option<DenseLu> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        let mut a = self.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut max = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[k * n + i].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max < 1e-300 {
                return None;
            }
            if p != k {
                piv.swap(k, p);
                for j in 0..n {
                    a.swap(j * n + k, j * n + p);
                }
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let l = a[k * n + i] / pivot;
                a[k * n + i] = l;
                if l != 0.0 {
                    for j in (k + 1)..n {
                        a[j * n + i] -= l * a[j * n + k];
                    }
                }
            }
        }
        Some(DenseLu { n, a, piv })
    }
}

#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for k in 0..n {
            for i in (k + 1)..n {
                x[i] -= self.a[k * n + i] * x[k];
            }
        }
        for k in (0..n).rev() {
            x[k] /= self.a[k * n + k];
            for i in 0..k {
                x[i] -= self.a[k * n + i] * x[k];
            }
        }
        x
    }
}

/// Sparse matrix in unreduced coordinate form with row-major products, used
/// for the small trace-coupling operators between subdomain spaces and the
/// interface space.
#[derive(Debug, Clone, Default)]
pub struct CooMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl CooMat {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// y += scale * A^T x
    pub fn add_mul_transpose_vec(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        for &(i, j, v) in &self.entries {
            y[j] += scale * v * x[i];
        }
    }

    /// y += scale * A x
    pub fn add_mul_vec(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        for &(i, j, v) in &self.entries {
            y[i] += scale * v * x[j];
        }
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut d = DenseMat::zeros(self.n_rows, self.n_cols);
        for &(i, j, v) in &self.entries {
            d.add(i, j, v);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_lu_solves_small_system() {
        let mut a = DenseMat::zeros(2, 2);
        a.set(0, 0, 2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 2.0);
        let lu = a.lu().unwrap();
        let x = lu.solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dense_lu_detects_singular() {
        let mut a = DenseMat::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(a.lu().is_none());
    }

    #[test]
    fn coo_products() {
        let mut m = CooMat::new(2, 3);
        m.push(0, 0, 1.0);
        m.push(0, 2, 2.0);
        m.push(1, 1, -1.0);
        let y = m.mul_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![7.0, -2.0]);
        let mut yt = vec![0.0; 3];
        m.add_mul_transpose_vec(&[1.0, 1.0], 1.0, &mut yt);
        assert_eq!(yt, vec![1.0, -1.0, 2.0]);
    }
}
