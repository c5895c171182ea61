//! Sparse linear systems: triplet assembly, symmetric essential-boundary
//! elimination, and a cached direct factorization.
//!
//! The factorization is computed once per system and reused across time
//! steps; every scheme here has time-independent matrices, only right-hand
//! sides and essential values change. The direct solve is delegated to
//! faer's sparse LU.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use std::cell::RefCell;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{label}: matrix is singular or structurally deficient")]
    Singular { label: String },
    #[error("{label}: solver residual {residual:e} exceeds 1e-10 * (1 + |b|) = {bound:e}")]
    ResidualTooLarge { label: String, residual: f64, bound: f64 },
    #[error("{label}: conflicting essential values at dof {dof}: {a} vs {b}")]
    ConflictingEssential { label: String, dof: usize, a: f64, b: f64 },
    #[error("{label}: dof {dof} out of range ({n} unknowns)")]
    DofOutOfRange { label: String, dof: usize, n: usize },
    #[error("{label}: rhs length {got}, expected {expected}")]
    RhsLength { label: String, got: usize, expected: usize },
}

struct Factorization {
    matrix: SparseColMat<usize, f64>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    /// Entries (free row, constrained col, value) removed by the symmetric
    /// elimination; they produce the rhs correction for inhomogeneous values.
    coupling: Vec<(usize, usize, f64)>,
}

/// A square sparse system with registered essential (Dirichlet) constraints.
///
/// Constrained rows and columns are eliminated symmetrically: the reduced
/// matrix carries an identity row/column per constrained dof and the dropped
/// column entries are kept aside to correct the right-hand side, so
/// time-dependent boundary values never require refactorization.
pub struct SparseSystem {
    pub label: String,
    pub n: usize,
    triplets: Vec<(usize, usize, f64)>,
    /// Essential value per dof, `None` when unconstrained.
    essential: Vec<Option<f64>>,
    factor: RefCell<Option<Factorization>>,
}

impl SparseSystem {
    pub fn new(label: impl Into<String>, n: usize) -> Self {
        Self {
            label: label.into(),
            n,
            triplets: Vec::new(),
            essential: vec![None; n],
            factor: RefCell::new(None),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        if value != 0.0 {
            self.triplets.push((row, col, value));
        }
    }

    pub fn add_triplets(&mut self, entries: impl IntoIterator<Item = (usize, usize, f64)>) {
        for (r, c, v) in entries {
            self.add(r, c, v);
        }
    }

    /// Offset-shifted block insertion for composing block systems.
    pub fn add_block(
        &mut self,
        row_offset: usize,
        col_offset: usize,
        scale: f64,
        entries: &[(usize, usize, f64)],
    ) {
        for &(r, c, v) in entries {
            self.add(row_offset + r, col_offset + c, scale * v);
        }
    }

    /// Registers essential dofs with their values. Errs on conflicting
    /// duplicates; re-registering the same value is allowed.
    pub fn set_essential(&mut self, pairs: &[(usize, f64)]) -> Result<(), SolveError> {
        for &(dof, value) in pairs {
            if dof >= self.n {
                return Err(SolveError::DofOutOfRange {
                    label: self.label.clone(),
                    dof,
                    n: self.n,
                });
            }
            if let Some(old) = self.essential[dof] {
                if (old - value).abs() > 1e-9 * (1.0 + old.abs().max(value.abs())) {
                    return Err(SolveError::ConflictingEssential {
                        label: self.label.clone(),
                        dof,
                        a: old,
                        b: value,
                    });
                }
            }
            self.essential[dof] = Some(value);
        }
        Ok(())
    }

    /// Updates the values of already-constrained dofs (time-dependent data).
    /// The sparsity pattern and factorization are unaffected.
    pub fn update_essential_values(&mut self, pairs: &[(usize, f64)]) -> Result<(), SolveError> {
        for &(dof, value) in pairs {
            if dof >= self.n || self.essential[dof].is_none() {
                return Err(SolveError::DofOutOfRange {
                    label: self.label.clone(),
                    dof,
                    n: self.n,
                });
            }
            self.essential[dof] = Some(value);
        }
        Ok(())
    }

    pub fn constrained_dofs(&self) -> Vec<usize> {
        (0..self.n).filter(|&d| self.essential[d].is_some()).collect()
    }

    pub fn is_factorized(&self) -> bool {
        self.factor.borrow().is_some()
    }

    fn factorize(&self) -> Result<(), SolveError> {
        let mut slot = self.factor.borrow_mut();
        if slot.is_some() {
            return Ok(());
        }
        let mut reduced: Vec<(usize, usize, f64)> = Vec::with_capacity(self.triplets.len());
        let mut coupling: Vec<(usize, usize, f64)> = Vec::new();
        for &(r, c, v) in &self.triplets {
            match (self.essential[r].is_some(), self.essential[c].is_some()) {
                (false, false) => reduced.push((r, c, v)),
                (false, true) => coupling.push((r, c, v)),
                (true, _) => {} // row replaced by identity
            }
        }
        for d in 0..self.n {
            if self.essential[d].is_some() {
                reduced.push((d, d, 1.0));
            }
        }
        // accumulate duplicates deterministically before handing to the solver
        reduced.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(reduced.len());
        for (r, c, v) in reduced {
            match merged.last_mut() {
                Some(t) if t.row == r && t.col == c => t.val += v,
                _ => merged.push(Triplet::new(r, c, v)),
            }
        }
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &merged)
            .map_err(|_| SolveError::Singular { label: self.label.clone() })?;
        let lu = matrix
            .sp_lu()
            .map_err(|_| SolveError::Singular { label: self.label.clone() })?;
        coupling.sort_unstable_by_key(|&(r, c, _)| (r, c));
        *slot = Some(Factorization { matrix, lu, coupling });
        Ok(())
    }

    /// Solves with the cached factorization (computed on first use). The
    /// passed rhs is the unconstrained load vector; essential values are
    /// injected and their symmetric elimination correction applied here.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
        if rhs.len() != self.n {
            return Err(SolveError::RhsLength {
                label: self.label.clone(),
                got: rhs.len(),
                expected: self.n,
            });
        }
        self.factorize()?;
        let guard = self.factor.borrow();
        let fact = guard.as_ref().expect("factorized above");

        let mut b = rhs.to_vec();
        for &(r, c, v) in &fact.coupling {
            b[r] -= v * self.essential[c].expect("coupling col is constrained");
        }
        for d in 0..self.n {
            if let Some(g) = self.essential[d] {
                b[d] = g;
            }
        }

        let mut bm = faer::Mat::<f64>::zeros(self.n, 1);
        for (i, &v) in b.iter().enumerate() {
            bm[(i, 0)] = v;
        }
        let x = fact.lu.solve(&bm);

        // residual check against the reduced system
        let ax = fact.matrix.as_ref() * x.as_ref();
        let mut res2 = 0.0f64;
        let mut b2 = 0.0f64;
        for i in 0..self.n {
            res2 += (ax[(i, 0)] - b[i]).powi(2);
            b2 += b[i] * b[i];
        }
        let residual = res2.sqrt();
        let bound = 1e-10 * (1.0 + b2.sqrt());
        if !residual.is_finite() || residual > bound {
            return Err(SolveError::ResidualTooLarge {
                label: self.label.clone(),
                residual,
                bound,
            });
        }
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }
}
