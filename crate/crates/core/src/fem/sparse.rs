//! Compressed sparse row storage and the direct solver.
//!
//! Factorization is delegated to faer's sparse LU with partial pivoting.
//! The symbolic analysis is kept so that matrices sharing one pattern (the
//! same space assembled at different stabilization parameters) only pay for
//! the numeric phase.

use faer::linalg::solvers::SolveCore;
use faer::mat::MatMut;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Conj;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix over a pattern. Column indices of every row must be
    /// sorted and unique.
    pub fn from_pattern(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        assert_eq!(row_ptr.len(), n + 1);
        assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        debug_assert!((0..n).all(|i| col_idx[row_ptr[i]..row_ptr[i + 1]]
            .windows(2)
            .all(|w| w[0] < w[1])));
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Builds a matrix from a row-major dense array, storing nonzeros only.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n);
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Storage position of entry `(i, j)`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `max |A - Aᵀ|` over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Relative residual required of a solve; one or two refinement steps are
/// taken before giving up.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Reusable LU solver for a fixed sparsity pattern.
pub struct SparseLu {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// CSC position -> CSR position
    gather: Vec<usize>,
    symbolic: SymbolicLu<usize>,
}

impl SparseLu {
    pub fn analyze(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.n;
        let nnz = matrix.nnz();
        let mut counts = vec![0usize; n + 1];
        for &j in &matrix.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0usize; nnz];
        let mut gather = vec![0usize; nnz];
        for i in 0..n {
            for k in matrix.row_ptr[i]..matrix.row_ptr[i + 1] {
                let j = matrix.col_idx[k];
                let dst = next[j];
                next[j] += 1;
                row_idx[dst] = i;
                gather[dst] = k;
            }
        }
        let symbolic = {
            let pattern = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
            SymbolicLu::try_new(pattern)
                .map_err(|e| Error::SolverFailure(format!("symbolic analysis: {e:?}")))?
        };
        Ok(SparseLu {
            n,
            col_ptr,
            row_idx,
            gather,
            symbolic,
        })
    }

    /// Factorizes `matrix` (which must share the analyzed pattern) and solves
    /// for `rhs`.
    pub fn solve(&self, matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        if matrix.n != self.n || matrix.nnz() != self.gather.len() || rhs.len() != self.n {
            return Err(Error::SolverFailure("pattern or size mismatch".into()));
        }
        if rhs.iter().any(|v| !v.is_finite()) || matrix.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("non-finite system entries".into()));
        }
        let values: Vec<f64> = self.gather.iter().map(|&k| matrix.values[k]).collect();
        let pattern =
            SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx);
        let mat = SparseColMatRef::new(pattern, &values);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat)
            .map_err(|e| Error::SolverFailure(format!("singular factorization: {e:?}")))?;

        let apply = |b: &mut Vec<f64>| {
            lu.solve_in_place_with_conj(
                Conj::No,
                MatMut::from_column_major_slice_mut(b.as_mut_slice(), self.n, 1),
            )
        };

        let mut x = rhs.to_vec();
        apply(&mut x);
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for _ in 0..3 {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverFailure("singular factorization: non-finite solution".into()));
            }
            let ax = matrix.mul_vec(&x);
            let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if res <= RESIDUAL_TOLERANCE * scale {
                return Ok(x);
            }
            apply(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        Err(Error::SolverFailure(
            "residual above tolerance after iterative refinement".into(),
        ))
    }
}

/// One-shot direct solve.
pub fn solve(system: &LinearSystem) -> Result<Vec<f64>> {
    SparseLu::analyze(&system.matrix)?.solve(&system.matrix, &system.rhs)
}
