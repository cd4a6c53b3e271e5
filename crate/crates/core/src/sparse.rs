//! Triplet assembly, compressed storage and the linear-solver interface.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::DenseLu;

/// Coordinate-format matrix under assembly. Duplicates are summed on
/// compression.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triplets {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets {
            n,
            ..Default::default()
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Triplets {
            n,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn to_csr(&self) -> Csr {
        Csr::from_triplets(self)
    }
}

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(t: &Triplets) -> Self {
        let n = t.n;
        let mut order: Vec<usize> = (0..t.len()).collect();
        // stable: equal (row, col) entries are summed in insertion order
        order.sort_by_key(|&i| (t.rows[i], t.cols[i]));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for i in order {
            let key = (t.rows[i], t.cols[i]);
            if last == Some(key) {
                *vals.last_mut().unwrap() += t.vals[i];
            } else {
                row_ptr[key.0 + 1] += 1;
                col_idx.push(key.1);
                vals.push(t.vals[i]);
                last = Some(key);
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|i| self.vals[i] * x[self.col_idx[i]])
                    .sum()
            })
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(i) => self.vals[self.row_ptr[r] + i],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Triplets::with_capacity(self.n, self.nnz());
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push(self.col_idx[i], r, self.vals[i]);
            }
        }
        t.to_csr()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[r * self.n + self.col_idx[i]] = self.vals[i];
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("matrix is singular to working precision (pivot {pivot} of {n})")]
    Singular { pivot: usize, n: usize },
    #[error("dimension mismatch: matrix {matrix}, right-hand side {rhs}")]
    Dimension { matrix: usize, rhs: usize },
    #[error("linear solver backend failed: {0}")]
    Backend(alloc::string::String),
}

/// A direct solver for square sparse systems.
pub trait LinearSolver {
    fn solve(&mut self, a: &Csr, b: &[f64]) -> Result<Vec<f64>, SolveError>;
}

/// Dense partial-pivoting LU; only sensible for small systems.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSolver;

impl LinearSolver for DenseSolver {
    fn solve(&mut self, a: &Csr, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        if b.len() != a.n {
            return Err(SolveError::Dimension {
                matrix: a.n,
                rhs: b.len(),
            });
        }
        let lu = DenseLu::factor(a.n, &a.to_dense()).map_err(|pivot| SolveError::Singular { pivot, n: a.n })?;
        Ok(lu.solve(b))
    }
}
