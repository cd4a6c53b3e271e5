//! Sparse direct solves through faer.

use ddfem_core::sparse::{Csr, LinearSolver, SolveError};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

/// Sparse LU with partial pivoting. The symbolic analysis is reused while
/// successive matrices share a sparsity pattern, as they do across Newton
/// iterations.
#[derive(Default)]
pub struct FaerLu {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl FaerLu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl LinearSolver for FaerLu {
    fn solve(&mut self, a: &Csr, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = a.n;
        if b.len() != n {
            return Err(SolveError::Dimension {
                matrix: n,
                rhs: b.len(),
            });
        }
        // row-major storage of A is column-major storage of Aᵀ
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.col_idx);
        let at = SparseColMatRef::new(sym, &a.vals);
        let reuse = matches!(&self.cached, Some((rp, ci, _)) if *rp == a.row_ptr && *ci == a.col_idx);
        if !reuse {
            let symbolic = SymbolicLu::try_new(sym).map_err(|e| SolveError::Backend(format!("{e:?}")))?;
            self.cached = Some((a.row_ptr.clone(), a.col_idx.clone(), symbolic));
        }
        let symbolic = self.cached.as_ref().unwrap().2.clone();
        let lu = Lu::try_new_with_symbolic(symbolic, at).map_err(|e| SolveError::Backend(format!("{e:?}")))?;
        let mut x = b.to_vec();
        lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(SolveError::Singular { pivot: i, n });
        }
        Ok(x)
    }
}

/// Column pointers, row indices, values and `max|a|`.
type Upper = (Vec<usize>, Vec<usize>, Vec<f64>, f64);

/// Relative residual accepted from the symmetric solve.
pub const LDLT_TOL: f64 = 1e-10;
const MAX_REFINE: usize = 30;

/// Symmetric indefinite solve: supernodal `LDLᵀ` on an AMD ordering with
/// small pivots replaced by `±1e-8·max|a|`, followed by iterative
/// refinement against the unperturbed matrix. Matrices that are not
/// symmetric, and solves that do not reach [`LDLT_TOL`], go to [`FaerLu`].
#[derive(Default)]
pub struct FaerLdlt {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicCholesky<usize>)>,
    fallback: FaerLu,
    fallbacks: usize,
}

impl FaerLdlt {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of solves handed to the LU fallback so far.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// Upper triangle of `a` in compressed columns, or `None` when `a` is
    /// not symmetric to `1e-12·max|a|`.
    fn upper(a: &Csr) -> Option<Upper> {
        let scale = a.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        let mut ptr = vec![0usize; a.n + 1];
        let mut idx = Vec::with_capacity(a.nnz() / 2 + a.n);
        let mut val = Vec::with_capacity(a.nnz() / 2 + a.n);
        // row r of the CSR lower triangle is column r of the upper triangle
        for r in 0..a.n {
            for i in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[i];
                if c > r {
                    break;
                }
                if (a.get(c, r) - a.vals[i]).abs() > tol {
                    return None;
                }
                idx.push(c);
                val.push(a.vals[i]);
            }
            ptr[r + 1] = idx.len();
        }
        Some((ptr, idx, val, scale))
    }

    fn try_solve(&mut self, a: &Csr, b: &[f64]) -> Result<Option<Vec<f64>>, SolveError> {
        let n = a.n;
        let Some((ptr, idx, val, scale)) = Self::upper(a) else {
            return Ok(None);
        };
        if scale == 0.0 {
            return Ok(None);
        }
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &ptr, None, &idx);
        let reuse = matches!(&self.cached, Some((rp, ci, _)) if *rp == a.row_ptr && *ci == a.col_idx);
        if !reuse {
            let params = CholeskySymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
                ..Default::default()
            };
            let symbolic = factorize_symbolic_cholesky(sym, Side::Upper, SymmetricOrdering::Amd, params)
                .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
            self.cached = Some((a.row_ptr.clone(), a.col_idx.clone(), symbolic));
        }
        let symbolic = &self.cached.as_ref().unwrap().2;
        let par = Par::Seq;
        let mut mem = MemBuffer::new(
            symbolic
                .factorize_numeric_ldlt_scratch::<f64>(par, Default::default())
                .or(symbolic.solve_in_place_scratch::<f64>(1, par)),
        );
        let stack = MemStack::new(&mut mem);
        let regularization = LdltRegularization {
            dynamic_regularization_signs: None,
            dynamic_regularization_delta: 1e-8 * scale,
            dynamic_regularization_epsilon: 1e-13 * scale,
        };
        let mut values = vec![0.0; symbolic.len_val()];
        let mat = SparseColMatRef::new(sym, &val);
        let Ok(ldlt) = symbolic.factorize_numeric_ldlt(
            &mut values,
            mat,
            Side::Upper,
            regularization,
            par,
            stack,
            Default::default(),
        ) else {
            return Ok(None);
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let bn = norm(b);
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut best: Option<(f64, Vec<f64>)> = None;
        // refine until the residual stops halving
        for _ in 0..MAX_REFINE {
            ldlt.solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(&mut r, n, 1), par, stack);
            x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
            r = a.matvec(&x).iter().zip(b).map(|(p, q)| q - p).collect();
            let rn = norm(&r);
            if !rn.is_finite() {
                break;
            }
            let prev = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            if rn < prev {
                best = Some((rn, x.clone()));
            }
            if rn > 0.5 * prev || rn <= 1e-15 * bn {
                break;
            }
        }
        Ok(best.filter(|(rn, _)| *rn <= LDLT_TOL * bn).map(|(_, x)| x))
    }
}

impl LinearSolver for FaerLdlt {
    fn solve(&mut self, a: &Csr, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        if b.len() != a.n {
            return Err(SolveError::Dimension {
                matrix: a.n,
                rhs: b.len(),
            });
        }
        if b.iter().all(|v| *v == 0.0) {
            return Ok(vec![0.0; a.n]);
        }
        match self.try_solve(a, b)? {
            Some(x) => Ok(x),
            None => {
                self.fallbacks += 1;
                self.fallback.solve(a, b)
            }
        }
    }
}
