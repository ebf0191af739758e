//! Small sparse helpers over faer: a compressed-row matrix for repeated
//! products, and direct solvers with a residual check.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Real sparse matrix in compressed-row form.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` entries, summing duplicates in a fixed order.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut sorted = entries.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }
}

fn relative_residual<T, F>(n: usize, entries: &[(usize, usize, T)], x: &[T], b: &[T], norm: F) -> f64
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Sub<Output = T> + std::ops::AddAssign + Default,
    F: Fn(T) -> f64,
{
    let mut ax = vec![T::default(); n];
    for &(r, c, v) in entries {
        ax[r] += v * x[c];
    }
    let num: f64 = ax.iter().zip(b).map(|(&a, &bb)| norm(a - bb)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|&bb| norm(bb)).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Tolerance on the relative residual of a direct solve before it counts as failed.
pub const SOLVE_TOLERANCE: f64 = 1e-8;

/// Solves a real sparse system. Tries Cholesky when `symmetric` is set and
/// falls back to LU with partial pivoting.
pub fn solve_real(n: usize, entries: &[(usize, usize, f64)], b: &[f64], symmetric: bool) -> Result<Vec<f64>> {
    let trips: Vec<_> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips).map_err(|e| Error::LinearSolve {
        residual: f64::NAN,
        detail: format!("{e:?}"),
    })?;
    let rhs = Col::<f64>::from_fn(n, |i| b[i]);
    let mut x: Option<Vec<f64>> = None;
    if symmetric {
        if let Ok(llt) = a.sp_cholesky(Side::Lower) {
            let sol = llt.solve(&rhs);
            x = Some((0..n).map(|i| sol[i]).collect());
        }
    }
    let ok = |x: &Vec<f64>| relative_residual(n, entries, x, b, |v: f64| v * v) <= SOLVE_TOLERANCE;
    let x = match x {
        Some(x) if ok(&x) => x,
        _ => {
            let lu = a.sp_lu().map_err(|e| Error::LinearSolve {
                residual: f64::INFINITY,
                detail: format!("lu: {e:?}"),
            })?;
            let sol = lu.solve(&rhs);
            (0..n).map(|i| sol[i]).collect()
        }
    };
    let res = relative_residual(n, entries, &x, b, |v: f64| v * v);
    if !res.is_finite() || res > SOLVE_TOLERANCE {
        return Err(Error::LinearSolve {
            residual: res,
            detail: "direct solve residual too large".into(),
        });
    }
    Ok(x)
}

/// Complex sparse solve: Hermitian Cholesky first, LU when that fails or is inaccurate.
pub fn solve_complex(n: usize, entries: &[(usize, usize, C64)], b: &[C64]) -> Result<Vec<C64>> {
    let trips: Vec<_> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trips).map_err(|e| Error::LinearSolve {
        residual: f64::NAN,
        detail: format!("{e:?}"),
    })?;
    let rhs = Col::<C64>::from_fn(n, |i| b[i]);
    let chol: Option<Vec<C64>> = a.sp_cholesky(Side::Lower).ok().map(|llt| {
        let sol = llt.solve(&rhs);
        (0..n).map(|i| sol[i]).collect()
    });
    let ok = |x: &Vec<C64>| relative_residual(n, entries, x, b, |v: C64| v.norm_sqr()) <= SOLVE_TOLERANCE;
    let x: Vec<C64> = match chol {
        Some(x) if ok(&x) => x,
        _ => {
            let lu = a.sp_lu().map_err(|e| Error::LinearSolve {
                residual: f64::INFINITY,
                detail: format!("lu: {e:?}"),
            })?;
            let sol = lu.solve(&rhs);
            (0..n).map(|i| sol[i]).collect()
        }
    };
    let res = relative_residual(n, entries, &x, b, |v: C64| v.norm_sqr());
    if !res.is_finite() || res > SOLVE_TOLERANCE {
        return Err(Error::LinearSolve {
            residual: res,
            detail: "direct solve residual too large".into(),
        });
    }
    Ok(x)
}

/// A sparse LU factorisation kept for repeated solves.
pub struct ComplexFactor {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
}

impl ComplexFactor {
    pub fn new(n: usize, entries: &[(usize, usize, C64)]) -> Result<Self> {
        let trips: Vec<_> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trips).map_err(|e| Error::LinearSolve {
            residual: f64::NAN,
            detail: format!("{e:?}"),
        })?;
        let lu = a.sp_lu().map_err(|e| Error::LinearSolve {
            residual: f64::INFINITY,
            detail: format!("lu: {e:?}"),
        })?;
        Ok(ComplexFactor { n, lu })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let rhs = Col::<C64>::from_fn(self.n, |i| b[i]);
        let sol = self.lu.solve(&rhs);
        (0..self.n).map(|i| sol[i]).collect()
    }
}
