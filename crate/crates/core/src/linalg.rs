//! Thin wrappers over the dense and sparse solvers used by the physics modules.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::{Mat, Side};

use crate::lattice::SparseHermitian;
use crate::{Error, Result, C64};

/// Eigenvectors in the narrowest scalar type that represents the operator.
#[derive(Debug, Clone)]
pub enum EigenVectors {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

impl EigenVectors {
    pub fn nrows(&self) -> usize {
        match self {
            EigenVectors::Real(m) => m.nrows(),
            EigenVectors::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            EigenVectors::Real(m) => m.ncols(),
            EigenVectors::Complex(m) => m.ncols(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match self {
            EigenVectors::Real(m) => C64::new(m[(row, col)], 0.0),
            EigenVectors::Complex(m) => m[(row, col)],
        }
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.nrows()).map(|r| self.get(r, col)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Option<EigenVectors>,
}

/// Full dense diagonalization of a Hermitian operator. Real operators use the
/// real symmetric solver. `kz` only labels diagnostics.
pub fn eigh(h: &SparseHermitian, want_vectors: bool, kz: f64) -> Result<Eigen> {
    let fail = |e: faer::linalg::evd::EvdError| Error::Eigensolver { kz, reason: format!("{e:?}") };
    if let Some(m) = h.to_dense_real() {
        if want_vectors {
            let e = m.self_adjoint_eigen(Side::Lower).map_err(fail)?;
            let values = e.S().column_vector().iter().copied().collect();
            Ok(Eigen { values, vectors: Some(EigenVectors::Real(e.U().to_owned())) })
        } else {
            let values = m.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?;
            Ok(Eigen { values, vectors: None })
        }
    } else {
        let m = h.to_dense();
        if want_vectors {
            let e = m.self_adjoint_eigen(Side::Lower).map_err(fail)?;
            let values = e.S().column_vector().iter().map(|v| v.re).collect();
            Ok(Eigen { values, vectors: Some(EigenVectors::Complex(e.U().to_owned())) })
        } else {
            let values = m.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?;
            Ok(Eigen { values, vectors: None })
        }
    }
}

/// Sparse LU factorization of `z·I − H`, reusable across right-hand sides.
pub struct ShiftedLu {
    lu: Lu<usize, C64>,
    dim: usize,
}

impl ShiftedLu {
    /// `symbolic` may be shared between operators with identical sparsity.
    pub fn new(h: &SparseHermitian, z: C64, symbolic: Option<&SymbolicLu<usize>>) -> Result<Self> {
        let a = h.shifted_csc(z)?;
        let symbolic = match symbolic {
            Some(s) => s.clone(),
            None => SymbolicLu::try_new(a.symbolic())
                .map_err(|e| Error::LinearSolve { reason: format!("symbolic LU: {e:?}") })?,
        };
        let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref())
            .map_err(|e| Error::LinearSolve { reason: format!("numeric LU: {e:?}") })?;
        Ok(ShiftedLu { lu, dim: h.dim() })
    }

    /// Symbolic analysis for the sparsity pattern of `z·I − H`.
    pub fn analyze(h: &SparseHermitian) -> Result<SymbolicLu<usize>> {
        let a = h.shifted_csc(C64::new(1.0, 1.0))?;
        SymbolicLu::try_new(a.symbolic()).map_err(|e| Error::LinearSolve { reason: format!("symbolic LU: {e:?}") })
    }

    /// Solves in place for every column of `rhs`.
    pub fn solve(&self, rhs: &mut Mat<C64>) -> Result<()> {
        if rhs.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "sparse solve".into(),
                expected: self.dim,
                found: rhs.nrows(),
            });
        }
        self.lu.solve_in_place(rhs.as_mut());
        if rhs
            .col_iter()
            .flat_map(|c| c.iter().copied().collect::<Vec<_>>())
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::LinearSolve { reason: "non-finite solution (singular shifted operator)".into() });
        }
        Ok(())
    }
}

/// Conjugate gradients on the normal equations of `(z·I − H) x = b`.
///
/// Converges for any nonsingular shift; stops once the true relative residual
/// `‖b − (z − H)x‖ / ‖b‖` is below `tol`.
pub fn cgls_shifted(h: &SparseHermitian, z: C64, b: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>> {
    let n = h.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { context: "iterative solve".into(), expected: n, found: b.len() });
    }
    let apply = |zz: C64, v: &[C64], out: &mut [C64]| {
        h.matvec(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = zz * vi - *o;
        }
    };
    let norm2 = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let bnorm = norm2(b).sqrt();
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut s = vec![C64::new(0.0, 0.0); n];
    apply(z.conj(), &r, &mut s);
    let mut p = s.clone();
    let mut q = vec![C64::new(0.0, 0.0); n];
    let mut gamma = norm2(&s);
    for it in 1..=max_iter {
        apply(z, &p, &mut q);
        let qq = norm2(&q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= q[i] * alpha;
        }
        if it % 50 == 0 {
            apply(z, &x, &mut q);
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
        }
        if norm2(&r).sqrt() <= tol * bnorm {
            apply(z, &x, &mut q);
            let true_res = b.iter().zip(&q).map(|(bi, qi)| (bi - qi).norm_sqr()).sum::<f64>().sqrt();
            if true_res <= tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
        }
        apply(z.conj(), &r, &mut s);
        let gamma_new = norm2(&s);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for i in 0..n {
            p[i] = s[i] + p[i] * beta;
        }
    }
    Err(Error::LinearSolve {
        reason: format!("iterative solver did not reach relative residual {tol:e} in {max_iter} iterations"),
    })
}
