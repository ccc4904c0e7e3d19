use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::{Error, Result, C64};

/// Square complex matrix in compressed-row form. Hermiticity is a property of
/// the builders, checked by [`SparseHermitian::hermiticity_error`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseHermitian {
    /// Builds from unsorted triplets; duplicates are summed, exact zeros dropped.
    pub fn from_triplets(dim: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2.re != 0.0 || e.2.im != 0.0);
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = merged.iter().map(|e| e.1).collect();
        let vals = merged.iter().map(|e| e.2).collect();
        SparseHermitian { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(C64::new(0.0, 0.0), |(_, v)| v)
    }

    /// `y = H x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// Largest `|H_ij − conj(H_ji)|`, relative to the largest `|H_ij|`.
    pub fn hermiticity_error(&self) -> f64 {
        let scale = self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = self.triplets().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max);
        worst / scale
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    /// Adds `d[i]` to diagonal element `i`, inserting missing diagonals.
    pub fn add_diagonal(&self, d: &[f64]) -> SparseHermitian {
        assert_eq!(d.len(), self.dim);
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(d.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i, i, C64::new(x, 0.0))));
        SparseHermitian::from_triplets(self.dim, t)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Real part as a dense matrix, or `None` if any entry has an imaginary part.
    pub fn to_dense_real(&self) -> Option<Mat<f64>> {
        if !self.is_real() {
            return None;
        }
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v.re;
        }
        Some(m)
    }

    /// `z·I − H` in compressed-column form (for sparse factorization).
    pub fn shifted_csc(&self, z: C64) -> Result<SparseColMat<usize, C64>> {
        let mut t: Vec<Triplet<usize, usize, C64>> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, -v)).collect();
        t.extend((0..self.dim).map(|i| Triplet::new(i, i, z)));
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &t)
            .map_err(|e| Error::LinearSolve { reason: format!("sparse assembly: {e:?}") })
    }
}

/// Shape of the site-resolved index space of a [`LatticeOperator`].
///
/// Axes represented in momentum space have extent 1. The flat index is
/// `((z·nx + x)·ny + y)·4 + s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteLayout {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl SiteLayout {
    pub fn dim(&self) -> usize {
        4 * self.nx * self.ny * self.nz
    }

    pub fn index(&self, x: usize, y: usize, z: usize, s: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && z < self.nz && s < 4);
        ((z * self.nx + x) * self.ny + y) * 4 + s
    }

    /// Inverse of [`SiteLayout::index`]: `(x, y, z, s)`.
    pub fn coords(&self, i: usize) -> (usize, usize, usize, usize) {
        let s = i % 4;
        let cell = i / 4;
        let y = cell % self.ny;
        let xz = cell / self.ny;
        (xz % self.nx, y, xz / self.nx, s)
    }
}

/// Hermitian operator on a site-resolved index space, optionally at fixed
/// momenta along the axes that are represented in momentum space.
#[derive(Debug, Clone)]
pub struct LatticeOperator {
    pub layout: SiteLayout,
    /// Momentum `(k_x, k_y, k_z)` for axes represented in momentum space.
    pub momentum: [Option<f64>; 3],
    pub matrix: SparseHermitian,
}

impl LatticeOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}
