use nalgebra::SymmetricEigen;

use super::gamma::{gamma_algebra, M4};
use super::params::{ModelParams, Momentum};
use crate::C64;

/// Coefficients `(h₁, h₂, h₃, h₄)` of `Σ h_j Γ_j`.
pub fn h_vector(p: &ModelParams, k: Momentum) -> [f64; 4] {
    [
        p.lambda_p * k.kx.sin(),
        p.gamma2(k.kz) + p.lambda_p * k.kx.cos(),
        p.lambda * k.ky.sin(),
        p.gamma1(k.kz) + p.lambda * k.ky.cos(),
    ]
}

fn from_h(h: [f64; 4], diag: [f64; 4]) -> M4 {
    let g = gamma_algebra();
    let mut m = M4::zeros();
    for (j, hj) in h.iter().enumerate() {
        m += g.gamma[j] * C64::new(*hj, 0.0);
    }
    for (s, d) in diag.iter().enumerate() {
        m[(s, s)] += C64::new(*d, 0.0);
    }
    m
}

/// Bloch Hamiltonian of the 2D model; ignores `J`, `J'` and the tilt.
pub fn bloch_2d(p: &ModelParams, kx: f64, ky: f64) -> M4 {
    let flat = ModelParams { j: 0.0, j_p: 0.0, ..p.untilted() };
    from_h(h_vector(&flat, Momentum::new(kx, ky, 0.0)), [0.0; 4])
}

/// Bloch Hamiltonian of the 3D model including the sublattice tilt.
pub fn bloch_3d(p: &ModelParams, k: Momentum) -> M4 {
    let s = k.kz.sin();
    let u = p.tilt.as_array().map(|u| u * s);
    from_h(h_vector(p, k), u)
}

/// Ascending eigenvalues of a Hermitian 4×4 matrix.
pub fn eigvals4(m: &M4) -> [f64; 4] {
    let mut v: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    [v[0], v[1], v[2], v[3]]
}

/// Ascending eigenpairs of a Hermitian 4×4 matrix; column `i` of the returned
/// matrix belongs to eigenvalue `i`.
pub fn eigh4(m: &M4) -> ([f64; 4], M4) {
    let e = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = order.map(|i| e.eigenvalues[i]);
    let vecs = M4::from_fn(|r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}
