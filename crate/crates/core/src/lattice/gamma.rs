use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix4};

use crate::C64;

pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix `σ_i`, `i ∈ 0..4` (σ₀ = identity).
pub fn pauli(i: usize) -> M2 {
    let (o, z, j) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match i {
        0 => M2::new(o, z, z, o),
        1 => M2::new(z, o, o, z),
        2 => M2::new(z, -j, j, z),
        3 => M2::new(o, z, z, -o),
        _ => panic!("pauli index {i} out of range"),
    }
}

/// `a ⊗ b`, with `a` acting on σ (outer) and `b` on τ (inner).
pub fn kron(a: &M2, b: &M2) -> M4 {
    M4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

pub fn anticommutator(a: &M4, b: &M4) -> M4 {
    a * b + b * a
}

/// `C4⁴` for the rotation operator in [`GammaAlgebra::c4`].
pub const C4_FOURTH_POWER: f64 = -1.0;

/// Γ matrices and the point-group / internal symmetry operators.
#[derive(Debug, Clone)]
pub struct GammaAlgebra {
    /// Γ₁=σ₀τ_y, Γ₂=σ₀τ_x, Γ₃=σ_yτ_z, Γ₄=σ_xτ_z (index 0 holds Γ₁).
    pub gamma: [M4; 4],
    pub mx: M4,
    pub my: M4,
    pub mz: M4,
    /// Chiral operator Ξ = σ_zτ_z.
    pub xi: M4,
    /// Fourfold rotation in the x-y plane: `C4 H(k_x,k_y,k_z) C4† = H(−k_y,k_x,k_z)`
    /// for γ=γ', λ=λ', J=J'. A signed sublattice permutation
    /// A→−B, B→D, D→−C, C→−A.
    pub c4: M4,
}

impl GammaAlgebra {
    fn build() -> Self {
        let s = |i| pauli(i);
        let gamma = [kron(&s(0), &s(2)), kron(&s(0), &s(1)), kron(&s(2), &s(3)), kron(&s(1), &s(3))];
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        #[rustfmt::skip]
        let c4 = M4::new(
            z, z, -o, z,
            -o, z, z, z,
            z, z, z, -o,
            z, o, z, z,
        );
        GammaAlgebra {
            gamma,
            mx: kron(&s(3), &s(1)),
            my: kron(&s(1), &s(0)),
            mz: M4::identity(),
            xi: kron(&s(3), &s(3)),
            c4,
        }
    }

    pub fn g(&self, i: usize) -> &M4 {
        &self.gamma[i - 1]
    }
}

/// The fixed Γ algebra (built once).
pub fn gamma_algebra() -> &'static GammaAlgebra {
    static ALG: OnceLock<GammaAlgebra> = OnceLock::new();
    ALG.get_or_init(GammaAlgebra::build)
}

/// `P_{x;0} = (I + iΓ₁Γ₂)/2`, projecting onto span{A, C}.
pub fn projector_x0() -> M4 {
    let g = gamma_algebra();
    (M4::identity() + g.g(1) * g.g(2) * c(0.0, 1.0)) * c(0.5, 0.0)
}

/// `P_{y;0} = (I + iΓ₃Γ₄)/2`, projecting onto span{A, B}.
pub fn projector_y0() -> M4 {
    let g = gamma_algebra();
    (M4::identity() + g.g(3) * g.g(4) * c(0.0, 1.0)) * c(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_gamma1_gamma2_is_tau_z() {
        let g = gamma_algebra();
        let m = g.g(1) * g.g(2) * c(0.0, 1.0);
        let expect = M4::from_diagonal(&nalgebra::Vector4::new(c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)));
        assert!((m - expect).norm() < 1e-15);
    }

    #[test]
    fn c4_fourth_power_constant() {
        let c4 = gamma_algebra().c4;
        let p = c4 * c4 * c4 * c4;
        assert!((p - M4::identity() * c(C4_FOURTH_POWER, 0.0)).norm() < 1e-15);
    }
}
