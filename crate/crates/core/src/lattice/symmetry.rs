use serde::{Deserialize, Serialize};

use super::bloch::bloch_3d;
use super::gamma::{gamma_algebra, M4};
use super::params::{ModelParams, Momentum};

/// Symmetry relations that can be checked on the Bloch Hamiltonian.
///
/// | op | relation | holds when |
/// |----|----------|------------|
/// | `Mx` | `M_x H(k) M_x = H(−k_x, k_y, k_z)` | tilt respects `A↔B, C↔D` |
/// | `My` | `M_y H(k) M_y = H(k_x, −k_y, k_z)` | tilt respects `A↔C, B↔D` |
/// | `Mz` | `H(k) = H(k_x, k_y, −k_z)` | no tilt |
/// | `Trs` | `H(k)* = H(−k)` | no tilt |
/// | `Chiral` | `Ξ H(k) Ξ = −H(k)` | no tilt |
/// | `C4` | `C4 H(k_x,k_y,k_z) C4† = H(−k_y, k_x, k_z)` | γ=γ', λ=λ', J=J', uniform tilt |
/// | `ChiralTrs` | `Ξ H(k)* Ξ = −H(−k)` | uniform tilt |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryOp {
    Mx,
    My,
    Mz,
    Trs,
    Chiral,
    C4,
    ChiralTrs,
}

impl SymmetryOp {
    pub const ALL: [SymmetryOp; 7] = [
        SymmetryOp::Mx,
        SymmetryOp::My,
        SymmetryOp::Mz,
        SymmetryOp::Trs,
        SymmetryOp::Chiral,
        SymmetryOp::C4,
        SymmetryOp::ChiralTrs,
    ];

    fn residual_at(self, p: &ModelParams, k: Momentum) -> f64 {
        let g = gamma_algebra();
        let h = bloch_3d(p, k);
        let r: M4 = match self {
            SymmetryOp::Mx => g.mx * h * g.mx - bloch_3d(p, Momentum::new(-k.kx, k.ky, k.kz)),
            SymmetryOp::My => g.my * h * g.my - bloch_3d(p, Momentum::new(k.kx, -k.ky, k.kz)),
            SymmetryOp::Mz => g.mz * h * g.mz - bloch_3d(p, Momentum::new(k.kx, k.ky, -k.kz)),
            SymmetryOp::Trs => h.conjugate() - bloch_3d(p, k.neg()),
            SymmetryOp::Chiral => g.xi * h * g.xi + h,
            SymmetryOp::C4 => g.c4 * h * g.c4.adjoint() - bloch_3d(p, Momentum::new(-k.ky, k.kx, k.kz)),
            SymmetryOp::ChiralTrs => g.xi * h.conjugate() * g.xi + bloch_3d(p, k.neg()),
        };
        r.norm()
    }
}

/// Largest Frobenius-norm residual of `op`'s defining relation over `samples`.
///
/// The residual is returned whether or not the symmetry's preconditions hold;
/// callers compare it against a tolerance.
pub fn symmetry_residual(p: &ModelParams, op: SymmetryOp, samples: &[Momentum]) -> f64 {
    samples.iter().map(|&k| op.residual_at(p, k)).fold(0.0, f64::max)
}
