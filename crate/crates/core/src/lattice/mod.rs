//! Model definition: parameters, Γ-matrix algebra, Bloch Hamiltonians,
//! symmetry residuals and sparse real-space operators.

mod bloch;
mod gamma;
mod operator;
mod params;
mod real_space;
mod symmetry;

pub use bloch::{bloch_2d, bloch_3d, eigh4, eigvals4, h_vector};
pub use gamma::{
    anticommutator, gamma_algebra, kron, pauli, projector_x0, projector_y0, GammaAlgebra, C4_FOURTH_POWER, M2, M4,
};
pub use operator::{LatticeOperator, SiteLayout, SparseHermitian};
pub use params::{Corner, Face, ModelParams, Momentum, Sublattice, Tilt};
pub use real_space::{
    assemble, hoppings, momentum_grid, real_space, real_space_block, supercell, Axis, AxisRep, BoundarySpec,
    BuildOptions, Hoppings, DEFAULT_MEMORY_CAP_BYTES,
};
pub use symmetry::{symmetry_residual, SymmetryOp};
