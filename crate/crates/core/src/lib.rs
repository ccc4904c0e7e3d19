//! Three-dimensional higher-order topological lattice with tunable antichiral
//! hinge states.
//!
//! The crate is layered bottom-up:
//!
//! * [`lattice`]: Γ-matrix algebra, Bloch and real-space Hamiltonians, symmetry checks.
//! * [`spectra`]: mixed-boundary diagonalization, hinge/surface/bulk tagging, gap closings.
//! * [`boundary`]: closed-form hinge and surface solutions, hinge `k_z` intervals.
//! * [`topology`]: nested Wilson loops, Wannier-sector polarizations, quadrupole.
//! * [`transport`]: input–output scattering, hinge excitations, disorder ensembles.
//! * [`photonic`]: Jones-calculus round trip of the cavity realization and Floquet extraction.
//!
//! Data-parallel sweeps go through [`exec::Exec`]; the `parallel` feature (on by
//! default) backs it with rayon, otherwise everything runs sequentially.

pub mod boundary;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod linalg;
pub mod photonic;
mod roots;
pub mod spectra;
pub mod topology;
pub mod transport;

pub use error::{Error, ErrorClass, Result};
pub use exec::Exec;
pub use lattice::{Axis, BoundarySpec, Corner, ModelParams, Momentum, Sublattice, Tilt};

/// Complex scalar shared by every linear-algebra backend in the crate.
pub type C64 = num_complex::Complex64;
