use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The four sites of a unit cell, as tensor states of (σ, τ):
/// A=(σ+,τ+), B=(σ+,τ−), C=(σ−,τ+), D=(σ−,τ−).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
    C,
    D,
}

impl Sublattice {
    pub const ALL: [Sublattice; 4] = [Sublattice::A, Sublattice::B, Sublattice::C, Sublattice::D];

    /// Position in the 4-component basis (`kron(σ, τ)` ordering).
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn from_index(i: usize) -> Sublattice {
        Self::ALL[i & 3]
    }

    pub const fn sigma(self) -> i8 {
        if self.index() < 2 {
            1
        } else {
            -1
        }
    }

    pub const fn tau(self) -> i8 {
        if self.index() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub const fn label(self) -> &'static str {
        ["A", "B", "C", "D"][self.index()]
    }
}

/// Hinge columns of an `Nx × Ny` cross-section, named by the corner they sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    /// (0, 0)
    X0Y0,
    /// (Nx, 0)
    XnY0,
    /// (0, Ny)
    X0Yn,
    /// (Nx, Ny)
    XnYn,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::X0Y0, Corner::XnY0, Corner::X0Yn, Corner::XnYn];

    pub const fn index(self) -> usize {
        self as usize
    }

    /// Sublattice carrying the hinge mode at this corner.
    pub const fn host(self) -> Sublattice {
        Sublattice::from_index(self.index())
    }

    /// Unit-cell coordinates of the corner site in an `nx × ny` cross-section.
    pub const fn site(self, nx: usize, ny: usize) -> (usize, usize) {
        match self {
            Corner::X0Y0 => (0, 0),
            Corner::XnY0 => (nx - 1, 0),
            Corner::X0Yn => (0, ny - 1),
            Corner::XnYn => (nx - 1, ny - 1),
        }
    }

    pub const fn at_high_x(self) -> bool {
        matches!(self, Corner::XnY0 | Corner::XnYn)
    }

    pub const fn at_high_y(self) -> bool {
        matches!(self, Corner::X0Yn | Corner::XnYn)
    }

    pub const fn label(self) -> &'static str {
        ["x0y0", "xNy0", "x0yN", "xNyN"][self.index()]
    }
}

/// Axis-aligned surfaces of an open cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    X0,
    Xn,
    Y0,
    Yn,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::X0, Face::Xn, Face::Y0, Face::Yn];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn label(self) -> &'static str {
        ["x0", "xN", "y0", "yN"][self.index()]
    }
}

/// Sublattice-resolved tilt amplitudes `u_s` of the `u_s sin k_z |s⟩⟨s|` term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tilt {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Tilt {
    pub const fn uniform(u: f64) -> Self {
        Tilt { a: u, b: u, c: u, d: u }
    }

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Tilt { a, b, c, d }
    }

    pub const fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub const fn get(&self, s: Sublattice) -> f64 {
        self.as_array()[s.index()]
    }

    pub fn is_uniform(&self) -> bool {
        let u = self.as_array();
        u.iter().all(|&x| x == u[0])
    }
}

/// Coupling constants of the 3D model, in units of `|λ|`.
///
/// `γ₁(k_z) = γ + J cos k_z` and `γ₂(k_z) = γ' + J' cos k_z` enter as the
/// intra-cell couplings along y and x respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub gamma: f64,
    pub gamma_p: f64,
    pub lambda: f64,
    pub lambda_p: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_p")]
    pub j_p: f64,
    pub tilt: Tilt,
}

impl Default for ModelParams {
    /// γ=γ'=0.5, λ=λ'=−1, J=1, J'=0, no tilt.
    fn default() -> Self {
        ModelParams { gamma: 0.5, gamma_p: 0.5, lambda: -1.0, lambda_p: -1.0, j: 1.0, j_p: 0.0, tilt: Tilt::default() }
    }
}

impl ModelParams {
    /// Parameters of the 2D model: no `k_z` dependence and no tilt.
    pub fn two_d(gamma: f64, gamma_p: f64, lambda: f64, lambda_p: f64) -> Self {
        ModelParams { gamma, gamma_p, lambda, lambda_p, j: 0.0, j_p: 0.0, tilt: Tilt::default() }
    }

    pub fn with_j_p(mut self, j_p: f64) -> Self {
        self.j_p = j_p;
        self
    }

    pub fn with_tilt(mut self, tilt: Tilt) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn untilted(self) -> Self {
        self.with_tilt(Tilt::default())
    }

    pub fn gamma1(&self, kz: f64) -> f64 {
        self.gamma + self.j * kz.cos()
    }

    pub fn gamma2(&self, kz: f64) -> f64 {
        self.gamma_p + self.j_p * kz.cos()
    }

    /// Largest absolute coupling, including tilts.
    pub fn max_abs(&self) -> f64 {
        [self.gamma, self.gamma_p, self.lambda, self.lambda_p, self.j, self.j_p]
            .into_iter()
            .chain(self.tilt.as_array())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("gamma_p", self.gamma_p),
            ("lambda", self.lambda),
            ("lambda_p", self.lambda_p),
            ("J", self.j),
            ("J_p", self.j_p),
            ("tilt.a", self.tilt.a),
            ("tilt.b", self.tilt.b),
            ("tilt.c", self.tilt.c),
            ("tilt.d", self.tilt.d),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Crystal momentum `(k_x, k_y, k_z)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Momentum {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl Momentum {
    pub const fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Momentum { kx, ky, kz }
    }

    pub fn neg(self) -> Self {
        Momentum::new(-self.kx, -self.ky, -self.kz)
    }
}
