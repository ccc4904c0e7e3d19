use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gamma::{gamma_algebra, M4};
use super::operator::{LatticeOperator, SiteLayout, SparseHermitian};
use super::params::{ModelParams, Momentum, Sublattice};
use crate::{Error, Result, C64};

/// Boundary condition of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// `N` unit cells with open ends.
    Open(usize),
    /// Periodic, sampled on the momentum grid `{2πm/N}`.
    Periodic(usize),
}

impl Axis {
    pub fn n(self) -> usize {
        match self {
            Axis::Open(n) | Axis::Periodic(n) => n,
        }
    }

    pub fn is_periodic(self) -> bool {
        matches!(self, Axis::Periodic(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

impl BoundarySpec {
    /// Open `nx × ny` cross-section, `nz` momenta along the hinges.
    pub fn hinge_geometry(nx: usize, ny: usize, nz: usize) -> Self {
        BoundarySpec { x: Axis::Open(nx), y: Axis::Open(ny), z: Axis::Periodic(nz) }
    }

    pub fn all_periodic(n: usize) -> Self {
        BoundarySpec { x: Axis::Periodic(n), y: Axis::Periodic(n), z: Axis::Periodic(n) }
    }

    pub fn axes(&self) -> [Axis; 3] {
        [self.x, self.y, self.z]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("geometry.x", self.x), ("geometry.y", self.y), ("geometry.z", self.z)] {
            if a.n() < 2 {
                return Err(Error::invalid(name, format!("need at least 2 sites or momenta, got {}", a.n())));
            }
        }
        Ok(())
    }
}

/// Uniform momentum grid `{2πm/n : m = 0..n}`.
pub fn momentum_grid(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * m as f64 / n as f64).collect()
}

/// Representation of one axis inside an assembled operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisRep {
    /// `n` sites; `wrap` closes the chain into a ring.
    Sites { n: usize, wrap: bool },
    /// Fixed crystal momentum.
    Momentum(f64),
}

/// Real-space couplings: `H = Σ_r [M₀ |r⟩⟨r| + Σ_d (M_d |r+d⟩⟨r| + M_d† |r⟩⟨r+d|)]`,
/// so that `H(k) = M₀ + Σ_d (M_d e^{−ik_d} + M_d† e^{ik_d})` with `⟨r|k⟩ = e^{ik·r}`.
///
/// A `cos k` term maps to `M_d = Γ/2` and a `sin k` term to `M_d = iΓ/2`.
#[derive(Debug, Clone)]
pub struct Hoppings {
    pub onsite: M4,
    /// Forward hops along x, y, z.
    pub hop: [M4; 3],
}

pub fn hoppings(p: &ModelParams) -> Hoppings {
    let g = gamma_algebra();
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    let onsite = g.g(4) * r(p.gamma) + g.g(2) * r(p.gamma_p);
    let hx = g.g(2) * r(p.lambda_p / 2.0) + g.g(1) * i(p.lambda_p / 2.0);
    let hy = g.g(4) * r(p.lambda / 2.0) + g.g(3) * i(p.lambda / 2.0);
    let mut hz = g.g(4) * r(p.j / 2.0) + g.g(2) * r(p.j_p / 2.0);
    for s in Sublattice::ALL {
        hz[(s.index(), s.index())] += i(p.tilt.get(s) / 2.0);
    }
    Hoppings { onsite, hop: [hx, hy, hz] }
}

/// Memory guard for operator construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub memory_cap_bytes: u128,
    /// Charge the dense `dim² × 16` bytes against the cap (for consumers that
    /// diagonalize densely); otherwise charge the sparse footprint.
    pub dense_equivalent: bool,
}

pub const DEFAULT_MEMORY_CAP_BYTES: u128 = 4 << 30;

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { memory_cap_bytes: DEFAULT_MEMORY_CAP_BYTES, dense_equivalent: true }
    }
}

impl BuildOptions {
    pub fn sparse() -> Self {
        BuildOptions { dense_equivalent: false, ..Self::default() }
    }

    fn check(&self, layout: &SiteLayout) -> Result<()> {
        let dim = layout.dim() as u128;
        let (required, what) = if self.dense_equivalent {
            (dim * dim * 16, format!("dense {dim}×{dim} complex operator"))
        } else {
            // onsite block plus two directed hops per axis, 16 entries each.
            let nnz = dim * 4 * 7;
            (nnz * 24 + dim * 8, format!("sparse operator of dimension {dim}"))
        };
        if required > self.memory_cap_bytes {
            return Err(Error::SizeLimit { what, required, cap: self.memory_cap_bytes });
        }
        Ok(())
    }
}

fn push_block(t: &mut Vec<(usize, usize, C64)>, m: &M4, row0: usize, col0: usize) {
    for a in 0..4 {
        for b in 0..4 {
            let v = m[(a, b)];
            if v.re != 0.0 || v.im != 0.0 {
                t.push((row0 + a, col0 + b, v));
            }
        }
    }
}

/// Assembles the operator with an explicit representation per axis.
pub fn assemble(p: &ModelParams, reps: [AxisRep; 3], opts: &BuildOptions) -> Result<LatticeOperator> {
    p.validate()?;
    let ext = reps.map(|r| match r {
        AxisRep::Sites { n, .. } => n,
        AxisRep::Momentum(_) => 1,
    });
    if ext.contains(&0) {
        return Err(Error::invalid("geometry", "axis with zero sites"));
    }
    let layout = SiteLayout { nx: ext[0], ny: ext[1], nz: ext[2] };
    opts.check(&layout)?;

    let hop = hoppings(p);
    let mut onsite = hop.onsite;
    let mut momentum = [None; 3];
    for d in 0..3 {
        if let AxisRep::Momentum(k) = reps[d] {
            let e = C64::from_polar(1.0, -k);
            onsite += hop.hop[d] * e + hop.hop[d].adjoint() * e.conj();
            momentum[d] = Some(k);
        }
    }

    let mut t = Vec::with_capacity(layout.dim() * 16);
    let cell = |c: [usize; 3]| layout.index(c[0], c[1], c[2], 0);
    for z in 0..layout.nz {
        for x in 0..layout.nx {
            for y in 0..layout.ny {
                let here = [x, y, z];
                let i = cell(here);
                push_block(&mut t, &onsite, i, i);
                for d in 0..3 {
                    let AxisRep::Sites { n, wrap } = reps[d] else { continue };
                    let next = here[d] + 1;
                    let next = if next < n {
                        next
                    } else if wrap {
                        0
                    } else {
                        continue;
                    };
                    let mut there = here;
                    there[d] = next;
                    let j = cell(there);
                    push_block(&mut t, &hop.hop[d], j, i);
                    push_block(&mut t, &hop.hop[d].adjoint(), i, j);
                }
            }
        }
    }
    let matrix = SparseHermitian::from_triplets(layout.dim(), t);
    Ok(LatticeOperator { layout, momentum, matrix })
}

fn rep(axis: Axis, k: f64) -> AxisRep {
    match axis {
        Axis::Open(n) => AxisRep::Sites { n, wrap: false },
        Axis::Periodic(_) => AxisRep::Momentum(k),
    }
}

/// Operator at one momentum point; components of `k` along open axes are ignored.
pub fn real_space_block(
    p: &ModelParams,
    boundary: &BoundarySpec,
    k: Momentum,
    opts: &BuildOptions,
) -> Result<LatticeOperator> {
    boundary.validate()?;
    assemble(p, [rep(boundary.x, k.kx), rep(boundary.y, k.ky), rep(boundary.z, k.kz)], opts)
}

/// One block per point of the momentum grid of the periodic axes, in
/// lexicographic `(k_x, k_y, k_z)` grid order.
pub fn real_space(p: &ModelParams, boundary: &BoundarySpec) -> Result<Vec<LatticeOperator>> {
    boundary.validate()?;
    let grid = |a: Axis| if a.is_periodic() { momentum_grid(a.n()) } else { vec![0.0] };
    let (gx, gy, gz) = (grid(boundary.x), grid(boundary.y), grid(boundary.z));
    let mut out = Vec::with_capacity(gx.len() * gy.len() * gz.len());
    for &kx in &gx {
        for &ky in &gy {
            for &kz in &gz {
                out.push(real_space_block(p, boundary, Momentum::new(kx, ky, kz), &BuildOptions::default())?);
            }
        }
    }
    Ok(out)
}

/// Single operator with every periodic axis realized as a ring of sites.
pub fn supercell(p: &ModelParams, boundary: &BoundarySpec, opts: &BuildOptions) -> Result<LatticeOperator> {
    boundary.validate()?;
    let r = |a: Axis| match a {
        Axis::Open(n) => AxisRep::Sites { n, wrap: false },
        Axis::Periodic(n) => AxisRep::Sites { n, wrap: true },
    };
    assemble(p, [r(boundary.x), r(boundary.y), r(boundary.z)], opts)
}
