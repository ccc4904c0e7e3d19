//! Nested Wilson loops: Wannier bands, Wannier-sector polarizations and the
//! quadrupole moment of the reduced 2D model at fixed `k_z`.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Matrix4x2, Vector2};
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::lattice::{bloch_3d, eigh4, momentum_grid, ModelParams, Momentum};
use crate::{Error, Result, C64};

/// Occupied bands closer than this to the unoccupied ones abort the loop.
pub const GAP_MIN: f64 = 1e-9;
/// Wannier values closer than this to 0 or 1/2 abort sector selection.
pub const WANNIER_GAP_MIN: f64 = 1e-6;
/// Distance from 0 or 1/2 accepted as quantized.
pub const QUANTIZATION_TOL: f64 = 1e-6;

/// Orthonormal basis of the occupied subspace.
pub type Frame = Matrix4x2<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopAxis {
    X,
    Y,
}

/// Wannier sector: `Plus` holds the value in `(0, 1/2)`, `Minus` its partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Plus,
    Minus,
}

/// Reduced-2D phase for a point `(γ₁, γ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Trivial,
    XSurfaceOnly,
    YSurfaceOnly,
    Hinge,
    /// On a phase boundary (`|γ₁| = |λ|` or `|γ₂| = |λ'|`).
    Critical,
}

/// x surfaces host modes for `|γ₂| < |λ'|`, y surfaces for `|γ₁| < |λ|`;
/// both together give hinge (corner) modes.
pub fn phase_classify(gamma1: f64, gamma2: f64, lambda: f64, lambda_p: f64) -> PhaseLabel {
    let (a, b) = (gamma1.abs() - lambda.abs(), gamma2.abs() - lambda_p.abs());
    if a == 0.0 || b == 0.0 {
        return PhaseLabel::Critical;
    }
    match (b < 0.0, a < 0.0) {
        (true, true) => PhaseLabel::Hinge,
        (true, false) => PhaseLabel::XSurfaceOnly,
        (false, true) => PhaseLabel::YSurfaceOnly,
        (false, false) => PhaseLabel::Trivial,
    }
}

/// Grid sizes of the nested loop; the loop and transverse directions share `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilsonGrid {
    pub n: usize,
}

impl Default for WilsonGrid {
    fn default() -> Self {
        WilsonGrid { n: 60 }
    }
}

/// Topology requires reflection symmetry; a uniform tilt only shifts energies.
fn topo_params(p: &ModelParams) -> Result<ModelParams> {
    p.validate()?;
    if !p.tilt.is_uniform() {
        return Err(Error::invalid(
            "model.tilt",
            "sublattice-dependent tilt breaks the protecting reflections; no invariant is defined",
        ));
    }
    Ok(*p)
}

/// Two lowest eigenvectors of the Bloch Hamiltonian at `k`.
pub fn occupied_frame(p: &ModelParams, k: Momentum) -> Result<Frame> {
    let (e, v) = eigh4(&bloch_3d(p, k));
    let gap = e[2] - e[1];
    if gap < GAP_MIN {
        return Err(Error::GapCollapse { kx: k.kx, ky: k.ky, kz: k.kz, gap });
    }
    Ok(v.fixed_columns::<2>(0).into_owned())
}

/// Unitary part of a 2×2 overlap (`U Vᴴ` of its SVD).
fn polar(m: &Matrix2<C64>) -> Matrix2<C64> {
    let svd = m.svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

fn link(a: &Frame, b: &Frame) -> Matrix2<C64> {
    polar(&(b.adjoint() * a))
}

/// Occupied frames on the full `n × n` grid, indexed `[ix][iy]`.
struct FrameGrid {
    n: usize,
    frames: Vec<Frame>,
}

impl FrameGrid {
    fn new(p: &ModelParams, kz: f64, n: usize) -> Result<Self> {
        let g = momentum_grid(n);
        let mut frames = Vec::with_capacity(n * n);
        for &kx in &g {
            for &ky in &g {
                frames.push(occupied_frame(p, Momentum::new(kx, ky, kz))?);
            }
        }
        Ok(FrameGrid { n, frames })
    }

    /// Frame at transverse index `t`, loop index `l`.
    fn at(&self, axis: LoopAxis, t: usize, l: usize) -> &Frame {
        let (ix, iy) = match axis {
            LoopAxis::Y => (t % self.n, l % self.n),
            LoopAxis::X => (l % self.n, t % self.n),
        };
        &self.frames[ix * self.n + iy]
    }
}

fn loop_links(grid: &FrameGrid, axis: LoopAxis, t: usize) -> Vec<Matrix2<C64>> {
    (0..grid.n).map(|l| link(grid.at(axis, t, l), grid.at(axis, t, l + 1))).collect()
}

/// Path-ordered product, later links on the left.
fn product(links: &[Matrix2<C64>]) -> Matrix2<C64> {
    links.iter().fold(Matrix2::identity(), |w, f| f * w)
}

fn phases(w: &Matrix2<C64>) -> [f64; 2] {
    // Eigenvalues of a 2×2 matrix from its trace and determinant.
    let tr = w[(0, 0)] + w[(1, 1)];
    let det = w.determinant();
    let disc = (tr * tr - det * 4.0).sqrt();
    let mut v = [(tr + disc) / 2.0, (tr - disc) / 2.0].map(|z| (z.arg() / TAU).rem_euclid(1.0));
    v.sort_by(f64::total_cmp);
    v
}

/// Wilson loop of the two occupied bands along `axis` at fixed `k_z` and
/// transverse momentum, with `n` links unitarized by SVD.
pub fn wilson_loop(params: &ModelParams, kz: f64, transverse: f64, axis: LoopAxis, n: usize) -> Result<Matrix2<C64>> {
    let p = topo_params(params)?;
    let g = momentum_grid(n);
    let frames: Vec<Frame> = g
        .iter()
        .map(|&k| {
            let m = match axis {
                LoopAxis::Y => Momentum::new(transverse, k, kz),
                LoopAxis::X => Momentum::new(k, transverse, kz),
            };
            occupied_frame(&p, m)
        })
        .collect::<Result<_>>()?;
    Ok(wilson_loop_of(&frames))
}

/// Wilson loop of a closed sequence of occupied frames (the last links back
/// to the first).
pub fn wilson_loop_of(frames: &[Frame]) -> Matrix2<C64> {
    let n = frames.len();
    let links: Vec<_> = (0..n).map(|l| link(&frames[l], &frames[(l + 1) % n])).collect();
    product(&links)
}

/// Wannier values (eigenphases / 2π) in `[0, 1)`, ascending.
pub fn wannier_values(w: &Matrix2<C64>) -> [f64; 2] {
    phases(w)
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Eigenvector of `w` belonging to `sector`, and the sector's Wannier value.
fn sector_vector(w: &Matrix2<C64>, sector: Sector, kz: f64) -> Result<(f64, Vector2<C64>)> {
    let nus = phases(w);
    for &nu in &nus {
        if circ_dist(nu, 0.0) < WANNIER_GAP_MIN || circ_dist(nu, 0.5) < WANNIER_GAP_MIN {
            return Err(Error::WannierGap { kz, nu });
        }
    }
    let plus = if nus[0] < 0.5 { nus[0] } else { nus[1] };
    let nu = match sector {
        Sector::Plus => plus,
        Sector::Minus => {
            if nus[0] == plus {
                nus[1]
            } else {
                nus[0]
            }
        }
    };
    let lam = C64::from_polar(1.0, TAU * nu);
    // Null vector of (w − λ I): take the better-conditioned row.
    let r0 = (w[(0, 0)] - lam, w[(0, 1)]);
    let r1 = (w[(1, 0)], w[(1, 1)] - lam);
    let (a, b) = if r0.0.norm() + r0.1.norm() >= r1.0.norm() + r1.1.norm() { r0 } else { r1 };
    let v = Vector2::new(b, -a);
    let n = v.norm();
    if n == 0.0 {
        return Ok((nu, Vector2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))));
    }
    Ok((nu, v / C64::new(n, 0.0)))
}

#[derive(Debug, Clone)]
struct SectorResult {
    /// Wannier values (both bands) at each transverse momentum.
    bands: Vec<[f64; 2]>,
    p: f64,
}

/// Wilson loops along `axis` at every transverse momentum, then the nested
/// loop of the selected sector along the transverse direction, averaged over
/// the base point of the first loop.
fn nested(grid: &FrameGrid, axis: LoopAxis, sector: Sector, kz: f64) -> Result<SectorResult> {
    let n = grid.n;
    let mut bands = Vec::with_capacity(n);
    // w[t][l]: Wannier-sector state at transverse t, loop point l.
    let mut w: Vec<Vec<nalgebra::Vector4<C64>>> = Vec::with_capacity(n);
    for t in 0..n {
        let links = loop_links(grid, axis, t);
        let wl = product(&links);
        bands.push(phases(&wl));
        let (_, mut v) = sector_vector(&wl, sector, kz)?;
        let mut row = Vec::with_capacity(n);
        for (l, f) in links.iter().enumerate() {
            row.push(grid.at(axis, t, l) * v);
            v = f * v;
        }
        w.push(row);
    }
    let mut phi = Vec::with_capacity(n);
    for l in 0..n {
        let mut prod = C64::new(1.0, 0.0);
        for t in 0..n {
            prod *= w[(t + 1) % n][l].dotc(&w[t][l]);
        }
        phi.push(prod.arg());
    }
    for l in 1..n {
        let d = phi[l] - phi[l - 1];
        phi[l] -= TAU * (d / TAU).round();
    }
    let mean = phi.iter().sum::<f64>() / n as f64;
    Ok(SectorResult { bands, p: unit_interval(mean / TAU) })
}

/// Wannier-sector polarization. `axis` is the direction of the first Wilson
/// loop: `LoopAxis::Y` gives `p_x^{ν_y}`, `LoopAxis::X` gives `p_y^{ν_x}`.
pub fn nested_polarization(
    params: &ModelParams,
    kz: f64,
    sector: Sector,
    axis: LoopAxis,
    grid: WilsonGrid,
) -> Result<f64> {
    let p = topo_params(params)?;
    let frames = FrameGrid::new(&p, kz, grid.n)?;
    Ok(nested(&frames, axis, sector, kz)?.p)
}

/// Representative in `[0, 1)`; values within [`QUANTIZATION_TOL`] below 1 map to 0.
fn unit_interval(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r > 1.0 - QUANTIZATION_TOL {
        0.0
    } else {
        r + 0.0
    }
}

/// Maps a polarization to its representative in `(−1/2, 1/2]`.
fn centered(p: f64) -> f64 {
    let c = p - p.round();
    if c <= -0.5 {
        c + 1.0
    } else {
        c
    }
}

/// `Q_xy = 2 p_x^{ν_y} p_y^{ν_x} mod 1`, evaluated on the centered
/// representatives of the polarizations and reported in `[0, 1)`.
pub fn quadrupole_from(px: f64, py: f64) -> f64 {
    unit_interval(2.0 * centered(px) * centered(py))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WannierData {
    pub kz: f64,
    /// Wannier bands `ν_y(k_x)` from loops along `k_y`.
    pub nu_y: Vec<[f64; 2]>,
    /// Wannier bands `ν_x(k_y)` from loops along `k_x`.
    pub nu_x: Vec<[f64; 2]>,
    pub p_x_nu_y: f64,
    pub p_y_nu_x: f64,
    pub q_xy: f64,
}

/// Full nested-loop data at one `k_z` (`+ν` sectors).
pub fn wannier_data(params: &ModelParams, kz: f64, grid: WilsonGrid) -> Result<WannierData> {
    let p = topo_params(params)?;
    if grid.n < 4 {
        return Err(Error::invalid("topology.grid.n", "need at least 4 points"));
    }
    let frames = FrameGrid::new(&p, kz, grid.n)?;
    let y = nested(&frames, LoopAxis::Y, Sector::Plus, kz)?;
    let x = nested(&frames, LoopAxis::X, Sector::Plus, kz)?;
    Ok(WannierData { kz, nu_y: y.bands, nu_x: x.bands, p_x_nu_y: y.p, p_y_nu_x: x.p, q_xy: quadrupole_from(y.p, x.p) })
}

pub fn quadrupole(params: &ModelParams, kz: f64, grid: WilsonGrid) -> Result<f64> {
    Ok(wannier_data(params, kz, grid)?.q_xy)
}

/// Outcome at one `k_z` of an invariant sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum KzInvariant {
    Defined(WannierData),
    /// Bulk or Wannier gap closes: no quantized invariant at this `k_z`.
    Critical {
        kz: f64,
        reason: String,
    },
}

impl KzInvariant {
    pub fn kz(&self) -> f64 {
        match self {
            KzInvariant::Defined(d) => d.kz,
            KzInvariant::Critical { kz, .. } => *kz,
        }
    }

    pub fn data(&self) -> Option<&WannierData> {
        match self {
            KzInvariant::Defined(d) => Some(d),
            KzInvariant::Critical { .. } => None,
        }
    }
}

/// Invariants over `kz_grid`; gap closings mark a point critical instead of
/// failing the sweep. Invalid parameters still fail.
pub fn invariant_sweep(
    params: &ModelParams,
    kz_grid: &[f64],
    grid: WilsonGrid,
    exec: &Exec,
) -> Result<Vec<KzInvariant>> {
    topo_params(params)?;
    exec.try_map(kz_grid, |&kz| match wannier_data(params, kz, grid) {
        Ok(d) => Ok(KzInvariant::Defined(d)),
        Err(e @ (Error::GapCollapse { .. } | Error::WannierGap { .. })) => {
            Ok(KzInvariant::Critical { kz, reason: e.to_string() })
        }
        Err(e) => Err(e),
    })
}

/// Distance of `x` from the nearest of `{0, 1/2}` modulo 1.
pub fn quantization_error(x: f64) -> f64 {
    circ_dist(x, 0.0).min(circ_dist(x, 0.5))
}
