//! Closed-form hinge and surface solutions and the `k_z` ranges that host hinge modes.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::lattice::{gamma_algebra, Corner, Face, ModelParams, Sublattice, M2, M4};
use crate::roots::bisect;
use crate::{Error, Result, C64};

/// Hinge mode at one corner: `ψ(x, y) ∝ c^{d_x} b^{d_y} |s⟩` with `d_x`, `d_y`
/// the distances from the corner, dispersing as `E = u_s sin k_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeSolution {
    pub corner: Corner,
    pub host: Sublattice,
    pub kz: f64,
    /// Decay factor along y, `−γ₁(k_z)/λ`.
    pub b: f64,
    /// Decay factor along x, `−γ₂(k_z)/λ'`.
    pub c: f64,
    pub energy: f64,
}

impl HingeSolution {
    /// Group velocity `dE/dk_z = u_s cos k_z`.
    pub fn velocity(&self, params: &ModelParams) -> f64 {
        params.tilt.get(self.host) * self.kz.cos()
    }

    /// The mode on a finite `nx × ny` cross-section, normalized, in the
    /// `(x·ny + y)·4 + s` basis.
    pub fn state(&self, nx: usize, ny: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 4 * nx * ny];
        let s = self.host.index();
        for x in 0..nx {
            for y in 0..ny {
                let dx = if self.corner.at_high_x() { nx - 1 - x } else { x };
                let dy = if self.corner.at_high_y() { ny - 1 - y } else { y };
                v[(x * ny + y) * 4 + s] = C64::new(self.c.powi(dx as i32) * self.b.powi(dy as i32), 0.0);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        v
    }
}

fn check_hops(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.lambda == 0.0 {
        return Err(Error::invalid("lambda", "hinge solutions need λ ≠ 0"));
    }
    if params.lambda_p == 0.0 {
        return Err(Error::invalid("lambda_p", "hinge solutions need λ' ≠ 0"));
    }
    Ok(())
}

/// Decay factors `(b, c)` at `k_z`; identical for all four corners.
pub fn decay_factors(params: &ModelParams, kz: f64) -> Result<(f64, f64)> {
    check_hops(params)?;
    Ok((-params.gamma1(kz) / params.lambda, -params.gamma2(kz) / params.lambda_p))
}

/// The hinge mode at `corner`, if normalizable (`|b| < 1` and `|c| < 1`).
pub fn hinge_mode(params: &ModelParams, corner: Corner, kz: f64) -> Result<Option<HingeSolution>> {
    let (b, c) = decay_factors(params, kz)?;
    if b.abs() >= 1.0 || c.abs() >= 1.0 {
        return Ok(None);
    }
    let host = corner.host();
    Ok(Some(HingeSolution { corner, host, kz, b, c, energy: params.tilt.get(host) * kz.sin() }))
}

/// Open interval `(start, end)` of `k_z`; `end` may exceed 2π when the
/// interval wraps through `k_z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KzInterval {
    pub start: f64,
    pub end: f64,
}

impl KzInterval {
    pub fn is_full_circle(&self) -> bool {
        self.end - self.start >= TAU
    }

    pub fn contains(&self, kz: f64) -> bool {
        if self.is_full_circle() {
            return true;
        }
        let k = kz.rem_euclid(TAU);
        (k > self.start && k < self.end) || (k + TAU > self.start && k + TAU < self.end)
    }
}

/// Disjoint open intervals in `k_z`, sorted by start.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KzIntervalSet {
    pub intervals: Vec<KzInterval>,
}

impl KzIntervalSet {
    pub fn contains(&self, kz: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(kz))
    }

    /// All finite interval endpoints, reduced to `[0, 2π)`.
    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .filter(|i| !i.is_full_circle())
            .flat_map(|i| [i.start.rem_euclid(TAU), i.end.rem_euclid(TAU)])
            .collect()
    }
}

fn closed_form_applies(p: &ModelParams) -> bool {
    p.gamma_p == p.gamma
        && p.lambda == -1.0
        && p.lambda_p == -1.0
        && p.j == 1.0
        && p.gamma > 0.0
        && p.gamma < 1.0
        && p.j_p >= 0.0
}

/// Closed form for γ'=γ ∈ (0,1), λ=λ'=−1, J=1, J' ≥ 0.
fn closed_form(p: &ModelParams) -> KzIntervalSet {
    let g = p.gamma;
    let jp = p.j_p;
    let single = |a: f64| KzIntervalSet { intervals: vec![KzInterval { start: a, end: TAU - a }] };
    if jp <= 1.0 {
        return single((1.0 - g).acos());
    }
    let lo = ((1.0 - g) / jp).acos();
    let hi_arg = (-1.0 - g) / jp;
    if hi_arg <= -1.0 {
        return single(lo);
    }
    let hi = hi_arg.acos();
    KzIntervalSet { intervals: vec![KzInterval { start: lo, end: hi }, KzInterval { start: TAU - hi, end: TAU - lo }] }
}

/// Numeric intervals: boundaries are roots of `|b|−1` and `|c|−1`, bracketed
/// on a fine grid and refined by bisection, plus tangential touchings at
/// `k_z ∈ {0, π}` where `γ₁`, `γ₂` are extremal.
fn numeric(p: &ModelParams) -> KzIntervalSet {
    const SCAN: usize = 4096;
    let fb = |k: f64| (p.gamma1(k) / p.lambda).abs() - 1.0;
    let fc = |k: f64| (p.gamma2(k) / p.lambda_p).abs() - 1.0;
    let exists = |k: f64| fb(k) < 0.0 && fc(k) < 0.0;
    let mut cuts: Vec<f64> = Vec::new();
    for f in [&fb as &dyn Fn(f64) -> f64, &fc] {
        for i in 0..SCAN {
            let a = TAU * i as f64 / SCAN as f64;
            let b = TAU * (i + 1) as f64 / SCAN as f64;
            let (va, vb) = (f(a), f(b));
            if va == 0.0 {
                cuts.push(a);
            } else if vb != 0.0 && (va < 0.0) != (vb < 0.0) {
                cuts.push(bisect(f, a, b));
            }
        }
        for k in [0.0, PI] {
            if f(k).abs() < 1e-12 {
                cuts.push(k);
            }
        }
    }
    let mut cuts: Vec<f64> = cuts.into_iter().map(|k| k.rem_euclid(TAU)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if cuts.is_empty() {
        return if exists(0.0) {
            KzIntervalSet { intervals: vec![KzInterval { start: 0.0, end: TAU }] }
        } else {
            KzIntervalSet::default()
        };
    }
    let n = cuts.len();
    let mut intervals = Vec::new();
    for i in 0..n {
        let a = cuts[i];
        let b = if i + 1 < n { cuts[i + 1] } else { cuts[0] + TAU };
        if b - a > 1e-12 && exists(0.5 * (a + b)) {
            intervals.push(KzInterval { start: a, end: b });
        }
    }
    intervals.sort_by(|x, y| x.start.total_cmp(&y.start));
    KzIntervalSet { intervals }
}

/// `k_z` ranges on which hinge modes exist (`|b| < 1` and `|c| < 1`).
///
/// Uses the closed form for γ'=γ ∈ (0,1), λ=λ'=−1, J=1:
/// `(cos⁻¹(1−γ), 2π−cos⁻¹(1−γ))` for `J' ≤ 1`, and for `J' > 1`
/// `(cos⁻¹((1−γ)/J'), cos⁻¹((−1−γ)/J'))` plus its mirror image (merged into
/// one interval when `(−1−γ)/J' ≤ −1`). Other parameters use root finding.
pub fn hinge_intervals(params: &ModelParams) -> Result<KzIntervalSet> {
    check_hops(params)?;
    Ok(if closed_form_applies(params) { closed_form(params) } else { numeric(params) })
}

/// Root-finding path of [`hinge_intervals`], for any parameters.
pub fn hinge_intervals_numeric(params: &ModelParams) -> Result<KzIntervalSet> {
    check_hops(params)?;
    Ok(numeric(params))
}

/// Projector onto the sublattices that touch `face`:
/// `(I ± iΓ₁Γ₂)/2` for x faces, `(I ± iΓ₃Γ₄)/2` for y faces.
pub fn face_projector(face: Face) -> M4 {
    let g = gamma_algebra();
    let i = C64::new(0.0, 1.0);
    let (m, sign) = match face {
        Face::X0 => (g.g(1) * g.g(2), 1.0),
        Face::Xn => (g.g(1) * g.g(2), -1.0),
        Face::Y0 => (g.g(3) * g.g(4), 1.0),
        Face::Yn => (g.g(3) * g.g(4), -1.0),
    };
    (M4::identity() + m * (i * sign)) * C64::new(0.5, 0.0)
}

/// Sublattices spanned by [`face_projector`], in basis order.
pub fn face_basis(face: Face) -> [Sublattice; 2] {
    match face {
        Face::X0 => [Sublattice::A, Sublattice::C],
        Face::Xn => [Sublattice::B, Sublattice::D],
        Face::Y0 => [Sublattice::A, Sublattice::B],
        Face::Yn => [Sublattice::C, Sublattice::D],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceHamiltonian {
    pub face: Face,
    pub basis: [Sublattice; 2],
    pub matrix: M2,
    /// Whether the surface mode exists: `|γ₂(k_z)| < |λ'|` for x faces,
    /// `|γ₁(k_z)| < |λ|` for y faces.
    pub physical: bool,
}

impl SurfaceHamiltonian {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.matrix;
        let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let half = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let r = half.hypot(m[(0, 1)].norm());
        [mean - r, mean + r]
    }
}

/// Projected surface Hamiltonian; `k_par` is `k_y` on x faces and `k_x` on y faces.
///
/// * x faces: `±[(γ₁+λ cos k_y)σ_x + λ sin k_y σ_y] + diag(u) sin k_z` (− on xN)
/// * y faces: `(γ₂+λ' cos k_x)τ_x + λ' sin k_x τ_y + diag(u) sin k_z`
pub fn surface_hamiltonian(params: &ModelParams, face: Face, k_par: f64, kz: f64) -> SurfaceHamiltonian {
    let basis = face_basis(face);
    let (re, im) = (|x: f64| C64::new(x, 0.0), |x: f64| C64::new(0.0, x));
    let (hx, hy, sign, physical) = match face {
        Face::X0 | Face::Xn => (
            params.gamma1(kz) + params.lambda * k_par.cos(),
            params.lambda * k_par.sin(),
            if face == Face::X0 { 1.0 } else { -1.0 },
            params.gamma2(kz).abs() < params.lambda_p.abs(),
        ),
        Face::Y0 | Face::Yn => (
            params.gamma2(kz) + params.lambda_p * k_par.cos(),
            params.lambda_p * k_par.sin(),
            1.0,
            params.gamma1(kz).abs() < params.lambda.abs(),
        ),
    };
    let s = kz.sin();
    let off = re(sign * hx) + im(-sign * hy);
    let matrix = Matrix2::new(re(params.tilt.get(basis[0]) * s), off, off.conj(), re(params.tilt.get(basis[1]) * s));
    SurfaceHamiltonian { face, basis, matrix, physical }
}
