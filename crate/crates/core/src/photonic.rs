//! Jones-calculus model of the two-subcavity cavity: optical elements on the
//! (OAM, polarization) space, round-trip composition at fixed `k_z`, Floquet
//! effective Hamiltonians and verification of the synthesized couplings
//! against the lattice model.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::lattice::{assemble, AxisRep, BuildOptions, ModelParams, Sublattice};
use crate::{Error, Result, C64};

pub type CMat = DMatrix<C64>;

/// Unitarity tolerance for single elements.
pub const ELEMENT_UNITARITY_TOL: f64 = 1e-12;
/// Unitarity tolerance for composed round trips.
pub const ROUND_TRIP_UNITARITY_TOL: f64 = 1e-10;
/// Eigenphases closer than this to ±π are rejected by the matrix log.
pub const BRANCH_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    /// ↔
    Horizontal,
    /// ↕
    Vertical,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::Horizontal => 0,
            Polarization::Vertical => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcavity {
    /// Hosts sublattices A (↔) and C (↕).
    Left,
    /// Hosts sublattices B (↔) and D (↕).
    Right,
}

impl Subcavity {
    pub fn index(self) -> usize {
        match self {
            Subcavity::Left => 0,
            Subcavity::Right => 1,
        }
    }

    pub fn of(s: Sublattice) -> (Subcavity, Polarization) {
        match s {
            Sublattice::A => (Subcavity::Left, Polarization::Horizontal),
            Sublattice::B => (Subcavity::Right, Polarization::Horizontal),
            Sublattice::C => (Subcavity::Left, Polarization::Vertical),
            Sublattice::D => (Subcavity::Right, Polarization::Vertical),
        }
    }
}

/// OAM values `l ∈ {−L, −L+2, …, L}` × polarization × subcavity. Full-space
/// index `cell·4 + 2·pol + sub` with `cell = (l + L)/2`, i.e. the lattice
/// layout of a single-column chain along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpace {
    pub l_max: usize,
}

impl Default for SyntheticSpace {
    fn default() -> Self {
        SyntheticSpace { l_max: 10 }
    }
}

impl SyntheticSpace {
    pub fn validate(&self) -> Result<()> {
        if self.l_max < 2 || self.l_max % 2 != 0 {
            return Err(Error::invalid("device.l_max", format!("must be even and ≥ 2, got {}", self.l_max)));
        }
        Ok(())
    }

    pub fn n_oam(&self) -> usize {
        self.l_max + 1
    }

    /// Dimension of one subcavity (OAM × polarization).
    pub fn sub_dim(&self) -> usize {
        2 * self.n_oam()
    }

    pub fn dim(&self) -> usize {
        4 * self.n_oam()
    }

    pub fn oam(&self, cell: usize) -> i64 {
        2 * cell as i64 - self.l_max as i64
    }

    /// Cell of `l = 0`.
    pub fn zero_cell(&self) -> usize {
        self.l_max / 2
    }

    pub fn local(&self, cell: usize, pol: Polarization) -> usize {
        2 * cell + pol.index()
    }

    pub fn index(&self, cell: usize, pol: Polarization, sub: Subcavity) -> usize {
        4 * cell + 2 * pol.index() + sub.index()
    }
}

/// Element acting on one subcavity (or on a coupling-path arm). Phases are
/// in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpticalElement {
    /// `cos(χ/2) − i sin(χ/2) σ_x` on polarization.
    WavePlate {
        chi: f64,
    },
    /// `(l,↕) ↔ (l+2,↔)` transfer with amplitude `−i·sign·sin(χ/2)`,
    /// diagonal `cos(χ/2)`.
    CompositeQPlate {
        chi: f64,
        sign: i8,
    },
    /// `e^{iδ₀}` on `l = 0`.
    PhasePlatePinhole {
        delta0: f64,
    },
    /// `S exp(−i a cos(k_z+φ) σ_z) S†`.
    Leom {
        a: f64,
        phi: f64,
    },
    /// `e^{−i a cos(k_z+φ)}` on one polarization.
    Teom {
        a: f64,
        phi: f64,
        polarization: Polarization,
    },
    /// `e^{−i·direction·k_z}`, optionally on one polarization only.
    FreqShift {
        direction: i8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        polarization: Option<Polarization>,
    },
    StaticPhase {
        theta: f64,
    },
    #[serde(skip)]
    Matrix(CMat),
}

fn cis(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite, got {v}")))
    }
}

fn unit_sign(field: &'static str, s: i8) -> Result<f64> {
    match s {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::invalid(field, format!("must be ±1, got {s}"))),
    }
}

/// `exp(−iθ σ_x)` on the polarization pair of every OAM cell.
fn polarization_rotation(space: &SyntheticSpace, theta: f64) -> CMat {
    let mut m = CMat::zeros(space.sub_dim(), space.sub_dim());
    let (c, s) = (C64::new(theta.cos(), 0.0), C64::new(0.0, -theta.sin()));
    for cell in 0..space.n_oam() {
        let h = space.local(cell, Polarization::Horizontal);
        let v = space.local(cell, Polarization::Vertical);
        m[(h, h)] = c;
        m[(v, v)] = c;
        m[(h, v)] = s;
        m[(v, h)] = s;
    }
    m
}

fn diagonal(space: &SyntheticSpace, f: impl Fn(usize, Polarization) -> C64) -> CMat {
    let mut m = CMat::zeros(space.sub_dim(), space.sub_dim());
    for cell in 0..space.n_oam() {
        for pol in [Polarization::Horizontal, Polarization::Vertical] {
            let i = space.local(cell, pol);
            m[(i, i)] = f(cell, pol);
        }
    }
    m
}

/// Matrix of `element` on one subcavity at frequency-lattice momentum `kz`.
pub fn jones(element: &OpticalElement, space: &SyntheticSpace, kz: f64) -> Result<CMat> {
    space.validate()?;
    finite("device.kz", kz)?;
    let one = C64::new(1.0, 0.0);
    Ok(match element {
        OpticalElement::WavePlate { chi } => {
            finite("wave_plate.chi", *chi)?;
            polarization_rotation(space, chi / 2.0)
        }
        OpticalElement::CompositeQPlate { chi, sign } => {
            finite("composite_q_plate.chi", *chi)?;
            let sg = unit_sign("composite_q_plate.sign", *sign)?;
            let (c, s) = (C64::new((chi / 2.0).cos(), 0.0), C64::new(0.0, -sg * (chi / 2.0).sin()));
            let mut m = CMat::identity(space.sub_dim(), space.sub_dim());
            for cell in 0..space.n_oam() - 1 {
                let lo = space.local(cell, Polarization::Vertical);
                let hi = space.local(cell + 1, Polarization::Horizontal);
                m[(lo, lo)] = c;
                m[(hi, hi)] = c;
                m[(lo, hi)] = s;
                m[(hi, lo)] = s;
            }
            m
        }
        OpticalElement::PhasePlatePinhole { delta0 } => {
            finite("phase_plate_pinhole.delta0", *delta0)?;
            let z = space.zero_cell();
            diagonal(space, |cell, _| if cell == z { cis(*delta0) } else { one })
        }
        OpticalElement::Leom { a, phi } => {
            finite("leom.a", *a)?;
            finite("leom.phi", *phi)?;
            // S σ_z S† = σ_x
            polarization_rotation(space, a * (kz + phi).cos())
        }
        OpticalElement::Teom { a, phi, polarization } => {
            finite("teom.a", *a)?;
            finite("teom.phi", *phi)?;
            let p = cis(-a * (kz + phi).cos());
            diagonal(space, |_, pol| if pol == *polarization { p } else { one })
        }
        OpticalElement::FreqShift { direction, polarization } => {
            let d = unit_sign("freq_shift.direction", *direction)?;
            let p = cis(-d * kz);
            diagonal(space, |_, pol| match polarization {
                Some(t) if *t != pol => one,
                _ => p,
            })
        }
        OpticalElement::StaticPhase { theta } => {
            finite("static_phase.theta", *theta)?;
            CMat::identity(space.sub_dim(), space.sub_dim()) * cis(*theta)
        }
        OpticalElement::Matrix(m) => {
            if m.nrows() != space.sub_dim() || m.ncols() != space.sub_dim() {
                return Err(Error::DimensionMismatch {
                    context: "optical element".into(),
                    expected: space.sub_dim(),
                    found: if m.nrows() != space.sub_dim() { m.nrows() } else { m.ncols() },
                });
            }
            m.clone()
        }
    })
}

/// `‖U†U − I‖_F`.
pub fn unitarity_error(u: &CMat) -> f64 {
    (u.adjoint() * u - CMat::identity(u.nrows(), u.ncols())).norm()
}

/// Ordered product `E_n ⋯ E_1` (first element acts first).
pub fn compose(elements: &[OpticalElement], space: &SyntheticSpace, kz: f64) -> Result<CMat> {
    let mut u = CMat::identity(space.sub_dim(), space.sub_dim());
    for e in elements {
        u = jones(e, space, kz)? * u;
    }
    Ok(u)
}

/// Off-resonant coupling between the subcavities:
/// `cos θ I − i sin θ (|R⟩⟨L| ⊗ A + |L⟩⟨R| ⊗ A†)`, `A` the arm product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPath {
    pub theta: f64,
    #[serde(default)]
    pub arm: Vec<OpticalElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundTrip {
    pub space: SyntheticSpace,
    /// Round-trip time; `Ω_FSR = 2π/T_R`.
    pub t_r: f64,
    #[serde(default)]
    pub left: Vec<OpticalElement>,
    #[serde(default)]
    pub right: Vec<OpticalElement>,
    #[serde(default)]
    pub paths: Vec<CouplingPath>,
}

impl RoundTrip {
    pub fn omega_fsr(&self) -> f64 {
        2.0 * PI / self.t_r
    }
}

fn embed_sub(space: &SyntheticSpace, sub: Subcavity, m: &CMat, out: &mut CMat) {
    let n = space.sub_dim();
    for i in 0..n {
        for j in 0..n {
            out[(2 * i + sub.index(), 2 * j + sub.index())] = m[(i, j)];
        }
    }
}

fn path_matrix(space: &SyntheticSpace, p: &CouplingPath, kz: f64) -> Result<CMat> {
    finite("path.theta", p.theta)?;
    let a = compose(&p.arm, space, kz)?;
    let n = space.sub_dim();
    let (c, s) = (p.theta.cos(), C64::new(0.0, -p.theta.sin()));
    let mut u = CMat::identity(space.dim(), space.dim()) * C64::new(c, 0.0);
    for i in 0..n {
        for j in 0..n {
            // local index i ↦ full 2i + sub
            u[(2 * i + 1, 2 * j)] += s * a[(i, j)];
            u[(2 * i, 2 * j + 1)] += s * a[(j, i)].conj();
        }
    }
    Ok(u)
}

/// Round-trip operator at `kz`: subcavity elements, then coupling paths in order.
pub fn compose_round_trip(rt: &RoundTrip, kz: f64) -> Result<CMat> {
    rt.space.validate()?;
    if !(rt.t_r > 0.0 && rt.t_r.is_finite()) {
        return Err(Error::invalid("device.t_r", "must be positive and finite"));
    }
    let mut u = CMat::zeros(rt.space.dim(), rt.space.dim());
    embed_sub(&rt.space, Subcavity::Left, &compose(&rt.left, &rt.space, kz)?, &mut u);
    embed_sub(&rt.space, Subcavity::Right, &compose(&rt.right, &rt.space, kz)?, &mut u);
    for p in &rt.paths {
        u = path_matrix(&rt.space, p, kz)? * u;
    }
    let dev = unitarity_error(&u);
    if dev > ROUND_TRIP_UNITARITY_TOL {
        return Err(Error::Unitarity { deviation: dev });
    }
    Ok(u)
}

fn hermitize(h: CMat) -> CMat {
    (&h + h.adjoint()) * C64::new(0.5, 0.0)
}

/// `H = (i/T_R) log U` on the principal branch, via the complex Schur form
/// (diagonal for unitary `U`).
pub fn effective_hamiltonian(u: &CMat, t_r: f64) -> Result<CMat> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            context: "round-trip operator".into(),
            expected: u.nrows(),
            found: u.ncols(),
        });
    }
    if !(t_r > 0.0 && t_r.is_finite()) {
        return Err(Error::invalid("device.t_r", "must be positive and finite"));
    }
    let dev = unitarity_error(u);
    if dev > ROUND_TRIP_UNITARITY_TOL {
        return Err(Error::Unitarity { deviation: dev });
    }
    let (q, t) = u.clone().schur().unpack();
    let n = u.nrows();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        let z = t[(i, i)];
        let phase = z.arg();
        if PI - phase.abs() < BRANCH_MARGIN {
            return Err(Error::BranchAmbiguity { phase });
        }
        // (i/T_R)·(i·phase) = −phase/T_R
        d[(i, i)] = C64::new(-phase / t_r, 0.0);
    }
    Ok(hermitize(&q * d * q.adjoint()))
}

/// `exp(−iHT_R)` for Hermitian `H`, by eigendecomposition.
pub fn unitary_exp(h: &CMat, t_r: f64) -> CMat {
    let e = SymmetricEigen::new(hermitize(h.clone()));
    let d = CMat::from_diagonal(&e.eigenvalues.map(|x| cis(-x * t_r)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// Parameters of the round-trip synthesis. Every modulation depth is
/// `ε·T_R` times the corresponding model coupling, so the realized
/// Hamiltonian approximates `ε·H_model`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisOptions {
    pub epsilon: f64,
    #[serde(default = "default_t_r")]
    pub t_r: f64,
    #[serde(default)]
    pub space: SyntheticSpace,
    /// Pinhole phase δ₀ on `l = 0`; off when `None`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinhole: Option<f64>,
}

fn default_t_r() -> f64 {
    1.0
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { epsilon: 0.01, t_r: 1.0, space: SyntheticSpace::default(), pinhole: None }
    }
}

impl SynthesisOptions {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("device.epsilon", "must be finite and non-negative"));
        }
        if !(self.t_r > 0.0 && self.t_r.is_finite()) {
            return Err(Error::invalid("device.t_r", "must be positive and finite"));
        }
        if let Some(d) = self.pinhole {
            finite("device.pinhole", d)?;
        }
        Ok(())
    }
}

fn sgn(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Round trip realizing `ε·H_model`:
/// wave plates (γ, sign-flipped on the right), composite q-plates (λ),
/// optional pinhole, L-EOMs (J; φ = 0 left, π right), T-EOMs (u_s; φ = −π/2),
/// one static coupling path (γ') and two paths with opposite one-FSR shifts (J').
pub fn synthesize(params: &ModelParams, opts: &SynthesisOptions) -> Result<RoundTrip> {
    params.validate()?;
    opts.validate()?;
    let s = opts.epsilon * opts.t_r;
    let chi_q = 2.0 * s * params.lambda.abs();
    let sub = |side: Subcavity| {
        let tz: f64 = if side == Subcavity::Left { 1.0 } else { -1.0 };
        let mut v = vec![
            OpticalElement::WavePlate { chi: tz * 2.0 * s * params.gamma },
            OpticalElement::CompositeQPlate { chi: chi_q, sign: sgn(params.lambda) * tz as i8 },
        ];
        if let Some(d) = opts.pinhole {
            v.push(OpticalElement::PhasePlatePinhole { delta0: d });
        }
        v.push(OpticalElement::Leom { a: s * params.j, phi: if tz > 0.0 { 0.0 } else { PI } });
        for sl in Sublattice::ALL {
            let (c, pol) = Subcavity::of(sl);
            if c == side {
                v.push(OpticalElement::Teom { a: s * params.tilt.get(sl), phi: -FRAC_PI_2, polarization: pol });
            }
        }
        v
    };
    let shifted = |d: i8| CouplingPath {
        theta: s * params.j_p / 2.0,
        arm: vec![OpticalElement::FreqShift { direction: d, polarization: None }],
    };
    Ok(RoundTrip {
        space: opts.space,
        t_r: opts.t_r,
        left: sub(Subcavity::Left),
        right: sub(Subcavity::Right),
        paths: vec![CouplingPath { theta: s * params.gamma_p, arm: vec![] }, shifted(1), shifted(-1)],
    })
}

/// Lattice Hamiltonian at `kz` with the OAM axis as an open chain of
/// `n_oam` cells along y and a single cell along x.
pub fn model_hamiltonian(params: &ModelParams, space: &SyntheticSpace, kz: f64) -> Result<CMat> {
    space.validate()?;
    let op = assemble(
        params,
        [AxisRep::Sites { n: 1, wrap: false }, AxisRep::Sites { n: space.n_oam(), wrap: false }, AxisRep::Momentum(kz)],
        &BuildOptions::default(),
    )?;
    let d = op.matrix.to_dense();
    Ok(CMat::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Same-cell `Γ₄` coefficient, target `γ + J cos k_z`.
    Gamma1,
    /// Same-cell `Γ₂` coefficient, target `γ' + J' cos k_z`.
    Gamma2,
    /// Diagonal on one sublattice, target `u_s sin k_z`.
    Tilt(Sublattice),
    /// OAM-axis hopping, target `λ`.
    Lambda,
    /// Full matrix, `‖H_eff − H_target‖_F`.
    Total,
}

impl Channel {
    pub fn label(&self) -> String {
        match self {
            Channel::Gamma1 => "gamma1".into(),
            Channel::Gamma2 => "gamma2".into(),
            Channel::Tilt(s) => format!("tilt_{}", s.label()),
            Channel::Lambda => "lambda".into(),
            Channel::Total => "total".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub kz: f64,
    pub channel: Channel,
    pub target: f64,
    pub extracted: f64,
    pub abs_error: f64,
}

/// Channel coefficients of a Hamiltonian on the synthetic space, averaged
/// over OAM cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channels {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tilt: [f64; 4],
    pub lambda: f64,
}

pub fn channels(h: &CMat, space: &SyntheticSpace) -> Channels {
    use Polarization::{Horizontal as Hz, Vertical as Vt};
    use Subcavity::{Left, Right};
    let n = space.n_oam();
    let tz = |s: Subcavity| if s == Left { 1.0 } else { -1.0 };
    let (mut g1, mut g2, mut lam, mut tilt) = (0.0, 0.0, 0.0, [0.0; 4]);
    for c in 0..n {
        for sub in [Left, Right] {
            g1 += tz(sub) * h[(space.index(c, Hz, sub), space.index(c, Vt, sub))].re;
            if c + 1 < n {
                lam += tz(sub) * h[(space.index(c + 1, Hz, sub), space.index(c, Vt, sub))].re;
            }
        }
        for pol in [Hz, Vt] {
            g2 += h[(space.index(c, pol, Left), space.index(c, pol, Right))].re;
        }
        for sl in Sublattice::ALL {
            let (sub, pol) = Subcavity::of(sl);
            let i = space.index(c, pol, sub);
            tilt[sl.index()] += h[(i, i)].re;
        }
    }
    let nf = n as f64;
    Channels {
        gamma1: g1 / (2.0 * nf),
        gamma2: g2 / (2.0 * nf),
        tilt: tilt.map(|t| t / nf),
        lambda: lam / (2.0 * (nf - 1.0)),
    }
}

/// Least-squares fit `c(k) = a₀ + a_c cos k + a_s sin k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub constant: f64,
    pub cos: f64,
    pub sin: f64,
}

pub fn harmonic_fit(kz: &[f64], values: &[f64]) -> Result<HarmonicFit> {
    let mut a = Matrix3::<f64>::zeros();
    let mut b = Vector3::<f64>::zeros();
    for (k, v) in kz.iter().zip(values) {
        let phi = Vector3::new(1.0, k.cos(), k.sin());
        a += phi * phi.transpose();
        b += phi * *v;
    }
    let x =
        a.try_inverse().ok_or_else(|| Error::invalid("device.kz_grid", "need at least three distinct k_z values"))? * b;
    Ok(HarmonicFit { constant: x[0], cos: x[1], sin: x[2] })
}

/// Extracted versus target couplings, in energy units (`ε·coupling`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingFit {
    pub j: f64,
    pub j_target: f64,
    pub j_p: f64,
    pub j_p_target: f64,
    pub tilt: [f64; 4],
    pub tilt_target: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    pub epsilon: f64,
    pub t_r: f64,
    pub records: Vec<ChannelRecord>,
    /// Largest `‖H_eff(k_z) − ε·H_model(k_z)‖_F` over the grid.
    pub max_total_error: f64,
    pub fit: CouplingFit,
}

fn channel_records(kz: f64, ext: &Channels, tgt: &Channels, total: (f64, f64, f64)) -> Vec<ChannelRecord> {
    let rec = |channel, target: f64, extracted: f64| ChannelRecord {
        kz,
        channel,
        target,
        extracted,
        abs_error: (extracted - target).abs(),
    };
    let mut v = vec![
        rec(Channel::Gamma1, tgt.gamma1, ext.gamma1),
        rec(Channel::Gamma2, tgt.gamma2, ext.gamma2),
        rec(Channel::Lambda, tgt.lambda, ext.lambda),
    ];
    for s in Sublattice::ALL {
        v.push(rec(Channel::Tilt(s), tgt.tilt[s.index()], ext.tilt[s.index()]));
    }
    v.push(ChannelRecord { kz, channel: Channel::Total, target: total.0, extracted: total.1, abs_error: total.2 });
    v
}

/// Synthesizes the round trip for `params`, extracts `H_eff(k_z)` on the grid
/// and compares it channel by channel with `ε·H_model(k_z)` (pinhole off).
pub fn verify_against_lattice(
    params: &ModelParams,
    opts: &SynthesisOptions,
    kz_grid: &[f64],
    exec: &Exec,
) -> Result<DeviceReport> {
    if kz_grid.is_empty() {
        return Err(Error::invalid("device.kz_grid", "empty"));
    }
    let opts = SynthesisOptions { pinhole: None, ..*opts };
    let rt = synthesize(params, &opts)?;
    let eps = C64::new(opts.epsilon, 0.0);
    let per: Vec<(Channels, Vec<ChannelRecord>)> = exec.try_map(kz_grid, |&kz| -> Result<_> {
        let h = effective_hamiltonian(&compose_round_trip(&rt, kz)?, rt.t_r)?;
        let target = model_hamiltonian(params, &rt.space, kz)? * eps;
        let ext = channels(&h, &rt.space);
        let tgt = channels(&target, &rt.space);
        let total = (target.norm(), h.norm(), (&h - &target).norm());
        Ok((ext, channel_records(kz, &ext, &tgt, total)))
    })?;
    let max_total_error = per
        .iter()
        .flat_map(|(_, r)| r.iter().filter(|r| r.channel == Channel::Total).map(|r| r.abs_error))
        .fold(0.0, f64::max);
    let series = |f: &dyn Fn(&Channels) -> f64| -> Vec<f64> { per.iter().map(|(c, _)| f(c)).collect() };
    let g1 = harmonic_fit(kz_grid, &series(&|c| c.gamma1))?;
    let g2 = harmonic_fit(kz_grid, &series(&|c| c.gamma2))?;
    let mut tilt = [0.0; 4];
    for (s, t) in tilt.iter_mut().enumerate() {
        *t = harmonic_fit(kz_grid, &series(&|c| c.tilt[s]))?.sin;
    }
    let e = opts.epsilon;
    let fit = CouplingFit {
        j: g1.cos,
        j_target: e * params.j,
        j_p: g2.cos,
        j_p_target: e * params.j_p,
        tilt,
        tilt_target: params.tilt.as_array().map(|u| e * u),
    };
    Ok(DeviceReport {
        epsilon: opts.epsilon,
        t_r: opts.t_r,
        records: per.into_iter().flat_map(|(_, r)| r).collect(),
        max_total_error,
        fit,
    })
}

/// Eigenpairs of `H_eff(k_z)` with the pinhole on: `(energy, weight on l = 0)`.
pub fn zero_mode_weights(params: &ModelParams, opts: &SynthesisOptions, kz: f64) -> Result<Vec<(f64, f64)>> {
    if opts.pinhole.is_none() {
        return Err(Error::invalid("device.pinhole", "pinhole phase required"));
    }
    let rt = synthesize(params, opts)?;
    let h = effective_hamiltonian(&compose_round_trip(&rt, kz)?, rt.t_r)?;
    let e = SymmetricEigen::new(h);
    let z = rt.space.zero_cell();
    Ok((0..e.eigenvalues.len())
        .map(|c| {
            let w: f64 = (0..4).map(|s| e.eigenvectors[(4 * z + s, c)].norm_sqr()).sum();
            (e.eigenvalues[c], w)
        })
        .collect())
}

/// Largest `l = 0` weight among in-band states, `|E| < |δ₀|/(2T_R)`.
pub fn pinhole_leakage(params: &ModelParams, opts: &SynthesisOptions, kz: f64) -> Result<f64> {
    let d = opts.pinhole.ok_or_else(|| Error::invalid("device.pinhole", "pinhole phase required"))?;
    let cut = d.abs() / (2.0 * opts.t_r);
    Ok(zero_mode_weights(params, opts, kz)?
        .into_iter()
        .filter(|(e, _)| e.abs() < cut)
        .map(|(_, w)| w)
        .fold(0.0, f64::max))
}
