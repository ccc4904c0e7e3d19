//! Input–output transmission through the hinge geometry: three-site hinge
//! excitations, scalar-κ scattering, seeded on-site disorder and the signed
//! z displacement of the transmitted intensity.

use std::f64::consts::TAU;

use faer::Mat;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::lattice::{
    momentum_grid, real_space_block, supercell, Axis, BoundarySpec, BuildOptions, Corner, Face, ModelParams, Momentum,
    SiteLayout, SparseHermitian, Sublattice,
};
use crate::linalg::{cgls_shifted, ShiftedLu};
use crate::{Error, Result, C64};

/// Relative tolerance on `‖ψ_out‖ = ‖ψ_in‖`.
pub const UNITARITY_TOL: f64 = 1e-8;
/// Above this dimension the iterative solver is used.
pub const DIRECT_SOLVE_MAX_DIM: usize = 20_000;
/// Relative residual target of the iterative solver.
pub const ITERATIVE_TOL: f64 = 1e-10;

/// `α(k_z, k_z*) = 1 + e^{i(k_z*−k_z)} + e^{2i(k_z*−k_z)}`.
pub fn alpha(kz: f64, kz_star: f64) -> C64 {
    let d = kz_star - kz;
    C64::new(1.0, 0.0) + C64::from_polar(1.0, d) + C64::from_polar(1.0, 2.0 * d)
}

/// Open `nx × ny` cross-section, periodic along z with `nz` sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportGeometry {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Default for TransportGeometry {
    fn default() -> Self {
        TransportGeometry { nx: 24, ny: 24, nz: 60 }
    }
}

impl TransportGeometry {
    pub fn boundary(&self) -> BoundarySpec {
        BoundarySpec { x: Axis::Open(self.nx), y: Axis::Open(self.ny), z: Axis::Periodic(self.nz) }
    }

    pub fn layout(&self) -> SiteLayout {
        SiteLayout { nx: self.nx, ny: self.ny, nz: self.nz }
    }

    pub fn cross_section_dim(&self) -> usize {
        4 * self.nx * self.ny
    }

    pub fn validate(&self) -> Result<()> {
        self.boundary().validate()?;
        if self.nz < 3 {
            return Err(Error::invalid("transport.geometry.nz", "the three-site excitation needs nz ≥ 3"));
        }
        Ok(())
    }
}

/// Three sites in a row on a hinge column, phased by `k_z*`:
/// `ψ_in(z) = E_in/√3 · e^{ik_z*(z − z_c + 1)}` for `z ∈ {z_c−1, z_c, z_c+1}`
/// on the corner's hosting sublattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Excitation {
    pub corner: Corner,
    pub z_c: usize,
    pub kz_star: f64,
    pub e_in: f64,
    /// Probe energy `E`.
    pub energy: f64,
    /// Uniform coupling rate `κ`.
    pub kappa: f64,
}

impl Excitation {
    /// `E = 0`, `k_z* = π`, `κ = 0.1`, `E_in = 1`, centred at `nz/2`.
    pub fn hinge(corner: Corner, nz: usize) -> Self {
        Excitation { corner, z_c: nz / 2, kz_star: std::f64::consts::PI, e_in: 1.0, energy: 0.0, kappa: 0.1 }
    }

    pub fn validate(&self, geom: &TransportGeometry) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("transport.kappa", format!("must be positive and finite, got {}", self.kappa)));
        }
        for (f, v) in
            [("transport.kz_star", self.kz_star), ("transport.e_in", self.e_in), ("transport.energy", self.energy)]
        {
            if !v.is_finite() {
                return Err(Error::invalid(f, "must be finite"));
            }
        }
        if self.z_c < 1 || self.z_c + 1 >= geom.nz {
            return Err(Error::invalid("transport.z_c", format!("z_c ± 1 must lie in 0..{}", geom.nz)));
        }
        Ok(())
    }

    /// `(z, amplitude)` of the three excited sites.
    pub fn profile(&self) -> [(usize, C64); 3] {
        let a = self.e_in / 3f64.sqrt();
        [0usize, 1, 2].map(|j| (self.z_c + j - 1, C64::from_polar(a, self.kz_star * j as f64)))
    }

    /// `⟨k_z|ψ_in⟩` on the hosting site for every `k_z = 2πm/nz`:
    /// `E_in/√(3 nz) · e^{−ik_z(z_c−1)} α(k_z, k_z*)`.
    pub fn kz_amplitudes(&self, nz: usize) -> Vec<C64> {
        let norm = 1.0 / (nz as f64).sqrt();
        momentum_grid(nz)
            .into_iter()
            .map(|k| self.profile().iter().map(|&(z, a)| a * C64::from_polar(norm, -k * z as f64)).sum())
            .collect()
    }

    fn host_index_2d(&self, geom: &TransportGeometry) -> usize {
        let (x, y) = self.corner.site(geom.nx, geom.ny);
        (x * geom.ny + y) * 4 + self.corner.host().index()
    }
}

/// Input state on the full `nx × ny × nz` lattice; norm `|E_in|`.
pub fn build_input(exc: &Excitation, geom: &TransportGeometry) -> Result<Vec<C64>> {
    geom.validate()?;
    exc.validate(geom)?;
    let layout = geom.layout();
    let (x, y) = exc.corner.site(geom.nx, geom.ny);
    let mut v = vec![C64::new(0.0, 0.0); layout.dim()];
    for (z, a) in exc.profile() {
        v[layout.index(x, y, z, exc.corner.host().index())] = a;
    }
    Ok(v)
}

/// Linear-solver selection for `(E + iκ/2 − H) x = ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Direct below [`DIRECT_SOLVE_MAX_DIM`], iterative above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

fn use_direct(choice: SolverChoice, dim: usize) -> bool {
    match choice {
        SolverChoice::Auto => dim < DIRECT_SOLVE_MAX_DIM,
        SolverChoice::Direct => true,
        SolverChoice::Iterative => false,
    }
}

fn norm(v: impl Iterator<Item = C64>) -> f64 {
    v.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_unitarity(inp: &[C64], out: &[C64]) -> Result<()> {
    let (a, b) = (norm(inp.iter().copied()), norm(out.iter().copied()));
    let dev = (a - b).abs();
    if dev > UNITARITY_TOL * a.max(f64::MIN_POSITIVE) {
        return Err(Error::Unitarity { deviation: dev });
    }
    Ok(())
}

/// Scattering of `ψ_in` by `H` with uniform coupling `κ` at energy `E`:
/// `ψ_T = −iκ (E − H + iκ/2)⁻¹ ψ_in` and `ψ_out = ψ_in + ψ_T`.
/// Returns `(ψ_out, ψ_T)`; fails if `‖ψ_out‖ ≠ ‖ψ_in‖` beyond [`UNITARITY_TOL`].
pub fn scattering(
    energy: f64,
    h: &SparseHermitian,
    kappa: f64,
    psi_in: &[C64],
    solver: SolverChoice,
) -> Result<(Vec<C64>, Vec<C64>)> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
    }
    if psi_in.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            context: "scattering input".into(),
            expected: h.dim(),
            found: psi_in.len(),
        });
    }
    let z = C64::new(energy, kappa / 2.0);
    let x = if use_direct(solver, h.dim()) {
        let lu = ShiftedLu::new(h, z, None)?;
        let mut m = Mat::from_fn(h.dim(), 1, |i, _| psi_in[i]);
        lu.solve(&mut m)?;
        (0..h.dim()).map(|i| m[(i, 0)]).collect::<Vec<_>>()
    } else {
        cgls_shifted(h, z, psi_in, ITERATIVE_TOL, 50 * h.dim() + 1000)?
    };
    let t: Vec<C64> = x.iter().map(|v| v * C64::new(0.0, -kappa)).collect();
    let out: Vec<C64> = psi_in.iter().zip(&t).map(|(a, b)| a + b).collect();
    check_unitarity(psi_in, &out)?;
    Ok((out, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderMode {
    /// Same value on every z layer; keeps the `k_z`-block structure.
    #[default]
    ZUniform,
    /// Independent value on every site.
    Full3d,
}

/// On-site disorder `W_i ∈ [−W, W]`, drawn from a counter-based generator
/// keyed by `(seed, realization, site)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub strength: f64,
    #[serde(default)]
    pub mode: DisorderMode,
    pub realizations: u32,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::invalid("transport.disorder.strength", "must be finite and non-negative"));
        }
        if self.realizations < 1 {
            return Err(Error::invalid("transport.disorder.realizations", "must be at least 1"));
        }
        Ok(())
    }

    /// Disorder value at site key `((z·nx + x)·ny + y)·4 + s`.
    pub fn value(&self, realization: u32, key: u64) -> f64 {
        if self.strength == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(realization));
        rng.set_word_pos(u128::from(key) * 2);
        Uniform::new_inclusive(-self.strength, self.strength).sample(&mut rng)
    }

    /// Diagonal disorder for one realization. In `ZUniform` mode this is the
    /// `nx × ny` cross-section (the z = 0 keys); in `Full3d` mode all sites.
    pub fn diagonal(&self, realization: u32, geom: &TransportGeometry) -> Vec<f64> {
        let nz = match self.mode {
            DisorderMode::ZUniform => 1,
            DisorderMode::Full3d => geom.nz,
        };
        (0..(4 * geom.nx * geom.ny * nz) as u64).map(|k| self.value(realization, k)).collect()
    }
}

/// Transmitted field `ψ_T` on every site of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    pub geometry: TransportGeometry,
    pub excitation: Excitation,
    pub realization: Option<u32>,
    /// Indexed `((z·nx + x)·ny + y)·4 + s`.
    pub field: Vec<C64>,
}

impl TransmissionMap {
    pub fn intensity(&self) -> IntensityMap {
        IntensityMap {
            geometry: self.geometry,
            excitation: self.excitation,
            intensity: self.field.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

/// `|ψ_T|²` per site, possibly averaged over disorder realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityMap {
    pub geometry: TransportGeometry,
    pub excitation: Excitation,
    pub intensity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub face: Face,
    /// Coordinate along the face: x on y faces, y on x faces.
    pub along: usize,
    pub z: usize,
    /// `None` for the sum over sublattices.
    pub sublattice: Option<Sublattice>,
    pub intensity: f64,
}

impl IntensityMap {
    pub fn at(&self, x: usize, y: usize, z: usize, s: usize) -> f64 {
        self.intensity[self.geometry.layout().index(x, y, z, s)]
    }

    /// Intensity summed over sublattices along the column at `(x, y)`.
    pub fn column(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.geometry.nz).map(|z| (0..4).map(|s| self.at(x, y, z, s)).sum()).collect()
    }

    /// Per-sublattice and summed intensities on one outer face.
    pub fn face_slice(&self, face: Face) -> Vec<FaceRecord> {
        let g = self.geometry;
        let (len, site): (usize, Box<dyn Fn(usize) -> (usize, usize)>) = match face {
            Face::X0 => (g.ny, Box::new(|a| (0, a))),
            Face::Xn => (g.ny, Box::new(move |a| (g.nx - 1, a))),
            Face::Y0 => (g.nx, Box::new(|a| (a, 0))),
            Face::Yn => (g.nx, Box::new(move |a| (a, g.ny - 1))),
        };
        let mut out = Vec::with_capacity(len * g.nz * 5);
        for along in 0..len {
            let (x, y) = site(along);
            for z in 0..g.nz {
                let mut sum = 0.0;
                for s in Sublattice::ALL {
                    let i = self.at(x, y, z, s.index());
                    sum += i;
                    out.push(FaceRecord { face, along, z, sublattice: Some(s), intensity: i });
                }
                out.push(FaceRecord { face, along, z, sublattice: None, intensity: sum });
            }
        }
        out
    }
}

fn check_shared(excs: &[Excitation], geom: &TransportGeometry) -> Result<()> {
    let first = excs.first().ok_or_else(|| Error::invalid("transport.corners", "no excitation given"))?;
    for e in excs {
        e.validate(geom)?;
        if e.energy != first.energy || e.kappa != first.kappa {
            return Err(Error::invalid("transport", "excitations solved together must share energy and κ"));
        }
    }
    Ok(())
}

/// `k_z`-block path: per-block solves with all excitations as right-hand
/// sides, then the inverse Fourier transform `ψ(z) = Σ_k e^{ik z} ψ(k)/√nz`.
fn maps_by_blocks(
    params: &ModelParams,
    geom: &TransportGeometry,
    excs: &[Excitation],
    disorder: Option<&[f64]>,
    solver: SolverChoice,
    exec: &Exec,
) -> Result<Vec<Vec<C64>>> {
    let boundary = geom.boundary();
    let d2 = geom.cross_section_dim();
    let ks = momentum_grid(geom.nz);
    let amps: Vec<Vec<C64>> = excs.iter().map(|e| e.kz_amplitudes(geom.nz)).collect();
    let hosts: Vec<usize> = excs.iter().map(|e| e.host_index_2d(geom)).collect();
    let (energy, kappa) = (excs[0].energy, excs[0].kappa);
    let z = C64::new(energy, kappa / 2.0);
    let idx: Vec<usize> = (0..ks.len()).collect();
    let blocks: Vec<Vec<Vec<C64>>> = exec.try_map(&idx, |&m| -> Result<_> {
        let op = real_space_block(params, &boundary, Momentum::new(0.0, 0.0, ks[m]), &BuildOptions::default())?;
        let h = match disorder {
            Some(d) => op.matrix.add_diagonal(d),
            None => op.matrix,
        };
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(excs.len());
        if use_direct(solver, d2) {
            let lu = ShiftedLu::new(&h, z, None)?;
            let mut rhs = Mat::<C64>::zeros(d2, excs.len());
            for j in 0..excs.len() {
                rhs[(hosts[j], j)] = amps[j][m];
            }
            lu.solve(&mut rhs)?;
            for j in 0..excs.len() {
                cols.push((0..d2).map(|i| rhs[(i, j)]).collect());
            }
        } else {
            for j in 0..excs.len() {
                let mut b = vec![C64::new(0.0, 0.0); d2];
                b[hosts[j]] = amps[j][m];
                cols.push(cgls_shifted(&h, z, &b, ITERATIVE_TOL, 50 * d2 + 1000)?);
            }
        }
        for (j, col) in cols.iter_mut().enumerate() {
            col.iter_mut().for_each(|v| *v *= C64::new(0.0, -kappa));
            let mut inp = vec![C64::new(0.0, 0.0); d2];
            inp[hosts[j]] = amps[j][m];
            let out: Vec<C64> = inp.iter().zip(col.iter()).map(|(a, b)| a + b).collect();
            check_unitarity(&inp, &out)?;
        }
        Ok(cols)
    })?;
    let nz = geom.nz;
    let norm = 1.0 / (nz as f64).sqrt();
    let phase: Vec<Vec<C64>> =
        (0..nz).map(|zz| ks.iter().map(|k| C64::from_polar(norm, k * zz as f64)).collect()).collect();
    Ok((0..excs.len())
        .map(|j| {
            let mut field = vec![C64::new(0.0, 0.0); nz * d2];
            for zz in 0..nz {
                let row = &mut field[zz * d2..(zz + 1) * d2];
                for (m, block) in blocks.iter().enumerate() {
                    let p = phase[zz][m];
                    for (f, v) in row.iter_mut().zip(&block[j]) {
                        *f += p * v;
                    }
                }
            }
            field
        })
        .collect())
}

/// Full-lattice path: one solve per excitation on the z-periodic supercell.
fn maps_full(
    params: &ModelParams,
    geom: &TransportGeometry,
    excs: &[Excitation],
    disorder: Option<&[f64]>,
    solver: SolverChoice,
) -> Result<Vec<Vec<C64>>> {
    let op = supercell(params, &geom.boundary(), &BuildOptions::sparse())?;
    let h = match disorder {
        Some(d) => op.matrix.add_diagonal(d),
        None => op.matrix,
    };
    let (energy, kappa) = (excs[0].energy, excs[0].kappa);
    let z = C64::new(energy, kappa / 2.0);
    let inputs: Vec<Vec<C64>> = excs.iter().map(|e| build_input(e, geom)).collect::<Result<_>>()?;
    let dim = h.dim();
    let xs: Vec<Vec<C64>> = if use_direct(solver, dim) {
        let lu = ShiftedLu::new(&h, z, None)?;
        let mut rhs = Mat::from_fn(dim, inputs.len(), |i, j| inputs[j][i]);
        lu.solve(&mut rhs)?;
        (0..inputs.len()).map(|j| (0..dim).map(|i| rhs[(i, j)]).collect()).collect()
    } else {
        inputs.iter().map(|b| cgls_shifted(&h, z, b, ITERATIVE_TOL, 50 * dim + 1000)).collect::<Result<_>>()?
    };
    xs.into_iter()
        .zip(&inputs)
        .map(|(x, inp)| {
            let t: Vec<C64> = x.iter().map(|v| v * C64::new(0.0, -kappa)).collect();
            let out: Vec<C64> = inp.iter().zip(&t).map(|(a, b)| a + b).collect();
            check_unitarity(inp, &out)?;
            Ok(t)
        })
        .collect()
}

/// How the operator along z is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportPath {
    /// `k_z` blocks when z translation invariance allows it.
    #[default]
    Auto,
    Blocks,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransportOptions {
    pub solver: SolverChoice,
    pub path: TransportPath,
    pub exec: Exec,
}

/// Transmission maps for several excitations sharing `E` and `κ`, for one
/// disorder realization (or none).
pub fn transmission_maps(
    params: &ModelParams,
    geom: &TransportGeometry,
    excs: &[Excitation],
    disorder: Option<(&DisorderSpec, u32)>,
    opts: &TransportOptions,
) -> Result<Vec<TransmissionMap>> {
    params.validate()?;
    geom.validate()?;
    check_shared(excs, geom)?;
    if let Some((spec, _)) = disorder {
        spec.validate()?;
    }
    let disorder = disorder.filter(|(s, _)| s.strength > 0.0);
    let full3d = matches!(disorder, Some((s, _)) if s.mode == DisorderMode::Full3d);
    let path = match opts.path {
        TransportPath::Auto if full3d => TransportPath::Full,
        TransportPath::Auto => TransportPath::Blocks,
        p => p,
    };
    if path == TransportPath::Blocks && full3d {
        return Err(Error::invalid("transport.path", "full-3d disorder breaks the k_z-block structure"));
    }
    let realization = disorder.map(|(_, r)| r);
    let fields = match path {
        TransportPath::Blocks => {
            let diag = disorder.map(|(s, r)| s.diagonal(r, geom));
            maps_by_blocks(params, geom, excs, diag.as_deref(), opts.solver, &opts.exec)?
        }
        _ => {
            let diag = disorder.map(|(s, r)| {
                let d = s.diagonal(r, geom);
                if s.mode == DisorderMode::ZUniform {
                    d.iter().copied().cycle().take(geom.layout().dim()).collect()
                } else {
                    d
                }
            });
            maps_full(params, geom, excs, diag.as_deref(), opts.solver)?
        }
    };
    Ok(fields
        .into_iter()
        .zip(excs)
        .map(|(field, &excitation)| TransmissionMap { geometry: *geom, excitation, realization, field })
        .collect())
}

pub fn transmission_map(
    params: &ModelParams,
    geom: &TransportGeometry,
    exc: &Excitation,
    disorder: Option<(&DisorderSpec, u32)>,
    opts: &TransportOptions,
) -> Result<TransmissionMap> {
    Ok(transmission_maps(params, geom, std::slice::from_ref(exc), disorder, opts)?.remove(0))
}

/// Mean intensity over `spec.realizations` realizations, reduced in
/// realization order so the result does not depend on the worker count.
pub fn disorder_average(
    params: &ModelParams,
    geom: &TransportGeometry,
    excs: &[Excitation],
    spec: &DisorderSpec,
    opts: &TransportOptions,
) -> Result<Vec<IntensityMap>> {
    spec.validate()?;
    let rs: Vec<u32> = (0..spec.realizations).collect();
    let inner = TransportOptions { exec: if rs.len() > 1 { Exec::Sequential } else { opts.exec }, ..*opts };
    let per: Vec<Vec<IntensityMap>> = opts.exec.try_map(&rs, |&r| {
        Ok::<_, Error>(
            transmission_maps(params, geom, excs, Some((spec, r)), &inner)?
                .iter()
                .map(TransmissionMap::intensity)
                .collect(),
        )
    })?;
    let scale = 1.0 / f64::from(spec.realizations);
    let mut acc: Vec<IntensityMap> = per[0].clone();
    for m in &mut acc {
        m.intensity.iter_mut().for_each(|v| *v = 0.0);
    }
    for maps in &per {
        for (a, m) in acc.iter_mut().zip(maps) {
            for (x, y) in a.intensity.iter_mut().zip(&m.intensity) {
                *x += y;
            }
        }
    }
    for a in &mut acc {
        a.intensity.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(acc)
}

/// Intensity-weighted mean of the periodic offset `Δz ∈ (−nz/2, nz/2]` from
/// `z_c` along the hinge column of `corner` (summed over sublattices).
pub fn displacement_metric(map: &IntensityMap, corner: Corner, z_c: usize) -> Result<f64> {
    let g = map.geometry;
    let (x, y) = corner.site(g.nx, g.ny);
    displacement_of_profile(&map.column(x, y), z_c)
}

/// [`displacement_metric`] for a bare column profile.
pub fn displacement_of_profile(column: &[f64], z_c: usize) -> Result<f64> {
    let nz = column.len() as i64;
    let total: f64 = column.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Undefined { reason: "zero intensity on the hinge column".into() });
    }
    let half = nz / 2;
    let moment: f64 = column
        .iter()
        .enumerate()
        .map(|(z, w)| {
            let mut d = (z as i64 - z_c as i64).rem_euclid(nz);
            if d > half {
                d -= nz;
            }
            w * d as f64
        })
        .sum();
    Ok(moment / total)
}

/// Momentum spacing of the z grid, for reporting.
pub fn kz_spacing(nz: usize) -> f64 {
    TAU / nz as f64
}
