//! Mixed-boundary diagonalization, state classification and gap closings.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::lattice::{
    bloch_3d, eigvals4, real_space_block, BoundarySpec, BuildOptions, Corner, Face, ModelParams, Momentum,
};
use crate::linalg::{eigh, EigenVectors};
use crate::roots::{bisect, golden_min};
use crate::{Error, Result, C64};

/// Rule that tags eigenstates as hinge, surface or bulk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationRule {
    /// Corner region: the `r_c × r_c` cells nearest each corner; only the
    /// hosting sublattice counts toward the corner weight, the others against it.
    pub corner_radius: usize,
    /// Face region: the outermost `r_f` layers of each face.
    pub face_depth: usize,
    /// Minimum weight inside a region for a tag.
    pub weight_min: f64,
    /// Eigenvalues closer than this are localized jointly before tagging:
    /// the cluster is rotated into eigenvectors of the region-label operator,
    /// and each rotated state carries its Rayleigh-quotient energy.
    pub cluster_tol: f64,
}

impl Default for LocalizationRule {
    fn default() -> Self {
        LocalizationRule { corner_radius: 3, face_depth: 3, weight_min: 0.6, cluster_tol: 1e-3 }
    }
}

/// Larger near-degenerate clusters are left as returned by the eigensolver.
const MAX_CLUSTER: usize = 8;

impl LocalizationRule {
    pub fn validate(&self) -> Result<()> {
        if self.corner_radius < 1 {
            return Err(Error::invalid("spectra.rule.corner_radius", "must be at least 1"));
        }
        if self.face_depth < 1 {
            return Err(Error::invalid("spectra.rule.face_depth", "must be at least 1"));
        }
        if !(self.weight_min > 0.5 && self.weight_min <= 1.0) {
            return Err(Error::invalid("spectra.rule.weight_min", "must lie in (0.5, 1]"));
        }
        if !(self.cluster_tol >= 0.0 && self.cluster_tol.is_finite()) {
            return Err(Error::invalid("spectra.rule.cluster_tol", "must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum StateTag {
    Hinge(Corner),
    Surface(Face),
    Bulk,
}

impl StateTag {
    pub fn label(&self) -> String {
        match self {
            StateTag::Hinge(c) => format!("hinge:{}", c.label()),
            StateTag::Surface(f) => format!("surface:{}", f.label()),
            StateTag::Bulk => "bulk".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateInfo {
    pub energy: f64,
    pub tag: StateTag,
    /// Weight inside the tagged region; for bulk states, the weight outside
    /// every face region.
    pub weight: f64,
    /// Per corner, within `r_c` cells: weight on the hosting sublattice minus
    /// weight on the other three, clamped to `[0, 1]`.
    pub corner_weights: [f64; 4],
    pub face_weights: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct BandSweep {
    pub nx: usize,
    pub ny: usize,
    pub kz: Vec<f64>,
    /// Exact eigenvalues, ascending, per `k_z`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Classified states per `k_z`, sorted by energy.
    pub states: Vec<Vec<StateInfo>>,
    pub eigenvectors: Option<Vec<EigenVectors>>,
}

impl BandSweep {
    /// `(k_z index, state)` pairs tagged as hinge states at `corner`.
    pub fn hinge_states(&self, corner: Corner) -> impl Iterator<Item = (usize, &StateInfo)> + '_ {
        self.states
            .iter()
            .enumerate()
            .flat_map(move |(i, v)| v.iter().filter(move |s| s.tag == StateTag::Hinge(corner)).map(move |s| (i, s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub keep_vectors: bool,
    pub exec: Exec,
}

struct Regions {
    /// Per basis index: corner id (0..4) within `r_c` cells, else none.
    corner: Vec<Option<u8>>,
    /// Per basis index: the site is on its corner's hosting sublattice.
    host: Vec<bool>,
    /// Per basis index: bitmask over faces.
    faces: Vec<u8>,
}

impl Regions {
    fn new(nx: usize, ny: usize, rule: &LocalizationRule) -> Self {
        let dim = 4 * nx * ny;
        let mut corner = vec![None; dim];
        let mut host = vec![false; dim];
        let mut faces = vec![0u8; dim];
        let (rc, rf) = (rule.corner_radius, rule.face_depth);
        for x in 0..nx {
            for y in 0..ny {
                let lo_x = x < rc;
                let hi_x = x + rc >= nx;
                let lo_y = y < rc;
                let hi_y = y + rc >= ny;
                let c = match (lo_x, hi_x, lo_y, hi_y) {
                    (true, _, true, _) => Some(0),
                    (_, true, true, _) => Some(1),
                    (true, _, _, true) => Some(2),
                    (_, true, _, true) => Some(3),
                    _ => None,
                };
                let mut f = 0u8;
                f |= u8::from(x < rf);
                f |= u8::from(x + rf >= nx) << 1;
                f |= u8::from(y < rf) << 2;
                f |= u8::from(y + rf >= ny) << 3;
                for s in 0..4 {
                    let i = (x * ny + y) * 4 + s;
                    corner[i] = c;
                    host[i] = c.is_some_and(|c: u8| Corner::ALL[c as usize].host().index() == s);
                    faces[i] = f;
                }
            }
        }
        Regions { corner, host, faces }
    }

    /// Region label used to split near-degenerate clusters.
    fn label(&self, i: usize) -> f64 {
        match self.corner[i] {
            Some(c) => 1.0 + c as f64,
            None => match self.faces[i] {
                0 => 0.0,
                f => 5.0 + f.trailing_zeros() as f64,
            },
        }
    }

    fn weights(&self, abs2: impl Iterator<Item = f64>) -> ([f64; 4], [f64; 4]) {
        let (mut cw, mut fw) = ([0.0; 4], [0.0; 4]);
        for (i, w) in abs2.enumerate() {
            // hinge modes vanish off the hosting sublattice
            if let Some(c) = self.corner[i] {
                cw[c as usize] += if self.host[i] { w } else { -w };
            }
            let f = self.faces[i];
            for (b, slot) in fw.iter_mut().enumerate() {
                if f & (1 << b) != 0 {
                    *slot += w;
                }
            }
        }
        (cw.map(|x: f64| x.clamp(0.0, 1.0)), fw.map(|x: f64| x.min(1.0)))
    }

    fn bulk_weight(&self, abs2: impl Iterator<Item = f64>) -> f64 {
        abs2.enumerate().filter(|(i, _)| self.faces[*i] == 0).map(|(_, w)| w).sum::<f64>().min(1.0)
    }
}

fn classify(rule: &LocalizationRule, reg: &Regions, energy: f64, v: &[C64]) -> StateInfo {
    let (cw, fw) = reg.weights(v.iter().map(|z| z.norm_sqr()));
    let argmax = |w: &[f64; 4]| (0..4).fold(0, |b, i| if w[i] > w[b] { i } else { b });
    let (ci, fi) = (argmax(&cw), argmax(&fw));
    let (tag, weight) = if cw[ci] >= rule.weight_min {
        (StateTag::Hinge(Corner::ALL[ci]), cw[ci])
    } else if fw[fi] >= rule.weight_min {
        (StateTag::Surface(Face::ALL[fi]), fw[fi])
    } else {
        (StateTag::Bulk, reg.bulk_weight(v.iter().map(|z| z.norm_sqr())))
    };
    StateInfo { energy, tag, weight, corner_weights: cw, face_weights: fw }
}

/// Tags every eigenstate; near-degenerate clusters are first rotated into
/// region-localized combinations.
fn classify_all(rule: &LocalizationRule, reg: &Regions, values: &[f64], vecs: &EigenVectors) -> Vec<StateInfo> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < rule.cluster_tol {
            end += 1;
        }
        let m = end - start;
        if (2..=MAX_CLUSTER).contains(&m) {
            let cols: Vec<Vec<C64>> = (start..end).map(|j| vecs.column(j)).collect();
            let q = DMatrix::<C64>::from_fn(m, m, |a, b| {
                cols[a].iter().zip(&cols[b]).enumerate().map(|(i, (va, vb))| va.conj() * vb * reg.label(i)).sum()
            });
            let eig = SymmetricEigen::new(q);
            for c in 0..m {
                let w: Vec<C64> = (0..m).map(|a| eig.eigenvectors[(a, c)]).collect();
                let energy: f64 = (0..m).map(|a| w[a].norm_sqr() * values[start + a]).sum();
                let dim = cols[0].len();
                let v: Vec<C64> = (0..dim).map(|i| (0..m).map(|a| cols[a][i] * w[a]).sum()).collect();
                out.push(classify(rule, reg, energy, &v));
            }
        } else {
            for j in start..end {
                out.push(classify(rule, reg, values[j], &vecs.column(j)));
            }
        }
        start = end;
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    out
}

/// Diagonalizes the open `nx × ny` cross-section at every `k_z` of `kz_grid`.
pub fn band_sweep(
    params: &ModelParams,
    nx: usize,
    ny: usize,
    kz_grid: &[f64],
    rule: &LocalizationRule,
    opts: &SweepOptions,
) -> Result<BandSweep> {
    params.validate()?;
    rule.validate()?;
    if kz_grid.is_empty() {
        return Err(Error::invalid("spectra.kz_grid", "must be nonempty"));
    }
    let boundary = BoundarySpec::hinge_geometry(nx, ny, 2);
    boundary.validate()?;
    let reg = Regions::new(nx, ny, rule);
    let per_kz = opts.exec.try_map(kz_grid, |&kz| -> Result<_> {
        let op = real_space_block(params, &boundary, Momentum::new(0.0, 0.0, kz), &BuildOptions::default())?;
        let e = eigh(&op.matrix, true, kz)?;
        let vecs = e.vectors.expect("vectors requested");
        let states = classify_all(rule, &reg, &e.values, &vecs);
        Ok((e.values, states, opts.keep_vectors.then_some(vecs)))
    })?;
    let mut sweep = BandSweep {
        nx,
        ny,
        kz: kz_grid.to_vec(),
        eigenvalues: Vec::with_capacity(kz_grid.len()),
        states: Vec::with_capacity(kz_grid.len()),
        eigenvectors: opts.keep_vectors.then(Vec::new),
    };
    for (vals, states, vecs) in per_kz {
        sweep.eigenvalues.push(vals);
        sweep.states.push(states);
        if let (Some(all), Some(v)) = (sweep.eigenvectors.as_mut(), vecs) {
            all.push(v);
        }
    }
    Ok(sweep)
}

/// Eigenvalues only, for the open cross-section at one `k_z`.
pub fn obc_spectrum(params: &ModelParams, nx: usize, ny: usize, kz: f64) -> Result<Vec<f64>> {
    let boundary = BoundarySpec::hinge_geometry(nx, ny, 2);
    let op = real_space_block(params, &boundary, Momentum::new(0.0, 0.0, kz), &BuildOptions::default())?;
    Ok(eigh(&op.matrix, false, kz)?.values)
}

/// The four eigenpairs of smallest `|E|` of the open 2D model (`J`, `J'` and
/// tilt ignored), ordered by `|E|`.
pub fn corner_modes_2d(params: &ModelParams, nx: usize, ny: usize) -> Result<Vec<(f64, Vec<C64>)>> {
    let flat = ModelParams { j: 0.0, j_p: 0.0, ..params.untilted() };
    let boundary = BoundarySpec::hinge_geometry(nx, ny, 2);
    let op = real_space_block(&flat, &boundary, Momentum::default(), &BuildOptions::default())?;
    let e = eigh(&op.matrix, true, 0.0)?;
    let vecs = e.vectors.expect("vectors requested");
    let mut idx: Vec<usize> = (0..e.values.len()).collect();
    idx.sort_by(|&a, &b| e.values[a].abs().total_cmp(&e.values[b].abs()));
    Ok(idx.into_iter().take(4).map(|j| (e.values[j], vecs.column(j))).collect())
}

/// Smallest direct gap between bands 2 and 3 of the untilted Bloch
/// Hamiltonian over all `(k_x, k_y)` at fixed `k_z`:
/// `2 √((|γ₁|−|λ|)² + (|γ₂|−|λ'|)²)`.
pub fn min_bulk_gap(params: &ModelParams, kz: f64) -> f64 {
    let a = params.gamma1(kz).abs() - params.lambda.abs();
    let b = params.gamma2(kz).abs() - params.lambda_p.abs();
    2.0 * a.hypot(b)
}

/// Same as [`min_bulk_gap`] but measured on an `n × n` momentum grid.
pub fn min_bulk_gap_grid(params: &ModelParams, kz: f64, n: usize) -> f64 {
    let p = params.untilted();
    let grid = crate::lattice::momentum_grid(n);
    let mut best = f64::INFINITY;
    for &kx in &grid {
        for &ky in &grid {
            let e = eigvals4(&bloch_3d(&p, Momentum::new(kx, ky, kz)));
            best = best.min(e[2] - e[1]);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapClosing {
    pub kz: f64,
    /// Analytic minimum direct gap at the refined `k_z`.
    pub gap: f64,
    /// Minimum direct gap on the `(k_x, k_y)` check grid.
    pub grid_gap: f64,
}

/// `k_z` values where the bulk gap closes, i.e. `|γ₁(k_z)| = |λ|` and
/// `|γ₂(k_z)| = |λ'|` hold together.
///
/// Sign changes of `|γ₁|−|λ|` and `|γ₂|−|λ'|` on `kz_grid` are refined by
/// bisection; grid-local minima of the gap without a sign change (tangential
/// touching) by golden-section search. Roots with analytic gap below `tol`
/// are returned in ascending order in `[0, 2π)`, each with the gap checked on
/// a `kxy_resolution²` momentum grid.
pub fn gap_closings(params: &ModelParams, kz_grid: &[f64], kxy_resolution: usize, tol: f64) -> Vec<GapClosing> {
    use std::f64::consts::TAU;
    let f1 = |k: f64| params.gamma1(k).abs() - params.lambda.abs();
    let f2 = |k: f64| params.gamma2(k).abs() - params.lambda_p.abs();
    let g = |k: f64| min_bulk_gap(params, k);
    let mut grid: Vec<f64> = kz_grid.iter().map(|k| k.rem_euclid(TAU)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Vec::new();
    }
    let n = grid.len();
    let mut cands = Vec::new();
    for i in 0..n {
        let a = grid[i];
        let b = if i + 1 < n { grid[i + 1] } else { grid[0] + TAU };
        for f in [&f1 as &dyn Fn(f64) -> f64, &f2] {
            let (fa, fb) = (f(a), f(b));
            if fa == 0.0 {
                cands.push(a);
            } else if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
                cands.push(bisect(f, a, b));
            }
        }
        let prev = if i > 0 { grid[i - 1] } else { grid[n - 1] - TAU };
        if g(a) <= g(prev) && g(a) <= g(b) {
            cands.push(golden_min(g, prev, b));
        }
    }
    let mut roots: Vec<f64> = cands.into_iter().map(|k| k.rem_euclid(TAU)).filter(|&k| g(k) < tol).collect();
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<GapClosing> = Vec::new();
    for k in roots {
        let dup = out.iter().any(|r| {
            let d = (r.kz - k).abs();
            d.min(TAU - d) < 1e-9
        });
        if !dup {
            out.push(GapClosing { kz: k, gap: g(k), grid_gap: min_bulk_gap_grid(params, k, kxy_resolution) });
        }
    }
    out
}
