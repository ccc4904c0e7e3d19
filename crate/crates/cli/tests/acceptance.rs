//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit on any failure.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use antichiral_cli::{execute, preset, presets, Payload, RunConfig, Task};
use antichiral_core::boundary::{hinge_intervals, hinge_intervals_numeric};
use antichiral_core::lattice::{
    anticommutator, bloch_3d, eigvals4, gamma_algebra, momentum_grid, projector_x0, projector_y0, real_space,
    real_space_block, symmetry_residual, BoundarySpec, BuildOptions, Corner, ModelParams, Momentum, SymmetryOp, Tilt,
    M4,
};
use antichiral_core::linalg::eigh;
use antichiral_core::photonic::{
    effective_hamiltonian, pinhole_leakage, synthesize, unitary_exp, verify_against_lattice, CMat, OpticalElement,
    SynthesisOptions,
};
use antichiral_core::spectra::{gap_closings, min_bulk_gap, min_bulk_gap_grid};
use antichiral_core::topology::{invariant_sweep, quantization_error, KzInvariant, WilsonGrid};
use antichiral_core::transport::{
    disorder_average, displacement_metric, scattering, transmission_maps, DisorderMode, DisorderSpec, Excitation,
    SolverChoice, TransportGeometry, TransportOptions,
};
use antichiral_core::{Exec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("took {:.1} s, limit {:.0} s", t.as_secs_f64(), limit.as_secs_f64()));
    }
    Ok(())
}

fn momenta(n: usize, seed: u64) -> Vec<Momentum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Momentum::new(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))).collect()
}

fn fig2g() -> ModelParams {
    ModelParams { j_p: 1.0, tilt: Tilt::uniform(0.5), ..Default::default() }
}

fn fig2h() -> ModelParams {
    ModelParams { j_p: 1.0, tilt: Tilt::new(-0.5, 0.5, 0.4, 0.5), ..Default::default() }
}

fn algebra() -> Outcome {
    let start = Instant::now();
    let g = gamma_algebra();
    let mut worst: f64 = 0.0;
    for i in 1..=4 {
        for j in 1..=4 {
            let want = if i == j { M4::identity() * C64::new(2.0, 0.0) } else { M4::zeros() };
            worst = worst.max((anticommutator(g.g(i), g.g(j)) - want).norm());
        }
    }
    for p in [projector_x0(), projector_y0()] {
        worst = worst.max((p * p - p).norm()).max((p.adjoint() - p).norm());
        ensure!((p.trace().re - 2.0).abs() < 1e-12, "projector rank {}", p.trace().re);
    }
    let ks = momenta(128, 17);
    let untilted = ModelParams::default().untilted();
    let c4 = ModelParams { j_p: 1.0, tilt: Tilt::uniform(0.5), ..Default::default() };
    let uniform = ModelParams { j_p: 0.7, tilt: Tilt::uniform(0.8), ..Default::default() };
    let residuals = [
        ("chiral u=0", symmetry_residual(&untilted, SymmetryOp::Chiral, &ks)),
        ("Mx u=0", symmetry_residual(&untilted, SymmetryOp::Mx, &ks)),
        ("My u=0", symmetry_residual(&untilted, SymmetryOp::My, &ks)),
        ("C4 J'=J", symmetry_residual(&c4, SymmetryOp::C4, &ks)),
        ("ΞK uniform u", symmetry_residual(&uniform, SymmetryOp::ChiralTrs, &ks)),
    ];
    for (name, r) in residuals {
        ensure!(r < 1e-10, "{name} residual {r:e}");
        worst = worst.max(r);
    }
    // ΞK: spectrum at k is minus the spectrum at −k
    for &k in &ks {
        let (a, b) = (eigvals4(&bloch_3d(&uniform, k)), eigvals4(&bloch_3d(&uniform, k.neg())));
        for i in 0..4 {
            worst = worst.max((a[i] + b[3 - i]).abs());
        }
    }
    ensure!(worst < 1e-10, "worst residual {worst:e}");
    within(Duration::from_secs(1), start)?;
    Ok(format!("{} momenta, worst residual {worst:.1e}", ks.len()))
}

fn bloch_oracle() -> Outcome {
    let start = Instant::now();
    let n = 8;
    let p = ModelParams { j_p: 0.8, tilt: Tilt::new(0.5, -0.2, 0.4, 0.1), ..Default::default() };
    let blocks = real_space(&p, &BoundarySpec::all_periodic(n)).map_err(|e| e.to_string())?;
    let mut real = Vec::new();
    for b in &blocks {
        real.extend(eigh(&b.matrix, false, 0.0).map_err(|e| e.to_string())?.values);
    }
    let g = momentum_grid(n);
    let mut bloch = Vec::new();
    for &kx in &g {
        for &ky in &g {
            for &kz in &g {
                bloch.extend(eigvals4(&bloch_3d(&p, Momentum::new(kx, ky, kz))));
            }
        }
    }
    ensure!(real.len() == bloch.len() && real.len() == 4 * n * n * n, "{} vs {} eigenvalues", real.len(), bloch.len());
    let err = real.iter().zip(&bloch).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(err < 1e-10, "max deviation {err:e}");
    within(Duration::from_secs(10), start)?;
    Ok(format!("8×8×8, max deviation {err:.1e}"))
}

fn run_preset(name: &str, workers: usize) -> Result<(Task, Payload), String> {
    let mut c: RunConfig = preset(name).map_err(|e| e.to_string())?;
    c.run.workers = workers;
    let task = c.task().ok_or_else(|| format!("{name}: no task block"))?;
    Ok((task, execute(task, &c).map_err(|e| format!("{name}: {e}"))?))
}

fn column<'a>(p: &'a Payload, table: &str, col: &str) -> Vec<&'a serde_json::Value> {
    let t = p.table(table).expect("table present");
    let i = t.columns.iter().position(|c| *c == col).expect("column present");
    t.rows.iter().map(|r| &r[i]).collect()
}

/// Hinge rows of a bands table as `(k_z, corner, energy)`.
fn hinge_rows(p: &Payload) -> Vec<(f64, Corner, f64)> {
    let kz = column(p, "bands", "kz");
    let tag = column(p, "bands", "tag");
    let e = column(p, "bands", "energy");
    let mut out = Vec::new();
    for i in 0..kz.len() {
        if let Some(label) = tag[i].as_str().and_then(|t| t.strip_prefix("hinge:")) {
            let c = Corner::ALL.into_iter().find(|c| c.label() == label).expect("corner label");
            out.push((kz[i].as_f64().unwrap(), c, e[i].as_f64().unwrap()));
        }
    }
    out
}

fn check_hinge_branches(name: &str, p: &Payload, params: &ModelParams) -> Result<f64, String> {
    let rows = hinge_rows(p);
    let at_pi: Vec<_> = rows.iter().filter(|r| (r.0 - PI).abs() < 1e-12).collect();
    ensure!(at_pi.len() == 4, "{name}: {} hinge states at k_z=π", at_pi.len());
    for c in Corner::ALL {
        ensure!(at_pi.iter().any(|r| r.1 == c), "{name}: no {c:?} hinge state at π");
    }
    let mut worst = at_pi.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    ensure!(worst < 1e-6, "{name}: |E| at π up to {worst:e}");
    let (lo, hi) = (PI / 3.0 + 0.3, 5.0 * PI / 3.0 - 0.3);
    let interior: Vec<f64> = momentum_grid(60).into_iter().filter(|k| *k > lo && *k < hi).collect();
    for &k in &interior {
        for c in Corner::ALL {
            let here: Vec<_> = rows.iter().filter(|r| r.1 == c && (r.0 - k).abs() < 1e-12).collect();
            ensure!(!here.is_empty(), "{name}: no {c:?} hinge state at k_z={k:.4}");
            let want = params.tilt.get(c.host()) * k.sin();
            for r in here {
                let d = (r.2 - want).abs();
                ensure!(d < 1e-5, "{name}: {c:?} at k_z={k:.4}: {} vs {want}", r.2);
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

fn hinge_dispersion(cache: &mut Option<Payload>) -> Outcome {
    let (_, g) = run_preset("fig2g", 1)?;
    let wg = check_hinge_branches("fig2g", &g, &fig2g())?;
    *cache = Some(g);
    let (_, h) = run_preset("fig2h", 1)?;
    let wh = check_hinge_branches("fig2h", &h, &fig2h())?;
    Ok(format!("N=24, 60 k_z; worst deviation fig2g {wg:.1e}, fig2h {wh:.1e} (A: −0.5 sin, C: 0.4 sin)"))
}

fn dirac_points() -> Outcome {
    let grid = momentum_grid(60);
    let c = gap_closings(&ModelParams { j_p: 1.0, ..Default::default() }, &grid, 60, 1e-6);
    ensure!(c.len() == 2, "{} closings for J'=J", c.len());
    let d = [(c[0].kz - PI / 3.0).abs(), (c[1].kz - 5.0 * PI / 3.0).abs()];
    ensure!(d[0] < 1e-8 && d[1] < 1e-8, "closings at {} and {}", c[0].kz, c[1].kz);
    let ins = ModelParams::default();
    ensure!(gap_closings(&ins, &grid, 60, 1e-6).is_empty(), "J'=0 has closings");
    let fine = momentum_grid(720);
    let min = fine.iter().map(|&k| min_bulk_gap(&ins, k)).fold(f64::INFINITY, f64::min);
    ensure!(min > 0.0 && (min - 1.0).abs() < 1e-9, "J'=0 minimum gap {min}");
    let coarse = momentum_grid(24).iter().map(|&k| min_bulk_gap_grid(&ins, k, 24)).fold(f64::INFINITY, f64::min);
    ensure!(coarse >= min - 1e-12, "grid gap {coarse} below analytic {min}");
    Ok(format!("J'=J closings off by {:.1e}, {:.1e}; J'=0 minimum gap {min:.6}", d[0], d[1]))
}

fn topology() -> Outcome {
    let start = Instant::now();
    let kz = momentum_grid(60);
    let step = TAU / 60.0;
    let mut report = Vec::new();
    let mut offset: f64 = 0.0;
    for j_p in [0.0, 0.6, 1.0, 2.2] {
        let p = ModelParams { j_p, ..Default::default() };
        let set = hinge_intervals(&p).map_err(|e| e.to_string())?;
        let numeric = hinge_intervals_numeric(&p).map_err(|e| e.to_string())?;
        for (a, b) in set.endpoints().iter().zip(numeric.endpoints()) {
            ensure!((a - b).abs() < 1e-9, "J'={j_p}: endpoint {a} vs root {b}");
        }
        let sweep = invariant_sweep(&p, &kz, WilsonGrid { n: 60 }, &Exec::default()).map_err(|e| e.to_string())?;
        let (mut half, mut critical) = (0, 0);
        for r in &sweep {
            match r {
                KzInvariant::Defined(d) => {
                    ensure!(quantization_error(d.q_xy) < 1e-6, "J'={j_p} k_z={:.4}: Q={}", d.kz, d.q_xy);
                    let want = if set.contains(d.kz) { 0.5 } else { 0.0 };
                    ensure!((d.q_xy - want).abs() < 1e-6, "J'={j_p} k_z={:.4}: Q={} want {want}", d.kz, d.q_xy);
                    half += usize::from(want == 0.5);
                }
                KzInvariant::Critical { kz, .. } => {
                    let g1 = p.gamma1(*kz).abs() - p.lambda.abs();
                    let g2 = p.gamma2(*kz).abs() - p.lambda_p.abs();
                    ensure!(g1.abs() < 1e-9 || g2.abs() < 1e-9, "J'={j_p}: critical at {kz} off any gap closing");
                    critical += 1;
                }
            }
        }
        if j_p == 2.2 {
            let b: Vec<(f64, f64)> = set.intervals.iter().map(|i| (i.start, i.end)).collect();
            let want = [(1.34160, 2.32220), (3.96099, 4.94159)];
            ensure!(b.len() == 2, "J'=2.2: {} intervals", b.len());
            for (g, w) in b.iter().zip(want) {
                ensure!((g.0 - w.0).abs() < step && (g.1 - w.1).abs() < step, "J'=2.2: {g:?} vs {w:?}");
                offset = offset.max((g.0 - w.0).abs()).max((g.1 - w.1).abs());
            }
            // Q on the grid switches within one spacing of each boundary
            for &e in &set.endpoints() {
                let near: Vec<_> = sweep.iter().filter(|r| (r.kz() - e).abs() <= step).collect();
                let qs: Vec<Option<f64>> = near.iter().map(|r| r.data().map(|d| d.q_xy)).collect();
                let has = |v: f64| qs.iter().any(|q| q.is_some_and(|q| (q - v).abs() < 1e-6));
                ensure!(has(0.0) && has(0.5), "J'=2.2: no Q step within {step:.3} of {e:.5}: {qs:?}");
            }
        }
        report.push(format!("J'={j_p}: {half} half, {critical} critical"));
    }
    within(Duration::from_secs(600), start)?;
    Ok(format!("{}; J'=2.2 boundaries within {offset:.1e} of the listed values", report.join("; ")))
}

fn metrics(p: &ModelParams, g: &TransportGeometry) -> Result<Vec<f64>, String> {
    let excs: Vec<Excitation> = Corner::ALL.iter().map(|&c| Excitation::hinge(c, g.nz)).collect();
    let maps = transmission_maps(p, g, &excs, None, &TransportOptions::default()).map_err(|e| e.to_string())?;
    maps.iter()
        .map(|m| displacement_metric(&m.intensity(), m.excitation.corner, m.excitation.z_c).map_err(|e| e.to_string()))
        .collect()
}

fn block_unitarity(p: &ModelParams, g: &TransportGeometry, diag: Option<&[f64]>) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for kz in [0.4, PI / 2.0, PI, 4.9] {
        let mut h = real_space_block(p, &g.boundary(), Momentum::new(0.0, 0.0, kz), &BuildOptions::sparse())
            .map_err(|e| e.to_string())?
            .matrix;
        if let Some(d) = diag {
            h = h.add_diagonal(d);
        }
        for c in Corner::ALL {
            let (x, y) = c.site(g.nx, g.ny);
            let mut psi = vec![C64::new(0.0, 0.0); h.dim()];
            psi[(x * g.ny + y) * 4 + c.host().index()] = C64::new(0.6, 0.8);
            let (out, _) = scattering(0.0, &h, 0.1, &psi, SolverChoice::Direct).map_err(|e| e.to_string())?;
            let n = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max((n - 1.0).abs());
        }
    }
    Ok(worst)
}

fn transport() -> Outcome {
    let start = Instant::now();
    let g = TransportGeometry::default();
    let names = ["A", "B", "C", "D"];
    let clean = metrics(&fig2g(), &g)?;
    ensure!(clean.iter().all(|d| d.signum() == clean[0].signum() && *d != 0.0), "clean signs {clean:?}");
    let flipped = metrics(&ModelParams { tilt: Tilt::new(-0.5, 0.5, 0.5, 0.5), ..fig2g() }, &g)?;
    for c in Corner::ALL {
        let i = c.index();
        let flips = flipped[i].signum() != clean[i].signum();
        ensure!(
            flips == (c.host().index() == 0),
            "u_A flip: {} hinge {} → {}",
            names[c.host().index()],
            clean[i],
            flipped[i]
        );
    }
    let reduced = metrics(&ModelParams { tilt: Tilt::new(0.5, 0.5, 0.4, 0.5), ..fig2g() }, &g)?;
    let ci = Corner::ALL.iter().position(|c| c.host().index() == 2).unwrap();
    ensure!(
        reduced.iter().enumerate().all(|(i, d)| i == ci || d.abs() > reduced[ci].abs()),
        "u_C=0.4 is not the smallest magnitude: {reduced:?}"
    );
    let excs: Vec<Excitation> = Corner::ALL.iter().map(|&c| Excitation::hinge(c, g.nz)).collect();
    let spec = DisorderSpec { strength: 0.2, mode: DisorderMode::ZUniform, realizations: 50, seed: 2024 };
    for (name, p, reference) in [("fig2g", fig2g(), clean.clone()), ("fig2h", fig2h(), metrics(&fig2h(), &g)?)] {
        let avg = disorder_average(&p, &g, &excs, &spec, &TransportOptions::default()).map_err(|e| e.to_string())?;
        for (m, r) in avg.iter().zip(&reference) {
            let d = displacement_metric(m, m.excitation.corner, m.excitation.z_c).map_err(|e| e.to_string())?;
            ensure!(d.signum() == r.signum(), "{name} W=0.2: {:?} {d} vs clean {r}", m.excitation.corner);
        }
    }
    let mut worst = block_unitarity(&fig2g(), &g, None)?;
    worst = worst.max(block_unitarity(&fig2h(), &g, None)?);
    let d = spec.diagonal(0, &g);
    worst = worst.max(block_unitarity(&fig2g(), &g, Some(&d))?);
    ensure!(worst < 1e-8, "unitarity deviation {worst:e}");
    within(Duration::from_secs(600), start)?;
    Ok(format!(
        "clean {:.3?}; A-flip {:.3?}; u_C=0.4 {:.3?}; W=0.2×50 signs kept; unitarity {worst:.1e}",
        clean, flipped, reduced
    ))
}

fn device() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut log_err: f64 = 0.0;
    for _ in 0..20 {
        let n = 8;
        let a = CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let mut h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        let t_r: f64 = rng.gen_range(0.3..2.0);
        let spec = h.clone().symmetric_eigenvalues().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        h *= C64::new(0.9 * PI / (t_r * spec), 0.0);
        let back = effective_hamiltonian(&unitary_exp(&h, t_r), t_r).map_err(|e| e.to_string())?;
        log_err = log_err.max((back - &h).iter().fold(0.0, |m, z| m.max(z.norm())));
    }
    ensure!(log_err < 1e-10, "log∘exp deviation {log_err:e}");
    let params = fig2g();
    let grid = momentum_grid(24);
    let eps = [0.02, 0.01, 0.005];
    let mut errs = Vec::new();
    for &e in &eps {
        let opts = SynthesisOptions { epsilon: e, ..Default::default() };
        let r = verify_against_lattice(&params, &opts, &grid, &Exec::default()).map_err(|e| e.to_string())?;
        let rt = synthesize(&params, &opts).map_err(|e| e.to_string())?;
        let gv = rt
            .left
            .iter()
            .find_map(|el| match el {
                OpticalElement::Leom { a, .. } => Some(*a),
                _ => None,
            })
            .ok_or("no L-EOM in the round trip")?;
        let j_target = gv * rt.omega_fsr() / TAU;
        let rel = (r.fit.j - j_target).abs() / j_target.abs();
        ensure!(rel <= 5.0 * e, "ε={e}: J {} vs {j_target}, relative {rel:e}", r.fit.j);
        errs.push(r.max_total_error);
    }
    let slope = antichiral_cli::tasks::log_log_slope(&eps, &errs).ok_or("no slope from the error sweep")?;
    ensure!((slope - 2.0).abs() <= 0.3, "slope {slope} from {errs:?}");
    let opts = SynthesisOptions { epsilon: 0.01, pinhole: Some(1.0), ..Default::default() };
    let mut leak: f64 = 0.0;
    for &kz in &grid {
        leak = leak.max(pinhole_leakage(&params, &opts, kz).map_err(|e| e.to_string())?);
    }
    ensure!(leak < 1e-3, "pinhole leakage {leak:e}");
    within(Duration::from_secs(60), start)?;
    Ok(format!("log∘exp {log_err:.1e}; slope {slope:.4}; leakage {leak:.1e}"))
}

fn csv_bytes(p: &Payload) -> Result<Vec<Vec<u8>>, String> {
    p.tables.iter().map(|t| t.to_csv().map_err(|e| e.to_string())).collect()
}

/// Hinge-geometry band presets other than fig2g cost minutes per run and are not repeated here.
const HEAVY: [&str; 6] = ["fig2e", "fig2h", "figa1e", "figa1f", "figa1g", "figa1h"];

fn determinism(fig2g_sequential: Option<Payload>) -> Outcome {
    let mut checked = Vec::new();
    for name in presets::names().filter(|n| !HEAVY.contains(n)) {
        let base = match (name, &fig2g_sequential) {
            ("fig2g", Some(p)) => p.clone(),
            _ => run_preset(name, 1)?.1,
        };
        let want = csv_bytes(&base)?;
        ensure!(!want.is_empty(), "{name}: no tables");
        let counts: &[usize] = if name == "fig2g" { &[3] } else { &[3, 0] };
        for &w in counts {
            let got = csv_bytes(&run_preset(name, w)?.1)?;
            ensure!(got == want, "{name}: CSV differs at workers={w}");
        }
        checked.push(name);
    }
    Ok(format!("{} presets byte-identical across worker counts", checked.len()))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())),
    }
}

fn main() {
    let mut fig2g_bands = None;
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Option<Payload>) -> Outcome>)> = vec![
        ("1 algebra", Box::new(|_| algebra())),
        ("2 bloch/real-space oracle", Box::new(|_| bloch_oracle())),
        ("3 hinge dispersion", Box::new(hinge_dispersion)),
        ("4 dirac points", Box::new(|_| dirac_points())),
        ("5 topology", Box::new(|_| topology())),
        ("6 transport antichirality", Box::new(|_| transport())),
        ("7 device verification", Box::new(|_| device())),
        ("8 determinism", Box::new(|c| determinism(c.take()))),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let r = guarded(|| f(&mut fig2g_bands));
        let t = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("[PASS] {name}: {detail} ({t:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why} ({t:.1} s)");
            }
        }
    }
    println!("acceptance: {} of 8 passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
