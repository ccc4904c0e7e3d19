//! Task drivers: config in, tables out.

use antichiral_core::boundary::{hinge_intervals, hinge_mode};
use antichiral_core::lattice::{bloch_3d, eigvals4, momentum_grid, Axis, ModelParams, Momentum, Tilt};
use antichiral_core::photonic::{pinhole_leakage, verify_against_lattice};
use antichiral_core::spectra::{band_sweep, StateTag, SweepOptions};
use antichiral_core::topology::{invariant_sweep, phase_classify, wannier_data, KzInvariant, PhaseLabel, WilsonGrid};
use antichiral_core::transport::{
    disorder_average, displacement_metric, transmission_maps, IntensityMap, TransmissionMap, TransportOptions,
};
use antichiral_core::{Error, Exec};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, Task};
use crate::error::CliResult;
use crate::output::{Payload, Table};

pub fn exec(config: &RunConfig) -> Exec {
    Exec::with_workers(config.run.workers)
}

/// Runs the task selected by `config` (already validated).
pub fn run(task: Task, config: &RunConfig) -> CliResult<Payload> {
    match task {
        Task::Bands => bands(config),
        Task::Invariants => invariants(config),
        Task::PhaseDiagram => phase_diagram(config),
        Task::Hinge => hinge(config),
        Task::Transmit => transmit(config),
        Task::DeviceVerify => device(config),
    }
}

fn label(p: PhaseLabel) -> &'static str {
    match p {
        PhaseLabel::Trivial => "trivial",
        PhaseLabel::XSurfaceOnly => "x_surface_only",
        PhaseLabel::YSurfaceOnly => "y_surface_only",
        PhaseLabel::Hinge => "hinge",
        PhaseLabel::Critical => "critical",
    }
}

fn intervals_json(p: &ModelParams) -> CliResult<Value> {
    let set = hinge_intervals(p)?;
    Ok(Value::Array(set.intervals.iter().map(|i| json!([i.start, i.end])).collect()))
}

fn bands(config: &RunConfig) -> CliResult<Payload> {
    let p = &config.model;
    let kz = config.kz_grid()?;
    let rule = config.spectra.as_ref().expect("selected").rule;
    let mut t = Table::new("bands", &["kz_index", "kz", "band", "energy", "tag", "weight"]);
    let mut hinge_counts = [0usize; 4];
    let mut surface_count = 0usize;
    match (config.geometry.x, config.geometry.y) {
        (Axis::Open(nx), Axis::Open(ny)) => {
            let sweep = band_sweep(p, nx, ny, &kz, &rule, &SweepOptions { keep_vectors: false, exec: exec(config) })?;
            for (i, states) in sweep.states.iter().enumerate() {
                for (b, s) in states.iter().enumerate() {
                    match s.tag {
                        StateTag::Hinge(c) => hinge_counts[c.index()] += 1,
                        StateTag::Surface(_) => surface_count += 1,
                        StateTag::Bulk => {}
                    }
                    t.push(vec![
                        json!(i),
                        json!(sweep.kz[i]),
                        json!(b),
                        json!(s.energy),
                        json!(s.tag.label()),
                        json!(s.weight),
                    ]);
                }
            }
        }
        (x, y) => {
            let (gx, gy) = (momentum_grid(x.n()), momentum_grid(y.n()));
            let per_kz = exec(config).map(&kz, |&k| {
                let mut e: Vec<f64> = Vec::with_capacity(4 * gx.len() * gy.len());
                for &kx in &gx {
                    for &ky in &gy {
                        e.extend(eigvals4(&bloch_3d(p, Momentum::new(kx, ky, k))));
                    }
                }
                e.sort_by(f64::total_cmp);
                e
            });
            for (i, e) in per_kz.iter().enumerate() {
                for (b, v) in e.iter().enumerate() {
                    t.push(vec![json!(i), json!(kz[i]), json!(b), json!(v), json!("bulk"), json!(1.0)]);
                }
            }
        }
    }
    let mut summary = Map::new();
    summary.insert("kz_points".into(), json!(kz.len()));
    summary.insert("hinge_states_per_corner".into(), json!(hinge_counts));
    summary.insert("surface_states".into(), json!(surface_count));
    Ok(Payload { tables: vec![t], summary })
}

fn invariants(config: &RunConfig) -> CliResult<Payload> {
    let p = &config.model;
    let kz = config.kz_grid()?;
    let grid = WilsonGrid { n: config.topology.as_ref().expect("selected").wilson_grid };
    let sweep = invariant_sweep(p, &kz, grid, &exec(config))?;
    let mut t = Table::new("invariants", &["kz_index", "kz", "p_x_nu_y", "p_y_nu_x", "q_xy", "status", "reason"]);
    let (mut critical, mut half) = (0usize, 0usize);
    for (i, r) in sweep.iter().enumerate() {
        match r {
            KzInvariant::Defined(d) => {
                if (d.q_xy - 0.5).abs() < 0.25 {
                    half += 1;
                }
                t.push(vec![
                    json!(i),
                    json!(d.kz),
                    json!(d.p_x_nu_y),
                    json!(d.p_y_nu_x),
                    json!(d.q_xy),
                    json!("defined"),
                    Value::Null,
                ]);
            }
            KzInvariant::Critical { kz, reason } => {
                critical += 1;
                t.push(vec![
                    json!(i),
                    json!(kz),
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    json!("critical"),
                    json!(reason),
                ]);
            }
        }
    }
    let mut summary = Map::new();
    summary.insert("hinge_intervals".into(), intervals_json(p)?);
    summary.insert("q_half_points".into(), json!(half));
    summary.insert("critical_points".into(), json!(critical));
    Ok(Payload { tables: vec![t], summary })
}

fn phase_diagram(config: &RunConfig) -> CliResult<Payload> {
    let p = &config.model;
    let task = config.phase_diagram.as_ref().expect("selected");
    let (g1, g2) = (task.gamma1.points(), task.gamma2.points());
    let cells: Vec<(f64, f64)> = g1.iter().flat_map(|&a| g2.iter().map(move |&b| (a, b))).collect();
    let numeric: Vec<Value> = match task.wilson_grid {
        None => vec![Value::Null; cells.len()],
        Some(n) => exec(config).try_map(&cells, |&(a, b)| {
            // reduced 2D model at (γ₁, γ₂)
            let q = ModelParams { gamma: a, gamma_p: b, j: 0.0, j_p: 0.0, tilt: Tilt::default(), ..*p };
            match wannier_data(&q, 0.0, WilsonGrid { n }) {
                Ok(d) => Ok(json!(d.q_xy)),
                Err(Error::GapCollapse { .. } | Error::WannierGap { .. }) => Ok(Value::Null),
                Err(e) => Err(e),
            }
        })?,
    };
    let mut t = Table::new("phase_diagram", &["gamma1", "gamma2", "label", "q_xy"]);
    for (&(a, b), q) in cells.iter().zip(numeric) {
        t.push(vec![json!(a), json!(b), json!(label(phase_classify(a, b, p.lambda, p.lambda_p))), q]);
    }
    let mut path = Table::new("path", &["kz", "gamma1", "gamma2", "label"]);
    for k in config.kz_grid()? {
        let (a, b) = (p.gamma1(k), p.gamma2(k));
        path.push(vec![json!(k), json!(a), json!(b), json!(label(phase_classify(a, b, p.lambda, p.lambda_p)))]);
    }
    let mut summary = Map::new();
    summary.insert("points".into(), json!(cells.len()));
    Ok(Payload { tables: vec![t, path], summary })
}

fn hinge(config: &RunConfig) -> CliResult<Payload> {
    let p = &config.model;
    let corners = &config.hinge.as_ref().expect("selected").corners;
    let mut modes = Table::new("modes", &["kz", "corner", "host", "b", "c", "energy", "velocity"]);
    for k in config.kz_grid()? {
        for &corner in corners {
            if let Some(s) = hinge_mode(p, corner, k)? {
                modes.push(vec![
                    json!(k),
                    json!(corner.label()),
                    json!(s.host.label()),
                    json!(s.b),
                    json!(s.c),
                    json!(s.energy),
                    json!(s.velocity(p)),
                ]);
            }
        }
    }
    let set = hinge_intervals(p)?;
    let mut iv = Table::new("intervals", &["interval", "start", "end"]);
    for (i, v) in set.intervals.iter().enumerate() {
        iv.push(vec![json!(i), json!(v.start), json!(v.end)]);
    }
    let mut summary = Map::new();
    summary.insert("hinge_intervals".into(), intervals_json(p)?);
    Ok(Payload { tables: vec![modes, iv], summary })
}

fn transmit(config: &RunConfig) -> CliResult<Payload> {
    let p = &config.model;
    let task = config.transport.as_ref().expect("selected");
    let geom = config.transport_geometry()?;
    let excs = config.excitations()?;
    let opts = TransportOptions { solver: task.solver, path: task.path, exec: exec(config) };
    let maps: Vec<IntensityMap> = match config.disorder() {
        Some(spec) => disorder_average(p, &geom, &excs, &spec, &opts)?,
        None => transmission_maps(p, &geom, &excs, None, &opts)?.iter().map(TransmissionMap::intensity).collect(),
    };
    let mut metrics = Table::new("metrics", &["corner", "host", "z_c", "displacement"]);
    let mut faces = Table::new("faces", &["corner", "face", "along", "z", "sublattice", "intensity"]);
    let mut summary_metrics = Map::new();
    for (m, e) in maps.iter().zip(&excs) {
        let d = displacement_metric(m, e.corner, e.z_c)?;
        summary_metrics.insert(e.corner.label().into(), json!(d));
        metrics.push(vec![json!(e.corner.label()), json!(e.corner.host().label()), json!(e.z_c), json!(d)]);
        for &f in &task.faces {
            for r in m.face_slice(f) {
                let sub = r.sublattice.map_or("sum", |s| s.label());
                faces.push(vec![
                    json!(e.corner.label()),
                    json!(f.label()),
                    json!(r.along),
                    json!(r.z),
                    json!(sub),
                    json!(r.intensity),
                ]);
            }
        }
    }
    let mut summary = Map::new();
    summary.insert("displacement".into(), Value::Object(summary_metrics));
    summary.insert("realizations".into(), json!(config.disorder().map_or(0, |d| d.realizations)));
    Ok(Payload { tables: vec![metrics, faces], summary })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn rel(a: f64, b: f64) -> Value {
    if b == 0.0 {
        json!((a - b).abs())
    } else {
        json!(((a - b) / b).abs())
    }
}

fn device(config: &RunConfig) -> CliResult<Payload> {
    let p = &config.model;
    let task = config.device.as_ref().expect("selected");
    let kz = config.kz_grid()?;
    let mut channels = Table::new("channels", &["epsilon", "kz", "channel", "target", "extracted", "abs_error"]);
    let mut scaling = Table::new(
        "scaling",
        &[
            "epsilon",
            "max_total_error",
            "max_channel_error",
            "j",
            "j_target",
            "j_rel_error",
            "j_p",
            "j_p_target",
            "pinhole_leakage",
        ],
    );
    let (mut eps, mut totals) = (Vec::new(), Vec::new());
    let mut within = true;
    for &epsilon in &task.epsilons {
        let opts = config.synthesis(epsilon)?;
        let r = verify_against_lattice(p, &opts, &kz, &exec(config))?;
        let mut worst = 0.0f64;
        for c in &r.records {
            worst = worst.max(c.abs_error);
            channels.push(vec![
                json!(epsilon),
                json!(c.kz),
                json!(c.channel.label()),
                json!(c.target),
                json!(c.extracted),
                json!(c.abs_error),
            ]);
        }
        if let Some(b) = task.error_bound {
            within &= worst <= b;
        }
        let leak = match opts.pinhole {
            Some(_) => json!(pinhole_leakage(p, &opts, std::f64::consts::PI)?),
            None => Value::Null,
        };
        scaling.push(vec![
            json!(epsilon),
            json!(r.max_total_error),
            json!(worst),
            json!(r.fit.j),
            json!(r.fit.j_target),
            rel(r.fit.j, r.fit.j_target),
            json!(r.fit.j_p),
            json!(r.fit.j_p_target),
            leak,
        ]);
        eps.push(epsilon);
        totals.push(r.max_total_error);
    }
    let mut summary = Map::new();
    summary.insert("log_log_slope".into(), log_log_slope(&eps, &totals).map_or(Value::Null, |s| json!(s)));
    if task.error_bound.is_some() {
        summary.insert("within_bound".into(), json!(within));
    }
    Ok(Payload { tables: vec![channels, scaling], summary })
}
