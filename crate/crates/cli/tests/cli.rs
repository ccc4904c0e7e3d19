use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use antichiral_cli::{execute, preset, presets, resolve, RunArgs, RunConfig, Task};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_antichiral"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ANTICHIRAL_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_report(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str::<Value>(text.trim()).unwrap_or_else(|_| panic!("not a JSON report: {text}"))["error"].clone()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn column(p: &antichiral_cli::Payload, table: &str, col: &str) -> Vec<Value> {
    let t = p.table(table).unwrap();
    let i = t.columns.iter().position(|c| *c == col).unwrap();
    t.rows.iter().map(|r| r[i].clone()).collect()
}

const SMALL: &str = "[geometry]\nx = { open = 6 }\ny = { open = 6 }\nz = { periodic = 12 }\n";

#[test]
fn every_preset_parses_and_round_trips() {
    for name in presets::names() {
        let c = preset(name).unwrap();
        let task = c.task().unwrap_or_else(|| panic!("{name}: one task block"));
        let mut selected = c.clone();
        selected.select(task).unwrap();
        selected.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c, "{name}");
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&json).unwrap(), c, "{name}");
    }
}

#[test]
fn unknown_key_reports_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.toml", "[model]\ngamma = 0.5\ngama_p = 0.5\n[hinge]\n");
    let o = run(&["hinge", "--config", &p]);
    assert_eq!(o.status.code(), Some(1));
    let r = stderr_report(&o);
    assert_eq!(r["class"], "config");
    assert_eq!(r["field"], "model.gama_p");
    assert!(r["message"].as_str().unwrap().contains("gama_p"));

    let p = write(
        dir.path(),
        "d.toml",
        "[transport]\nkappa = 0.1\ndisorder = { strength = 0.2, realizations = 2, sed = 1 }\n",
    );
    let r = stderr_report(&run(&["transmit", "--config", &p]));
    assert_eq!(r["field"], "transport.disorder.sed");
}

#[test]
fn task_blocks_must_match_the_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let two = write(dir.path(), "two.toml", "[hinge]\n[topology]\n");
    let o = run(&["hinge", "--config", &two]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_report(&o)["message"].as_str().unwrap().contains("exactly one"));
    let o = run(&["bands", "--preset", "hinge2g"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_report(&o)["field"], "hinge");
}

#[test]
fn invalid_values_are_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[model]\nlambda = nan\n[hinge]\n", "hinge", None),
        (
            "[geometry]\nx = { open = 1 }\ny = { open = 4 }\nz = { periodic = 8 }\n[spectra]\n",
            "bands",
            Some("geometry.x"),
        ),
        (
            "[geometry]\nx = { periodic = 4 }\ny = { open = 4 }\nz = { periodic = 8 }\n[spectra]\n",
            "bands",
            Some("geometry"),
        ),
        ("[transport]\nkappa = -1.0\n", "transmit", Some("transport.kappa")),
        ("[transport]\nz_c = 0\n", "transmit", Some("transport.z_c")),
        ("[device]\nepsilons = []\n", "device-verify", Some("device.epsilons")),
        ("[device]\nspace = { l_max = 3 }\n", "device-verify", Some("device.l_max")),
        ("[model]\ntilt = { a = 1.0, b = 0.0, c = 0.0, d = 0.0 }\n[topology]\n", "invariants", Some("model.tilt")),
    ];
    for (i, (text, cmd, field)) in cases.iter().enumerate() {
        let p = write(dir.path(), &format!("c{i}.toml"), text);
        let o = run(&[cmd, "--config", &p]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(o.stdout.is_empty());
        let r = stderr_report(&o);
        if let Some(f) = field {
            assert_eq!(r["field"], *f, "{text}");
        }
    }
}

#[test]
fn numerical_failures_exit_with_two() {
    // zero input amplitude leaves the displacement metric undefined
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.toml", &format!("{SMALL}[transport]\ne_in = 0.0\n"));
    let o = run(&["transmit", "--config", &p]);
    assert_eq!(o.status.code(), Some(2));
    let r = stderr_report(&o);
    assert_eq!(r["class"], "numerical");
    assert_eq!(r["reason"], "undefined_metric");
}

#[test]
fn unknown_preset_and_bad_flags_are_config_errors() {
    assert_eq!(run(&["hinge", "--preset", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["hinge", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let o = run(&["presets", "fig2g"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[spectra]"));
}

#[test]
fn environment_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.json");
    let o = bin()
        .args(["hinge"])
        .env("ANTICHIRAL_PRESET", "hinge2h")
        .env("ANTICHIRAL_FORMAT", "json")
        .env("ANTICHIRAL_SEED", "77")
        .env("ANTICHIRAL_WORKERS", "2")
        .env("ANTICHIRAL_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let env: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(env["config"]["run"]["seed"], 77);
    assert_eq!(env["config"]["run"]["workers"], 2);
    // flags win over the environment
    let o = bin()
        .args(["hinge", "--seed", "5"])
        .env("ANTICHIRAL_SEED", "77")
        .env("ANTICHIRAL_FORMAT", "json")
        .output()
        .unwrap();
    let env: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env["config"]["run"]["seed"], 5);
}

#[test]
fn envelope_config_reruns_to_the_same_payload() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let o = run(&["hinge", "--preset", "hinge2g", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let env = dir.path().join("a.envelope.json");
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(&env).unwrap()).unwrap();
    assert_eq!(meta["artifact"], "antichiral");
    assert_eq!(meta["task"], "hinge");
    assert!(meta["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let b = dir.path().join("b.csv");
    let o = run(&["hinge", "--config", env.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a.intervals.csv")).unwrap(),
        std::fs::read(dir.path().join("b.intervals.csv")).unwrap()
    );
}

#[test]
fn json_envelope_carries_every_table() {
    let o = run(&["phase-diagram", "--preset", "figa1d", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let env: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env["tables"]["phase_diagram"].as_array().unwrap().len(), 81 * 81);
    assert_eq!(env["tables"]["path"].as_array().unwrap().len(), 60);
    assert_eq!(env["config"]["model"]["J_p"], 2.2);
}

#[test]
fn periodic_bands_carry_no_boundary_tags() {
    let c = RunConfig::from_toml(
        "[model]\nJ_p = 1.0\ntilt = { a = 0.5, b = 0.5, c = 0.5, d = 0.5 }\n\
         [geometry]\nx = { periodic = 6 }\ny = { periodic = 6 }\nz = { periodic = 8 }\n[spectra]\n",
    )
    .unwrap();
    let p = execute(Task::Bands, &c).unwrap();
    let tags = column(&p, "bands", "tag");
    assert_eq!(tags.len(), 8 * 6 * 6 * 4);
    assert!(tags.iter().all(|t| t == "bulk"));
}

#[test]
fn invariants_follow_the_hinge_intervals() {
    let c = preset("figa1m").unwrap();
    let p = execute(Task::Invariants, &c).unwrap();
    let kz = column(&p, "invariants", "kz");
    let q = column(&p, "invariants", "q_xy");
    for (k, q) in kz.iter().zip(&q) {
        let k = k.as_f64().unwrap();
        let inside = k > PI / 3.0 + 1e-9 && k < 5.0 * PI / 3.0 - 1e-9;
        match q.as_f64() {
            Some(q) => assert!((q - if inside { 0.5 } else { 0.0 }).abs() < 1e-6, "k_z={k} Q={q}"),
            None => assert!((k - PI / 3.0).abs() < 1e-9 || (k - 5.0 * PI / 3.0).abs() < 1e-9),
        }
    }
    let mut trivial = c.clone();
    trivial.model.gamma = 1.5;
    trivial.model.gamma_p = 1.5;
    let p = execute(Task::Invariants, &trivial).unwrap();
    for (k, q) in column(&p, "invariants", "kz").iter().zip(column(&p, "invariants", "q_xy")) {
        let k = k.as_f64().unwrap();
        match q.as_f64() {
            Some(q) => assert!(q < 1e-6, "{q}"),
            // |γ₁| = |λ| on the grid
            None => assert!((trivial.model.gamma1(k).abs() - 1.0).abs() < 1e-9, "k_z={k}"),
        }
    }
}

#[test]
fn two_interval_invariants_for_large_j_prime() {
    let p = execute(Task::Invariants, &preset("figa1p").unwrap()).unwrap();
    let q = column(&p, "invariants", "q_xy");
    let mut runs = 0;
    let mut prev = false;
    for v in &q {
        let half = v.as_f64().is_some_and(|x| (x - 0.5).abs() < 1e-6);
        if half && !prev {
            runs += 1;
        }
        prev = half;
    }
    assert_eq!(runs, 2);
}

#[test]
fn device_verification_examples() {
    let c = preset("device").unwrap();
    let p = execute(Task::DeviceVerify, &c).unwrap();
    assert_eq!(p.summary["within_bound"], true);
    let slope = p.summary["log_log_slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.3, "{slope}");

    let mut zero = c.clone();
    zero.device.as_mut().unwrap().epsilons = vec![0.0];
    zero.device.as_mut().unwrap().pinhole = None;
    let p = execute(Task::DeviceVerify, &zero).unwrap();
    assert!(column(&p, "channels", "abs_error").iter().all(|e| e.as_f64() == Some(0.0)));
    assert!(p.summary["log_log_slope"].is_null());
}

#[test]
fn hinge_modes_report_tilt_velocities() {
    let c = preset("hinge2h").unwrap();
    let p = execute(Task::Hinge, &c).unwrap();
    let corner = column(&p, "modes", "corner");
    let kz = column(&p, "modes", "kz");
    let e = column(&p, "modes", "energy");
    for ((c, k), e) in corner.iter().zip(&kz).zip(&e) {
        let u = match c.as_str().unwrap() {
            "x0y0" => -0.5,
            "x0yN" => 0.4,
            _ => 0.5,
        };
        assert!((e.as_f64().unwrap() - u * k.as_f64().unwrap().sin()).abs() < 1e-12);
    }
}

#[test]
fn flags_override_config_values() {
    let args = RunArgs { preset: Some("hinge2g".into()), seed: Some(9), workers: Some(3), ..Default::default() };
    let c = resolve(Task::Hinge, &args).unwrap();
    assert_eq!((c.run.seed, c.run.workers), (9, 3));
}

#[test]
fn workers_do_not_change_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        &format!("{SMALL}[model]\nJ_p = 1.0\ntilt = {{ a = 0.5, b = 0.5, c = 0.5, d = 0.5 }}\n[run]\nseed = 3\n[transport]\ndisorder = {{ strength = 0.2, realizations = 4 }}\n"),
    );
    let mut outs = Vec::new();
    for w in ["1", "2", "0"] {
        let o = run(&["transmit", "--config", &cfg, "--workers", w]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(o.stdout);
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
    let other = run(&["transmit", "--config", &cfg, "--seed", "4"]);
    assert_ne!(outs[0], other.stdout);
}
