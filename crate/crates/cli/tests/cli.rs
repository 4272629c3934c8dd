//! End-to-end runs of the `torusflow` binary and the library entry points.

use proptest::prelude::*;
use std::path::Path;
use std::process::{Command, Output};

use torusflow_cli::config::{EngineKind, PolytopeSpec, ScheduleKind, ScheduleSpec};
use torusflow_cli::manifest::inputs_hash;
use torusflow_cli::{run, run_experiment, Command as Sub, ExperimentConfig};

const CUBE: &str = r#"
direction = ["sqrt(3)", "sqrt(2)", "1"]
start = [0.25, 0.5, 0.75]
[polytope]
kind = "cube"
[schedule]
kind = "linear"
t_max = 100.0
samples = 51
"#;

const TRIANGLE: &str = r#"
direction = ["sqrt(2)-1", "1"]
[polytope]
kind = "vertices"
vertices = [[0.1, 0.1], [0.9, 0.1], [0.1, 0.9]]
[schedule]
kind = "sampled"
t_max = 10000.0
samples = 500
[bound]
n_max = 100000
"#;

const PARALLELOGRAM: &str = r#"
direction = ["sqrt(2)", "1"]
[polytope]
kind = "vertices"
vertices = [[0.1, 0.1], [0.5, 0.1], [0.9242640687119285, 0.4], [0.5242640687119285, 0.4]]
[schedule]
kind = "linear"
t_max = 50.0
samples = 11
"#;

fn with_dir(text: &str, dir: &Path) -> String {
    format!("{text}\n[output]\ndir = {:?}\n", dir.to_str().unwrap())
}

fn torusflow(args: &[&str], cfg: &Path, env: Option<(&str, &str)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_torusflow"));
    cmd.args(args).arg("--config").arg(cfg).env_remove("TORUSFLOW_PRECISION_BITS");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, with_dir(text, &dir.join("out"))).unwrap();
    p
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unit_cube_trace_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "cube.toml", CUBE);
    let out = torusflow(&["trace"], &cfg, None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out/trace/trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 52);
    for line in csv.lines().skip(1) {
        let delta: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(delta.abs() < 1e-9, "{line}");
    }
    let m = json(&tmp.path().join("out/trace/manifest.json"));
    assert_eq!(m["subcommand"], "trace");
    assert_eq!(m["files"].as_array().unwrap().len(), 2);
}

#[test]
fn parallel_edge_fails_validation_under_exact_engine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "par.toml", PARALLELOGRAM);
    let out = torusflow(&["trace", "--engine", "exact"], &cfg, None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("transversal"), "{err}");
    let out = torusflow(&["trace", "--engine", "quadrature"], &cfg, None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn precision_exhaustion_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
direction = ["sqrt(2)+sqrt(3)-3", "1"]
[polytope]
kind = "cube"
[dioph]
n_max = 1000
depth = 200
"#;
    let cfg = write_cfg(tmp.path(), "p.toml", text);
    let out = torusflow(&["dioph", "--precision", "64"], &cfg, None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // the environment default is honoured and recorded
    let out = torusflow(&["dioph"], &cfg, Some(("TORUSFLOW_PRECISION_BITS", "2048")));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&tmp.path().join("out/dioph/manifest.json"))["precision_bits"], 2048);
}

#[test]
fn bad_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "bad.toml", "direction = [\"sqrt(2)\", \"1\"]\n[polytope]\nkind = \"sphere\"\n");
    assert_eq!(torusflow(&["trace"], &cfg, None).status.code(), Some(2));
    let cfg = write_cfg(tmp.path(), "cube.toml", CUBE);
    assert_eq!(torusflow(&["trace", "--precision", "8"], &cfg, None).status.code(), Some(2));
    assert_eq!(torusflow(&["bound"], &cfg, None).status.code(), Some(2));
}

#[test]
fn triangle_certificate_exceeds_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&with_dir(TRIANGLE, &tmp.path().join("out"))).unwrap();
    let outcome = run_experiment(&cfg).unwrap();
    let cert = json(&outcome.dir.join("certificate.json"));
    let trace_max = cert["trace_max"].as_f64().unwrap();
    let bound = cert["bound"]["bound_value"].as_f64().unwrap();
    assert!(bound > trace_max);
    assert_eq!(cert["violations"], 0);
    assert_eq!(cert["bound_without_additive_constant"], true);
    assert!(cert["bound_applied"].as_f64().unwrap() > trace_max);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(TRIANGLE).unwrap();
    let mut bodies = Vec::new();
    let mut hashes = Vec::new();
    for k in 0..2 {
        cfg.output.dir = tmp.path().join(format!("run{k}")).to_string_lossy().into_owned();
        let o = run(Sub::Trace, &cfg).unwrap();
        bodies.push(std::fs::read(o.dir.join("trace.csv")).unwrap());
        let m = json(&o.dir.join("manifest.json"));
        hashes.push(m["files"][0]["sha256"].clone());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn compare_with_empty_schedule_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(PARALLELOGRAM).unwrap();
    cfg.polytope = PolytopeSpec::Box { lo: vec![0.2, 0.3], hi: vec![0.7, 0.6] };
    cfg.schedule = ScheduleSpec { kind: ScheduleKind::Linear, t_max: 1e3, samples: 0, times: vec![] };
    cfg.output.dir = tmp.path().to_string_lossy().into_owned();
    let o = run(Sub::Compare, &cfg).unwrap();
    assert_eq!(o.summary["decades"], 0);
    let csv = std::fs::read_to_string(o.dir.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn overrides_enter_the_hash() {
    let base = ExperimentConfig::parse(CUBE).unwrap();
    let mut cfg = base.clone();
    torusflow_cli::Overrides { engine: Some(EngineKind::Quadrature), ..Default::default() }.apply(&mut cfg);
    assert_ne!(inputs_hash(&base).unwrap(), inputs_hash(&cfg).unwrap());
    let mut same = base.clone();
    torusflow_cli::Overrides::default().apply(&mut same);
    assert_eq!(inputs_hash(&base).unwrap(), inputs_hash(&same).unwrap());
}

fn literal() -> impl Strategy<Value = String> {
    prop_oneof![
        (2u32..50).prop_map(|n| format!("sqrt({n})")),
        (1i64..20, 1i64..20).prop_map(|(p, q)| format!("{p}/{q}")),
        Just("(1+sqrt(5))/2".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn configs_round_trip(
        d in 2usize..4,
        lits in proptest::collection::vec(literal(), 3),
        start in proptest::collection::vec(0.0f64..1.0, 3),
        step in 1e-6f64..1e-2,
        t_max in 1.0f64..1e6,
        samples in 0usize..5000,
        bits in 53u32..4096,
        seed in 0..=i64::MAX as u64,
        quad in any::<bool>(),
        grid in proptest::option::of(1usize..32),
    ) {
        let mut cfg = ExperimentConfig::parse(CUBE).unwrap();
        cfg.direction = lits[..d].to_vec();
        cfg.start = start[..d].to_vec();
        cfg.engine.quadrature_step = step;
        cfg.engine.kind = if quad { EngineKind::Quadrature } else { EngineKind::Exact };
        cfg.schedule.t_max = t_max;
        cfg.schedule.samples = samples;
        cfg.precision_bits = bits;
        cfg.seed = seed;
        cfg.boxsup = grid.map(|grid| torusflow_cli::config::BoxSupSpec { grid });
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}
