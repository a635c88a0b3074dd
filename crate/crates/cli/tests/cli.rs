use std::fs;
use std::path::PathBuf;
use std::process::Command as Proc;

use dbar_cli::config::{IoConfig, OutputFormat, WeightsSpec};
use dbar_cli::{parse_config, parse_config_with, render_config, run, Command, RunConfig};
use num_rational::BigRational;
use proptest::prelude::*;

fn small(command: Command, out: PathBuf) -> RunConfig {
    let mut cfg = RunConfig::with_command(command);
    cfg.case_count = 3;
    cfg.samples = 20_000;
    cfg.hermite_cap = 8;
    cfg.n_range = vec![1, 2, 3];
    cfg.io.output = out;
    cfg
}

#[test]
fn verify_defaults_exit_zero_and_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = small(Command::Verify, dir.path().join("a"));
    let b = small(Command::Verify, dir.path().join("b"));
    assert_eq!(run(&a), 0);
    assert_eq!(run(&b), 0);
    let ra = fs::read(dir.path().join("a/verify.json")).unwrap();
    let rb = fs::read(dir.path().join("b/verify.json")).unwrap();
    assert_eq!(ra, rb);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], serde_json::json!(a.seed));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let saved = fs::read_to_string(dir.path().join("a/config.txt")).unwrap();
    assert_eq!(parse_config(&saved).unwrap(), a);
}

#[test]
fn solve_reports_exact_rationals() {
    let dir = tempfile::tempdir().unwrap();
    let form = dir.path().join("f.form");
    fs::write(&form, "[|1] zb1\n").unwrap();
    let mut cfg = small(Command::Solve, dir.path().join("out"));
    cfg.io.form = Some(form);
    assert_eq!(run(&cfg), 0);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/solve.json")).unwrap()).unwrap();
    assert_eq!(r["norm_u_sq"], "1/128");
    assert_eq!(r["norm_f_sq"], "1/64");
    assert_eq!(r["residual_norm_sq"], "0/1");
    assert_eq!(r["bound_satisfied"], true);
}

#[test]
fn solve_on_sentinel_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let form = dir.path().join("bad.form");
    fs::write(&form, "form s=0 t=1 n=2\n[|1] zb2\n").unwrap();
    let mut cfg = small(Command::Solve, dir.path().join("out"));
    cfg.io.form = Some(form);
    assert_eq!(run(&cfg), 1);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/solve.json")).unwrap()).unwrap();
    assert_eq!(r["error"], "NotClosed");
}

#[test]
fn sweep_writes_constant_ratio_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Command::Sweep, dir.path().to_path_buf());
    cfg.n_range = (1..=8).collect();
    assert_eq!(run(&cfg), 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,norm_f_sq_num,norm_f_sq_den,norm_u_sq_num,norm_u_sq_den,ratio_float");
    assert_eq!(lines.len(), 9);
    assert!(lines[1..].iter().all(|l| l.ends_with(",7.0710678118654757e-1")));
    assert!(dir.path().join("sweep.json").is_file());
}

#[test]
fn mc_and_lempert_run() {
    let dir = tempfile::tempdir().unwrap();
    let form = dir.path().join("g.json");
    let f: dbar_core::Form = "form s=0 t=2 n=2\n[|1,2] 1".parse().unwrap();
    fs::write(&form, serde_json::to_string(&f).unwrap()).unwrap();
    let mut cfg = small(Command::Mc, dir.path().join("mc"));
    cfg.io.form = Some(form);
    assert_eq!(run(&cfg), 0);
    let mut cfg = small(Command::Lempert, dir.path().join("l"));
    cfg.n_range = vec![2];
    assert_eq!(run(&cfg), 0);
    cfg.radial_nodes = 2;
    cfg.hermite_cap = 10;
    cfg.io.output = dir.path().join("l2");
    assert_eq!(run(&cfg), 1);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("l2/lempert.json")).unwrap()).unwrap();
    assert_eq!(r["error"], "QuadratureFailure");
}

#[test]
fn binary_exit_codes_and_env_overrides() {
    let exe = env!("CARGO_BIN_EXE_dbar");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "command = verify\nexperiment.case_count = 2\nexperiment.n_range = 1, 2\n").unwrap();
    let out = dir.path().join("env-out");
    let status = Proc::new(exe).arg("-c").arg(&cfg).env("DBAR_OUTPUT_DIR", &out).env("DBAR_JOBS", "2").status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("verify.json").is_file());

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "command = verify\nweights.c = 1\nweights.r = 1/2\n").unwrap();
    let o = Proc::new(exe).arg("-c").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("validation error at line 2"));

    let o = Proc::new(exe).arg("solve").arg("--form").arg(dir.path().join("missing.form")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cli_overrides_take_precedence() {
    let cfg = parse_config_with("command = verify\nio.output = a\n", &[("io.output", "b".into())]).unwrap();
    assert_eq!(cfg.io.output, PathBuf::from("b"));
}

fn rational() -> impl Strategy<Value = BigRational> {
    (1i64..50, 1i64..50).prop_map(|(a, b)| BigRational::new(a.into(), b.into()))
}

fn config() -> impl Strategy<Value = RunConfig> {
    let weights = prop_oneof![
        (1i64..4, 2i64..6, 4usize..80).prop_map(|(c, r, len)| WeightsSpec::Geometric {
            c: BigRational::new(c.into(), (4 * c + 1).into()),
            r: BigRational::new(1.into(), r.into()),
            len,
        }),
        prop::collection::vec((1i64..5).prop_map(|d| BigRational::new(1.into(), (8 * d).into())), 4..7)
            .prop_map(WeightsSpec::Explicit),
    ];
    let command = prop_oneof![Just(Command::Verify), Just(Command::Sweep), Just(Command::Lempert)];
    (
        command,
        weights,
        prop::collection::btree_set(1usize..=4, 1..4),
        (0usize..3, 0usize..3, 0u32..6, any::<u64>(), 0usize..200, 1usize..10_000, 0usize..8),
        (1usize..40, 1usize..100, 1i64..99, 1u32..16),
        (0.5f64..10.0, 1e-12f64..1e-3, 1u32..5),
        ("[a-z]{1,8}", prop_oneof![Just(OutputFormat::Json), Just(OutputFormat::Csv), Just(OutputFormat::Both)]),
        rational(),
    )
        .prop_map(|(command, weights, ns, e, q, tol, io, _)| {
            let mut cfg = RunConfig::with_command(command);
            cfg.weights = weights;
            cfg.n_range = ns.into_iter().collect();
            (cfg.s, cfg.t, cfg.degree_cap, cfg.seed, cfg.case_count, cfg.samples, cfg.jobs) = e;
            cfg.radial_nodes = q.0;
            cfg.angular_nodes = q.1;
            cfg.r0 = BigRational::new(q.2.into(), 100.into());
            cfg.hermite_cap = q.3;
            (cfg.mc_sigma, cfg.lempert_rel_residual, cfg.lempert_p) = tol;
            cfg.io = IoConfig { form: None, output: PathBuf::from(io.0), format: io.1 };
            cfg
        })
}

proptest! {
    #[test]
    fn render_parse_round_trip(cfg in config()) {
        let text = render_config(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
