//! Command dispatch and report emission.

use std::fs;
use std::path::{Path, PathBuf};

use dbar_core::exact::fmt_f64;
use dbar_core::experiments::{dimension_sweep, lempert_example, mc_norm_check, verify_suite, SweepRow};
use dbar_core::solver::{solve_minimal, AnsatzSpec};
use dbar_core::{Error, Form};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{render_config, Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot read form {path}: {reason}")]
    Input { path: PathBuf, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Outcome of a command before it is written out.
struct Outcome {
    pass: bool,
    files: Vec<(String, String)>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| RunError::Io { path, source })
}

/// Text literal, or JSON when the file starts with `{`.
pub fn read_form(path: &Path) -> Result<Form, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io { path: path.into(), source })?;
    let parsed = if text.trim_start().starts_with('{') {
        serde_json::from_str::<Form>(&text).map_err(|e| e.to_string())
    } else {
        text.parse::<Form>().map_err(|e| e.to_string())
    };
    parsed.map_err(|reason| RunError::Input { path: path.into(), reason })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,norm_f_sq_num,norm_f_sq_den,norm_u_sq_num,norm_u_sq_den,ratio_float\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.norm_f_sq.numer(),
            r.norm_f_sq.denom(),
            r.norm_u_sq.numer(),
            r.norm_u_sq.denom(),
            fmt_f64(r.ratio)
        ));
    }
    out
}

fn error_record(kind: &str, message: &str) -> Value {
    json!({ "error": kind, "message": message })
}

fn execute(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let exp = cfg.experiment()?;
    let fmt = cfg.io.format;
    Ok(match cfg.command {
        Command::Verify => {
            let r = verify_suite(&exp)?;
            Outcome { pass: r.pass, files: vec![("verify.json".into(), to_json(&r))] }
        }
        Command::Sweep => {
            let r = dimension_sweep(&exp)?;
            let mut files = Vec::new();
            if fmt.json() {
                files.push(("sweep.json".into(), to_json(&r)));
            }
            if fmt.csv() {
                files.push(("sweep.csv".into(), sweep_csv(&r.builtin)));
                files.push(("sweep_truncated.csv".into(), sweep_csv(&r.truncated)));
            }
            Outcome { pass: r.pass, files }
        }
        Command::Lempert => match lempert_example(&exp, cfg.lempert_p) {
            Ok(r) => Outcome { pass: r.pass, files: vec![("lempert.json".into(), to_json(&r))] },
            Err(e @ Error::QuadratureFailure(_)) => Outcome {
                pass: false,
                files: vec![("lempert.json".into(), to_json(&error_record("QuadratureFailure", &e.to_string())))],
            },
            Err(e) => return Err(e.into()),
        },
        Command::Solve => {
            let path = cfg.io.form.clone().expect("validated");
            let f = read_form(&path)?;
            exp.weights.ensure_dim(f.n())?;
            match solve_minimal(&f, &exp.weights, AnsatzSpec::for_form(&f)) {
                Ok(r) => {
                    let pass = r.bound_satisfied && num_traits::Zero::is_zero(&r.residual_norm_sq);
                    Outcome { pass, files: vec![("solve.json".into(), to_json(&r))] }
                }
                Err(e @ (Error::NotClosed | Error::AnsatzInsufficient { .. })) => {
                    let kind = if e == Error::NotClosed { "NotClosed" } else { "AnsatzInsufficient" };
                    Outcome {
                        pass: false,
                        files: vec![("solve.json".into(), to_json(&error_record(kind, &e.to_string())))],
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Mc => {
            let path = cfg.io.form.clone().expect("validated");
            let f = read_form(&path)?;
            let r = mc_norm_check(&exp, &f)?;
            Outcome { pass: r.pass, files: vec![("mc.json".into(), to_json(&r))] }
        }
    })
}

pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(render_config(cfg).as_bytes()))
}

fn manifest(cfg: &RunConfig, outputs: &[String], exit_code: i32) -> String {
    to_json(&json!({
        "command": cfg.command.name(),
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "exit_code": exit_code,
        "outputs": outputs,
        "versions": {
            "dbar-cli": env!("CARGO_PKG_VERSION"),
            "dbar-core": dbar_core::VERSION,
        },
    }))
}

/// Runs the configured command, writing every artifact under `io.output`.
pub fn run(cfg: &RunConfig) -> i32 {
    match run_inner(cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let dir = &cfg.io.output;
            if fs::create_dir_all(dir).is_ok() {
                let kind = match &e {
                    RunError::Core(_) => "CoreError",
                    RunError::Io { .. } => "IoError",
                    RunError::Input { .. } => "InputError",
                    RunError::Pool(_) => "PoolError",
                };
                let _ = write(dir, "error.json", &to_json(&error_record(kind, &e.to_string())));
                let _ = write(dir, "manifest.json", &manifest(cfg, &["error.json".into()], EXIT_USAGE));
            }
            EXIT_USAGE
        }
    }
}

fn run_inner(cfg: &RunConfig) -> Result<i32, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let outcome = pool.install(|| execute(cfg))?;
    let dir = &cfg.io.output;
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
    let mut names = Vec::new();
    for (name, body) in &outcome.files {
        write(dir, name, body)?;
        names.push(name.clone());
    }
    let code = if outcome.pass { EXIT_OK } else { EXIT_PROPERTY_FAILURE };
    write(dir, "config.txt", &render_config(cfg))?;
    names.push("config.txt".into());
    write(dir, "manifest.json", &manifest(cfg, &names, code))?;
    Ok(code)
}
