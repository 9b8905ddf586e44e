//! Implementation of the `hqsd` commands.
//!
//! Every command returns an exit code. Failures are reported on stderr as a
//! single JSON line, e.g.
//! `{"error":"config","field":"grid.dt","message":"missing field"}`.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | check failed, integration failure, I/O error |
//! | 2 | invalid configuration or arguments, unsupported request |
//! | 3 | coefficient blow-up |
//! | 4 | resource limit |

pub mod svg;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hybrid_qsd::config::{OutputFormat, RunConfig};
use hybrid_qsd::io::{format_number, parse_csv, SchemaTag};
use hybrid_qsd::models::{compare_with_oracle, run, sweep, Knob, ModelSpec, RunResult};
use hybrid_qsd::Error;

/// Overrides `outputs.directory` of the configuration.
pub const OUTPUT_DIR_ENV: &str = "HQSD_OUTPUT_DIR";

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const COEFFICIENTS_CSV: &str = "coefficients.csv";
pub const PLOT_SVG: &str = "plot.svg";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const COMPARE_CSV: &str = "compare.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Config { .. } | Error::Unsupported(_)) | CliError::Usage(_) => 2,
            CliError::Core(Error::Singularity { .. }) => 3,
            CliError::Core(Error::Resource(_)) => 4,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Core(e) => match e {
                Error::Config { field, message } => {
                    json!({"error": "config", "field": field, "message": message})
                }
                Error::Singularity { series, time } => {
                    json!({"error": "singularity", "series": series, "time": time, "message": e.to_string()})
                }
                Error::Resource(m) => json!({"error": "resource", "message": m}),
                Error::IntegrationFailure { time, message } => {
                    json!({"error": "integration", "time": time, "message": message})
                }
                Error::Unsupported(m) => json!({"error": "unsupported", "message": m}),
                Error::InvalidArgument(m) => json!({"error": "invalid_argument", "message": m}),
            },
            CliError::Io { path, message } => {
                json!({"error": "io", "path": path.display().to_string(), "message": message})
            }
            CliError::Usage(m) => json!({"error": "usage", "message": m}),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Prints the error line and returns its exit code.
pub fn report(err: &CliError) -> i32 {
    eprintln!("{}", err.to_json());
    err.exit_code()
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", path.display()))
    })?;
    Ok(RunConfig::from_json_str(&text)?)
}

/// Output directory: the environment override, else the configured one.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&config.outputs.directory),
    }
}

/// Writes the CSV and SVG artifacts of one run, then the manifest.
///
/// A stale manifest is removed first so that an interrupted run never
/// leaves one behind.
pub fn write_run_artifacts(
    dir: &Path,
    config: &RunConfig,
    result: &RunResult,
    seconds: f64,
) -> CliResult<Value> {
    create_dir(dir)?;
    let manifest_path = dir.join(MANIFEST_JSON);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    }
    let trajectory = result.trajectory.to_csv();
    let coefficients = result.coefficients.to_csv();
    let mut artifacts = vec![
        (TRAJECTORY_CSV, trajectory.clone()),
        (COEFFICIENTS_CSV, coefficients.clone()),
    ];
    if config.outputs.formats.contains(&OutputFormat::Svg) {
        artifacts.push((PLOT_SVG, svg::render(&trajectory, &coefficients)?));
    }
    let mut checksums = serde_json::Map::new();
    for (name, body) in &artifacts {
        write(&dir.join(name), body)?;
        checksums.insert(name.to_string(), json!(sha256_hex(body.as_bytes())));
    }
    let manifest = json!({
        "tool": "hqsd",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.to_json(),
        "artifacts": checksums,
        "duration_seconds": seconds,
        "diagnostics": result.diagnostics.to_json(),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(&manifest_path, &text)?;
    Ok(manifest)
}

pub fn cmd_run(config_path: &Path) -> CliResult<()> {
    let config = load_config(config_path)?;
    let spec = ModelSpec::from_config(&config)?;
    let dir = output_dir(&config);
    let _ = fs::remove_file(dir.join(MANIFEST_JSON));
    let start = Instant::now();
    let result = run(&spec)?;
    let manifest = write_run_artifacts(&dir, &config, &result, start.elapsed().as_secs_f64())?;
    println!(
        "{}",
        json!({
            "status": "ok",
            "directory": dir.display().to_string(),
            "artifacts": manifest["artifacts"],
        })
    );
    Ok(())
}

pub fn parse_values(text: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--values: cannot parse {s:?} as a finite number")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::Core(Error::Config {
            field: "values".into(),
            message: "at least one value is required".into(),
        }));
    }
    Ok(values)
}

/// Sub-directory name of one sweep value, e.g. `c_f=0.3`.
pub fn sweep_dir_name(knob: &Knob, value: f64) -> String {
    format!("{}={value}", knob.label())
}

pub fn cmd_sweep(config_path: &Path, knob: &str, values: &str) -> CliResult<()> {
    let config = load_config(config_path)?;
    let knob = Knob::parse(knob)?;
    let values = parse_values(values)?;
    let spec = ModelSpec::from_config(&config)?;
    let dir = output_dir(&config);
    create_dir(&dir)?;
    let _ = fs::remove_file(dir.join(SUMMARY_CSV));

    let start = Instant::now();
    let results = sweep(&spec, &knob, &values)?;
    let seconds = start.elapsed().as_secs_f64();

    let dim = spec.system_hamiltonian.dim();
    let mut summary = String::new();
    summary.push_str(SchemaTag::Summary.line());
    summary.push('\n');
    summary.push_str("value");
    for i in 0..dim {
        summary.push_str(&format!(",rho_{i}_{i}"));
    }
    summary.push_str(",abs_rho_0_1,half_life_0_1\n");

    let mut first_failure: Option<CliError> = None;
    for (value, outcome) in values.iter().zip(results) {
        let sub = dir.join(sweep_dir_name(&knob, *value));
        let outcome = outcome.map_err(CliError::from).and_then(|result| {
            let mut cfg = config.clone();
            knob.apply(&mut cfg.parameters, *value)?;
            write_run_artifacts(&sub, &cfg, &result, seconds)?;
            Ok(result)
        });
        match outcome {
            Ok(result) => {
                let last = result.trajectory.final_state();
                summary.push_str(&format_number(*value));
                for i in 0..dim {
                    summary.push(',');
                    summary.push_str(&format_number(last.get(i, i).re));
                }
                let half = result.trajectory.half_life(0, 1).unwrap_or(f64::NAN);
                summary.push_str(&format!(
                    ",{},{}\n",
                    format_number(last.get(0, 1).norm()),
                    format_number(half)
                ));
            }
            Err(e) => {
                let mut line = e.to_json();
                line["value"] = json!(value);
                eprintln!("{line}");
                first_failure.get_or_insert(e);
            }
        }
    }
    write(&dir.join(SUMMARY_CSV), &summary)?;
    println!(
        "{}",
        json!({
            "status": if first_failure.is_none() { "ok" } else { "partial" },
            "directory": dir.display().to_string(),
            "knob": knob.label(),
            "values": values,
        })
    );
    match first_failure {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

/// Outcome of a check-style command: the measured value and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn cmd_oracle_compare(config_path: &Path, tol: Option<f64>) -> CliResult<CheckOutcome> {
    let config = load_config(config_path)?;
    let tolerance = tol.or(config.tolerance).ok_or_else(|| {
        CliError::Usage("no tolerance: pass --tol or set \"tolerance\" in the config".into())
    })?;
    let spec = ModelSpec::from_config(&config)?;
    let cmp = compare_with_oracle(&spec)?;
    let dir = output_dir(&config);
    create_dir(&dir)?;
    write(&dir.join(COMPARE_CSV), &cmp.report.to_csv())?;
    let pass = cmp.report.max <= tolerance;
    println!(
        "{}",
        json!({
            "max_trace_distance": cmp.report.max,
            "tolerance": tolerance,
            "pass": pass,
            "approximation": cmp.master.diagnostics.approximation.as_str(),
        })
    );
    Ok(CheckOutcome {
        measured: cmp.report.max,
        tolerance,
        pass,
    })
}

/// Analytic laws the `verify` command can check a trajectory against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    /// `ρ₁₀(t) = ρ₁₀(0) e^{iωt} cos(√2 λ t)`
    Cosine,
}

pub fn cmd_verify(csv_path: &Path, law: Law, lambda: f64, omega: f64, tol: f64) -> CliResult<CheckOutcome> {
    let table = parse_csv(&read(csv_path)?)?;
    let column = |name: &str| {
        table.column(name).ok_or_else(|| {
            CliError::Core(Error::Config {
                field: name.into(),
                message: format!("column missing from {}", csv_path.display()),
            })
        })
    };
    let (t, re, im) = (column("t")?, column("re_rho_1_0")?, column("im_rho_1_0")?);
    if t.is_empty() {
        return Err(CliError::Usage(format!("{} has no rows", csv_path.display())));
    }
    let Law::Cosine = law;
    let (re0, im0) = (re[0], im[0]);
    let mut worst: f64 = 0.0;
    for k in 0..t.len() {
        let envelope = (std::f64::consts::SQRT_2 * lambda * t[k]).cos();
        let (s, c) = (omega * t[k]).sin_cos();
        let want_re = (re0 * c - im0 * s) * envelope;
        let want_im = (re0 * s + im0 * c) * envelope;
        worst = worst.max((re[k] - want_re).hypot(im[k] - want_im));
    }
    let pass = worst <= tol;
    println!(
        "{}",
        json!({"law": "cosine", "max_deviation": worst, "tolerance": tol, "pass": pass})
    );
    Ok(CheckOutcome {
        measured: worst,
        tolerance: tol,
        pass,
    })
}

/// Maps a check outcome to an exit code.
pub fn check_exit(outcome: CliResult<CheckOutcome>) -> i32 {
    match outcome {
        Ok(o) if o.pass => 0,
        Ok(_) => 1,
        Err(e) => report(&e),
    }
}
