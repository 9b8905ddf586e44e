//! Acceptance suite. One line per criterion; exits nonzero if any fails.
//!
//! Run with `cargo test -p hybrid-qsd-cli --test acceptance`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use hybrid_qsd::algebra::{C64, I, ONE, ZERO};
use hybrid_qsd::coeffs::{
    integrate_anderson_coeffs, integrate_single_qubit_coeffs, AndersonKernels, TwoQubitIntegrator,
    DEFAULT_MEMORY_BUDGET,
};
use hybrid_qsd::config::{GridSpec, RunConfig};
use hybrid_qsd::kernels::CorrelationKernel;
use hybrid_qsd::models::{compare_with_oracle, run, sweep, Knob, ModelSpec};
use hybrid_qsd::Error;

const TOL_COSINE: f64 = 1e-6;
const TOL_ORACLE: f64 = 1e-4;
const TOL_TRACE: f64 = 1e-8;
const TOL_HERMITICITY: f64 = 1e-10;
const TOL_RICCATI: f64 = 1e-8;
const MIN_CONVERGENCE_FACTOR: f64 = 1.8;
const MIN_CROSS_TERM: f64 = 1e-6;
const MIN_CF_CHANGE: f64 = 0.20;
const MAX_CB_CHANGE: f64 = 0.05;
const MAX_PLATEAU_DRIFT: f64 = 0.01;

const LIMIT_COSINE_S: f64 = 1.0;
const LIMIT_ORACLE_S: f64 = 10.0;
const LIMIT_TWO_QUBIT_S: f64 = 120.0;
const LIMIT_ANDERSON_S: f64 = 30.0;

const SHIPPED: [&str; 5] = [
    "single_qubit_resonant.json",
    "single_qubit_detuned.json",
    "two_qubit.json",
    "dephasing_qubit.json",
    "anderson.json",
];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(configs_dir().join(name)).expect("shipped config");
    RunConfig::from_json_str(&text).expect("valid shipped config")
}

fn spec_with_grid(name: &str, horizon: f64, dt: f64) -> ModelSpec {
    let mut c = load(name);
    c.grid = GridSpec { horizon, dt };
    ModelSpec::from_config(&c).expect("model builds")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn cosine_law() -> Outcome {
    let spec = spec_with_grid("single_qubit_resonant.json", 3.0, 1e-3);
    let start = Instant::now();
    let r = run(&spec).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let coherence = r.trajectory.element(1, 0);
    let dev = r
        .trajectory
        .times
        .iter()
        .zip(&coherence)
        .map(|(t, c)| (c.norm() - 0.5 * (SQRT_2 * 0.2 * t).cos().abs()).abs())
        .fold(0.0, f64::max);
    check(
        dev <= TOL_COSINE && secs <= LIMIT_COSINE_S,
        format!("max deviation {dev:.3e} (tol {TOL_COSINE:e}), {secs:.2} s (limit {LIMIT_COSINE_S} s)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["single_qubit_resonant.json", "single_qubit_detuned.json"] {
        let spec = spec_with_grid(name, 5.0, 1e-3);
        let start = Instant::now();
        let cmp = compare_with_oracle(&spec).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        ok &= cmp.report.max <= TOL_ORACLE && secs <= LIMIT_ORACLE_S;
        parts.push(format!("{}: {:.3e} in {secs:.2} s", name.trim_end_matches(".json"), cmp.report.max));
    }
    check(ok, format!("{} (tol {TOL_ORACLE:e}, limit {LIMIT_ORACLE_S} s)", parts.join("; ")))
}

fn conservation() -> Outcome {
    let mut worst_trace = 0.0_f64;
    let mut worst_herm = 0.0_f64;
    for name in SHIPPED {
        let c = load(name);
        let r = run(&ModelSpec::from_config(&c).map_err(err)?).map_err(|e| format!("{name}: {e}"))?;
        worst_trace = worst_trace.max(r.diagnostics.max_trace_drift);
        worst_herm = worst_herm.max(r.diagnostics.max_hermiticity_error);
    }
    check(
        worst_trace <= TOL_TRACE && worst_herm <= TOL_HERMITICITY,
        format!(
            "{} configs, trace drift {worst_trace:.3e} (tol {TOL_TRACE:e}), hermiticity {worst_herm:.3e} (tol {TOL_HERMITICITY:e})",
            SHIPPED.len()
        ),
    )
}

/// Scalar RK4 for `F' = 2λ² + i(ω − Ω)F + F²`.
fn riccati(lambda: f64, omega: f64, big_omega: f64, dt: f64, steps: usize) -> Vec<C64> {
    let rhs = |f: C64| C64::new(2.0 * lambda * lambda, 0.0) + I * (omega - big_omega) * f + f * f;
    let mut f = ZERO;
    let mut out = vec![f];
    for _ in 0..steps {
        let k1 = rhs(f);
        let k2 = rhs(f + k1 * (0.5 * dt));
        let k3 = rhs(f + k2 * (0.5 * dt));
        let k4 = rhs(f + k3 * dt);
        f += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(f);
    }
    out
}

fn riccati_cross_check() -> Outcome {
    let (lambda, dt) = (0.2, 5e-4);
    let pole = FRAC_PI_2 / (SQRT_2 * lambda);
    let horizon = (0.8 * pole / dt).floor() * dt;
    let k = CorrelationKernel::single_mode(lambda, 1.0).map_err(err)?;
    let report = integrate_single_qubit_coeffs(&k, &k, 1.0, horizon, dt).map_err(err)?;
    let field = report.series("F").ok_or("missing F")?;
    let scalar = riccati(lambda, 1.0, 1.0, dt, field.len() - 1);
    let dev = field.iter().zip(&scalar).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let (lambda_b, dt_b) = (0.5, 1e-3);
    let pole_b = FRAC_PI_2 / (SQRT_2 * lambda_b);
    let kb = CorrelationKernel::single_mode(lambda_b, 1.0).map_err(err)?;
    let fired = match integrate_single_qubit_coeffs(&kb, &kb, 1.0, (2.0 * pole_b / dt_b).round() * dt_b, dt_b) {
        Err(Error::Singularity { time, .. }) => time,
        other => return Err(format!("guard did not fire: {other:?}")),
    };
    let miss = (fired - pole_b).abs();
    check(
        dev <= TOL_RICCATI && miss <= 2.0 * dt_b,
        format!(
            "deviation {dev:.3e} up to t={horizon:.3} (tol {TOL_RICCATI:e}); guard at {fired:.4} vs pole {pole_b:.4} (within {:e})",
            2.0 * dt_b
        ),
    )
}

fn boundary_conditions_hold(it: &TwoQubitIntegrator) -> bool {
    let n = it.step_index();
    let one = |name| it.one_time(name).expect("field")[n];
    if one("f1") != ONE || one("g1") != ONE || one("f2") != ZERO || one("g2") != ZERO {
        return false;
    }
    let (f2, g1, g2) = (it.one_time("f2").unwrap(), it.one_time("g1").unwrap(), it.one_time("g2").unwrap());
    let four_i = I * 4.0;
    for j in 0..=n {
        for name in ["f3", "f4", "g3", "g4"] {
            if it.two_time(name, n, j) != Some(ZERO) {
                return false;
            }
        }
        if j == n {
            continue;
        }
        let edge = [
            ("f3", -four_i * f2[j]),
            ("f4", -four_i * f2[j]),
            ("g3", -four_i * g2[j]),
            ("g4", -four_i * g1[j] + four_i * g2[j]),
        ];
        if edge.iter().any(|(name, v)| it.two_time(name, j, n) != Some(*v)) {
            return false;
        }
    }
    true
}

fn max_f1(k: &CorrelationKernel, horizon: f64, dt: f64) -> Result<(f64, f64), String> {
    let mut it = TwoQubitIntegrator::new(k, k, 1.0, horizon, dt, DEFAULT_MEMORY_BUDGET).map_err(err)?;
    let mut peak = 0.0_f64;
    let mut cross = 0.0_f64;
    while !it.is_finished() {
        it.step().map_err(err)?;
        if !boundary_conditions_hold(&it) {
            return Err(format!("boundary condition broken at t={}", it.time()));
        }
        let obs = it.observe().map_err(err)?;
        peak = peak.max(obs[0].norm());
        cross = cross.max(obs[5].norm());
    }
    Ok((peak, cross))
}

fn two_qubit_system() -> Outcome {
    let spec = spec_with_grid("two_qubit.json", 3.0, 0.01);
    let k = spec.kernel("bosonic").clone();
    let start = Instant::now();
    let (m3, cross) = max_f1(&k, 3.0, 0.01)?;
    let secs = start.elapsed().as_secs_f64();
    let (m1, _) = max_f1(&k, 3.0, 0.04)?;
    let (m2, _) = max_f1(&k, 3.0, 0.02)?;
    let factor = (m1 - m2).abs() / (m2 - m3).abs();
    check(
        factor >= MIN_CONVERGENCE_FACTOR && cross > MIN_CROSS_TERM && secs <= LIMIT_TWO_QUBIT_S,
        format!(
            "boundary conditions exact; convergence factor {factor:.2} (min {MIN_CONVERGENCE_FACTOR}); max|F4p| {cross:.3e} (min {MIN_CROSS_TERM:e}); N=300 in {secs:.2} s (limit {LIMIT_TWO_QUBIT_S} s)"
        ),
    )
}

fn anderson_trends() -> Outcome {
    let spec = ModelSpec::from_config(&load("anderson.json")).map_err(err)?;
    let start = Instant::now();
    let cf: Vec<_> = sweep(&spec, &Knob::CF, &[0.3, 1.0, 3.0])
        .map_err(err)?
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let cb: Vec<_> = sweep(&spec, &Knob::CB, &[0.0, 0.5, 1.0])
        .map_err(err)?
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let per_run = start.elapsed().as_secs_f64() / 6.0;

    let empty = |r: &hybrid_qsd::models::RunResult| r.trajectory.final_state().get(0, 0).re;
    let p: Vec<f64> = cf.iter().map(empty).collect();
    let monotone = p.windows(2).all(|w| w[1] < w[0]) || p.windows(2).all(|w| w[1] > w[0]);
    let cf_change = (p[2] - p[0]).abs() / p[0].abs();
    let cb_change = (empty(&cb[2]) - empty(&cb[0])).abs() / empty(&cb[0]).abs();
    let halves: Vec<f64> = cb
        .iter()
        .map(|r| r.trajectory.half_life(0, 1).unwrap_or(f64::INFINITY))
        .collect();
    let decreasing = halves.windows(2).all(|w| w[1] < w[0]);
    check(
        monotone && cf_change >= MIN_CF_CHANGE && cb_change <= MAX_CB_CHANGE && decreasing && per_run <= LIMIT_ANDERSON_S,
        format!(
            "rho_11 over c_f {{0.3,1,3}} = {:.4}/{:.4}/{:.4} (change {:.1}%, min {:.0}%); c_b 0->1 change {:.2}% (max {:.0}%); half-life over c_b {{0,0.5,1}} = {:.2}/{:.2}/{:.2}; {per_run:.2} s per run",
            p[0],
            p[1],
            p[2],
            100.0 * cf_change,
            100.0 * MIN_CF_CHANGE,
            100.0 * cb_change,
            100.0 * MAX_CB_CHANGE,
            halves[0],
            halves[1],
            halves[2]
        ),
    )
}

fn markov_plateau() -> Outcome {
    let ou = |g: f64, decay: f64, phi: f64| CorrelationKernel::ou(g, 10.0 * decay, phi);
    let kernels = AndersonKernels {
        alpha: ou(0.01, 0.5, 0.0).map_err(err)?,
        lc: ou(0.017, 0.3, 1.1).map_err(err)?,
        rc: ou(0.034, 0.5, 1.65).map_err(err)?,
        la: ou(0.012, 0.4, 0.75).map_err(err)?,
        ra: ou(0.044, 0.45, 1.2).map_err(err)?,
    };
    let gamma_min = 10.0 * 0.3;
    let onset = 5.0 / gamma_min;
    let (horizon, dt) = (10.0, 0.01);
    let report = integrate_anderson_coeffs(&kernels, 1.0, horizon, dt).map_err(err)?;
    let mut worst = (0.0_f64, "");
    for name in ["F1", "F_Lc", "F_Rc", "F_La", "F_Ra"] {
        let s = report.series(name).ok_or("missing series")?;
        let last = *s.last().unwrap();
        let first = (onset / dt).ceil() as usize + 1;
        let drift = s[first..].iter().map(|v| (v - last).norm()).fold(0.0, f64::max) / last.norm();
        if drift > worst.0 {
            worst = (drift, name);
        }
    }
    check(
        worst.0 <= MAX_PLATEAU_DRIFT,
        format!(
            "largest relative drift for t > {onset:.3}: {:.3e} ({}) (max {MAX_PLATEAU_DRIFT:e})",
            worst.0, worst.1
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    for name in SHIPPED {
        let mut runs = Vec::new();
        for pass in ["a", "b"] {
            let out = tmp.path().join(name).join(pass);
            let status = Command::new(env!("CARGO_BIN_EXE_hqsd"))
                .args(["run", configs_dir().join(name).to_str().unwrap()])
                .env("HQSD_OUTPUT_DIR", &out)
                .output()
                .map_err(err)?;
            if !status.status.success() {
                return Err(format!("{name}: run failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            let read = |f: &str| std::fs::read(out.join(f)).map_err(err);
            runs.push((read("trajectory.csv")?, read("coefficients.csv")?));
        }
        if runs[0] != runs[1] {
            return Err(format!("{name}: CSVs differ between runs"));
        }
    }
    Ok(format!("{} configs, trajectory and coefficient CSVs byte-identical", SHIPPED.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("analytic single-qubit law", cosine_law),
        ("oracle equivalence", oracle_equivalence),
        ("conservation", conservation),
        ("Riccati cross-check", riccati_cross_check),
        ("two-qubit coefficient system", two_qubit_system),
        ("Anderson trends", anderson_trends),
        ("Markov-limit flattening", markov_plateau),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
