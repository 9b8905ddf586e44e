//! The worked models: a qubit in a hybrid bath (exact), two qubits sharing
//! both baths, a qubit with a dephasing bosonic and a dissipative fermionic
//! bath, and a quantum dot between two leads with a phonon bath.
//!
//! [`build_model`] turns a parameter block into a fully wired
//! [`ModelSpec`], [`run`] integrates its coefficients and master equation,
//! and [`sweep`] repeats the run over a list of knob values in parallel.

use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::algebra::{kron, pauli, DensityMatrix, OperatorMatrix, Pauli, C64, ONE, ZERO};
use crate::coeffs::{
    integrate_anderson_coeffs, integrate_dephasing_qubit_coeffs, integrate_single_qubit_coeffs,
    integrate_two_qubit_coeffs, AndersonKernels, CoefficientReport, TimeGrid,
};
use crate::config::{GridSpec, InitialStateSpec, InjectionForm, ModelName, ModelParameters, RunConfig};
use crate::error::{Error, Result};
use crate::kernels::CorrelationKernel;
use crate::master::{
    evolve, positivity_monitor, CoefficientSeries, DissipatorTerm, MasterGenerator,
    PositivityReport, Trajectory,
};
use crate::oracle::{
    compare_to_master, oracle_evolve, BosonMode, CommutationClass, FermionMode,
    TotalSystemSpec, TraceDistanceReport,
};

/// A kernel whose memory time is below this fraction of the horizon is
/// classified as short-memory.
pub const SHORT_MEMORY_FRACTION: f64 = 0.1;

/// A complete, validated problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: ModelName,
    /// The parameter block the spec was built from.
    pub parameters: ModelParameters,
    pub grid: GridSpec,
    pub system_hamiltonian: OperatorMatrix,
    /// Named system operators entering the couplings.
    pub couplings: BTreeMap<String, OperatorMatrix>,
    /// Kernels after the `c_b` / `c_f` scaling.
    pub kernels: BTreeMap<String, CorrelationKernel>,
    pub commutation_class: CommutationClass,
    pub initial_state: DensityMatrix,
    /// Amplitudes of the initial state when it is pure.
    pub initial_amplitudes: Option<Vec<C64>>,
}

impl ModelSpec {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        build_model(config.model, &config.parameters, config.grid)
    }

    pub fn kernel(&self, name: &str) -> &CorrelationKernel {
        &self.kernels[name]
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::new(self.grid.horizon, self.grid.dt).expect("grid validated on build")
    }

    /// Same model with one knob changed.
    pub fn with_knob(&self, knob: &Knob, value: f64) -> Result<Self> {
        let mut params = self.parameters.clone();
        knob.apply(&mut params, value)?;
        build_model(self.name, &params, self.grid)
    }
}

/// Single-qubit operators `(σ_z, σ₋, σ₊)`.
fn qubit_ops() -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    (pauli(Pauli::Z), pauli(Pauli::Minus), pauli(Pauli::Plus))
}

/// Dot operators `(d, d†, n)` in Fock order (index 0 empty).
fn dot_ops() -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    let d = OperatorMatrix::from_fn(2, |i, j| if i == 0 && j == 1 { ONE } else { ZERO });
    let dd = d.adjoint();
    let n = &dd * &d;
    (d, dd, n)
}

fn system_dim(name: ModelName) -> usize {
    match name {
        ModelName::TwoQubit => 4,
        _ => 2,
    }
}

fn initial_amplitudes(name: ModelName, spec: &InitialStateSpec) -> Result<Vec<C64>> {
    const FIELD: &str = "parameters.initial_state";
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let single = |preset: &str| -> Option<[C64; 2]> {
        match (name, preset) {
            (_, "plus") => Some([h, h]),
            (ModelName::Anderson, "empty") => Some([ONE, ZERO]),
            (ModelName::Anderson, "filled") => Some([ZERO, ONE]),
            (ModelName::Anderson, _) => None,
            (_, "excited") => Some([ONE, ZERO]),
            (_, "ground") => Some([ZERO, ONE]),
            _ => None,
        }
    };
    match spec {
        InitialStateSpec::Preset(p) => {
            let q = single(p).ok_or_else(|| {
                Error::config(FIELD, format!("unknown preset {p:?} for model {}", name.as_str()))
            })?;
            Ok(if name == ModelName::TwoQubit {
                q.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect()
            } else {
                q.to_vec()
            })
        }
        InitialStateSpec::Amplitudes(a) => {
            let dim = system_dim(name);
            if a.len() != dim {
                return Err(Error::config(
                    FIELD,
                    format!("expected {dim} amplitudes, got {}", a.len()),
                ));
            }
            let norm: f64 = a.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::config(FIELD, format!("state is not normalized (norm² = {norm})")));
            }
            Ok(a.clone())
        }
    }
}

/// Builds a fully wired model.
///
/// Coupling scales multiply kernel weights: `c_b` the bosonic kernel(s),
/// `c_f` the fermionic ones.
pub fn build_model(name: ModelName, params: &ModelParameters, grid: GridSpec) -> Result<ModelSpec> {
    if !(grid.dt > 0.0) || !grid.dt.is_finite() {
        return Err(Error::config("grid.dt", format!("must be > 0, got {}", grid.dt)));
    }
    TimeGrid::new(grid.horizon, grid.dt).map_err(|e| Error::config("grid.horizon", e.to_string()))?;
    for (field, c) in [("c_b", params.c_b), ("c_f", params.c_f)] {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::config(
                format!("parameters.scales.{field}"),
                format!("must be a finite non-negative number, got {c}"),
            ));
        }
    }
    if !params.frequency.is_finite() {
        return Err(Error::config(
            format!("parameters.{}", name.frequency_key()),
            "must be finite",
        ));
    }

    let mut kernels = BTreeMap::new();
    for kname in name.kernel_names() {
        let path = format!("parameters.kernels.{kname}");
        let spec = params
            .kernels
            .get(*kname)
            .ok_or_else(|| Error::config(&path, "missing field"))?;
        let k = spec.build().map_err(|e| Error::config(&path, e.to_string()))?;
        let scale = if name.is_bosonic_kernel(kname) { params.c_b } else { params.c_f };
        kernels.insert(kname.to_string(), k.scaled(scale));
    }

    let amplitudes = initial_amplitudes(name, &params.initial_state)?;
    let initial_state = DensityMatrix::pure(&amplitudes)?;
    let w = params.frequency;
    let half_w = C64::new(0.5 * w, 0.0);
    let (sz, sm, _) = qubit_ops();
    let id2 = OperatorMatrix::identity(2);

    let mut couplings = BTreeMap::new();
    let (system_hamiltonian, commutation_class) = match name {
        ModelName::SingleQubit => {
            couplings.insert("L_b".into(), sm.clone());
            couplings.insert("L_f".into(), sm);
            (sz.scale(half_w), CommutationClass::Commutative)
        }
        ModelName::DephasingQubit => {
            couplings.insert("L_b".into(), sz.clone());
            couplings.insert("L_f".into(), sm);
            (sz.scale(half_w), CommutationClass::Commutative)
        }
        ModelName::TwoQubit => {
            let kappa = params
                .kappa_b
                .ok_or_else(|| Error::config("parameters.kappa_b", "missing field"))?;
            if kappa != 0.0 && kappa != 1.0 {
                return Err(Error::Unsupported(format!(
                    "kappa_b = {kappa}: only 0 (independent second qubit) and 1 (symmetric coupling) are supported"
                )));
            }
            let sz_ab = &kron(&sz, &id2) + &kron(&id2, &sz);
            let l = &kron(&sm, &id2) + &kron(&id2, &sm).scale(C64::new(kappa, 0.0));
            couplings.insert("L_b".into(), l.clone());
            couplings.insert("L_f".into(), l);
            (sz_ab.scale(half_w), CommutationClass::Commutative)
        }
        ModelName::Anderson => {
            let (d, _, n) = dot_ops();
            couplings.insert("d".into(), d);
            couplings.insert("n".into(), n.clone());
            (n.scale(C64::new(w, 0.0)), CommutationClass::AntiCommutative)
        }
    };

    Ok(ModelSpec {
        name,
        parameters: params.clone(),
        grid,
        system_hamiltonian,
        couplings,
        kernels,
        commutation_class,
        initial_state,
        initial_amplitudes: Some(amplitudes),
    })
}

/// Whether the master equation is exact or the noise-independent
/// (zeroth-order) truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approximation {
    Exact,
    ZerothOrder,
}

impl Approximation {
    pub fn as_str(self) -> &'static str {
        match self {
            Approximation::Exact => "exact",
            Approximation::ZerothOrder => "zeroth-order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryClass {
    ShortMemory,
    LongMemory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryTime {
    pub kernel: String,
    pub time: f64,
    pub class: MemoryClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub positivity: PositivityReport,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    pub memory_times: Vec<MemoryTime>,
    pub approximation: Approximation,
}

impl Diagnostics {
    pub fn to_json(&self) -> Value {
        let memory: serde_json::Map<String, Value> = self
            .memory_times
            .iter()
            .map(|m| {
                let class = match m.class {
                    MemoryClass::ShortMemory => "short-memory",
                    MemoryClass::LongMemory => "long-memory",
                };
                (m.kernel.clone(), json!({"time": m.time, "class": class}))
            })
            .collect();
        json!({
            "approximation": self.approximation.as_str(),
            "max_trace_drift": self.max_trace_drift,
            "max_hermiticity_error": self.max_hermiticity_error,
            "min_eigenvalue": self.positivity.min_eigenvalue,
            "min_eigenvalue_time": self.positivity.at_time,
            "positivity_warning": self.positivity.warning,
            "memory_times": memory,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub coefficients: CoefficientReport,
    pub trajectory: Trajectory,
    pub diagnostics: Diagnostics,
}

fn series(report: &CoefficientReport, name: &str) -> Result<CoefficientSeries> {
    CoefficientSeries::from_report(report, name)
}

/// Coefficients and master generator of a model.
pub fn assemble(spec: &ModelSpec) -> Result<(CoefficientReport, MasterGenerator, Approximation)> {
    let GridSpec { horizon, dt } = spec.grid;
    let w = spec.parameters.frequency;
    let h = spec.system_hamiltonian.clone();
    let (sz, sm, sp) = qubit_ops();
    match spec.name {
        ModelName::SingleQubit => {
            let r = integrate_single_qubit_coeffs(
                spec.kernel("bosonic"),
                spec.kernel("fermionic"),
                w,
                horizon,
                dt,
            )?;
            let gen = MasterGenerator::new(h, vec![DissipatorTerm::new(series(&r, "F")?, sm, sp)])?;
            Ok((r, gen, Approximation::Exact))
        }
        ModelName::DephasingQubit => {
            let r = integrate_dephasing_qubit_coeffs(
                spec.kernel("bosonic"),
                spec.kernel("fermionic"),
                w,
                horizon,
                dt,
            )?;
            let gen = MasterGenerator::new(
                h,
                vec![
                    DissipatorTerm::new(series(&r, "G")?, sm, sp),
                    DissipatorTerm::new(series(&r, "F")?, sz.clone(), sz),
                ],
            )?;
            Ok((r, gen, Approximation::ZerothOrder))
        }
        ModelName::TwoQubit => {
            let id2 = OperatorMatrix::identity(2);
            if spec.parameters.kappa_b == Some(0.0) {
                // qubit B decouples; qubit A obeys the exact single-qubit law
                let r = integrate_single_qubit_coeffs(
                    spec.kernel("bosonic"),
                    spec.kernel("fermionic"),
                    w,
                    horizon,
                    dt,
                )?;
                let gen = MasterGenerator::new(
                    h,
                    vec![DissipatorTerm::new(series(&r, "F")?, kron(&sm, &id2), kron(&sp, &id2))],
                )?;
                return Ok((r, gen, Approximation::Exact));
            }
            let r = integrate_two_qubit_coeffs(
                spec.kernel("bosonic"),
                spec.kernel("fermionic"),
                w,
                horizon,
                dt,
            )?;
            let l = spec.couplings["L_b"].clone();
            let ld = l.adjoint();
            let sz_ab = &kron(&sz, &id2) + &kron(&id2, &sz);
            let o2 = &sz_ab * &l;
            let c1 = CoefficientSeries::sum(&[&series(&r, "F1")?, &series(&r, "G1")?])?;
            let c2 = CoefficientSeries::sum(&[&series(&r, "F2")?, &series(&r, "G2")?])?;
            let gen = MasterGenerator::new(
                h,
                vec![DissipatorTerm::new(c1, l, ld.clone()), DissipatorTerm::new(c2, o2, ld)],
            )?;
            Ok((r, gen, Approximation::ZerothOrder))
        }
        ModelName::Anderson => {
            let k = AndersonKernels {
                alpha: spec.kernel("phonon").clone(),
                la: spec.kernel("La").clone(),
                lc: spec.kernel("Lc").clone(),
                ra: spec.kernel("Ra").clone(),
                rc: spec.kernel("Rc").clone(),
            };
            let r = integrate_anderson_coeffs(&k, w, horizon, dt)?;
            let (d, dd, n) = dot_ops();
            let drain = CoefficientSeries::sum(&[&series(&r, "F_Lc")?, &series(&r, "F_Rc")?])?;
            let inject = CoefficientSeries::sum(&[&series(&r, "F_La")?, &series(&r, "F_Ra")?])?;
            // c[d, d†ρ] + h.c. = −c[d†ρ, d] + h.c.
            let inject = match spec.parameters.injection_form {
                InjectionForm::Consistent => inject,
                InjectionForm::Printed => inject.scaled(-ONE),
            };
            let gen = MasterGenerator::new(
                h,
                vec![
                    DissipatorTerm::new(drain, d.clone(), dd.clone()),
                    DissipatorTerm::new(inject, dd, d),
                    DissipatorTerm::new(series(&r, "F1")?, n.clone(), n),
                ],
            )?;
            Ok((r, gen, Approximation::ZerothOrder))
        }
    }
}

/// Memory time of every kernel and its short/long classification.
pub fn memory_times(spec: &ModelSpec) -> Result<Vec<MemoryTime>> {
    spec.kernels
        .iter()
        .map(|(name, k)| {
            let time = k.markov_limit_diagnostic(spec.grid.horizon)?;
            let class = if time < SHORT_MEMORY_FRACTION * spec.grid.horizon {
                MemoryClass::ShortMemory
            } else {
                MemoryClass::LongMemory
            };
            Ok(MemoryTime {
                kernel: name.clone(),
                time,
                class,
            })
        })
        .collect()
}

/// Integrates coefficients, assembles the generator and evolves `ρ(t)`.
pub fn run(spec: &ModelSpec) -> Result<RunResult> {
    let (coefficients, gen, approximation) = assemble(spec)?;
    let trajectory = evolve(&gen, &spec.initial_state, spec.grid.horizon, spec.grid.dt)?;
    let diagnostics = Diagnostics {
        positivity: positivity_monitor(&trajectory),
        max_trace_drift: trajectory.max_trace_drift(),
        max_hermiticity_error: trajectory.max_hermiticity_error(),
        memory_times: memory_times(spec)?,
        approximation,
    };
    Ok(RunResult {
        coefficients,
        trajectory,
        diagnostics,
    })
}

/// A sweepable parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Knob {
    CF,
    CB,
    KappaB,
    /// `kernel.<name>.<field>`, e.g. `kernel.phonon.decay`.
    Kernel { name: String, field: String },
}

impl Knob {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "c_f" => Ok(Knob::CF),
            "c_b" => Ok(Knob::CB),
            "kappa_b" => Ok(Knob::KappaB),
            _ => match s.split('.').collect::<Vec<_>>().as_slice() {
                ["kernel", name, field] => Ok(Knob::Kernel {
                    name: name.to_string(),
                    field: field.to_string(),
                }),
                _ => Err(Error::config(
                    "knob",
                    format!("unknown knob {s:?}; expected c_f, c_b, kappa_b or kernel.<name>.<field>"),
                )),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Knob::CF => "c_f".into(),
            Knob::CB => "c_b".into(),
            Knob::KappaB => "kappa_b".into(),
            Knob::Kernel { name, field } => format!("kernel.{name}.{field}"),
        }
    }

    pub fn apply(&self, params: &mut ModelParameters, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::config("values", format!("{value} is not finite")));
        }
        match self {
            Knob::CF => params.c_f = value,
            Knob::CB => params.c_b = value,
            Knob::KappaB => {
                if params.kappa_b.is_none() {
                    return Err(Error::config("knob", "kappa_b only applies to the two-qubit model"));
                }
                params.kappa_b = Some(value);
            }
            Knob::Kernel { name, field } => {
                let spec = params
                    .kernels
                    .get_mut(name)
                    .ok_or_else(|| Error::config("knob", format!("no kernel named {name:?}")))?;
                *spec.field_mut(field).ok_or_else(|| {
                    Error::config("knob", format!("kernel {name:?} has no sweepable field {field:?}"))
                })? = value;
            }
        }
        Ok(())
    }
}

/// Runs the model once per knob value, in parallel; results keep the order
/// of `values`. Knob or value errors that make the whole sweep meaningless
/// are returned up front, per-run failures in the corresponding slot.
pub fn sweep(spec: &ModelSpec, knob: &Knob, values: &[f64]) -> Result<Vec<Result<RunResult>>> {
    if values.is_empty() {
        return Err(Error::config("values", "at least one value is required"));
    }
    if matches!(knob, Knob::CF | Knob::CB) {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::config(
                "values",
                format!("coupling scales must be finite and non-negative, got {v}"),
            ));
        }
    }
    // validate the knob itself before fanning out
    knob.apply(&mut spec.parameters.clone(), values[0])?;
    Ok(values
        .par_iter()
        .map(|&v| spec.with_knob(knob, v).and_then(|s| run(&s)))
        .collect())
}

/// Total-system description of a model for the exact oracle.
///
/// Only models whose kernels are finite sums of undamped modes admit one.
pub fn oracle_spec(spec: &ModelSpec) -> Result<TotalSystemSpec> {
    if spec.commutation_class != CommutationClass::Commutative {
        return Err(Error::Unsupported(format!(
            "no oracle for the {} model",
            spec.name.as_str()
        )));
    }
    let modes = |name: &str| -> Result<Vec<(f64, f64)>> {
        spec.kernel(name).modes().ok_or_else(|| {
            Error::Unsupported(format!(
                "oracle requires single-mode kernels; kernel {name:?} is not a sum of undamped modes"
            ))
        })
    };
    let cutoff = spec.parameters.cutoff;
    let initial_state = spec.initial_amplitudes.clone().ok_or_else(|| {
        Error::Unsupported("oracle requires a pure initial state".into())
    })?;
    Ok(TotalSystemSpec {
        system_hamiltonian: spec.system_hamiltonian.clone(),
        boson_modes: modes("bosonic")?
            .into_iter()
            .map(|(coupling, frequency)| BosonMode {
                frequency,
                coupling,
                cutoff,
            })
            .collect(),
        fermion_modes: modes("fermionic")?
            .into_iter()
            .map(|(coupling, frequency)| FermionMode { frequency, coupling })
            .collect(),
        coupling_b: spec.couplings["L_b"].clone(),
        coupling_f: spec.couplings["L_f"].clone(),
        commutation: spec.commutation_class,
        initial_state,
    })
}

#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub master: RunResult,
    pub oracle: Trajectory,
    pub report: TraceDistanceReport,
}

/// Runs the master equation and the oracle on the same grid.
pub fn compare_with_oracle(spec: &ModelSpec) -> Result<OracleComparison> {
    let total = oracle_spec(spec)?;
    let master = run(spec)?;
    let oracle = oracle_evolve(&total, spec.grid.horizon, spec.grid.dt)?;
    let report = compare_to_master(&oracle, &master.trajectory)?;
    Ok(OracleComparison {
        master,
        oracle,
        report,
    })
}
