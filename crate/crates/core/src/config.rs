//! JSON run configuration.
//!
//! ```json
//! {
//!   "model": "single_qubit",
//!   "parameters": {
//!     "omega": 1.0,
//!     "kernels": {
//!       "bosonic":   {"type": "single_mode", "coupling": 0.2, "frequency": 1.0},
//!       "fermionic": {"type": "ou", "strength": 1.0, "decay": 0.5, "frequency": 0.0}
//!     },
//!     "scales": {"c_b": 1.0, "c_f": 1.0},
//!     "initial_state": "plus"
//!   },
//!   "grid": {"horizon": 3.0, "dt": 0.001},
//!   "outputs": {"directory": "out", "formats": ["csv", "svg"]}
//! }
//! ```
//!
//! The Anderson model takes `epsilon` instead of `omega`, the two-qubit
//! model additionally requires `kappa_b`. Unknown keys are rejected and
//! every error names the offending field by its dotted path.

use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::kernels::CorrelationKernel;
use crate::oracle::DEFAULT_CUTOFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelName {
    SingleQubit,
    TwoQubit,
    DephasingQubit,
    Anderson,
}

impl ModelName {
    pub const ALL: [ModelName; 4] = [
        ModelName::SingleQubit,
        ModelName::TwoQubit,
        ModelName::DephasingQubit,
        ModelName::Anderson,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::SingleQubit => "single_qubit",
            ModelName::TwoQubit => "two_qubit",
            ModelName::DephasingQubit => "dephasing_qubit",
            ModelName::Anderson => "anderson",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Names of the kernels the model expects, bosonic ones first.
    pub fn kernel_names(self) -> &'static [&'static str] {
        match self {
            ModelName::Anderson => &["phonon", "Lc", "Rc", "La", "Ra"],
            _ => &["bosonic", "fermionic"],
        }
    }

    /// Whether the named kernel belongs to the bosonic bath (scaled by `c_b`).
    pub fn is_bosonic_kernel(self, name: &str) -> bool {
        match self {
            ModelName::Anderson => name == "phonon",
            _ => name == "bosonic",
        }
    }

    /// Key of the system frequency in the parameter block.
    pub fn frequency_key(self) -> &'static str {
        match self {
            ModelName::Anderson => "epsilon",
            _ => "omega",
        }
    }
}

/// Tagged kernel description as it appears in the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `λ² e^{−iΩτ}`
    SingleMode { coupling: f64, frequency: f64 },
    /// `(Γ/2) e^{(−γ+iφ)τ}`
    Ou { strength: f64, decay: f64, frequency: f64 },
    Sum(Vec<KernelSpec>),
}

impl KernelSpec {
    pub fn build(&self) -> Result<CorrelationKernel> {
        match self {
            KernelSpec::SingleMode { coupling, frequency } => {
                CorrelationKernel::single_mode(*coupling, *frequency)
            }
            KernelSpec::Ou {
                strength,
                decay,
                frequency,
            } => CorrelationKernel::ou(*strength, *decay, *frequency),
            KernelSpec::Sum(parts) => {
                let mut total = CorrelationKernel::zero();
                for p in parts {
                    total = &total + &p.build()?;
                }
                Ok(total)
            }
        }
    }

    /// Mutable access to a named numeric field, for sweeps.
    pub fn field_mut(&mut self, field: &str) -> Option<&mut f64> {
        match (self, field) {
            (KernelSpec::SingleMode { coupling, .. }, "coupling") => Some(coupling),
            (KernelSpec::SingleMode { frequency, .. }, "frequency") => Some(frequency),
            (KernelSpec::Ou { strength, .. }, "strength") => Some(strength),
            (KernelSpec::Ou { decay, .. }, "decay") => Some(decay),
            (KernelSpec::Ou { frequency, .. }, "frequency") => Some(frequency),
            _ => None,
        }
    }

    fn from_json(v: &Value, path: &str) -> Result<Self> {
        let obj = as_object(v, path)?;
        let kind = obj
            .get("type")
            .ok_or_else(|| Error::config(format!("{path}.type"), "missing field"))?
            .as_str()
            .ok_or_else(|| Error::config(format!("{path}.type"), "expected a string"))?;
        match kind {
            "single_mode" => {
                check_keys(obj, path, &["type", "coupling", "frequency"])?;
                Ok(KernelSpec::SingleMode {
                    coupling: req_f64(obj, path, "coupling")?,
                    frequency: req_f64(obj, path, "frequency")?,
                })
            }
            "ou" => {
                check_keys(obj, path, &["type", "strength", "decay", "frequency"])?;
                Ok(KernelSpec::Ou {
                    strength: req_f64(obj, path, "strength")?,
                    decay: req_f64(obj, path, "decay")?,
                    frequency: req_f64(obj, path, "frequency")?,
                })
            }
            "sum" => {
                check_keys(obj, path, &["type", "terms"])?;
                let terms_path = format!("{path}.terms");
                let terms = obj
                    .get("terms")
                    .ok_or_else(|| Error::config(&terms_path, "missing field"))?
                    .as_array()
                    .ok_or_else(|| Error::config(&terms_path, "expected an array"))?;
                if terms.is_empty() {
                    return Err(Error::config(&terms_path, "must not be empty"));
                }
                terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| KernelSpec::from_json(t, &format!("{terms_path}.{i}")))
                    .collect::<Result<Vec<_>>>()
                    .map(KernelSpec::Sum)
            }
            other => Err(Error::config(
                format!("{path}.type"),
                format!("unknown kernel type {other:?}; expected single_mode, ou or sum"),
            )),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            KernelSpec::SingleMode { coupling, frequency } => {
                json!({"type": "single_mode", "coupling": coupling, "frequency": frequency})
            }
            KernelSpec::Ou {
                strength,
                decay,
                frequency,
            } => json!({"type": "ou", "strength": strength, "decay": decay, "frequency": frequency}),
            KernelSpec::Sum(parts) => {
                json!({"type": "sum", "terms": parts.iter().map(KernelSpec::to_json).collect::<Vec<_>>()})
            }
        }
    }
}

/// Initial system state: a named preset or explicit amplitudes.
///
/// Presets: `plus` (every qubit, or the dot, in `(|0⟩+|1⟩)/√2`),
/// `excited` and `ground` for qubits, `filled` and `empty` for the dot.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStateSpec {
    Preset(String),
    Amplitudes(Vec<C64>),
}

impl InitialStateSpec {
    fn from_json(v: &Value, path: &str) -> Result<Self> {
        match v {
            Value::String(s) => Ok(InitialStateSpec::Preset(s.clone())),
            Value::Object(obj) => {
                check_keys(obj, path, &["amplitudes"])?;
                let ap = format!("{path}.amplitudes");
                let arr = obj
                    .get("amplitudes")
                    .ok_or_else(|| Error::config(&ap, "missing field"))?
                    .as_array()
                    .ok_or_else(|| Error::config(&ap, "expected an array of [re, im] pairs"))?;
                arr.iter()
                    .enumerate()
                    .map(|(i, pair)| {
                        let p = format!("{ap}.{i}");
                        match pair.as_array().map(Vec::as_slice) {
                            Some([re, im]) => Ok(C64::new(num(re, &p)?, num(im, &p)?)),
                            _ => Err(Error::config(p, "expected [re, im]")),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(InitialStateSpec::Amplitudes)
            }
            _ => Err(Error::config(path, "expected a preset name or {\"amplitudes\": [...]}")),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            InitialStateSpec::Preset(s) => Value::String(s.clone()),
            InitialStateSpec::Amplitudes(a) => {
                json!({"amplitudes": a.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>()})
            }
        }
    }
}

/// Sign convention for the injection (`a`) channel of the quantum-dot
/// master equation.
///
/// `Consistent` uses `(F_La+F_Ra)[d†ρ, d] + h.c.`, which follows from the
/// noise-independent master equation with `Q_a ∝ d†` and fills the dot at a
/// positive rate. `Printed` uses `(F_La+F_Ra)[d, d†ρ] + h.c.`, the opposite
/// sign, kept for sensitivity studies; it drives the populations out of
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionForm {
    Consistent,
    Printed,
}

impl InjectionForm {
    pub fn as_str(self) -> &'static str {
        match self {
            InjectionForm::Consistent => "consistent",
            InjectionForm::Printed => "printed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    /// `ω` for the qubit models, `ε` for the dot.
    pub frequency: f64,
    pub kernels: BTreeMap<String, KernelSpec>,
    pub c_b: f64,
    pub c_f: f64,
    /// Coupling of qubit B; two-qubit model only.
    pub kappa_b: Option<f64>,
    pub initial_state: InitialStateSpec,
    pub injection_form: InjectionForm,
    /// Boson cutoff used when the model is handed to the oracle.
    pub cutoff: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec![OutputFormat::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelName,
    pub parameters: ModelParameters,
    pub grid: GridSpec,
    pub outputs: OutputSpec,
    /// Trace-distance tolerance for oracle comparisons.
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::config("$", format!("not valid JSON: {e}")))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let root = as_object(v, "$")?;
        check_keys(root, "", &["model", "parameters", "grid", "outputs", "tolerance"])?;
        let model_str = root
            .get("model")
            .ok_or_else(|| Error::config("model", "missing field"))?
            .as_str()
            .ok_or_else(|| Error::config("model", "expected a string"))?;
        let model = ModelName::parse(model_str).ok_or_else(|| {
            Error::config(
                "model",
                format!("unknown model {model_str:?}; expected single_qubit, two_qubit, dephasing_qubit or anderson"),
            )
        })?;
        let params = root
            .get("parameters")
            .ok_or_else(|| Error::config("parameters", "missing field"))?;
        let parameters = parse_parameters(model, params)?;

        let grid_v = root.get("grid").ok_or_else(|| Error::config("grid", "missing field"))?;
        let grid_o = as_object(grid_v, "grid")?;
        check_keys(grid_o, "grid", &["horizon", "dt"])?;
        let grid = GridSpec {
            horizon: req_f64(grid_o, "grid", "horizon")?,
            dt: req_f64(grid_o, "grid", "dt")?,
        };

        let outputs = match root.get("outputs") {
            None => OutputSpec::default(),
            Some(o) => parse_outputs(o)?,
        };
        let tolerance = match root.get("tolerance") {
            None => None,
            Some(t) => Some(num(t, "tolerance")?),
        };
        Ok(Self {
            model,
            parameters,
            grid,
            outputs,
            tolerance,
        })
    }

    /// Canonical JSON; parsing it back yields an identical config.
    pub fn to_json(&self) -> Value {
        let p = &self.parameters;
        let mut params = Map::new();
        params.insert(self.model.frequency_key().into(), json!(p.frequency));
        params.insert(
            "kernels".into(),
            Value::Object(p.kernels.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        );
        params.insert("scales".into(), json!({"c_b": p.c_b, "c_f": p.c_f}));
        if let Some(k) = p.kappa_b {
            params.insert("kappa_b".into(), json!(k));
        }
        params.insert("initial_state".into(), p.initial_state.to_json());
        if self.model == ModelName::Anderson {
            params.insert("injection_form".into(), json!(p.injection_form.as_str()));
        }
        params.insert("cutoff".into(), json!(p.cutoff));

        let formats: Vec<&str> = self
            .outputs
            .formats
            .iter()
            .map(|f| match f {
                OutputFormat::Csv => "csv",
                OutputFormat::Svg => "svg",
            })
            .collect();
        let mut root = Map::new();
        root.insert("model".into(), json!(self.model.as_str()));
        root.insert("parameters".into(), Value::Object(params));
        root.insert("grid".into(), json!({"horizon": self.grid.horizon, "dt": self.grid.dt}));
        root.insert(
            "outputs".into(),
            json!({"directory": self.outputs.directory, "formats": formats}),
        );
        if let Some(t) = self.tolerance {
            root.insert("tolerance".into(), json!(t));
        }
        Value::Object(root)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("config serializes")
    }
}

fn parse_parameters(model: ModelName, v: &Value) -> Result<ModelParameters> {
    let obj = as_object(v, "parameters")?;
    let fkey = model.frequency_key();
    let mut allowed = vec![fkey, "kernels", "scales", "initial_state", "cutoff"];
    if model == ModelName::TwoQubit {
        allowed.push("kappa_b");
    }
    if model == ModelName::Anderson {
        allowed.push("injection_form");
    }
    check_keys(obj, "parameters", &allowed)?;

    let frequency = req_f64(obj, "parameters", fkey)?;

    let kv = obj
        .get("kernels")
        .ok_or_else(|| Error::config("parameters.kernels", "missing field"))?;
    let ko = as_object(kv, "parameters.kernels")?;
    check_keys(ko, "parameters.kernels", model.kernel_names())?;
    let mut kernels = BTreeMap::new();
    for name in model.kernel_names() {
        let path = format!("parameters.kernels.{name}");
        let spec = ko.get(*name).ok_or_else(|| Error::config(&path, "missing field"))?;
        kernels.insert(name.to_string(), KernelSpec::from_json(spec, &path)?);
    }

    let (c_b, c_f) = match obj.get("scales") {
        None => (1.0, 1.0),
        Some(s) => {
            let so = as_object(s, "parameters.scales")?;
            check_keys(so, "parameters.scales", &["c_b", "c_f"])?;
            (
                opt_f64(so, "parameters.scales", "c_b")?.unwrap_or(1.0),
                opt_f64(so, "parameters.scales", "c_f")?.unwrap_or(1.0),
            )
        }
    };

    let kappa_b = if model == ModelName::TwoQubit {
        Some(req_f64(obj, "parameters", "kappa_b")?)
    } else {
        None
    };

    let initial_state = match obj.get("initial_state") {
        None => InitialStateSpec::Preset("plus".into()),
        Some(s) => InitialStateSpec::from_json(s, "parameters.initial_state")?,
    };

    let injection_form = match obj.get("injection_form").map(|v| v.as_str()) {
        None => InjectionForm::Consistent,
        Some(Some("consistent")) => InjectionForm::Consistent,
        Some(Some("printed")) => InjectionForm::Printed,
        Some(_) => {
            return Err(Error::config(
                "parameters.injection_form",
                "expected \"consistent\" or \"printed\"",
            ))
        }
    };

    let cutoff = match obj.get("cutoff") {
        None => DEFAULT_CUTOFF,
        Some(c) => c
            .as_u64()
            .filter(|&c| c >= 2)
            .ok_or_else(|| Error::config("parameters.cutoff", "expected an integer >= 2"))?
            as usize,
    };

    Ok(ModelParameters {
        frequency,
        kernels,
        c_b,
        c_f,
        kappa_b,
        initial_state,
        injection_form,
        cutoff,
    })
}

fn parse_outputs(v: &Value) -> Result<OutputSpec> {
    let obj = as_object(v, "outputs")?;
    check_keys(obj, "outputs", &["directory", "formats"])?;
    let mut out = OutputSpec::default();
    if let Some(d) = obj.get("directory") {
        out.directory = d
            .as_str()
            .ok_or_else(|| Error::config("outputs.directory", "expected a string"))?
            .to_string();
    }
    if let Some(f) = obj.get("formats") {
        let arr = f
            .as_array()
            .ok_or_else(|| Error::config("outputs.formats", "expected an array"))?;
        out.formats = arr
            .iter()
            .enumerate()
            .map(|(i, x)| match x.as_str() {
                Some("csv") => Ok(OutputFormat::Csv),
                Some("svg") => Ok(OutputFormat::Svg),
                _ => Err(Error::config(
                    format!("outputs.formats.{i}"),
                    "expected \"csv\" or \"svg\"",
                )),
            })
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(out)
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::config(path, "expected an object"))
}

fn check_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        None => Ok(()),
        Some(k) => Err(Error::config(join(path, k), "unknown field")),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn num(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(path, "expected a finite number"))
}

fn req_f64(obj: &Map<String, Value>, path: &str, key: &str) -> Result<f64> {
    let p = join(path, key);
    let v = obj.get(key).ok_or_else(|| Error::config(&p, "missing field"))?;
    num(v, &p)
}

fn opt_f64(obj: &Map<String, Value>, path: &str, key: &str) -> Result<Option<f64>> {
    obj.get(key).map(|v| num(v, &join(path, key))).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": "two_qubit",
        "parameters": {
            "omega": 1.0,
            "kappa_b": 1,
            "kernels": {
                "bosonic": {"type": "ou", "strength": 1.0, "decay": 0.5, "frequency": 0.0},
                "fermionic": {"type": "sum", "terms": [
                    {"type": "single_mode", "coupling": 0.3, "frequency": 1.1},
                    {"type": "ou", "strength": 0.2, "decay": 2.0, "frequency": -0.4}
                ]}
            },
            "initial_state": {"amplitudes": [[0.5, 0], [0, 0.5], [0.5, 0], [0.5, 0]]}
        },
        "grid": {"horizon": 1.0, "dt": 0.01}
    }"#;

    #[test]
    fn defaults_are_filled_in() {
        let c = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.model, ModelName::TwoQubit);
        assert_eq!((c.parameters.c_b, c.parameters.c_f), (1.0, 1.0));
        assert_eq!(c.parameters.cutoff, DEFAULT_CUTOFF);
        assert_eq!(c.parameters.kappa_b, Some(1.0));
        assert_eq!(c.outputs, OutputSpec::default());
        assert_eq!(c.tolerance, None);
    }

    #[test]
    fn canonical_json_round_trips() {
        let c = RunConfig::from_json_str(MINIMAL).unwrap();
        let again = RunConfig::from_json_str(&c.to_json_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_json(), again.to_json());
    }

    fn field_of(text: &str) -> String {
        match RunConfig::from_json_str(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let v: Value = serde_json::from_str(MINIMAL).unwrap();

        let mut no_dt = v.clone();
        no_dt["grid"].as_object_mut().unwrap().remove("dt");
        assert_eq!(field_of(&no_dt.to_string()), "grid.dt");

        let mut no_kappa = v.clone();
        no_kappa["parameters"].as_object_mut().unwrap().remove("kappa_b");
        assert_eq!(field_of(&no_kappa.to_string()), "parameters.kappa_b");

        let mut bad_kernel = v.clone();
        bad_kernel["parameters"]["kernels"]["bosonic"]["type"] = json!("lorentzian");
        assert_eq!(field_of(&bad_kernel.to_string()), "parameters.kernels.bosonic.type");

        let mut missing_term_field = v.clone();
        missing_term_field["parameters"]["kernels"]["fermionic"]["terms"][1]
            .as_object_mut()
            .unwrap()
            .remove("decay");
        assert_eq!(
            field_of(&missing_term_field.to_string()),
            "parameters.kernels.fermionic.terms.1.decay"
        );

        let mut typo = v.clone();
        typo["grid"]["horizn"] = json!(1.0);
        assert_eq!(field_of(&typo.to_string()), "grid.horizn");

        let mut epsilon = v;
        epsilon["model"] = json!("anderson");
        epsilon["parameters"].as_object_mut().unwrap().remove("kappa_b");
        assert_eq!(field_of(&epsilon.to_string()), "parameters.omega");

        assert_eq!(field_of("[1, 2]"), "$");
        assert_eq!(field_of("{"), "$");
    }
}
