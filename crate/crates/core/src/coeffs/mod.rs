//! Coefficient functions of the O and Q operators.
//!
//! Each model's coefficients `f(t,s)` (and `f(t,s,s′)`) obey ODEs in `t`
//! driven by memory integrals `F(t) = ∫₀ᵗ K(t,s) f(t,s) ds`. Only the
//! current `t`-slice is stored. Every step of size `h` advances all stored
//! grid points with classical RK4; at each stage the memory integrals are
//! re-evaluated by trapezoid over the stage values, closing the last panel
//! `[s_n, τ]` with the boundary value at `s = τ`. After the step a new row
//! (and column, for two-time fields) is appended from the boundary
//! conditions.

mod scalar;
mod two_qubit;

pub use scalar::{
    integrate_anderson_coeffs, integrate_dephasing_qubit_coeffs, integrate_single_qubit_coeffs,
    AndersonKernels,
};
pub use two_qubit::{
    integrate_two_qubit_coeffs, integrate_two_qubit_coeffs_with_budget, TwoQubitIntegrator,
    DEFAULT_MEMORY_BUDGET,
};

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::io::{format_number, SchemaTag};
use crate::kernels::Stage;

/// `|F| > BLOW_UP_GUARD` aborts the integration.
pub const BLOW_UP_GUARD: f64 = 1e6;

/// Uniform time grid `t_n = n·dt`, `n = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if !(horizon >= dt) || !horizon.is_finite() {
            return Err(Error::invalid(format!(
                "horizon must be >= dt, got horizon={horizon}, dt={dt}"
            )));
        }
        let steps = horizon / dt;
        let n_steps = steps.round() as usize;
        if (steps - n_steps as f64).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "horizon {horizon} is not a multiple of dt {dt}"
            )));
        }
        Ok(Self { dt, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.time(n)).collect()
    }
}

/// Named complex coefficient series on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientReport {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `values[i][n]` is series `names[i]` at `times[n]`.
    pub values: Vec<Vec<C64>>,
}

impl CoefficientReport {
    pub fn series(&self, name: &str) -> Option<&[C64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn dt(&self) -> f64 {
        self.times.get(1).copied().unwrap_or(0.0) - self.times[0]
    }

    /// Largest `|value|` over all series and times.
    pub fn max_abs(&self, name: &str) -> Option<f64> {
        self.series(name)
            .map(|s| s.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// CSV: a schema comment line, then `t, re_<name>, im_<name>, ...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SchemaTag::Coefficients.line());
        out.push('\n');
        out.push('t');
        for name in &self.names {
            out.push_str(&format!(",re_{name},im_{name}"));
        }
        out.push('\n');
        for (n, t) in self.times.iter().enumerate() {
            out.push_str(&format_number(*t));
            for series in &self.values {
                let v = series[n];
                out.push(',');
                out.push_str(&format_number(v.re));
                out.push(',');
                out.push_str(&format_number(v.im));
            }
            out.push('\n');
        }
        out
    }
}

/// A coefficient system on the growing triangular grid.
pub(crate) trait FieldSystem {
    fn series_names(&self) -> Vec<String>;

    /// State at `t = 0` (a single grid row).
    fn initial_state(&self) -> Vec<C64>;

    /// `dy/dt` at `τ = t_n + c·h` for the stage state `y`.
    fn derivative(&self, n: usize, stage: Stage, y: &[C64], dy: &mut [C64]) -> Result<()>;

    /// Reported series at `t_n`.
    fn observe(&self, n: usize, y: &[C64]) -> Result<Vec<C64>>;

    /// Append the boundary row/column for `t_{n+1}` to the stepped state.
    fn extend(&self, n: usize, y: Vec<C64>) -> Vec<C64>;
}

pub(crate) fn guard(name: &str, value: C64, time: f64) -> Result<()> {
    if !value.re.is_finite() || !value.im.is_finite() || value.norm() > BLOW_UP_GUARD {
        return Err(Error::Singularity {
            series: name.to_string(),
            time,
        });
    }
    Ok(())
}

/// Sequential RK4 stepper over a [`FieldSystem`].
pub(crate) struct Stepper<S> {
    pub(crate) system: S,
    pub(crate) grid: TimeGrid,
    pub(crate) n: usize,
    pub(crate) state: Vec<C64>,
    scratch: [Vec<C64>; 5],
}

impl<S: FieldSystem> Stepper<S> {
    pub(crate) fn new(system: S, grid: TimeGrid) -> Self {
        let state = system.initial_state();
        Self {
            system,
            grid,
            n: 0,
            state,
            scratch: Default::default(),
        }
    }

    pub(crate) fn observe(&self) -> Result<Vec<C64>> {
        self.system.observe(self.n, &self.state)
    }

    /// Advance from `t_n` to `t_{n+1}` and append the new boundary row.
    pub(crate) fn step(&mut self) -> Result<()> {
        let h = self.grid.dt;
        let n = self.n;
        let len = self.state.len();
        let [k1, k2, k3, k4, tmp] = &mut self.scratch;
        for v in [&mut *k1, &mut *k2, &mut *k3, &mut *k4, &mut *tmp] {
            v.clear();
            v.resize(len, C64::new(0.0, 0.0));
        }
        let y = &self.state;
        let sys = &self.system;

        sys.derivative(n, Stage::Start, y, k1)?;
        for i in 0..len {
            tmp[i] = y[i] + k1[i] * (0.5 * h);
        }
        sys.derivative(n, Stage::Mid, tmp, k2)?;
        for i in 0..len {
            tmp[i] = y[i] + k2[i] * (0.5 * h);
        }
        sys.derivative(n, Stage::Mid, tmp, k3)?;
        for i in 0..len {
            tmp[i] = y[i] + k3[i] * h;
        }
        sys.derivative(n, Stage::End, tmp, k4)?;

        let mut next = std::mem::take(&mut self.state);
        for i in 0..len {
            next[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        self.state = self.system.extend(n, next);
        self.n += 1;
        Ok(())
    }

    pub(crate) fn run(mut self) -> Result<CoefficientReport> {
        let names = self.system.series_names();
        let mut values = vec![Vec::with_capacity(self.grid.n_steps + 1); names.len()];
        loop {
            for (series, v) in values.iter_mut().zip(self.observe()?) {
                series.push(v);
            }
            if self.n == self.grid.n_steps {
                break;
            }
            self.step()?;
        }
        Ok(CoefficientReport {
            times: self.grid.times(),
            names,
            values,
        })
    }
}
