//! Bath correlation kernels and their memory integrals.
//!
//! Every kernel is a finite exponential sum `K(t,s) = Σ w·exp(r·(t−s))`
//! evaluated for `t ≥ s`. Single-mode and Ornstein–Uhlenbeck kernels are
//! one-term special cases and a sum of baths is the concatenation of terms.

use std::ops::Add;

use crate::algebra::{C64, ZERO};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub weight: C64,
    pub rate: C64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationKernel {
    terms: Vec<KernelTerm>,
}

impl CorrelationKernel {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<KernelTerm>) -> Self {
        Self { terms }
    }

    /// `K(t,s) = λ² exp(−iΩ(t−s))`, one bath mode of frequency `Ω`.
    pub fn single_mode(coupling: f64, frequency: f64) -> Result<Self> {
        if !(coupling >= 0.0) || !frequency.is_finite() || !coupling.is_finite() {
            return Err(Error::invalid(format!(
                "single-mode kernel needs finite coupling >= 0 and frequency, got λ={coupling}, Ω={frequency}"
            )));
        }
        Ok(Self {
            terms: vec![KernelTerm {
                weight: C64::new(coupling * coupling, 0.0),
                rate: C64::new(0.0, -frequency),
            }],
        })
    }

    /// Ornstein–Uhlenbeck kernel `(Γ/2) exp[(−γ + iφ)(t−s)]`.
    pub fn ou(strength: f64, decay: f64, frequency: f64) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() || !frequency.is_finite() {
            return Err(Error::invalid(format!(
                "OU kernel needs finite strength >= 0, got Γ={strength}, φ={frequency}"
            )));
        }
        if !(decay > 0.0) || !decay.is_finite() {
            return Err(Error::invalid(format!("OU kernel needs decay > 0, got γ={decay}")));
        }
        Ok(Self {
            terms: vec![KernelTerm {
                weight: C64::new(strength / 2.0, 0.0),
                rate: C64::new(-decay, frequency),
            }],
        })
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.weight == ZERO)
    }

    /// Multiplies every weight by `c`; a coupling-strength scale.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| KernelTerm {
                    weight: t.weight * c,
                    rate: t.rate,
                })
                .collect(),
        }
    }

    pub fn eval_lag(&self, lag: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.weight * (t.rate * lag).exp())
            .sum()
    }

    /// `K(t,s)` for `t ≥ s`.
    pub fn eval(&self, t: f64, s: f64) -> C64 {
        self.eval_lag(t - s)
    }

    /// `K(t,t) = Σ w`.
    pub fn at_coincidence(&self) -> C64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// True when every term is a bare oscillator `λ² e^{−iΩτ}`, i.e. the
    /// kernel describes finitely many discrete bath modes.
    pub fn is_discrete_modes(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.rate.re == 0.0 && t.weight.im == 0.0 && t.weight.re >= 0.0)
    }

    /// `(λ, Ω)` per term for discrete-mode kernels.
    pub fn modes(&self) -> Option<Vec<(f64, f64)>> {
        self.is_discrete_modes().then(|| {
            self.terms
                .iter()
                .map(|t| (t.weight.re.sqrt(), -t.rate.im))
                .collect()
        })
    }

    /// Memory time `∫₀^H |K(τ)| dτ / |K(0)|`.
    ///
    /// Decaying kernels give roughly `1/γ`; undamped single-mode kernels
    /// give the horizon itself. A vanishing kernel has zero memory.
    pub fn markov_limit_diagnostic(&self, horizon: f64) -> Result<f64> {
        if !(horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be > 0, got {horizon}")));
        }
        let k0 = self.at_coincidence().norm();
        if k0 == 0.0 {
            return Ok(0.0);
        }
        let integral = match self.terms.as_slice() {
            [t] => {
                let decay = -t.rate.re;
                if decay == 0.0 {
                    t.weight.norm() * horizon
                } else {
                    t.weight.norm() * (-(-decay * horizon).exp_m1()) / decay
                }
            }
            _ => {
                // composite Simpson on |K|
                let n = 4096;
                let h = horizon / n as f64;
                let mut acc = self.eval_lag(0.0).norm() + self.eval_lag(horizon).norm();
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * self.eval_lag(i as f64 * h).norm();
                }
                acc * h / 3.0
            }
        };
        Ok(integral / k0)
    }
}

impl Add for &CorrelationKernel {
    type Output = CorrelationKernel;
    fn add(self, rhs: Self) -> CorrelationKernel {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        CorrelationKernel { terms }
    }
}

/// Running trapezoidal memory integral `F(t) = ∫₀ᵗ K(t,s) f(t,s) ds` on a
/// uniform grid `s_j = j·Δt`.
///
/// The accumulator holds the slice `f(t, s_j)` for `s_j < t`; the caller
/// updates it between steps (through [`samples_mut`](Self::samples_mut)) and
/// each [`step`](Self::step) appends the diagonal sample `f(t,t)`.
#[derive(Debug, Clone)]
pub struct MemoryIntegralAccumulator {
    dt: f64,
    samples: Vec<C64>,
    value: C64,
}

impl MemoryIntegralAccumulator {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("grid step must be > 0, got {dt}")));
        }
        Ok(Self {
            dt,
            samples: Vec::new(),
            value: ZERO,
        })
    }

    pub fn grid_step(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    /// Time of the most recent diagonal sample.
    pub fn time(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn step(&mut self, kernel: &CorrelationKernel, new_diagonal: C64) -> C64 {
        self.samples.push(new_diagonal);
        let n = self.samples.len() - 1;
        let t = n as f64 * self.dt;
        let mut acc = ZERO;
        for (j, f) in self.samples.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += kernel.eval(t, j as f64 * self.dt) * f * w;
        }
        self.value = if n == 0 { ZERO } else { acc * self.dt };
        self.value
    }
}

/// Position of an RK4 stage inside the step `[t_n, t_n + h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Start,
    Mid,
    End,
}

impl Stage {
    pub(crate) fn fraction(self) -> f64 {
        match self {
            Stage::Start => 0.0,
            Stage::Mid => 0.5,
            Stage::End => 1.0,
        }
    }
}

/// Quadrature weights for `∫₀^τ K(τ,s) v(s) ds` at `τ = t_n + c·h`, where
/// `v` is known on the grid `s_0..s_n` and at the stage time itself.
pub(crate) struct StageWeights {
    pub grid: Vec<C64>,
    pub tail: C64,
}

impl StageWeights {
    pub(crate) fn integrate(&self, samples: &[C64], tail_value: C64) -> C64 {
        debug_assert_eq!(samples.len(), self.grid.len());
        let mut acc = self.tail * tail_value;
        for (w, v) in self.grid.iter().zip(samples) {
            acc += w * v;
        }
        acc
    }

    /// Integrates many columns at once: `out[k] = Σ_j grid[j]·rows[j][k]`
    /// for a row-major square block, plus `tail·tail_row[k]`.
    pub(crate) fn integrate_columns(&self, block: &[C64], tail_row: Option<&[C64]>, out: &mut [C64]) {
        let n1 = self.grid.len();
        debug_assert_eq!(block.len(), n1 * n1);
        out.iter_mut().for_each(|x| *x = ZERO);
        for (j, w) in self.grid.iter().enumerate() {
            let row = &block[j * n1..(j + 1) * n1];
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        if let Some(tail) = tail_row {
            for (o, v) in out.iter_mut().zip(tail) {
                *o += self.tail * v;
            }
        }
    }
}

/// Kernel values tabulated at integer and half-integer multiples of `h`,
/// the only lags an RK4 stage on the uniform grid needs.
pub(crate) struct LagTable {
    h: f64,
    whole: Vec<C64>,
    half: Vec<C64>,
}

impl LagTable {
    pub(crate) fn new(kernel: &CorrelationKernel, h: f64, n_steps: usize) -> Self {
        let len = n_steps + 2;
        Self {
            h,
            whole: (0..len).map(|m| kernel.eval_lag(m as f64 * h)).collect(),
            half: (0..len).map(|m| kernel.eval_lag((m as f64 + 0.5) * h)).collect(),
        }
    }

    /// `K(t_n + c·h, s_j)`.
    fn at(&self, n: usize, j: usize, stage: Stage) -> C64 {
        match stage {
            Stage::Start => self.whole[n - j],
            Stage::Mid => self.half[n - j],
            Stage::End => self.whole[n - j + 1],
        }
    }

    /// Composite trapezoid over `s_0..s_n` plus the partial panel
    /// `[s_n, τ]` of width `c·h`.
    pub(crate) fn weights(&self, n: usize, stage: Stage) -> StageWeights {
        let h = self.h;
        let mut grid: Vec<C64> = (0..=n).map(|j| self.at(n, j, stage) * h).collect();
        if n == 0 {
            grid[0] = ZERO;
        } else {
            grid[0] *= 0.5;
            grid[n] *= 0.5;
        }
        let panel = 0.5 * stage.fraction() * h;
        grid[n] += self.at(n, n, stage) * panel;
        StageWeights {
            grid,
            tail: self.whole[0] * panel,
        }
    }
}
