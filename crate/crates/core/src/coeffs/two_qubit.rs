//! Exact O/Q coefficients for two qubits sharing a hybrid bath
//! (`L_b = L_f = σ₋^A + σ₋^B`).
//!
//! One-time fields `f₁, f₂, g₁, g₂` live on `s ≤ t`; two-time fields
//! `f₃, f₄, g₃, g₄` on `s, s′ ≤ t`, stored row-major as `[s][s′]` for the
//! current `t` only. Boundary conditions:
//!
//! * `f₁(t,t) = g₁(t,t) = 1`, `f₂(t,t) = g₂(t,t) = 0`;
//! * `f₃,f₄,g₃,g₄(t,t,s′) = 0` (this row also fixes the corner `s = s′ = t`);
//! * `f₃(t,s,t) = f₄(t,s,t) = −4i f₂(t,s)`, `g₃(t,s,t) = −4i g₂(t,s)`,
//!   `g₄(t,s,t) = −4i g₁(t,s) + 4i g₂(t,s)`.
//!
//! The `iF₃ + iG₃` source in `∂_t f₁` (and `f₂, g₁, g₂`) is taken at
//! `s′ = s`.

use super::{guard, CoefficientReport, FieldSystem, Stepper, TimeGrid};
use crate::algebra::{C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::kernels::{CorrelationKernel, LagTable, Stage};

/// Default cap on integrator memory, 1 GiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

const SERIES: [&str; 8] = ["F1", "F2", "G1", "G2", "F3p", "F4p", "G3p", "G4p"];

// RK4 keeps the state, four slopes and one stage buffer alive.
const LIVE_COPIES: usize = 6;

pub(crate) struct TwoQubitSystem {
    kb: LagTable,
    kf: LagTable,
    omega: f64,
    dt: f64,
}

/// Offsets of each field inside the flat state for `n1 = n + 1` rows.
#[derive(Clone, Copy)]
struct Layout {
    n1: usize,
}

impl Layout {
    fn one(&self, k: usize) -> std::ops::Range<usize> {
        k * self.n1..(k + 1) * self.n1
    }

    fn two(&self, k: usize) -> std::ops::Range<usize> {
        let base = 4 * self.n1;
        let sq = self.n1 * self.n1;
        base + k * sq..base + (k + 1) * sq
    }

    fn len(&self) -> usize {
        4 * self.n1 + 4 * self.n1 * self.n1
    }
}

const F1: usize = 0;
const F2: usize = 1;
const G1: usize = 2;
const G2: usize = 3;
const F3: usize = 0;
const F4: usize = 1;
const G3: usize = 2;
const G4: usize = 3;

/// Boundary column `X(t,s,t)` from the one-time fields.
fn boundary_column(which: usize, one: [&[C64]; 4], j: usize) -> C64 {
    let four_i = I * 4.0;
    match which {
        F3 | F4 => -four_i * one[F2][j],
        G3 => -four_i * one[G2][j],
        _ => -four_i * one[G1][j] + four_i * one[G2][j],
    }
}

/// Memory integrals at one stage.
struct Integrals {
    f1: C64,
    f2: C64,
    g1: C64,
    g2: C64,
    /// `X̄(τ, s′_k)` for `k = 0..=n`, per two-time field.
    columns: [Vec<C64>; 4],
    /// Aggregates `F′₃, F′₄, G′₃, G′₄`.
    primed: [C64; 4],
}

impl TwoQubitSystem {
    fn integrals(&self, n: usize, stage: Stage, y: &[C64]) -> Result<Integrals> {
        let lay = Layout { n1: n + 1 };
        let time = (n as f64 + stage.fraction()) * self.dt;
        let wb = self.kb.weights(n, stage);
        let wf = self.kf.weights(n, stage);
        let one = [&y[lay.one(F1)], &y[lay.one(F2)], &y[lay.one(G1)], &y[lay.one(G2)]];

        let f1 = wb.integrate(one[F1], ONE);
        let f2 = wb.integrate(one[F2], ZERO);
        let g1 = wf.integrate(one[G1], ONE);
        let g2 = wf.integrate(one[G2], ZERO);

        let mut columns: [Vec<C64>; 4] = Default::default();
        let mut primed = [ZERO; 4];
        for (k, col) in columns.iter_mut().enumerate() {
            let w = if k == F3 || k == F4 { &wb } else { &wf };
            col.resize(lay.n1, ZERO);
            // the row s = τ vanishes, so there is no tail contribution
            w.integrate_columns(&y[lay.two(k)], None, col);
            let boundary: Vec<C64> = (0..lay.n1).map(|j| boundary_column(k, one, j)).collect();
            let at_tau = w.integrate(&boundary, ZERO);
            primed[k] = w.integrate(col, at_tau);
        }

        for (name, v) in SERIES.iter().zip([f1, f2, g1, g2].iter().chain(primed.iter())) {
            guard(name, *v, time)?;
        }
        Ok(Integrals {
            f1,
            f2,
            g1,
            g2,
            columns,
            primed,
        })
    }
}

impl FieldSystem for TwoQubitSystem {
    fn series_names(&self) -> Vec<String> {
        SERIES.iter().map(|s| s.to_string()).collect()
    }

    fn initial_state(&self) -> Vec<C64> {
        // f₁, f₂, g₁, g₂ then the 1×1 two-time blocks
        vec![ONE, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO]
    }

    fn derivative(&self, n: usize, stage: Stage, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let lay = Layout { n1: n + 1 };
        let it = self.integrals(n, stage, y)?;
        let iw = I * self.omega;
        let sum1 = it.f1 + it.g1;
        let sum2 = it.f2 + it.g2;
        let src3: Vec<C64> = (0..lay.n1).map(|k| it.columns[F3][k] + it.columns[G3][k]).collect();
        let src4: Vec<C64> = (0..lay.n1).map(|k| it.columns[F4][k] + it.columns[G4][k]).collect();

        // one-time fields: f and g obey the same law
        for (a, b) in [(F1, F2), (G1, G2)] {
            for j in 0..lay.n1 {
                let x1 = y[lay.one(a).start + j];
                let x2 = y[lay.one(b).start + j];
                dy[lay.one(a).start + j] = iw * x1 + x1 * sum2 * 4.0 + I * src3[j];
                dy[lay.one(b).start + j] = iw * x2 + x1 * (sum2 * 4.0 - sum1) - I * 0.5 * src3[j]
                    + x2 * (sum1 * 2.0 - sum2 * 4.0);
            }
        }

        // two-time fields: (field, its first/second one-time partners, source)
        let two_iw = iw * 2.0;
        for (k, a, b, src) in [
            (F3, F1, F2, &src3),
            (F4, F1, F2, &src4),
            (G3, G1, G2, &src3),
            (G4, G1, G2, &src4),
        ] {
            let block = lay.two(k);
            for j in 0..lay.n1 {
                let x1 = y[lay.one(a).start + j] * 2.0;
                let x2 = y[lay.one(b).start + j] * 4.0;
                let row = block.start + j * lay.n1;
                for kk in 0..lay.n1 {
                    let v = y[row + kk];
                    dy[row + kk] = two_iw * v + (x1 - x2) * src[kk] + v * sum1 * 2.0;
                }
            }
        }
        Ok(())
    }

    fn observe(&self, n: usize, y: &[C64]) -> Result<Vec<C64>> {
        let it = self.integrals(n, Stage::Start, y)?;
        let mut out = vec![it.f1, it.f2, it.g1, it.g2];
        out.extend_from_slice(&it.primed);
        Ok(out)
    }

    fn extend(&self, n: usize, y: Vec<C64>) -> Vec<C64> {
        let old = Layout { n1: n + 1 };
        let new = Layout { n1: n + 2 };
        let mut out = vec![ZERO; new.len()];
        for (k, diag) in [(F1, ONE), (F2, ZERO), (G1, ONE), (G2, ZERO)] {
            let dst = new.one(k).start;
            out[dst..dst + old.n1].copy_from_slice(&y[old.one(k)]);
            out[dst + old.n1] = diag;
        }
        let one: [&[C64]; 4] = [
            &y[old.one(F1)],
            &y[old.one(F2)],
            &y[old.one(G1)],
            &y[old.one(G2)],
        ];
        for k in [F3, F4, G3, G4] {
            let src = &y[old.two(k)];
            let dst = new.two(k).start;
            for j in 0..old.n1 {
                let row = dst + j * new.n1;
                out[row..row + old.n1].copy_from_slice(&src[j * old.n1..(j + 1) * old.n1]);
                out[row + old.n1] = boundary_column(k, one, j);
            }
            // the new row s = t (including the corner) stays zero
        }
        out
    }
}

/// Step-by-step access to the two-qubit coefficient integration.
pub struct TwoQubitIntegrator {
    stepper: Stepper<TwoQubitSystem>,
}

impl TwoQubitIntegrator {
    pub fn new(
        kernel_b: &CorrelationKernel,
        kernel_f: &CorrelationKernel,
        omega: f64,
        horizon: f64,
        dt: f64,
        memory_budget: usize,
    ) -> Result<Self> {
        let grid = TimeGrid::new(horizon, dt)?;
        let n1 = grid.n_steps + 1;
        let bytes = LIVE_COPIES
            .saturating_mul(std::mem::size_of::<C64>())
            .saturating_mul(4 * n1 + 4 * n1.saturating_mul(n1));
        if bytes > memory_budget {
            return Err(Error::Resource(format!(
                "two-qubit coefficient slices need {bytes} bytes for {} steps, budget is {memory_budget}",
                grid.n_steps
            )));
        }
        let sys = TwoQubitSystem {
            kb: LagTable::new(kernel_b, dt, grid.n_steps),
            kf: LagTable::new(kernel_f, dt, grid.n_steps),
            omega,
            dt,
        };
        Ok(Self {
            stepper: Stepper::new(sys, grid),
        })
    }

    /// Index of the current time `t_n`.
    pub fn step_index(&self) -> usize {
        self.stepper.n
    }

    pub fn time(&self) -> f64 {
        self.stepper.grid.time(self.stepper.n)
    }

    pub fn is_finished(&self) -> bool {
        self.stepper.n == self.stepper.grid.n_steps
    }

    pub fn step(&mut self) -> Result<()> {
        self.stepper.step()
    }

    /// Current values of the reported series, in the order
    /// `F1, F2, G1, G2, F3p, F4p, G3p, G4p`.
    pub fn observe(&self) -> Result<Vec<C64>> {
        self.stepper.observe()
    }

    /// One-time field slice over `s_0..=t`: `name` in `f1, f2, g1, g2`.
    pub fn one_time(&self, name: &str) -> Option<&[C64]> {
        let k = ["f1", "f2", "g1", "g2"].iter().position(|n| *n == name)?;
        let lay = Layout { n1: self.stepper.n + 1 };
        Some(&self.stepper.state[lay.one(k)])
    }

    /// Two-time field value at grid indices `(s_j, s′_k)`: `name` in
    /// `f3, f4, g3, g4`.
    pub fn two_time(&self, name: &str, j: usize, k: usize) -> Option<C64> {
        let idx = ["f3", "f4", "g3", "g4"].iter().position(|n| *n == name)?;
        let lay = Layout { n1: self.stepper.n + 1 };
        if j >= lay.n1 || k >= lay.n1 {
            return None;
        }
        Some(self.stepper.state[lay.two(idx).start + j * lay.n1 + k])
    }

    pub fn run(self) -> Result<CoefficientReport> {
        self.stepper.run()
    }
}

pub fn integrate_two_qubit_coeffs(
    kernel_b: &CorrelationKernel,
    kernel_f: &CorrelationKernel,
    omega: f64,
    horizon: f64,
    dt: f64,
) -> Result<CoefficientReport> {
    integrate_two_qubit_coeffs_with_budget(kernel_b, kernel_f, omega, horizon, dt, DEFAULT_MEMORY_BUDGET)
}

pub fn integrate_two_qubit_coeffs_with_budget(
    kernel_b: &CorrelationKernel,
    kernel_f: &CorrelationKernel,
    omega: f64,
    horizon: f64,
    dt: f64,
    memory_budget: usize,
) -> Result<CoefficientReport> {
    TwoQubitIntegrator::new(kernel_b, kernel_f, omega, horizon, dt, memory_budget)?.run()
}
