//! Time-dependent master equations
//! `dρ/dt = −i[H,ρ] + Σ_j (c_j(t)[A_j ρ, B_j] + h.c.)`.

use nalgebra::DMatrix;

use crate::algebra::{DensityMatrix, OperatorMatrix, C64, I, ONE};
use crate::coeffs::{CoefficientReport, TimeGrid};
use crate::error::{Error, Result};
use crate::io::{format_number, SchemaTag};

/// Trace drift that aborts an integration.
pub const TRACE_FAILURE: f64 = 1e-8;
/// Minimum eigenvalue below which the positivity monitor raises its flag.
pub const POSITIVITY_WARNING: f64 = -1e-6;

/// Complex coefficient sampled on a uniform grid, linearly interpolated in
/// between.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeries {
    dt: f64,
    values: Vec<C64>,
}

impl CoefficientSeries {
    pub fn new(dt: f64, values: Vec<C64>) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(Error::invalid("coefficient series needs dt > 0 and at least one sample"));
        }
        Ok(Self { dt, values })
    }

    pub fn from_report(report: &CoefficientReport, name: &str) -> Result<Self> {
        let values = report
            .series(name)
            .ok_or_else(|| Error::invalid(format!("coefficient report has no series {name:?}")))?;
        Self::new(report.dt(), values.to_vec())
    }

    /// Element-wise sum of series on the same grid.
    pub fn sum(parts: &[&CoefficientSeries]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("empty coefficient sum"))?;
        if parts.iter().any(|p| p.values.len() != first.values.len() || p.dt != first.dt) {
            return Err(Error::invalid("coefficient series live on different grids"));
        }
        let values = (0..first.values.len())
            .map(|i| parts.iter().map(|p| p.values[i]).sum())
            .collect();
        Self::new(first.dt, values)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            dt: self.dt,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, t: f64) -> C64 {
        let x = (t / self.dt).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// One `c(t)[A ρ, B] + h.c.` term.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorTerm {
    pub coefficient: CoefficientSeries,
    pub left: OperatorMatrix,
    pub right: OperatorMatrix,
}

impl DissipatorTerm {
    pub fn new(coefficient: CoefficientSeries, left: OperatorMatrix, right: OperatorMatrix) -> Self {
        Self {
            coefficient,
            left,
            right,
        }
    }
}

struct PreparedTerm<'a> {
    coefficient: &'a CoefficientSeries,
    a: &'a DMatrix<C64>,
    b: &'a DMatrix<C64>,
    ba: DMatrix<C64>,
    a_dag: DMatrix<C64>,
    b_dag: DMatrix<C64>,
    a_dag_b_dag: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterGenerator {
    pub hamiltonian: OperatorMatrix,
    pub terms: Vec<DissipatorTerm>,
}

impl MasterGenerator {
    pub fn new(hamiltonian: OperatorMatrix, terms: Vec<DissipatorTerm>) -> Result<Self> {
        let dim = hamiltonian.dim();
        if terms.iter().any(|t| t.left.dim() != dim || t.right.dim() != dim) {
            return Err(Error::invalid("dissipator operators must match the Hamiltonian dimension"));
        }
        Ok(Self { hamiltonian, terms })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn prepare(&self) -> Vec<PreparedTerm<'_>> {
        self.terms
            .iter()
            .map(|t| {
                let a = t.left.matrix();
                let b = t.right.matrix();
                PreparedTerm {
                    coefficient: &t.coefficient,
                    a,
                    b,
                    ba: b * a,
                    a_dag: a.adjoint(),
                    b_dag: b.adjoint(),
                    a_dag_b_dag: a.adjoint() * b.adjoint(),
                }
            })
            .collect()
    }

    /// `dρ/dt` at time `t`.
    pub fn apply(&self, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        apply_prepared(self.hamiltonian.matrix(), &self.prepare(), t, rho)
    }
}

// c[Aρ, B] + h.c. = c(AρB − BAρ) + c*(B†ρA† − ρA†B†), linear in ρ.
fn apply_prepared(h: &DMatrix<C64>, terms: &[PreparedTerm<'_>], t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = (h * rho - rho * h) * (-I);
    for term in terms {
        let c = term.coefficient.at(t);
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let forward = term.a * rho * term.b - &term.ba * rho;
        let backward = &term.b_dag * rho * &term.a_dag - rho * &term.a_dag_b_dag;
        out += forward * c + backward * c.conj();
    }
    out
}

/// Density matrices on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, DensityMatrix::dim)
    }

    pub fn element(&self, i: usize, j: usize) -> Vec<C64> {
        self.states.iter().map(|s| s.get(i, j)).collect()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.trace() - ONE).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.op().hermiticity_error())
            .fold(0.0, f64::max)
    }

    /// First time `|ρ_ij|` drops to half of its initial value.
    pub fn half_life(&self, i: usize, j: usize) -> Option<f64> {
        let start = self.states[0].get(i, j).norm();
        if start == 0.0 {
            return None;
        }
        self.times
            .iter()
            .zip(&self.states)
            .find(|(_, s)| s.get(i, j).norm() <= 0.5 * start)
            .map(|(t, _)| *t)
    }

    /// CSV: `t`, then `re_rho_i_j, im_rho_i_j` in row-major order.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut out = String::new();
        out.push_str(SchemaTag::Trajectory.line());
        out.push('\n');
        out.push('t');
        for i in 0..dim {
            for j in 0..dim {
                out.push_str(&format!(",re_rho_{i}_{j},im_rho_{i}_{j}"));
            }
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format_number(*t));
            for i in 0..dim {
                for j in 0..dim {
                    let v = s.get(i, j);
                    out.push(',');
                    out.push_str(&format_number(v.re));
                    out.push(',');
                    out.push_str(&format_number(v.im));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// RK4 integration of the master equation; the state is never renormalized.
pub fn evolve(gen: &MasterGenerator, rho0: &DensityMatrix, horizon: f64, dt: f64) -> Result<Trajectory> {
    let grid = TimeGrid::new(horizon, dt)?;
    if rho0.dim() != gen.dim() {
        return Err(Error::invalid(format!(
            "initial state has dimension {}, generator {}",
            rho0.dim(),
            gen.dim()
        )));
    }
    for term in &gen.terms {
        if term.coefficient.horizon() + 1e-9 * horizon.max(1.0) < grid.horizon() {
            return Err(Error::invalid(format!(
                "coefficient series covers t <= {}, integration needs {}",
                term.coefficient.horizon(),
                grid.horizon()
            )));
        }
    }

    let terms = gen.prepare();
    let h = gen.hamiltonian.matrix();
    let f = |t: f64, rho: &DMatrix<C64>| apply_prepared(h, &terms, t, rho);

    let mut times = Vec::with_capacity(grid.n_steps + 1);
    let mut states = Vec::with_capacity(grid.n_steps + 1);
    let mut rho = rho0.matrix().clone();
    times.push(0.0);
    states.push(rho0.clone());
    for n in 0..grid.n_steps {
        let t = grid.time(n);
        let k1 = f(t, &rho);
        let k2 = f(t + 0.5 * dt, &(&rho + &k1 * C64::new(0.5 * dt, 0.0)));
        let k3 = f(t + 0.5 * dt, &(&rho + &k2 * C64::new(0.5 * dt, 0.0)));
        let k4 = f(t + dt, &(&rho + &k3 * C64::new(dt, 0.0)));
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);

        let t_next = grid.time(n + 1);
        let drift = (rho.trace() - ONE).norm();
        if !drift.is_finite() || drift > TRACE_FAILURE {
            return Err(Error::IntegrationFailure {
                time: t_next,
                message: format!("trace drifted by {drift:e}"),
            });
        }
        times.push(t_next);
        states.push(DensityMatrix::from_raw(rho.clone()));
    }
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub at_time: f64,
    /// Set when the minimum eigenvalue fell below [`POSITIVITY_WARNING`].
    pub warning: bool,
}

pub fn positivity_monitor(traj: &Trajectory) -> PositivityReport {
    let (at_time, min_eigenvalue) = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (*t, s.min_eigenvalue()))
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    PositivityReport {
        min_eigenvalue,
        at_time,
        warning: min_eigenvalue < POSITIVITY_WARNING,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, Pauli, ZERO};

    fn constant(dt: f64, horizon: f64, c: C64) -> CoefficientSeries {
        let n = (horizon / dt).round() as usize;
        CoefficientSeries::new(dt, vec![c; n + 1]).unwrap()
    }

    #[test]
    fn linear_interpolation() {
        let s = CoefficientSeries::new(0.5, vec![ZERO, C64::new(1.0, 2.0), C64::new(3.0, 0.0)]).unwrap();
        assert_eq!(s.at(0.25), C64::new(0.5, 1.0));
        assert_eq!(s.at(0.75), C64::new(2.0, 1.0));
        assert_eq!(s.at(1.0), C64::new(3.0, 0.0));
        assert_eq!(s.horizon(), 1.0);
    }

    #[test]
    fn frozen_without_generator() {
        let gen = MasterGenerator::new(OperatorMatrix::zeros(2), vec![DissipatorTerm::new(
            constant(0.01, 1.0, ZERO),
            pauli(Pauli::Minus),
            pauli(Pauli::Plus),
        )])
        .unwrap();
        let rho0 = DensityMatrix::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let traj = evolve(&gen, &rho0, 1.0, 0.01).unwrap();
        assert!(traj.states.iter().all(|s| s == &rho0));
    }

    #[test]
    fn constant_rate_decay_matches_exponential() {
        // c[σ₋ρ,σ₊] + h.c. with real c is amplitude damping at rate 2c
        let c = 0.3;
        let gen = MasterGenerator::new(OperatorMatrix::zeros(2), vec![DissipatorTerm::new(
            constant(0.01, 2.0, C64::new(c, 0.0)),
            pauli(Pauli::Minus),
            pauli(Pauli::Plus),
        )])
        .unwrap();
        let rho0 = DensityMatrix::pure(&[ONE, ONE]).unwrap();
        let traj = evolve(&gen, &rho0, 2.0, 0.01).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s.get(0, 0).re - 0.5 * (-2.0 * c * t).exp()).abs() < 1e-9);
            assert!((s.get(1, 0).re - 0.5 * (-c * t).exp()).abs() < 1e-9);
        }
        assert!(traj.max_trace_drift() < 1e-12);
        let pos = positivity_monitor(&traj);
        assert!(!pos.warning);
    }

    #[test]
    fn generator_is_trace_free_and_hermiticity_preserving() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut rand_op = |dim: usize| {
            OperatorMatrix::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        };
        let hraw = rand_op(3);
        let h = &hraw + &hraw.adjoint();
        let terms = (0..3)
            .map(|k| {
                DissipatorTerm::new(
                    constant(0.1, 1.0, C64::new(0.3 * k as f64, -0.2)),
                    rand_op(3),
                    rand_op(3),
                )
            })
            .collect();
        let gen = MasterGenerator::new(h, terms).unwrap();
        for _ in 0..10 {
            let a = rand_op(3);
            let rho = &a + &a.adjoint();
            let d = gen.apply(0.3, rho.matrix());
            assert!(d.trace().norm() < 1e-12);
            assert!(OperatorMatrix::new(d).unwrap().hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn short_coefficients_are_rejected() {
        let gen = MasterGenerator::new(OperatorMatrix::zeros(2), vec![DissipatorTerm::new(
            constant(0.01, 0.5, ONE),
            pauli(Pauli::Minus),
            pauli(Pauli::Plus),
        )])
        .unwrap();
        let rho0 = DensityMatrix::maximally_mixed(2);
        assert!(matches!(evolve(&gen, &rho0, 1.0, 0.01), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unstable_step_is_an_integration_failure() {
        // RK4 far outside its stability region: values overflow and the trace is lost
        let gen = MasterGenerator::new(OperatorMatrix::zeros(2), vec![DissipatorTerm::new(
            constant(0.1, 10.0, C64::new(1e3, 0.0)),
            pauli(Pauli::Minus),
            pauli(Pauli::Plus),
        )])
        .unwrap();
        let rho0 = DensityMatrix::pure(&[ONE, ONE]).unwrap();
        assert!(matches!(
            evolve(&gen, &rho0, 10.0, 0.1),
            Err(Error::IntegrationFailure { .. })
        ));
    }

    #[test]
    fn positivity_monitor_on_mixed_state() {
        let gen = MasterGenerator::new(pauli(Pauli::Z), vec![DissipatorTerm::new(
            constant(0.01, 0.2, C64::new(0.2, 0.0)),
            pauli(Pauli::Minus),
            pauli(Pauli::Plus),
        )])
        .unwrap();
        let traj = evolve(&gen, &DensityMatrix::maximally_mixed(2), 0.2, 0.01).unwrap();
        let rep = positivity_monitor(&traj);
        assert!((rep.min_eigenvalue - 0.5).abs() < 0.1);
        assert!(!rep.warning);
    }
}
