//! Exact reference dynamics for few-mode baths.
//!
//! The total space is ordered system ⊗ bosons ⊗ fermions, with the baths
//! initially in their joint vacuum. For the anti-commutative class the
//! system is itself a fermionic mode (dimension 2, Fock order) and bath
//! fermions carry a Jordan–Wigner string through the system parity, so
//! that `{d, c_k} = 0`; in the commutative class bath fermions are plain
//! tensor factors and commute with every system operator.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{
    boson_ops, fermion_ops, fermion_parity, kron_all, DensityMatrix, OperatorMatrix, C64, I, ZERO,
};
use crate::error::{Error, Result};
use crate::io::{format_number, SchemaTag};
use crate::master::Trajectory;

/// Largest total dimension the oracle accepts.
pub const MAX_TOTAL_DIM: usize = 4096;
/// Largest total dimension propagated by exact diagonalization; bigger
/// spaces use RK4.
pub const EXACT_STEP_DIM: usize = 256;
pub const DEFAULT_CUTOFF: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutationClass {
    Commutative,
    AntiCommutative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BosonMode {
    pub frequency: f64,
    pub coupling: f64,
    pub cutoff: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermionMode {
    pub frequency: f64,
    pub coupling: f64,
}

/// `H = H_S + Σ Ω b†b + Σ ε c†c + Σ λ(b† L_b + h.c.) + Σ μ(c† L_f + h.c.)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalSystemSpec {
    pub system_hamiltonian: OperatorMatrix,
    pub boson_modes: Vec<BosonMode>,
    pub fermion_modes: Vec<FermionMode>,
    pub coupling_b: OperatorMatrix,
    pub coupling_f: OperatorMatrix,
    pub commutation: CommutationClass,
    /// System state vector; the baths start in the vacuum.
    pub initial_state: Vec<C64>,
}

impl TotalSystemSpec {
    pub fn system_dim(&self) -> usize {
        self.system_hamiltonian.dim()
    }

    pub fn total_dim(&self) -> usize {
        let bosons: usize = self.boson_modes.iter().map(|m| m.cutoff).product();
        self.system_dim()
            .saturating_mul(bosons)
            .saturating_mul(1usize.checked_shl(self.fermion_modes.len() as u32).unwrap_or(usize::MAX))
    }

    /// Same spec with every boson cutoff replaced.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut out = self.clone();
        for m in &mut out.boson_modes {
            m.cutoff = cutoff;
        }
        out
    }
}

/// The assembled total-space problem.
pub struct TotalSystem {
    spec: TotalSystemSpec,
    hamiltonian: OperatorMatrix,
    rest_dim: usize,
}

impl TotalSystem {
    pub fn build(spec: &TotalSystemSpec) -> Result<Self> {
        let sys = spec.system_dim();
        for (name, op) in [("L_b", &spec.coupling_b), ("L_f", &spec.coupling_f)] {
            if op.dim() != sys {
                return Err(Error::invalid(format!("{name} has dimension {}, system {sys}", op.dim())));
            }
        }
        if spec.initial_state.len() != sys {
            return Err(Error::invalid("initial state does not match the system dimension"));
        }
        let norm: f64 = spec.initial_state.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("initial state is not normalized (|ψ| = {norm})")));
        }
        if spec.commutation == CommutationClass::AntiCommutative && sys != 2 {
            return Err(Error::Unsupported(
                "anti-commutative oracle needs a single fermionic system mode".into(),
            ));
        }
        let total = spec.total_dim();
        if total > MAX_TOTAL_DIM {
            return Err(Error::Resource(format!(
                "total dimension {total} exceeds the oracle limit {MAX_TOTAL_DIM}"
            )));
        }

        let rest_dim = total / sys;
        let mut this = Self {
            spec: spec.clone(),
            hamiltonian: OperatorMatrix::zeros(total),
            rest_dim,
        };
        let mut h = this.system_op(&spec.system_hamiltonian);
        let lb = this.system_op(&spec.coupling_b);
        let lf = this.system_op(&spec.coupling_f);
        for (r, mode) in spec.boson_modes.iter().enumerate() {
            let (b, b_dag) = this.boson(r)?;
            h = &h + &(&b_dag * &b).scale(C64::new(mode.frequency, 0.0));
            let hop = &b_dag * &lb;
            h = &h + &(&hop + &hop.adjoint()).scale(C64::new(mode.coupling, 0.0));
        }
        for (k, mode) in spec.fermion_modes.iter().enumerate() {
            let (c, c_dag) = this.fermion(k)?;
            h = &h + &(&c_dag * &c).scale(C64::new(mode.frequency, 0.0));
            let hop = &c_dag * &lf;
            h = &h + &(&hop + &hop.adjoint()).scale(C64::new(mode.coupling, 0.0));
        }
        this.hamiltonian = h;
        Ok(this)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    fn bath_factors(&self) -> Vec<OperatorMatrix> {
        let mut f: Vec<OperatorMatrix> = self
            .spec
            .boson_modes
            .iter()
            .map(|m| OperatorMatrix::identity(m.cutoff))
            .collect();
        f.push(OperatorMatrix::identity(1 << self.spec.fermion_modes.len()));
        f
    }

    /// `op ⊗ I_baths`.
    pub fn system_op(&self, op: &OperatorMatrix) -> OperatorMatrix {
        kron_all(std::iter::once(op).chain(self.bath_factors().iter()))
    }

    pub fn boson(&self, r: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
        let mode = self
            .spec
            .boson_modes
            .get(r)
            .ok_or_else(|| Error::invalid(format!("no boson mode {r}")))?;
        let (b, _) = boson_ops(mode.cutoff)?;
        let mut factors = self.bath_factors();
        factors[r] = b;
        let id = OperatorMatrix::identity(self.spec.system_dim());
        let b = kron_all(std::iter::once(&id).chain(factors.iter()));
        let b_dag = b.adjoint();
        Ok((b, b_dag))
    }

    pub fn fermion(&self, k: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
        let nf = self.spec.fermion_modes.len();
        let (c, _) = fermion_ops(nf, k)?;
        let mut factors = self.bath_factors();
        *factors.last_mut().unwrap() = c;
        let sys = match self.spec.commutation {
            CommutationClass::Commutative => OperatorMatrix::identity(self.spec.system_dim()),
            CommutationClass::AntiCommutative => fermion_parity(),
        };
        let c = kron_all(std::iter::once(&sys).chain(factors.iter()));
        let c_dag = c.adjoint();
        Ok((c, c_dag))
    }

    pub fn initial_vector(&self) -> DVector<C64> {
        let mut v = DVector::from_element(self.dim(), ZERO);
        for (a, amp) in self.spec.initial_state.iter().enumerate() {
            // bath vacuum is index 0 of every bath factor
            v[a * self.rest_dim] = *amp;
        }
        v
    }

    /// Reduced system state of a total-space vector.
    pub fn reduce(&self, psi: &DVector<C64>) -> DensityMatrix {
        let sys = self.spec.system_dim();
        let r = self.rest_dim;
        let m = DMatrix::from_fn(sys, sys, |a, b| {
            (0..r).map(|k| psi[a * r + k] * psi[b * r + k].conj()).sum()
        });
        DensityMatrix::from_raw(m)
    }

    /// Total-space states on the grid `t_n = n·dt`.
    pub fn evolve_states(&self, horizon: f64, dt: f64) -> Result<Vec<DVector<C64>>> {
        let grid = crate::coeffs::TimeGrid::new(horizon, dt)?;
        let h = self.hamiltonian.matrix();
        let mut psi = self.initial_vector();
        let mut out = Vec::with_capacity(grid.n_steps + 1);
        out.push(psi.clone());

        let propagator = (self.dim() <= EXACT_STEP_DIM).then(|| {
            let eig = h.clone().symmetric_eigen();
            let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (-I * e * dt).exp()));
            &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
        });
        let rhs = |v: &DVector<C64>| (h * v) * (-I);

        for n in 0..grid.n_steps {
            psi = match &propagator {
                Some(u) => u * &psi,
                None => {
                    let k1 = rhs(&psi);
                    let k2 = rhs(&(&psi + &k1 * C64::new(0.5 * dt, 0.0)));
                    let k3 = rhs(&(&psi + &k2 * C64::new(0.5 * dt, 0.0)));
                    let k4 = rhs(&(&psi + &k3 * C64::new(dt, 0.0)));
                    &psi + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
                }
            };
            let drift = (psi.norm_squared() - 1.0).abs();
            if !drift.is_finite() || drift > 1e-6 {
                return Err(Error::IntegrationFailure {
                    time: grid.time(n + 1),
                    message: format!("oracle norm drifted by {drift:e}"),
                });
            }
            out.push(psi.clone());
        }
        Ok(out)
    }
}

/// Reduced system trajectory from exact total-space dynamics.
pub fn oracle_evolve(spec: &TotalSystemSpec, horizon: f64, dt: f64) -> Result<Trajectory> {
    let total = TotalSystem::build(spec)?;
    let states = total.evolve_states(horizon, dt)?;
    let times = (0..states.len()).map(|n| n as f64 * dt).collect();
    Ok(Trajectory {
        times,
        states: states.iter().map(|psi| total.reduce(psi)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceDistanceReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max: f64,
}

impl TraceDistanceReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\nt,trace_distance\n", SchemaTag::Compare.line());
        for (t, d) in self.times.iter().zip(&self.distances) {
            out.push_str(&format!("{},{}\n", format_number(*t), format_number(*d)));
        }
        out
    }
}

/// `max_t ½‖ρ_oracle(t) − ρ_master(t)‖₁` over a shared grid.
pub fn compare_to_master(oracle: &Trajectory, master: &Trajectory) -> Result<TraceDistanceReport> {
    if oracle.times.len() != master.times.len()
        || oracle
            .times
            .iter()
            .zip(&master.times)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::invalid("oracle and master trajectories use different grids"));
    }
    if oracle.dim() != master.dim() {
        return Err(Error::invalid("oracle and master trajectories have different dimensions"));
    }
    let distances: Vec<f64> = oracle
        .states
        .iter()
        .zip(&master.states)
        .map(|(a, b)| a.trace_distance(b))
        .collect();
    let max = distances.iter().copied().fold(0.0, f64::max);
    Ok(TraceDistanceReport {
        times: oracle.times.clone(),
        distances,
        max,
    })
}
