//! Dense complex operators on small Hilbert spaces.
//!
//! Basis conventions used everywhere in the crate:
//!
//! * qubit: `|0⟩` is the excited state, `|1⟩` the ground state, so that
//!   `σ_z = diag(1, -1)` and `σ₋|0⟩ = |1⟩`;
//! * bosonic and fermionic modes: Fock order, index `n` is the `n`-quantum
//!   state (index 0 is the vacuum);
//! * composite spaces: the first factor of a [`kron`] is the most
//!   significant index. Total spaces are ordered system ⊗ bosons ⊗ fermions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const HERMITIAN_TOL: f64 = 1e-12;

/// A dense `dim × dim` complex matrix acting on a finite Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl OperatorMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Row-major construction, mainly for tests and literals.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("rows must form a square matrix"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    /// Largest element-wise deviation `max |A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.0, &self.0.adjoint())
    }

    pub fn hermitian_check(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL
    }

    /// Largest element-wise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 + &other.0 * &self.0)
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix(-&self.0)
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// A reduced state: Hermitian, unit trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: OperatorMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10) and unit trace (1e-8).
    pub fn new(op: OperatorMatrix) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::invalid(format!(
                "density matrix is not Hermitian (max |ρ-ρ†| = {herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > 1e-8 {
            return Err(Error::invalid(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        Ok(Self { op })
    }

    /// Wraps an integrator output without validation.
    pub(crate) fn from_raw(m: DMatrix<C64>) -> Self {
        Self {
            op: OperatorMatrix(m),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if psi.is_empty() || norm == 0.0 {
            return Err(Error::invalid("pure state needs a non-zero vector"));
        }
        let v = v / C64::new(norm, 0.0);
        Ok(Self::from_raw(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_raw(DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.op.get(i, j)
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.hermitian_eigenvalues()[0]
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = self.matrix() - other.matrix();
        0.5 * hermitian_eigenvalues(&diff)
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

pub fn pauli(which: Pauli) -> OperatorMatrix {
    let m = match which {
        Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
        Pauli::Y => [[ZERO, -I], [I, ZERO]],
        Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        // σ₊ = |0⟩⟨1| raises ground to excited
        Pauli::Plus => [[ZERO, ONE], [ZERO, ZERO]],
        Pauli::Minus => [[ZERO, ZERO], [ONE, ZERO]],
    };
    OperatorMatrix(DMatrix::from_fn(2, 2, |i, j| m[i][j]))
}

pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix(a.0.kronecker(&b.0))
}

/// Left-to-right Kronecker product of a list of factors.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a OperatorMatrix>) -> OperatorMatrix {
    factors
        .into_iter()
        .fold(OperatorMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Truncated bosonic annihilation and creation operators, `b|n⟩ = √n |n−1⟩`.
pub fn boson_ops(cutoff: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if cutoff < 2 {
        return Err(Error::invalid(format!("boson cutoff must be >= 2, got {cutoff}")));
    }
    let b = OperatorMatrix::from_fn(cutoff, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let b_dag = b.adjoint();
    Ok((b, b_dag))
}

/// Fermionic mode operators on `n_modes` modes with Jordan–Wigner strings,
/// dimension `2^n_modes`. Mode 0 is the most significant factor.
pub fn fermion_ops(n_modes: usize, mode: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if mode >= n_modes {
        return Err(Error::invalid(format!(
            "fermion mode {mode} out of range for {n_modes} modes"
        )));
    }
    let parity = OperatorMatrix::from_diagonal(&[ONE, -ONE]);
    let lower = OperatorMatrix(DMatrix::from_fn(2, 2, |i, j| {
        if i == 0 && j == 1 {
            ONE
        } else {
            ZERO
        }
    }));
    let id = OperatorMatrix::identity(2);
    let factors: Vec<&OperatorMatrix> = (0..n_modes)
        .map(|k| match k.cmp(&mode) {
            std::cmp::Ordering::Less => &parity,
            std::cmp::Ordering::Equal => &lower,
            std::cmp::Ordering::Greater => &id,
        })
        .collect();
    let c = kron_all(factors);
    let c_dag = c.adjoint();
    Ok((c, c_dag))
}

/// Parity operator `(-1)^N` of a single fermionic mode in Fock order.
pub fn fermion_parity() -> OperatorMatrix {
    OperatorMatrix::from_diagonal(&[ONE, -ONE])
}

/// Reduced density matrix on the factors listed in `keep`.
///
/// `dims` lists the factor dimensions of `rho` in the composite ordering;
/// kept factors appear in the result in their original relative order.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != rho.dim() {
        return Err(Error::invalid(format!(
            "factor dimensions {dims:?} do not match operator dimension {}",
            rho.dim()
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::invalid(format!("keep index out of range in {keep:?}")));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if kept[k] {
            return Err(Error::invalid(format!("duplicate keep index {k}")));
        }
        kept[k] = true;
    }

    // strides of the full space and of the kept subspace
    let mut stride = vec![1usize; dims.len()];
    for k in (0..dims.len() - 1).rev() {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    let kept_dims: Vec<usize> = (0..dims.len()).filter(|&k| kept[k]).map(|k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let mut out_stride = vec![0usize; dims.len()];
    let mut acc = 1;
    for k in (0..dims.len()).rev() {
        if kept[k] {
            out_stride[k] = acc;
            acc *= dims[k];
        }
    }

    let split = |idx: usize| -> (usize, usize) {
        // (kept index, traced index encoded in the full-space stride)
        let mut kept_idx = 0;
        let mut traced = 0;
        for k in 0..dims.len() {
            let digit = (idx / stride[k]) % dims[k];
            if kept[k] {
                kept_idx += digit * out_stride[k];
            } else {
                traced += digit * stride[k];
            }
        }
        (kept_idx, traced)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(split).collect();

    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    for i in 0..total {
        let (ki, ti) = parts[i];
        for j in 0..total {
            let (kj, tj) = parts[j];
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_raw(out))
}
