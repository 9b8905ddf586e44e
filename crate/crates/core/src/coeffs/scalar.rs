//! Systems in which every field obeys `∂_t f_i(t,s) = m_i(t) f_i(t,s)` with
//! `m_i = b_i + Σ_k a_ik F_k(t)` and `f_i(t,t) = 1`.

use super::{guard, CoefficientReport, FieldSystem, Stepper, TimeGrid};
use crate::algebra::{C64, I, ONE, ZERO};
use crate::error::Result;
use crate::kernels::{CorrelationKernel, LagTable, Stage};

struct ScalarField {
    series: String,
    table: LagTable,
    bias: C64,
    couplings: Vec<C64>,
}

pub(crate) struct ScalarSystem {
    fields: Vec<ScalarField>,
    dt: f64,
}

impl ScalarSystem {
    fn integrals(&self, n: usize, stage: Stage, y: &[C64]) -> Result<Vec<C64>> {
        let n1 = n + 1;
        let time = (n as f64 + stage.fraction()) * self.dt;
        self.fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let v = f.table.weights(n, stage).integrate(&y[i * n1..(i + 1) * n1], ONE);
                guard(&f.series, v, time)?;
                Ok(v)
            })
            .collect()
    }
}

impl FieldSystem for ScalarSystem {
    fn series_names(&self) -> Vec<String> {
        self.fields.iter().map(|f| f.series.clone()).collect()
    }

    fn initial_state(&self) -> Vec<C64> {
        vec![ONE; self.fields.len()]
    }

    fn derivative(&self, n: usize, stage: Stage, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let n1 = n + 1;
        let integrals = self.integrals(n, stage, y)?;
        for (i, f) in self.fields.iter().enumerate() {
            let m = f.bias
                + f.couplings
                    .iter()
                    .zip(&integrals)
                    .map(|(a, v)| a * v)
                    .sum::<C64>();
            let range = i * n1..(i + 1) * n1;
            for (d, v) in dy[range.clone()].iter_mut().zip(&y[range]) {
                *d = m * v;
            }
        }
        Ok(())
    }

    fn observe(&self, n: usize, y: &[C64]) -> Result<Vec<C64>> {
        self.integrals(n, Stage::Start, y)
    }

    fn extend(&self, n: usize, y: Vec<C64>) -> Vec<C64> {
        let n1 = n + 1;
        let mut out = Vec::with_capacity(self.fields.len() * (n1 + 1));
        for i in 0..self.fields.len() {
            out.extend_from_slice(&y[i * n1..(i + 1) * n1]);
            out.push(ONE);
        }
        out
    }
}

struct Builder {
    grid: TimeGrid,
    fields: Vec<ScalarField>,
}

impl Builder {
    fn new(horizon: f64, dt: f64) -> Result<Self> {
        Ok(Self {
            grid: TimeGrid::new(horizon, dt)?,
            fields: Vec::new(),
        })
    }

    fn field(mut self, series: &str, kernel: &CorrelationKernel, bias: C64, couplings: Vec<C64>) -> Self {
        self.fields.push(ScalarField {
            series: series.to_string(),
            table: LagTable::new(kernel, self.grid.dt, self.grid.n_steps),
            bias,
            couplings,
        });
        self
    }

    fn run(self) -> Result<CoefficientReport> {
        let sys = ScalarSystem {
            fields: self.fields,
            dt: self.grid.dt,
        };
        Stepper::new(sys, self.grid).run()
    }
}

/// Single qubit in a hybrid bath: `∂_t f = [iω + F(t)] f` with
/// `F = ∫₀ᵗ [K_b + K_f] f ds`. Reports the series `F`.
pub fn integrate_single_qubit_coeffs(
    kernel_b: &CorrelationKernel,
    kernel_f: &CorrelationKernel,
    omega: f64,
    horizon: f64,
    dt: f64,
) -> Result<CoefficientReport> {
    let total = kernel_b + kernel_f;
    Builder::new(horizon, dt)?
        .field("F", &total, I * omega, vec![ONE])
        .run()
}

/// Qubit with a dephasing bosonic bath (`O⁰ = σ_z`) and a dissipative
/// fermionic bath (`Q⁰ = g σ₋`). Reports `G = ∫K_f g ds` and
/// `F = ∫K_b ds`.
pub fn integrate_dephasing_qubit_coeffs(
    kernel_b: &CorrelationKernel,
    kernel_f: &CorrelationKernel,
    omega: f64,
    horizon: f64,
    dt: f64,
) -> Result<CoefficientReport> {
    Builder::new(horizon, dt)?
        .field("G", kernel_f, I * omega, vec![ONE, ZERO])
        .field("F", kernel_b, ZERO, vec![ZERO, ZERO])
        .run()
}

/// Kernels of the quantum-dot model: the phonon kernel `α` and the four
/// lead channels.
#[derive(Debug, Clone, PartialEq)]
pub struct AndersonKernels {
    pub alpha: CorrelationKernel,
    pub la: CorrelationKernel,
    pub lc: CorrelationKernel,
    pub ra: CorrelationKernel,
    pub rc: CorrelationKernel,
}

/// Zeroth-order quantum-dot coefficients. `f₁ ≡ 1`; the `c` channels obey
/// `∂_t f = (iε + ΣF) f` and the `a` channels `∂_t f = −(iε + ΣF) f`, where
/// `ΣF = F₁ + F_La + F_Ra + F_Lc + F_Rc`.
///
/// Series: `F1, F_Lc, F_Rc, F_La, F_Ra`.
pub fn integrate_anderson_coeffs(
    kernels: &AndersonKernels,
    epsilon: f64,
    horizon: f64,
    dt: f64,
) -> Result<CoefficientReport> {
    let plus = vec![ONE; 5];
    let minus = vec![-ONE; 5];
    Builder::new(horizon, dt)?
        .field("F1", &kernels.alpha, ZERO, vec![ZERO; 5])
        .field("F_Lc", &kernels.lc, I * epsilon, plus.clone())
        .field("F_Rc", &kernels.rc, I * epsilon, plus)
        .field("F_La", &kernels.la, -I * epsilon, minus.clone())
        .field("F_Ra", &kernels.ra, -I * epsilon, minus)
        .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    /// RK4 on the scalar Riccati law `dF/dt = a + F²`, `F(0) = 0`.
    fn riccati(a: f64, horizon: f64, dt: f64) -> Vec<f64> {
        let rhs = |f: f64| a + f * f;
        let n = (horizon / dt).round() as usize;
        let mut out = vec![0.0];
        let mut f = 0.0;
        for _ in 0..n {
            let k1 = rhs(f);
            let k2 = rhs(f + 0.5 * dt * k1);
            let k3 = rhs(f + 0.5 * dt * k2);
            let k4 = rhs(f + dt * k3);
            f += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            out.push(f);
        }
        out
    }

    fn resonant(lambda: f64) -> (CorrelationKernel, CorrelationKernel) {
        (
            CorrelationKernel::single_mode(lambda, 1.0).unwrap(),
            CorrelationKernel::single_mode(lambda, 1.0).unwrap(),
        )
    }

    #[test]
    fn single_qubit_resonance_follows_tangent_law() {
        let lambda = 0.5;
        let (kb, kf) = resonant(lambda);
        let blow = FRAC_PI_2 / (SQRT_2 * lambda);
        let horizon = (0.8 * blow / 1e-3).floor() * 1e-3;
        let r = integrate_single_qubit_coeffs(&kb, &kf, 1.0, horizon, 1e-3).unwrap();
        let f = r.series("F").unwrap();
        assert_eq!(f[0], ZERO);
        let mut worst: f64 = 0.0;
        for (t, v) in r.times.iter().zip(f) {
            let exact = SQRT_2 * lambda * (SQRT_2 * lambda * t).tan();
            worst = worst.max((v - C64::new(exact, 0.0)).norm());
        }
        assert!(worst < 1e-6, "max deviation {worst:e}");

        // closed form at t = 0.5: √2·0.5·tan(0.35355) ≈ 0.2610
        let idx = 500;
        assert!((r.times[idx] - 0.5).abs() < 1e-12);
        assert!((f[idx].re - 0.2610).abs() < 5e-5);
    }

    #[test]
    fn single_qubit_matches_scalar_riccati() {
        let lambda = 0.2;
        let dt = 5e-4;
        let (kb, kf) = resonant(lambda);
        let blow = FRAC_PI_2 / (SQRT_2 * lambda);
        let horizon = (0.8 * blow / dt).floor() * dt;
        let r = integrate_single_qubit_coeffs(&kb, &kf, 1.0, horizon, dt).unwrap();
        let reference = riccati(2.0 * lambda * lambda, horizon, dt);
        let worst = r
            .series("F")
            .unwrap()
            .iter()
            .zip(&reference)
            .map(|(v, want)| (v - C64::new(*want, 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "max deviation {worst:e}");
    }

    #[test]
    fn zero_coupling_gives_zero_coefficient() {
        let z = CorrelationKernel::single_mode(0.0, 1.0).unwrap();
        let r = integrate_single_qubit_coeffs(&z, &z, 1.0, 1.0, 0.01).unwrap();
        assert!(r.series("F").unwrap().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn resonant_blow_up_is_reported() {
        let lambda = 0.5;
        let dt = 1e-3;
        let (kb, kf) = resonant(lambda);
        let blow = FRAC_PI_2 / (SQRT_2 * lambda);
        match integrate_single_qubit_coeffs(&kb, &kf, 1.0, 3.0, dt) {
            Err(Error::Singularity { series, time }) => {
                assert_eq!(series, "F");
                assert!((time - blow).abs() <= 2.0 * dt, "guard at {time}, pole at {blow}");
            }
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn dephasing_qubit_channels() {
        let mu = 0.3;
        let kf = CorrelationKernel::single_mode(mu, 1.0).unwrap();
        let (g, gamma, phi) = (0.4, 0.8, 0.6);
        let kb = CorrelationKernel::ou(g, gamma, phi).unwrap();
        let dt = 1e-3;
        let horizon = 3.0;
        let r = integrate_dephasing_qubit_coeffs(&kb, &kf, 1.0, horizon, dt).unwrap();

        // resonant dissipative channel follows dG/dt = μ² + G²
        let reference = riccati(mu * mu, horizon, dt);
        let worst = r
            .series("G")
            .unwrap()
            .iter()
            .zip(&reference)
            .map(|(v, want)| (v - C64::new(*want, 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "G deviation {worst:e}");

        // dephasing channel is the bare kernel integral
        let rate = C64::new(-gamma, phi);
        let worst = r
            .times
            .iter()
            .zip(r.series("F").unwrap())
            .map(|(t, v)| {
                let exact = (g / 2.0) * (ONE - (rate * t).exp()) / C64::new(gamma, -phi);
                (v - exact).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-7, "F deviation {worst:e}");

        let z = CorrelationKernel::zero();
        let r = integrate_dephasing_qubit_coeffs(&z, &z, 1.0, 1.0, 0.01).unwrap();
        assert!(r.values.iter().flatten().all(|v| *v == ZERO));
    }

    fn reference_leads() -> AndersonKernels {
        AndersonKernels {
            alpha: CorrelationKernel::ou(0.04, 0.5, 0.0).unwrap(),
            lc: CorrelationKernel::ou(0.017, 0.3, 1.1).unwrap(),
            rc: CorrelationKernel::ou(0.034, 0.5, 1.65).unwrap(),
            la: CorrelationKernel::ou(0.012, 0.4, 0.75).unwrap(),
            ra: CorrelationKernel::ou(0.044, 0.45, 1.2).unwrap(),
        }
    }

    #[test]
    fn anderson_phonon_channel_is_bare_integral() {
        let k = reference_leads();
        let dt = 0.01;
        let r = integrate_anderson_coeffs(&k, 1.0, 10.0, dt).unwrap();
        // f₁ ≡ 1 so F₁ is the trapezoid of α alone; compare with the closed form
        let worst = r
            .times
            .iter()
            .zip(r.series("F1").unwrap())
            .map(|(t, v)| (v - C64::new(0.02 * (1.0 - (-0.5 * t).exp()) / 0.5, 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "F1 deviation {worst:e}");
    }

    #[test]
    fn anderson_without_leads() {
        let mut k = reference_leads();
        k.lc = CorrelationKernel::zero();
        k.rc = CorrelationKernel::zero();
        k.la = CorrelationKernel::zero();
        k.ra = CorrelationKernel::zero();
        let r = integrate_anderson_coeffs(&k, 1.0, 5.0, 0.01).unwrap();
        for name in ["F_Lc", "F_Rc", "F_La", "F_Ra"] {
            assert!(r.max_abs(name).unwrap() < 1e-14);
        }
        assert!(r.max_abs("F1").unwrap() > 1e-3);
    }

    #[test]
    fn self_convergence_on_smooth_kernels() {
        let k = reference_leads();
        let coarse = integrate_anderson_coeffs(&k, 1.0, 8.0, 0.04).unwrap();
        let mid = integrate_anderson_coeffs(&k, 1.0, 8.0, 0.02).unwrap();
        let fine = integrate_anderson_coeffs(&k, 1.0, 8.0, 0.01).unwrap();
        for name in ["F_Lc", "F_Ra"] {
            let (c, m, f) = (
                coarse.series(name).unwrap(),
                mid.series(name).unwrap(),
                fine.series(name).unwrap(),
            );
            let d1 = (0..c.len()).map(|i| (c[i] - m[2 * i]).norm()).fold(0.0, f64::max);
            let d2 = (0..c.len()).map(|i| (m[2 * i] - f[4 * i]).norm()).fold(0.0, f64::max);
            assert!(d1 / d2 >= 1.8, "{name}: ratio {}", d1 / d2);
        }
    }
}
