//! Model presets, model files and reference solutions.
//!
//! The eternally non-Markovian (ENM) qubit is
//! `L_t(rho) = i b/2 [sigma_z, rho] + 1/2 sum_k gamma_k (sigma_k rho sigma_k - rho)`.
//! It is stored with channels `L_k = sigma_k` at rate `c_k = gamma_k / 2` and
//! `H = -(b/2) sigma_z`; every closed-form criterion in this crate is written in
//! terms of the `gamma_k`, and this module is the only place converting.

mod reference;
mod spec;

pub use reference::{
    enm_analytic_solution, integrate_master_equation, integrate_master_equation_substeps,
};
pub use spec::{load_model_spec, ChannelSpec, DrivingSpec, LindbladSpec, ModelSpec, RateSpec};

use crate::error::{Error, Result};
use crate::generator::{Channel, GeneratorRepresentation, ShiftOperator};
use crate::linalg::{ComplexMatrix, StateVector, C64};
use crate::rate_ops;
use crate::timefn::{normal_cdf, TimeFunction, TimeOperator};

/// Coherent driving amplitude `b(t)` along `sigma_z`.
#[derive(Clone, Debug)]
pub enum Driving {
    None,
    Constant(f64),
    /// `b(t) = C + int_0^t Omega(s; mu, sigma) ds` with a normalized Gaussian `Omega`.
    GaussianIntegral { mu: f64, sigma: f64 },
    Function(TimeFunction),
}

impl Driving {
    pub fn amplitude(&self) -> TimeFunction {
        match self {
            Driving::None => TimeFunction::zero(),
            Driving::Constant(b) => TimeFunction::Constant(*b),
            Driving::GaussianIntegral { mu, sigma } => TimeFunction::GaussianIntegral {
                mu: *mu,
                sigma: *sigma,
            },
            Driving::Function(f) => f.clone(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Driving::None | Driving::Constant(0.0))
    }
}

/// `b(t)` for Gaussian-integral driving. Equals `Phi((t - mu) / sigma)`.
pub fn gaussian_driving(t: f64, mu: f64, sigma: f64) -> f64 {
    normal_cdf((t - mu) / sigma)
}

/// The offset `C = b(0) = int_{-inf}^0 Omega`.
pub fn gaussian_driving_offset(mu: f64, sigma: f64) -> f64 {
    normal_cdf(-mu / sigma)
}

/// The ENM qubit with arbitrary rate functions and driving.
#[derive(Clone, Debug)]
pub struct EnmModel {
    pub gammas: [TimeFunction; 3],
    pub driving: Driving,
}

pub fn enm_model(g1: TimeFunction, g2: TimeFunction, g3: TimeFunction, driving: Driving) -> EnmModel {
    EnmModel {
        gammas: [g1, g2, g3],
        driving,
    }
}

/// `sqrt(0.1)|1> + sqrt(0.9)|0>`, the initial state of the undriven runs.
pub fn undriven_initial_state() -> StateVector {
    StateVector::from_real(&[0.1f64.sqrt(), 0.9f64.sqrt()]).expect("normalized")
}

/// `cos(pi/8)|1> + sin(pi/8)|0>`, the initial state of the driven runs.
pub fn driven_initial_state() -> StateVector {
    let a = std::f64::consts::PI / 8.0;
    StateVector::from_real(&[a.cos(), a.sin()]).expect("normalized")
}

impl EnmModel {
    /// `gamma = (1, 1, -tanh t)`, no driving.
    pub fn undriven() -> Self {
        enm_model(
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(1.0),
            TimeFunction::Tanh { scale: -1.0 },
            Driving::None,
        )
    }

    /// `gamma = (1, 1, -tanh(t)/2)`, no driving.
    pub fn dissipative() -> Self {
        enm_model(
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(1.0),
            TimeFunction::Tanh { scale: -0.5 },
            Driving::None,
        )
    }

    /// `gamma = (1, 1, -tanh(t)/2)` with Gaussian-integral driving.
    pub fn driven(mu: f64, sigma: f64) -> Self {
        Self {
            driving: Driving::GaussianIntegral { mu, sigma },
            ..Self::dissipative()
        }
    }

    pub fn with_driving(mut self, driving: Driving) -> Self {
        self.driving = driving;
        self
    }

    pub fn rates(&self, t: f64) -> [f64; 3] {
        [
            self.gammas[0].eval(t),
            self.gammas[1].eval(t),
            self.gammas[2].eval(t),
        ]
    }

    /// `gamma(t) = gamma_1 + gamma_2 + gamma_3`
    pub fn gamma_total(&self) -> TimeFunction {
        self.gammas[0].plus(&self.gammas[1]).plus(&self.gammas[2])
    }

    pub fn representation(&self) -> GeneratorRepresentation {
        let paulis = [
            ComplexMatrix::pauli_x(),
            ComplexMatrix::pauli_y(),
            ComplexMatrix::pauli_z(),
        ];
        let channels = paulis
            .into_iter()
            .zip(&self.gammas)
            .map(|(s, g)| Channel::constant_operator(s, g.times(0.5)))
            .collect();
        let hamiltonian = if self.driving.is_none() {
            TimeOperator::zero(2)
        } else {
            TimeOperator::term(self.driving.amplitude().times(-0.5), ComplexMatrix::pauli_z())
        };
        GeneratorRepresentation::new(2, hamiltonian, channels).expect("qubit model is well formed")
    }

    /// `C = (gamma/2) 1`: jump map `J + (gamma/2) rho`, `K = -(i/2) gamma 1` when undriven.
    pub fn r1_shift(&self) -> ShiftOperator {
        ShiftOperator::scalar(2, self.gamma_total().times(0.5))
    }

    /// `C = (gamma_1 + gamma_2 - gamma_3)/2 1`: `R2 = R1 - gamma_3 P_psi`.
    pub fn r2_shift(&self) -> ShiftOperator {
        let f = self.gammas[0].plus(&self.gammas[1]).plus(&self.gammas[2].times(-1.0));
        ShiftOperator::scalar(2, f.times(0.5))
    }

    /// `C = -(gamma_3/2) 1`: `R3 = 1/2 sum_k gamma_k sigma_k P sigma_k - (gamma_3/2) P`.
    pub fn r3_shift(&self) -> ShiftOperator {
        ShiftOperator::scalar(2, self.gammas[2].times(-0.5))
    }

    /// `C = (gamma/2) 1 + i b sigma_z`: the driving moves into the jumps and `H' = 0`.
    pub fn r1prime_shift(&self) -> ShiftOperator {
        let half_gamma = self.gamma_total().times(0.5);
        let b = self.driving.amplitude();
        ShiftOperator::new(2, move |t| {
            let mut c = ComplexMatrix::identity(2).scale_re(half_gamma.eval(t));
            c.add_scaled(C64::new(0.0, b.eval(t)), &ComplexMatrix::pauli_z());
            c
        })
    }

    /// Fixed-post-jump shift in the `{|1>, |0>}` basis; post-jump states are `|+>, |->`.
    pub fn fixed_postjump_shift(&self, y: TimeFunction) -> Result<ShiftOperator> {
        rate_ops::fixed_postjump_shift(
            &self.representation(),
            &computational_basis(),
            TimeFunction::zero(),
            y,
        )
    }

    /// `y_bound(t)` of the positive fixed-post-jump family.
    pub fn y_bound(&self) -> TimeFunction {
        self.gammas[0]
            .plus(&self.gammas[1].times(0.5))
            .plus(&self.gammas[2].times(-0.5))
    }

    /// The post-jump pair `{|+>, |->}` of the fixed-post-jump unravelings.
    pub fn fixed_basis(&self) -> [StateVector; 2] {
        [StateVector::plus(), StateVector::minus()]
    }

    /// Recovers ENM structure from a representation with constant Pauli channels.
    pub fn from_representation(rep: &GeneratorRepresentation) -> Result<Self> {
        if rep.dim() != 2 {
            return Err(Error::NonPauliModel(format!("dimension {}", rep.dim())));
        }
        if rep.is_shifted() {
            return Err(Error::NonPauliModel("representation carries a shift".into()));
        }
        let paulis = [
            ComplexMatrix::pauli_x(),
            ComplexMatrix::pauli_y(),
            ComplexMatrix::pauli_z(),
        ];
        let mut gammas = [None, None, None];
        for (idx, ch) in rep.channels().iter().enumerate() {
            let constant = ch
                .operator
                .terms()
                .iter()
                .all(|(f, _)| matches!(f, TimeFunction::Constant(_)));
            if !constant {
                return Err(Error::NonPauliModel(format!("channel {idx} is time dependent")));
            }
            let op = ch.operator.eval(0.0);
            let found = paulis.iter().enumerate().find_map(|(k, s)| {
                let lambda = (s * &op).trace() / 2.0;
                let residual = &op - &s.scale(lambda);
                (lambda.norm() > 1e-12 && residual.max_abs() < 1e-12).then_some((k, lambda))
            });
            let (k, lambda) = found
                .ok_or_else(|| Error::NonPauliModel(format!("channel {idx} is not a Pauli operator")))?;
            if gammas[k].is_some() {
                return Err(Error::NonPauliModel(format!("repeated Pauli channel {}", k + 1)));
            }
            gammas[k] = Some(ch.rate.times(2.0 * lambda.norm_sqr()));
        }
        let h_terms = rep.base_hamiltonian().terms();
        let mut b_parts = Vec::new();
        for (f, m) in h_terms {
            let coef = m[(0, 0)];
            let expected = ComplexMatrix::pauli_z().scale(coef);
            if m.max_abs_diff(&expected) > 1e-12 || coef.im.abs() > 1e-12 {
                return Err(Error::NonPauliModel("Hamiltonian is not proportional to sigma_z".into()));
            }
            b_parts.push(f.times(-2.0 * coef.re));
        }
        let driving = if b_parts.is_empty() {
            Driving::None
        } else {
            Driving::Function(TimeFunction::Sum(b_parts))
        };
        let take = |g: Option<TimeFunction>| g.unwrap_or_else(TimeFunction::zero);
        let [g1, g2, g3] = gammas;
        Ok(enm_model(take(g1), take(g2), take(g3), driving))
    }
}

/// `{|1>, |0>}` (indices 0 and 1).
pub fn computational_basis() -> [StateVector; 2] {
    [StateVector::excited(), StateVector::ground()]
}

/// `gamma_k`-level closed forms evaluated at one time.
pub mod criteria {
    /// P-divisibility of a Pauli channel generator: `gamma_i + gamma_j >= 0` for `i != j`.
    pub fn p_divisible(g: [f64; 3], tol: f64) -> bool {
        g[0] + g[1] >= -tol && g[0] + g[2] >= -tol && g[1] + g[2] >= -tol
    }

    /// Dissipativity of `1/2 sum_k gamma_k (sigma_k rho sigma_k - rho)`.
    ///
    /// With `mu_k = gamma_i + gamma_j` the generator is dissipative iff every
    /// `mu_k >= 0` and `mu_i mu_j >= gamma_k^2`. For `gamma_1 = gamma_2` and
    /// `gamma_3 < 0` this is `gamma_1 >= 2 |gamma_3|`.
    pub fn dissipative(g: [f64; 3], tol: f64) -> bool {
        dissipativity_margin(g) >= -tol
    }

    /// The smallest of the quantities that must be non-negative for dissipativity.
    pub fn dissipativity_margin(g: [f64; 3]) -> f64 {
        let s: f64 = g.iter().sum();
        let mu = [s - g[0], s - g[1], s - g[2]];
        let mut m = mu[0].min(mu[1]).min(mu[2]);
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            m = m.min(mu[i] * mu[j] - g[k] * g[k]);
        }
        m
    }

    /// `gamma_1 + gamma_2/2 - gamma_3/2`
    pub fn y_bound(g: [f64; 3]) -> f64 {
        g[0] + 0.5 * g[1] - 0.5 * g[2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson on the Gaussian density from `lo` to `t`.
    fn quadrature_driving(t: f64, mu: f64, sigma: f64, lo: f64) -> f64 {
        let n = 20_000;
        let h = (t - lo) / n as f64;
        let f = |s: f64| (-0.5 * ((s - mu) / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut acc = f(lo) + f(t);
        for k in 1..n {
            acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn gaussian_driving_values() {
        let c = gaussian_driving_offset(1.0, 0.25);
        assert!((c - 3.1671e-5).abs() < 1e-9, "{c}");
        assert_eq!(gaussian_driving(0.0, 1.0, 0.25), c);
        assert!((gaussian_driving(1.0, 1.0, 0.25) - 0.5).abs() < 1e-15);
        assert!((gaussian_driving(1.0 + 10.0 * 0.25, 1.0, 0.25) - 1.0).abs() < 1e-12);
        assert!((gaussian_driving(5.0, 1.0, 0.25) - 1.0).abs() < 1e-6);
        for t in [0.3, 0.9, 1.2, 2.0] {
            let q = c + quadrature_driving(t, 1.0, 0.25, 0.0);
            assert!((gaussian_driving(t, 1.0, 0.25) - q).abs() < 1e-10, "t = {t}");
        }
    }

    proptest! {
        #[test]
        fn gaussian_driving_is_monotone(a in 0.0f64..6.0, d in 0.0f64..2.0, mu in 0.1f64..3.0, sigma in 0.05f64..1.0) {
            let (lo, hi) = (gaussian_driving(a, mu, sigma), gaussian_driving(a + d, mu, sigma));
            prop_assert!(hi >= lo);
            prop_assert!((0.0..=1.0).contains(&lo));
        }

        #[test]
        fn representation_round_trips(g1 in -1.0f64..2.0, g2 in -1.0f64..2.0, g3 in -1.0f64..2.0, b in -2.0f64..2.0, t in 0.0f64..5.0) {
            let m = enm_model(TimeFunction::Constant(g1), TimeFunction::Constant(g2), TimeFunction::Constant(g3), Driving::Constant(b));
            let back = EnmModel::from_representation(&m.representation()).unwrap();
            let (r, r2) = (m.rates(t), back.rates(t));
            for k in 0..3 {
                prop_assert!((r[k] - r2[k]).abs() < 1e-12);
            }
            prop_assert!((back.driving.amplitude().eval(t) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_matches_pauli_form() {
        let m = EnmModel::driven(1.0, 0.25);
        let rep = m.representation();
        let rho = ComplexMatrix::from_rows(&[
            [C64::new(0.7, 0.0), C64::new(0.1, -0.2)],
            [C64::new(0.1, 0.2), C64::new(0.3, 0.0)],
        ])
        .unwrap();
        let t = 1.3;
        let g = m.rates(t);
        let b = m.driving.amplitude().eval(t);
        let sz = ComplexMatrix::pauli_z();
        let mut want = sz.commutator(&rho).scale(C64::new(0.0, b / 2.0));
        for (k, s) in [ComplexMatrix::pauli_x(), ComplexMatrix::pauli_y(), sz].iter().enumerate() {
            let term = &(&(s * &rho) * s) - &rho;
            want.add_scaled(C64::new(g[k] / 2.0, 0.0), &term);
        }
        assert!(rep.generator_apply(t, &rho).unwrap().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn zero_rates_give_zero_generator() {
        let zero = TimeFunction::Constant(0.0);
        let m = enm_model(zero.clone(), zero.clone(), zero, Driving::None);
        let rho = ComplexMatrix::projector(&undriven_initial_state());
        assert!(m.representation().generator_apply(2.0, &rho).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn closed_form_criteria() {
        let m = EnmModel::undriven();
        for t in [0.1, 1.0, 5.0] {
            let g = m.rates(t);
            assert!(criteria::p_divisible(g, 0.0));
            assert_eq!(criteria::dissipative(g, 0.0), t < 0.5f64.atanh());
        }
        assert!(criteria::dissipative(EnmModel::dissipative().rates(50.0), 0.0));
        assert!(!criteria::p_divisible([1.0, 1.0, -1.5], 0.0));
        // gamma_1 = gamma_2 = 1, gamma_3 < 0 reduces to 1 >= 2|gamma_3|.
        for g3 in [-0.1, -0.49, -0.51, -0.9] {
            assert_eq!(criteria::dissipative([1.0, 1.0, g3], 0.0), 1.0 >= 2.0 * g3.abs());
        }
        assert_eq!(criteria::y_bound([1.0, 1.0, -0.5]), 1.75);
    }

    #[test]
    fn from_representation_rejects_non_pauli() {
        let rep = GeneratorRepresentation::new(
            2,
            TimeOperator::zero(2),
            vec![Channel::constant_operator(ComplexMatrix::sigma_minus(), TimeFunction::Constant(1.0))],
        )
        .unwrap();
        assert!(matches!(EnmModel::from_representation(&rep), Err(Error::NonPauliModel(_))));
        let shifted = EnmModel::undriven().representation().shift_representation(&EnmModel::undriven().r1_shift());
        assert!(matches!(EnmModel::from_representation(&shifted), Err(Error::NonPauliModel(_))));
    }
}
