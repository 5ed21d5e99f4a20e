//! Time-local generators in GKLS form and their representation freedom.
//!
//! A [`GeneratorRepresentation`] is a concrete split of
//! `L_t(rho) = -i[H, rho] + J_t(rho) - 1/2 {Gamma, rho}` into Hamiltonian,
//! jump map and decay operator. Adding a shift `C(t) = A + iB` moves
//! `1/2 (C rho + rho C^dagger)` into the jump map while `H -> H + B/2` and
//! `Gamma -> Gamma + A`, leaving `L_t` unchanged. Every shift has this form,
//! so a shifted representation carries the accumulated `C(t)` next to the
//! original rates and operators instead of an opaque map.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, check_same_dim, ComplexMatrix, C64, I};
use crate::timefn::{TimeFunction, TimeOperator};

/// One `c_alpha(t) L_alpha(t) rho L_alpha(t)^dagger` term.
#[derive(Clone, Debug)]
pub struct Channel {
    pub operator: TimeOperator,
    pub rate: TimeFunction,
}

impl Channel {
    pub fn new(operator: TimeOperator, rate: TimeFunction) -> Self {
        Self { operator, rate }
    }

    pub fn constant_operator(op: ComplexMatrix, rate: TimeFunction) -> Self {
        Self::new(TimeOperator::constant(op), rate)
    }
}

/// The operator `C(t)` of a representation shift.
#[derive(Clone)]
pub struct ShiftOperator {
    dim: usize,
    value: Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>,
}

impl fmt::Debug for ShiftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShiftOperator(dim={})", self.dim)
    }
}

impl ShiftOperator {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self {
            dim,
            value: Arc::new(f),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| ComplexMatrix::zeros(dim))
    }

    pub fn from_operator(op: TimeOperator) -> Self {
        let dim = op.dim();
        Self::new(dim, move |t| op.eval(t))
    }

    /// `f(t) * 1`
    pub fn scalar(dim: usize, f: TimeFunction) -> Self {
        Self::from_operator(TimeOperator::term(f, ComplexMatrix::identity(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> ComplexMatrix {
        (self.value)(t)
    }

    /// `A(t) = (C + C^dagger) / 2`
    pub fn hermitian_part(&self, t: f64) -> ComplexMatrix {
        self.eval(t).hermitian_part()
    }

    /// `B(t) = (C - C^dagger) / (2i)`
    pub fn antihermitian_coefficient(&self, t: f64) -> ComplexMatrix {
        self.eval(t).antihermitian_coefficient()
    }

    pub fn plus(&self, other: &ShiftOperator) -> Self {
        assert_eq!(self.dim, other.dim, "shift dimension mismatch");
        let (a, b) = (self.value.clone(), other.value.clone());
        Self::new(self.dim, move |t| a(t) + b(t))
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorRepresentation {
    dim: usize,
    hamiltonian: TimeOperator,
    channels: Vec<Channel>,
    shift: Option<ShiftOperator>,
}

impl GeneratorRepresentation {
    pub fn new(dim: usize, hamiltonian: TimeOperator, channels: Vec<Channel>) -> Result<Self> {
        check_dim(dim)?;
        check_same_dim(dim, hamiltonian.dim())?;
        for ch in &channels {
            check_same_dim(dim, ch.operator.dim())?;
        }
        if channels.len() > dim * dim - 1 && dim > 1 {
            return Err(Error::Schema {
                path: "channels".into(),
                message: format!(
                    "{} channels exceed the N^2 - 1 = {} limit",
                    channels.len(),
                    dim * dim - 1
                ),
            });
        }
        Ok(Self {
            dim,
            hamiltonian,
            channels,
            shift: None,
        })
    }

    /// The generator `L = 0`.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            hamiltonian: TimeOperator::zero(dim),
            channels: Vec::new(),
            shift: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn base_hamiltonian(&self) -> &TimeOperator {
        &self.hamiltonian
    }

    pub fn shift(&self) -> Option<&ShiftOperator> {
        self.shift.as_ref()
    }

    pub fn is_shifted(&self) -> bool {
        self.shift.is_some()
    }

    /// The same generator with `C(t)` added to the jump map. Shifts compose additively.
    pub fn shift_representation(&self, c: &ShiftOperator) -> Self {
        assert_eq!(c.dim(), self.dim, "shift dimension mismatch");
        let shift = match &self.shift {
            Some(existing) => existing.plus(c),
            None => c.clone(),
        };
        Self {
            shift: Some(shift),
            ..self.clone()
        }
    }

    /// The underlying GKLS representation with any shift removed.
    pub fn unshifted(&self) -> Self {
        Self {
            shift: None,
            ..self.clone()
        }
    }

    pub fn channel_rates(&self, t: f64) -> Vec<f64> {
        self.channels.iter().map(|c| c.rate.eval(t)).collect()
    }

    /// Evaluates every piece of the representation at time `t`.
    pub fn snapshot(&self, t: f64) -> GeneratorSnapshot {
        let n = self.dim;
        let channels: Vec<EvaluatedChannel> = self
            .channels
            .iter()
            .map(|ch| {
                let l = ch.operator.eval(t);
                let ld = l.dagger();
                let ldl = &ld * &l;
                EvaluatedChannel {
                    rate: ch.rate.eval(t),
                    op: l,
                    op_dagger: ld,
                    op_dagger_op: ldl,
                }
            })
            .collect();
        let mut gamma = ComplexMatrix::zeros(n);
        for ch in &channels {
            gamma.add_scaled(C64::new(ch.rate, 0.0), &ch.op_dagger_op);
        }
        let mut hamiltonian = self.hamiltonian.eval(t);
        let shift = self.shift.as_ref().map(|s| s.eval(t));
        if let Some(c) = &shift {
            hamiltonian.add_scaled(C64::new(0.5, 0.0), &c.antihermitian_coefficient());
            gamma += &c.hermitian_part();
        }
        GeneratorSnapshot {
            dim: n,
            t,
            hamiltonian,
            gamma,
            channels,
            shift,
        }
    }

    pub fn apply_dissipator(&self, t: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim(self.dim, rho.dim())?;
        Ok(self.snapshot(t).dissipator(rho))
    }

    /// `Gamma(t) = J_t^dagger(1)`
    pub fn gamma_operator(&self, t: f64) -> ComplexMatrix {
        self.snapshot(t).gamma
    }

    /// `H(t)` of this representation, including `B/2` from a shift.
    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        self.snapshot(t).hamiltonian
    }

    pub fn generator_apply(&self, t: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim(self.dim, rho.dim())?;
        Ok(self.snapshot(t).generator(rho))
    }

    /// Heisenberg-picture generator `L_t^dagger(X)`.
    pub fn generator_dual_apply(&self, t: f64, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim(self.dim, x.dim())?;
        Ok(self.snapshot(t).dual_generator(x))
    }

    /// `K(t) = H(t) - (i/2) Gamma(t)`
    pub fn effective_hamiltonian(&self, t: f64) -> ComplexMatrix {
        self.snapshot(t).effective_hamiltonian()
    }
}

#[derive(Clone, Debug)]
pub struct EvaluatedChannel {
    pub rate: f64,
    pub op: ComplexMatrix,
    pub op_dagger: ComplexMatrix,
    pub op_dagger_op: ComplexMatrix,
}

/// A representation frozen at one time.
#[derive(Clone, Debug)]
pub struct GeneratorSnapshot {
    pub dim: usize,
    pub t: f64,
    /// `H'` (base Hamiltonian plus half the anti-Hermitian shift coefficient).
    pub hamiltonian: ComplexMatrix,
    /// `Gamma'` (base decay operator plus the Hermitian shift part).
    pub gamma: ComplexMatrix,
    pub channels: Vec<EvaluatedChannel>,
    pub shift: Option<ComplexMatrix>,
}

impl GeneratorSnapshot {
    pub fn dissipator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim);
        for ch in &self.channels {
            if ch.rate != 0.0 {
                let term = &(&ch.op * rho) * &ch.op_dagger;
                out.add_scaled(C64::new(ch.rate, 0.0), &term);
            }
        }
        if let Some(c) = &self.shift {
            let term = &(c * rho) + &(rho * &c.dagger());
            out.add_scaled(C64::new(0.5, 0.0), &term);
        }
        out
    }

    pub fn dual_dissipator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim);
        for ch in &self.channels {
            if ch.rate != 0.0 {
                let term = &(&ch.op_dagger * x) * &ch.op;
                out.add_scaled(C64::new(ch.rate, 0.0), &term);
            }
        }
        if let Some(c) = &self.shift {
            let term = &(&c.dagger() * x) + &(x * c);
            out.add_scaled(C64::new(0.5, 0.0), &term);
        }
        out
    }

    pub fn generator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.dissipator(rho);
        out.add_scaled(-I, &self.hamiltonian.commutator(rho));
        out.add_scaled(C64::new(-0.5, 0.0), &self.gamma.anticommutator(rho));
        out
    }

    pub fn dual_generator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.dual_dissipator(x);
        out.add_scaled(I, &self.hamiltonian.commutator(x));
        out.add_scaled(C64::new(-0.5, 0.0), &self.gamma.anticommutator(x));
        out
    }

    pub fn effective_hamiltonian(&self) -> ComplexMatrix {
        let mut k = self.hamiltonian.clone();
        k.add_scaled(C64::new(0.0, -0.5), &self.gamma);
        k
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::models::enm_model;
    use crate::models::Driving;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let data = (0..n * n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_vec(n, data).unwrap()
    }

    pub(crate) fn random_density(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = random_matrix(n, rng);
        let rho = &g * &g.dagger();
        let tr = rho.trace().re;
        rho.scale_re(1.0 / tr)
    }

    /// A random GKLS generator with (possibly negative) rates and a random Hamiltonian.
    pub(crate) fn random_rep(n: usize, channels: usize, rng: &mut impl Rng) -> GeneratorRepresentation {
        let h = random_matrix(n, rng).hermitian_part();
        let chans = (0..channels)
            .map(|_| {
                let l = random_matrix(n, rng);
                let rate = rng.random_range(-0.5..1.5);
                let slope = rng.random_range(-0.3..0.3);
                Channel::new(
                    TimeOperator::constant(l),
                    TimeFunction::Constant(rate).plus(&TimeFunction::Tanh { scale: slope }),
                )
            })
            .collect();
        GeneratorRepresentation::new(n, TimeOperator::constant(h), chans).unwrap()
    }

    fn enm(g3: TimeFunction, driving: Driving) -> GeneratorRepresentation {
        enm_model(
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(1.0),
            g3,
            driving,
        )
        .representation()
    }

    fn brute_force_enm_dissipator(g: [f64; 3], rho: &ComplexMatrix) -> ComplexMatrix {
        let paulis = [
            ComplexMatrix::pauli_x(),
            ComplexMatrix::pauli_y(),
            ComplexMatrix::pauli_z(),
        ];
        let mut out = ComplexMatrix::zeros(2);
        for (gk, s) in g.iter().zip(&paulis) {
            out.add_scaled(C64::new(gk / 2.0, 0.0), &(&(s * rho) * s));
        }
        out
    }

    #[test]
    fn dissipator_examples() {
        let rep = enm(TimeFunction::Tanh { scale: -1.0 }, Driving::None);
        let half_id = ComplexMatrix::identity(2).scale_re(0.5);
        for &t in &[0.0, 0.3, 2.0] {
            let g = [1.0, 1.0, -f64::tanh(t)];
            let got = rep.apply_dissipator(t, &half_id).unwrap();
            let want = half_id.scale_re((g[0] + g[1] + g[2]) / 2.0);
            assert!(got.max_abs_diff(&want) < 1e-15);
            assert!(got.max_abs_diff(&brute_force_enm_dissipator(g, &half_id)) < 1e-15);
        }
        let excited = ComplexMatrix::projector(&crate::linalg::StateVector::excited());
        let ground = ComplexMatrix::projector(&crate::linalg::StateVector::ground());
        let got = rep.apply_dissipator(0.0, &excited).unwrap();
        assert!(got.max_abs_diff(&ground) < 1e-15);

        let gamma = 0.7;
        let damping = GeneratorRepresentation::new(
            2,
            TimeOperator::zero(2),
            vec![Channel::constant_operator(
                ComplexMatrix::sigma_minus(),
                TimeFunction::Constant(gamma),
            )],
        )
        .unwrap();
        let got = damping.apply_dissipator(0.0, &excited).unwrap();
        assert!(got.max_abs_diff(&ground.scale_re(gamma)) < 1e-15);
        assert!(damping
            .gamma_operator(0.0)
            .max_abs_diff(&(&ComplexMatrix::sigma_plus() * &ComplexMatrix::sigma_minus()).scale_re(gamma))
            < 1e-15);
        assert!(matches!(
            damping.apply_dissipator(0.0, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gamma_and_effective_hamiltonian_examples() {
        let rep = enm(TimeFunction::Tanh { scale: -1.0 }, Driving::None);
        let id = ComplexMatrix::identity(2);
        for &t in &[0.0f64, 0.4, 3.0] {
            let g = 2.0 - t.tanh();
            assert!(rep.gamma_operator(t).max_abs_diff(&id.scale_re(g / 2.0)) < 1e-15);
        }
        assert!(rep.gamma_operator(0.0).max_abs_diff(&id) < 1e-15);
        assert!(rep
            .effective_hamiltonian(0.0)
            .max_abs_diff(&id.scale(C64::new(0.0, -0.5)))
            < 1e-15);

        // R1: C = gamma/2 * 1  =>  K1 = -(i/2) gamma 1
        let gamma = TimeFunction::Constant(2.0).plus(&TimeFunction::Tanh { scale: -1.0 });
        let r1 = rep.shift_representation(&ShiftOperator::scalar(2, gamma.times(0.5)));
        let t = 0.8;
        let g = 2.0 - f64::tanh(t);
        assert!(r1
            .effective_hamiltonian(t)
            .max_abs_diff(&id.scale(C64::new(0.0, -0.5 * g)))
            < 1e-14);
        assert!(r1.hamiltonian(t).max_abs() < 1e-15);
        assert!(r1.gamma_operator(t).max_abs_diff(&id.scale_re(g)) < 1e-14);

        // R2: C = (g1 + g2 - g3)/2 * 1  =>  K2 = -(i/2)(g1 + g2) 1
        let c2 = TimeFunction::Constant(1.0).plus(&TimeFunction::Tanh { scale: 0.5 });
        let r2 = rep.shift_representation(&ShiftOperator::scalar(2, c2));
        assert!(r2
            .effective_hamiltonian(t)
            .max_abs_diff(&id.scale(C64::new(0.0, -1.0)))
            < 1e-14);
    }

    #[test]
    fn generator_examples() {
        let rep = enm(TimeFunction::Tanh { scale: -1.0 }, Driving::None);
        let half_id = ComplexMatrix::identity(2).scale_re(0.5);
        assert!(rep.generator_apply(1.3, &half_id).unwrap().max_abs() < 1e-15);
        let sz = ComplexMatrix::pauli_z().scale_re(0.5);
        let got = rep.generator_apply(0.6, &sz).unwrap();
        assert!(got.max_abs_diff(&sz.scale_re(-2.0)) < 1e-15);

        // driven: sigma_x/2 -> -(g2 + g3) sigma_x/2 - b sigma_y/2
        let b = 0.9;
        let driven = enm(TimeFunction::Tanh { scale: -1.0 }, Driving::Constant(b));
        let t = 0.7;
        let g3 = -f64::tanh(t);
        let sx = ComplexMatrix::pauli_x().scale_re(0.5);
        let sy = ComplexMatrix::pauli_y().scale_re(0.5);
        let got = driven.generator_apply(t, &sx).unwrap();
        let want = &sx.scale_re(-(1.0 + g3)) - &sy.scale_re(b);
        assert!(got.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn shift_examples() {
        let rep = enm(TimeFunction::Tanh { scale: -1.0 }, Driving::None);
        let same = rep.shift_representation(&ShiftOperator::zero(2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        assert!(same
            .apply_dissipator(0.5, &rho)
            .unwrap()
            .max_abs_diff(&rep.apply_dissipator(0.5, &rho).unwrap())
            < 1e-15);

        // J' = J + (gamma/2) rho, the positive map of the R1 unraveling
        let gamma = TimeFunction::Constant(2.0).plus(&TimeFunction::Tanh { scale: -1.0 });
        let r1 = rep.shift_representation(&ShiftOperator::scalar(2, gamma.times(0.5)));
        let t = 1.1;
        let want = &rep.apply_dissipator(t, &rho).unwrap() + &rho.scale_re(gamma.eval(t) / 2.0);
        assert!(r1.apply_dissipator(t, &rho).unwrap().max_abs_diff(&want) < 1e-15);

        // Hermitian C with a sigma_x part: only Gamma moves
        let y = 0.4;
        let c = ShiftOperator::new(2, move |t| {
            let d = (2.0 + t.tanh()) / 2.0;
            &ComplexMatrix::identity(2).scale_re(d) + &ComplexMatrix::pauli_x().scale_re(y)
        });
        let fixed = rep.shift_representation(&c);
        assert!(fixed.hamiltonian(t).max_abs() < 1e-15);
        let want_gamma = &rep.gamma_operator(t) + &c.hermitian_part(t);
        assert!(fixed.gamma_operator(t).max_abs_diff(&want_gamma) < 1e-15);
    }

    #[test]
    fn random_shift_preserves_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..120 {
            let n = 2 + trial % 3;
            let rep = random_rep(n, n * n - 1, &mut rng);
            let c0 = random_matrix(n, &mut rng);
            let c1 = random_matrix(n, &mut rng);
            let shift = ShiftOperator::new(n, move |t| &c0 + &c1.scale_re(t.sin()));
            let shifted = rep.shift_representation(&shift);
            let t = rng.random_range(0.0..4.0);
            let rho = random_density(n, &mut rng);
            let a = rep.generator_apply(t, &rho).unwrap();
            let b = shifted.generator_apply(t, &rho).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-9);
            // Gamma' = J'^dagger(1)
            let snap = shifted.snapshot(t);
            let dual_one = snap.dual_dissipator(&ComplexMatrix::identity(n));
            assert!(dual_one.max_abs_diff(&snap.gamma) < 1e-12);
            for r in [&rep, &shifted] {
                let out = r.generator_apply(t, &rho).unwrap();
                assert!(out.trace().norm() < 1e-9 * rho.frobenius_norm().max(1.0));
                assert!(out.is_hermitian(1e-10));
            }
        }
    }

    #[test]
    fn dual_examples_and_trace_pairing() {
        let rep = enm(TimeFunction::Tanh { scale: -1.0 }, Driving::None);
        let t = 0.9;
        assert!(rep
            .generator_dual_apply(t, &ComplexMatrix::identity(2))
            .unwrap()
            .max_abs()
            < 1e-15);
        let sx = ComplexMatrix::pauli_x();
        let got = rep.generator_dual_apply(t, &sx).unwrap();
        assert!(got.max_abs_diff(&sx.scale_re(-(1.0 - t.tanh()))) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let r = random_rep(3, 4, &mut rng);
            let shifted = r.shift_representation(&ShiftOperator::from_operator(TimeOperator::constant(
                random_matrix(3, &mut rng),
            )));
            let x = random_matrix(3, &mut rng);
            let rho = random_matrix(3, &mut rng);
            for g in [&r, &shifted] {
                let lhs = (&x * &g.generator_apply(t, &rho).unwrap()).trace();
                let rhs = (&g.generator_dual_apply(t, &x).unwrap() * &rho).trace();
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn too_many_channels_rejected() {
        let chans = (0..4)
            .map(|_| Channel::constant_operator(ComplexMatrix::pauli_x(), TimeFunction::Constant(1.0)))
            .collect();
        assert!(GeneratorRepresentation::new(2, TimeOperator::zero(2), chans).is_err());
    }
}
