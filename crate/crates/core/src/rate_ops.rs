//! Rate operators, jump channels and the representation shifts that make them positive.
//!
//! For a pure state `P = |psi><psi|`:
//! - `W_psi = (1 - P) L_t(P) (1 - P)` does not depend on the representation and is
//!   positive for every `psi` iff the dynamics is P-divisible.
//! - `R_psi = J_t(P)` uses the jump map of the chosen representation. Its
//!   eigen-decomposition gives jump rates and post-jump states, and
//!   `(1 - P) R_psi (1 - P) = W_psi`.

use std::sync::OnceLock;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::generator::{GeneratorRepresentation, GeneratorSnapshot, ShiftOperator};
use crate::linalg::{
    check_same_dim, hermitian_eig, ComplexMatrix, SpectralDecomposition, StateVector, C64, I,
    PSD_TOL,
};
use crate::timefn::TimeFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateKind {
    W,
    R,
}

/// A rate operator built at `(t, psi)`, with a lazily computed spectrum.
#[derive(Debug)]
pub struct RateOperator {
    pub kind: RateKind,
    pub matrix: ComplexMatrix,
    pub state: StateVector,
    pub time: f64,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl RateOperator {
    pub fn new(kind: RateKind, matrix: ComplexMatrix, state: StateVector, time: f64) -> Self {
        Self {
            kind,
            matrix: matrix.hermitian_part(),
            state,
            time,
            spectrum: OnceLock::new(),
        }
    }

    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = hermitian_eig(&self.matrix)?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.spectrum()?.min_eigenvalue())
    }
}

/// A jump with its rate (1/time) and normalized post-jump state.
#[derive(Clone, Debug)]
pub struct JumpChannel {
    pub rate: f64,
    pub post_state: StateVector,
}

pub(crate) fn w_matrix(snap: &GeneratorSnapshot, psi: &StateVector) -> ComplexMatrix {
    let p = ComplexMatrix::projector(psi);
    let mut q = ComplexMatrix::identity(psi.dim());
    q -= &p;
    let lp = snap.generator(&p);
    &(&q * &lp) * &q
}

pub(crate) fn r_matrix(snap: &GeneratorSnapshot, psi: &StateVector) -> ComplexMatrix {
    snap.dissipator(&ComplexMatrix::projector(psi))
}

/// `W_psi = (1 - P) L_t(P) (1 - P)`.
pub fn rate_operator_w(rep: &GeneratorRepresentation, t: f64, psi: &StateVector) -> Result<RateOperator> {
    check_same_dim(rep.dim(), psi.dim())?;
    let m = w_matrix(&rep.snapshot(t), psi);
    Ok(RateOperator::new(RateKind::W, m, psi.clone(), t))
}

/// `W_psi = sum_a c_a (L_a - l_a) P (L_a - l_a)^dagger` with `l_a = <psi|L_a|psi>`.
///
/// Uses the GKLS channels only; a shift adds nothing to `W` because `(1 - P) C P = (1 - P) C P (1 - P) P`
/// vanishes after projecting.
pub fn rate_operator_w_channels(
    rep: &GeneratorRepresentation,
    t: f64,
    psi: &StateVector,
) -> Result<RateOperator> {
    check_same_dim(rep.dim(), psi.dim())?;
    let n = psi.dim();
    let mut w = ComplexMatrix::zeros(n);
    for ch in &rep.snapshot(t).channels {
        let l = &ch.op;
        let ell = l.expectation(psi);
        let shifted = l - &ComplexMatrix::identity(n).scale(ell);
        let v = shifted.apply(psi);
        w.add_scaled(C64::new(ch.rate, 0.0), &ComplexMatrix::outer(&v, &v));
    }
    Ok(RateOperator::new(RateKind::W, w, psi.clone(), t))
}

/// `R_psi = J_t(|psi><psi|)` for the jump map of `rep` (shift included).
pub fn rate_operator_r(rep: &GeneratorRepresentation, t: f64, psi: &StateVector) -> Result<RateOperator> {
    check_same_dim(rep.dim(), psi.dim())?;
    let m = r_matrix(&rep.snapshot(t), psi);
    Ok(RateOperator::new(RateKind::R, m, psi.clone(), t))
}

/// Rates below `-max(psd_tol, 1e-6 Tr R)` make the unraveling invalid at this point.
pub fn negative_rate_threshold(trace: f64, psd_tol: f64) -> f64 {
    psd_tol.max(1e-6 * trace.abs())
}

fn negative_rate_error(r: &RateOperator, min: f64, threshold: f64) -> Error {
    Error::NegativeRate {
        t: r.time,
        min_eigenvalue: min,
        threshold,
        state: r.state.as_slice().iter().map(|z| (z.re, z.im)).collect(),
    }
}

/// Jump channels from the spectrum, in descending rate order.
///
/// Channels with `|r_k| <= psd_tol` are dropped.
pub fn jump_channels(r: &RateOperator, psd_tol: f64) -> Result<Vec<JumpChannel>> {
    let spec = r.spectrum()?;
    let threshold = negative_rate_threshold(total_jump_rate(r), psd_tol);
    let min = spec.min_eigenvalue();
    if min < -threshold {
        return Err(negative_rate_error(r, min, threshold));
    }
    Ok(spec
        .eigenvalues
        .iter()
        .zip(&spec.eigenvectors)
        .filter(|(lam, _)| **lam > psd_tol)
        .map(|(lam, v)| JumpChannel {
            rate: *lam,
            post_state: v.clone(),
        })
        .collect())
}

/// Jump channels in a prescribed orthonormal basis, if `R` is diagonal in it.
///
/// Returns `Ok(None)` when an off-diagonal element exceeds `psd_tol * max(1, Tr R)`.
pub fn jump_channels_in_basis(
    r: &RateOperator,
    basis: &[StateVector],
    psd_tol: f64,
) -> Result<Option<Vec<JumpChannel>>> {
    let n = r.matrix.dim();
    check_same_dim(n, basis.len())?;
    let trace = total_jump_rate(r);
    let scale = psd_tol * trace.abs().max(1.0);
    let images: Vec<StateVector> = basis.iter().map(|b| r.matrix.apply(b)).collect();
    for (i, bi) in basis.iter().enumerate() {
        for (j, img) in images.iter().enumerate() {
            if i != j && bi.inner(img).norm() > scale {
                return Ok(None);
            }
        }
    }
    let mut channels: Vec<(f64, usize)> = basis
        .iter()
        .zip(&images)
        .enumerate()
        .map(|(k, (b, img))| (b.inner(img).re, k))
        .collect();
    let threshold = negative_rate_threshold(trace, psd_tol);
    if let Some(min) = channels.iter().map(|c| c.0).reduce(f64::min) {
        if min < -threshold {
            return Err(negative_rate_error(r, min, threshold));
        }
    }
    channels.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(Some(
        channels
            .into_iter()
            .filter(|(rate, _)| *rate > psd_tol)
            .map(|(rate, k)| JumpChannel {
                rate,
                post_state: basis[k].clone(),
            })
            .collect(),
    ))
}

/// `Tr R`, the total jump rate.
pub fn total_jump_rate(r: &RateOperator) -> f64 {
    r.matrix.trace().re
}

/// `J^{kl}_{ij} = <i| J_t[|k><l|] |j>` for a qubit, indices `0, 1` over the given basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiCoefficients {
    values: [C64; 16],
}

impl ChoiCoefficients {
    pub fn get(&self, k: usize, l: usize, i: usize, j: usize) -> C64 {
        self.values[((k * 2 + l) * 2 + i) * 2 + j]
    }

    /// Largest imaginary part over all 16 coefficients.
    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

fn check_qubit_basis(basis: &[StateVector; 2]) -> Result<()> {
    for b in basis {
        if b.dim() != 2 {
            return Err(Error::DimensionNotTwo(b.dim()));
        }
    }
    let overlap = basis[0].inner(&basis[1]).norm();
    let norms = (basis[0].norm() - 1.0).abs().max((basis[1].norm() - 1.0).abs());
    if overlap > 1e-10 || norms > 1e-10 {
        return Err(Error::Schema {
            path: "basis".into(),
            message: "basis vectors must be orthonormal".into(),
        });
    }
    Ok(())
}

fn choi_coefficients_snapshot(snap: &GeneratorSnapshot, basis: &[StateVector; 2]) -> ChoiCoefficients {
    let mut values = [C64::new(0.0, 0.0); 16];
    for k in 0..2 {
        for l in 0..2 {
            let img = snap.dissipator(&ComplexMatrix::outer(&basis[k], &basis[l]));
            for i in 0..2 {
                for j in 0..2 {
                    values[((k * 2 + l) * 2 + i) * 2 + j] = basis[i].inner(&img.apply(&basis[j]));
                }
            }
        }
    }
    ChoiCoefficients { values }
}

/// The 16 coefficients of the jump map of `rep` at time `t` in `basis`.
pub fn choi_coefficients(
    rep: &GeneratorRepresentation,
    t: f64,
    basis: &[StateVector; 2],
) -> Result<ChoiCoefficients> {
    if rep.dim() != 2 {
        return Err(Error::DimensionNotTwo(rep.dim()));
    }
    check_qubit_basis(basis)?;
    Ok(choi_coefficients_snapshot(&rep.snapshot(t), basis))
}

/// Times at which the real-Choi condition is verified before building a fixed-post-jump shift.
const REALITY_PROBE_TIMES: [f64; 7] = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

/// The shift `C(t)` whose rate operators have the fixed eigenvectors
/// `(|phi_1> +- |phi_2>)/sqrt 2` for every state without relative phase in `basis`.
///
/// In the basis `{phi_1, phi_2}` (coefficients written 1-based):
/// `C = [[J^{11}_{22} - J^{11}_{11} + ix, y], [y + 2(J^{12}_{11} - J^{12}_{22}), J^{22}_{11} - J^{22}_{22} + ix]]`.
pub fn fixed_postjump_shift(
    rep: &GeneratorRepresentation,
    basis: &[StateVector; 2],
    x: TimeFunction,
    y: TimeFunction,
) -> Result<ShiftOperator> {
    if rep.dim() != 2 {
        return Err(Error::DimensionNotTwo(rep.dim()));
    }
    check_qubit_basis(basis)?;
    for &t in &REALITY_PROBE_TIMES {
        let c = choi_coefficients(rep, t, basis)?;
        if c.max_imaginary() > 1e-12 {
            return Err(Error::CondTwoViolated);
        }
    }
    let rep = rep.clone();
    let basis = basis.clone();
    let mut u = ComplexMatrix::zeros(2);
    for col in 0..2 {
        for row in 0..2 {
            u[(row, col)] = basis[col][row];
        }
    }
    let u_dag = u.dagger();
    Ok(ShiftOperator::new(2, move |t| {
        let j = choi_coefficients_snapshot(&rep.snapshot(t), &basis);
        let (xv, yv) = (x.eval(t), y.eval(t));
        let ix = C64::new(0.0, xv);
        let y_c = C64::new(yv, 0.0);
        let c_basis = ComplexMatrix::from_rows(&[
            [j.get(0, 0, 1, 1) - j.get(0, 0, 0, 0) + ix, y_c],
            [
                y_c + (j.get(0, 1, 0, 0) - j.get(0, 1, 1, 1)) * 2.0,
                j.get(1, 1, 0, 0) - j.get(1, 1, 1, 1) + ix,
            ],
        ])
        .expect("2x2");
        &(&u * &c_basis) * &u_dag
    }))
}

/// Upper end of `0 <= y <= gamma_1 + gamma_2/2 - gamma_3/2` for the positive fixed-post-jump family.
pub fn y_bound(g1: f64, g2: f64, g3: f64) -> Result<f64> {
    let (g13, g23) = (g1 + g3, g2 + g3);
    if g13 < 0.0 || g23 < 0.0 {
        return Err(Error::NotPDivisible { g13, g23 });
    }
    Ok(g1 + 0.5 * g2 - 0.5 * g3)
}

#[derive(Clone, Copy, Debug)]
pub enum HaarMethod {
    /// Exact average over the Weyl (clock and shift) unitary 1-design.
    Design,
    /// Sample mean over Haar-random unitaries.
    MonteCarlo { samples: usize, seed: u64 },
}

/// `K_avg(t) = int L_t^dagger(U^dagger) U dU` with per-entry standard errors
/// (zero for the design average).
#[derive(Clone, Debug)]
pub struct HaarAverage {
    pub mean: ComplexMatrix,
    pub std_error_re: Vec<f64>,
    pub std_error_im: Vec<f64>,
}

/// Clock-and-shift unitaries `X^a Z^b`, `a, b = 0..N-1`.
pub fn weyl_unitaries(n: usize) -> Vec<ComplexMatrix> {
    let mut shift = ComplexMatrix::zeros(n);
    for k in 0..n {
        shift[((k + 1) % n, k)] = C64::new(1.0, 0.0);
    }
    let clock = ComplexMatrix::diagonal(
        &(0..n)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect::<Vec<_>>(),
    );
    let mut out = Vec::with_capacity(n * n);
    let mut xa = ComplexMatrix::identity(n);
    for _ in 0..n {
        let mut w = xa.clone();
        for _ in 0..n {
            out.push(w.clone());
            w = &w * &clock;
        }
        xa = &shift * &xa;
    }
    out
}

/// A Haar-random unitary: Gram-Schmidt on the columns of a complex Ginibre matrix.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for c in &cols {
            let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= proj * ci;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let mut u = ComplexMatrix::zeros(n);
    for (j, c) in cols.iter().enumerate() {
        for (i, z) in c.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

/// A Haar-random pure state.
pub fn haar_state(n: usize, rng: &mut impl Rng) -> StateVector {
    loop {
        let amps = (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(v) = StateVector::new(amps) {
            return v;
        }
    }
}

fn haar_average_snapshot(snap: &GeneratorSnapshot, method: HaarMethod) -> HaarAverage {
    let n = snap.dim;
    match method {
        HaarMethod::Design => {
            let ws = weyl_unitaries(n);
            let mut k = ComplexMatrix::zeros(n);
            for w in &ws {
                k += &(&snap.dual_generator(&w.dagger()) * w);
            }
            HaarAverage {
                mean: k.scale_re(1.0 / ws.len() as f64),
                std_error_re: vec![0.0; n * n],
                std_error_im: vec![0.0; n * n],
            }
        }
        HaarMethod::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = samples.max(2);
            let mut sum = vec![C64::new(0.0, 0.0); n * n];
            let mut sq_re = vec![0.0; n * n];
            let mut sq_im = vec![0.0; n * n];
            for _ in 0..samples {
                let u = haar_unitary(n, &mut rng);
                let term = &snap.dual_generator(&u.dagger()) * &u;
                for (idx, z) in term.as_slice().iter().enumerate() {
                    sum[idx] += z;
                    sq_re[idx] += z.re * z.re;
                    sq_im[idx] += z.im * z.im;
                }
            }
            let m = samples as f64;
            let mean: Vec<C64> = sum.iter().map(|z| z / m).collect();
            let se = |sq: &[f64], part: fn(&C64) -> f64| -> Vec<f64> {
                sq.iter()
                    .zip(&mean)
                    .map(|(s, mu)| {
                        let var = (s / m - part(mu).powi(2)).max(0.0) * m / (m - 1.0);
                        (var / m).sqrt()
                    })
                    .collect()
            };
            let std_error_re = se(&sq_re, |z| z.re);
            let std_error_im = se(&sq_im, |z| z.im);
            HaarAverage {
                mean: ComplexMatrix::from_vec(n, mean).expect("square"),
                std_error_re,
                std_error_im,
            }
        }
    }
}

/// The Haar average `K_avg(t)` used to build a positive jump map.
pub fn haar_average_k(rep: &GeneratorRepresentation, t: f64, method: HaarMethod) -> HaarAverage {
    haar_average_snapshot(&rep.snapshot(t), method)
}

/// The shift turning the jump map into `J(X)^dagger = L^dagger(X) - (K_avg X + X K_avg^dagger)`:
/// `C = -2iH - Gamma - 2 K_avg^dagger` with `H`, `Gamma` of `rep`.
pub fn positive_dissipator_shift(rep: &GeneratorRepresentation) -> ShiftOperator {
    let rep = rep.clone();
    ShiftOperator::new(rep.dim(), move |t| {
        let snap = rep.snapshot(t);
        let k = haar_average_snapshot(&snap, HaarMethod::Design).mean;
        let mut c = snap.hamiltonian.scale(I * -2.0);
        c -= &snap.gamma;
        c.add_scaled(C64::new(-2.0, 0.0), &k.dagger());
        c
    })
}

/// `rep` shifted so its jump map is the Haar-constructed map, which is positive
/// whenever the generator is dissipative.
///
/// Logs a warning when a sampled dissipativity check on `t_grid` fails; positivity
/// failures then surface later as `NegativeRate`.
pub fn positive_dissipator_representation(
    rep: &GeneratorRepresentation,
    t_grid: &[f64],
) -> GeneratorRepresentation {
    if !t_grid.is_empty() {
        let opts = crate::divisibility::CheckOptions {
            samples: 200,
            ..Default::default()
        };
        let report = crate::divisibility::check_dissipativity(rep, t_grid, &opts);
        if report.verdict == crate::divisibility::Verdict::Fails {
            warn!(
                "generator is not dissipative on the grid (first violation at t = {:?}); \
                 the constructed jump map may not be positive",
                report.first_violation_time()
            );
        }
    }
    rep.shift_representation(&positive_dissipator_shift(rep))
}

/// MCWF channels: rate `c_a |L_a psi|^2`, post-jump state `L_a psi / |L_a psi|`.
pub fn mcwf_channels(rep: &GeneratorRepresentation, t: f64, psi: &StateVector) -> Result<Vec<JumpChannel>> {
    check_same_dim(rep.dim(), psi.dim())?;
    mcwf_channels_snapshot(&rep.snapshot(t), psi)
}

pub(crate) fn check_mcwf_rates(snap: &GeneratorSnapshot) -> Result<()> {
    for (channel, ch) in snap.channels.iter().enumerate() {
        if ch.rate < 0.0 {
            return Err(Error::NegativeCoefficient {
                channel,
                t: snap.t,
                value: ch.rate,
            });
        }
    }
    Ok(())
}

pub(crate) fn mcwf_channels_snapshot(snap: &GeneratorSnapshot, psi: &StateVector) -> Result<Vec<JumpChannel>> {
    check_mcwf_rates(snap)?;
    let mut out: Vec<JumpChannel> = snap
        .channels
        .iter()
        .filter_map(|ch| {
            let v = ch.op.apply(psi);
            let norm_sqr = v.norm_sqr();
            let rate = ch.rate * norm_sqr;
            if rate <= 0.0 || norm_sqr < 1e-30 {
                return None;
            }
            Some(JumpChannel {
                rate,
                post_state: StateVector::new(v.as_slice().to_vec()).ok()?,
            })
        })
        .collect();
    out.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    Ok(out)
}

/// `K_psi = K + (i/2) sum_a c_a (2 L_a conj(l_a) - |l_a|^2 1)`, the state-dependent
/// no-jump generator of the W unraveling (`K` of the unshifted GKLS form).
pub fn wroqj_deterministic_generator(
    rep: &GeneratorRepresentation,
    t: f64,
    psi: &StateVector,
) -> Result<ComplexMatrix> {
    check_same_dim(rep.dim(), psi.dim())?;
    Ok(k_psi(&rep.unshifted().snapshot(t), psi))
}

pub(crate) fn k_psi(base: &GeneratorSnapshot, psi: &StateVector) -> ComplexMatrix {
    let n = psi.dim();
    let mut k = base.effective_hamiltonian();
    let half_i = C64::new(0.0, 0.5);
    for ch in &base.channels {
        if ch.rate == 0.0 {
            continue;
        }
        let ell = ch.op.expectation(psi);
        let mut delta = ch.op.scale(ell.conj() * 2.0);
        for d in 0..n {
            delta[(d, d)] -= C64::new(ell.norm_sqr(), 0.0);
        }
        k.add_scaled(half_i * ch.rate, &delta);
    }
    k
}

/// Minimum eigenvalue of `R_psi` or `W_psi`, or of the Haar-sampled worst case
/// among `states`. Convenience for positivity sweeps.
pub fn min_rate_eigenvalue(
    rep: &GeneratorRepresentation,
    kind: RateKind,
    t: f64,
    states: &[StateVector],
) -> Result<f64> {
    let snap = rep.snapshot(t);
    let mut min = f64::INFINITY;
    for psi in states {
        let m = match kind {
            RateKind::W => w_matrix(&snap, psi),
            RateKind::R => r_matrix(&snap, psi),
        };
        min = min.min(crate::linalg::min_eigenvalue(&m.hermitian_part())?);
    }
    Ok(min)
}

/// Default tolerance for dropping zero-rate channels.
pub const CHANNEL_TOL: f64 = PSD_TOL;
