//! Divisibility and dissipativity checks on a time grid.
//!
//! CP-divisibility is read off the GKLS rates exactly. P-divisibility, dissipativity
//! and rate-operator positivity quantify over all states or operators, so they are
//! sampled; a `Holds` verdict always comes with `samples_used`. For Pauli-channel
//! qubit generators the closed-form criteria are evaluated alongside.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::{GeneratorRepresentation, GeneratorSnapshot};
use crate::linalg::{
    choi_matrix, hermitian_eig, is_psd, min_eigenvalue, partial_transpose, ComplexMatrix, StateVector,
    C64,
};
use crate::models::{criteria, EnmModel};
use crate::rate_ops::{haar_state, r_matrix, w_matrix, RateKind};
use crate::rng::stream_rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    Cp,
    P,
    Dissipative,
    RatePositivity(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Undetermined,
}

/// A violating input at one grid time. `input` is a matrix flattened row-major.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub t: f64,
    pub input: Vec<(f64, f64)>,
    pub magnitude: f64,
}

impl Witness {
    fn new(t: f64, input: &ComplexMatrix, magnitude: f64) -> Self {
        Self {
            t,
            input: input.as_slice().iter().map(|z| (z.re, z.im)).collect(),
            magnitude,
        }
    }

    pub fn input_matrix(&self) -> ComplexMatrix {
        let n = (self.input.len() as f64).sqrt().round() as usize;
        let data = self.input.iter().map(|&(re, im)| C64::new(re, im)).collect();
        ComplexMatrix::from_vec(n, data).expect("square witness")
    }
}

/// Verdict of an analytic criterion evaluated on the same grid.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedForm {
    pub verdict: Verdict,
    pub first_violation: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivisibilityReport {
    pub property: Property,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub samples_used: usize,
    pub t_grid: Vec<f64>,
    pub closed_form: Option<ClosedForm>,
}

impl DivisibilityReport {
    fn from_witnesses(
        property: Property,
        t_grid: &[f64],
        witnesses: Vec<Witness>,
        samples_used: usize,
        closed_form: Option<ClosedForm>,
    ) -> Self {
        let verdict = if t_grid.is_empty() {
            Verdict::Undetermined
        } else if witnesses.is_empty() {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        Self {
            property,
            verdict,
            witnesses,
            samples_used,
            t_grid: t_grid.to_vec(),
            closed_form,
        }
    }

    pub fn first_violation_time(&self) -> Option<f64> {
        self.witnesses.iter().map(|w| w.t).reduce(f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// States or operators sampled per grid time.
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            tol: 1e-9,
        }
    }
}

/// 200 equally spaced points on `[0, t_max]`.
pub fn default_check_grid(t_max: f64) -> Vec<f64> {
    let n = 200;
    (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
}

const CP_TOL: f64 = 1e-12;

/// Exact CP-divisibility: every `c_a(t) >= -1e-12` on the grid.
pub fn check_cp_divisibility(rep: &GeneratorRepresentation, t_grid: &[f64]) -> Result<DivisibilityReport> {
    if rep.is_shifted() {
        return Err(Error::ExplicitFormRequired);
    }
    let mut witnesses = Vec::new();
    for &t in t_grid {
        let rates = rep.channel_rates(t);
        if let Some((k, c)) = rates
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
        {
            if c < -CP_TOL {
                witnesses.push(Witness::new(t, &rep.channels()[k].operator.eval(t), -c));
            }
        }
    }
    Ok(DivisibilityReport::from_witnesses(
        Property::Cp,
        t_grid,
        witnesses,
        0,
        None,
    ))
}

fn closed_form(
    rep: &GeneratorRepresentation,
    t_grid: &[f64],
    holds: impl Fn([f64; 3]) -> bool,
) -> Option<ClosedForm> {
    let model = EnmModel::from_representation(&rep.unshifted()).ok()?;
    let first_violation = t_grid.iter().copied().find(|&t| !holds(model.rates(t)));
    let verdict = if t_grid.is_empty() {
        Verdict::Undetermined
    } else if first_violation.is_some() {
        Verdict::Fails
    } else {
        Verdict::Holds
    };
    Some(ClosedForm {
        verdict,
        first_violation,
    })
}

/// Runs `probe` on every grid time in parallel with its own RNG stream and keeps
/// the worst violation per time.
fn sampled_check<F>(
    rep: &GeneratorRepresentation,
    t_grid: &[f64],
    opts: &CheckOptions,
    probe: F,
) -> Vec<Witness>
where
    F: Fn(&GeneratorSnapshot, &mut rand_chacha::ChaCha8Rng) -> (ComplexMatrix, f64) + Sync,
{
    let per_time: Vec<Option<Witness>> = t_grid
        .par_iter()
        .enumerate()
        .map(|(idx, &t)| {
            let snap = rep.snapshot(t);
            let mut rng = stream_rng(opts.seed, idx as u64);
            let mut worst: Option<(ComplexMatrix, f64)> = None;
            for _ in 0..opts.samples {
                let (input, min) = probe(&snap, &mut rng);
                if min < -opts.tol && worst.as_ref().is_none_or(|w| min < w.1) {
                    worst = Some((input, min));
                }
            }
            worst.map(|(input, min)| Witness::new(t, &input, -min))
        })
        .collect();
    per_time.into_iter().flatten().collect()
}

fn min_eig(m: &ComplexMatrix) -> f64 {
    min_eigenvalue(&m.hermitian_part()).unwrap_or(f64::NAN)
}

/// Sampled P-divisibility: `W_psi >= 0` for Haar-random `psi`. Witness inputs are `|psi><psi|`.
pub fn check_p_divisibility(
    rep: &GeneratorRepresentation,
    t_grid: &[f64],
    opts: &CheckOptions,
) -> DivisibilityReport {
    let n = rep.dim();
    let witnesses = sampled_check(rep, t_grid, opts, |snap, rng| {
        let psi = haar_state(n, rng);
        let m = min_eig(&w_matrix(snap, &psi));
        (ComplexMatrix::projector(&psi), m)
    });
    let cf = closed_form(rep, t_grid, |g| criteria::p_divisible(g, opts.tol));
    DivisibilityReport::from_witnesses(Property::P, t_grid, witnesses, opts.samples, cf)
}

/// A complex Ginibre matrix scaled to unit Frobenius norm.
pub fn random_operator(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    loop {
        let data = (0..n * n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let x = ComplexMatrix::from_vec(n, data).expect("square");
        let norm = x.frobenius_norm();
        if norm > 1e-12 {
            return x.scale_re(1.0 / norm);
        }
    }
}

/// `L^dagger(X^dagger X) - L^dagger(X^dagger) X - X^dagger L^dagger(X)`, non-negative for all
/// `X` iff the generator is dissipative.
pub fn dissipativity_defect(snap: &GeneratorSnapshot, x: &ComplexMatrix) -> ComplexMatrix {
    let xd = x.dagger();
    let mut d = snap.dual_generator(&(&xd * x));
    d -= &(&snap.dual_generator(&xd) * x);
    d -= &(&xd * &snap.dual_generator(x));
    d
}

/// Sampled dissipativity over Frobenius-normalized Ginibre operators.
pub fn check_dissipativity(
    rep: &GeneratorRepresentation,
    t_grid: &[f64],
    opts: &CheckOptions,
) -> DivisibilityReport {
    let n = rep.dim();
    let witnesses = sampled_check(rep, t_grid, opts, |snap, rng| {
        let x = random_operator(n, rng);
        let m = min_eig(&dissipativity_defect(snap, &x));
        (x, m)
    });
    let cf = closed_form(rep, t_grid, |g| criteria::dissipative(g, opts.tol));
    DivisibilityReport::from_witnesses(Property::Dissipative, t_grid, witnesses, opts.samples, cf)
}

/// Sampled positivity of `R_psi` (jump map of `rep`, shift included) or `W_psi`.
///
/// `states` restricts the sample to a family, e.g. states without relative phase;
/// Haar-random states are used when it is `None`.
pub fn check_rate_positivity(
    rep: &GeneratorRepresentation,
    kind: RateKind,
    t_grid: &[f64],
    opts: &CheckOptions,
    states: Option<&(dyn Fn(&mut rand_chacha::ChaCha8Rng) -> StateVector + Sync)>,
) -> DivisibilityReport {
    let n = rep.dim();
    let witnesses = sampled_check(rep, t_grid, opts, |snap, rng| {
        let psi = match states {
            Some(f) => f(rng),
            None => haar_state(n, rng),
        };
        let m = match kind {
            RateKind::R => r_matrix(snap, &psi),
            RateKind::W => w_matrix(snap, &psi),
        };
        (ComplexMatrix::projector(&psi), min_eig(&m))
    });
    let label = match kind {
        RateKind::R => "R",
        RateKind::W => "W",
    };
    DivisibilityReport::from_witnesses(
        Property::RatePositivity(label.into()),
        t_grid,
        witnesses,
        opts.samples,
        None,
    )
}

/// `C = A + PT(B)` with `C` the Choi matrix of a qubit map.
#[derive(Clone, Debug)]
pub struct ChoiDecomposition {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

impl ChoiDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.a + &partial_transpose(&self.b, 2).expect("4x4")
    }

    /// Both parts PSD, which certifies positivity of the map.
    pub fn is_positive(&self, tol: f64) -> Result<bool> {
        Ok(is_psd(&self.a, tol)? && is_psd(&self.b, tol)?)
    }
}

/// Choi matrix of the jump map of `rep` at `t`.
pub fn jump_map_choi(rep: &GeneratorRepresentation, t: f64) -> Result<ComplexMatrix> {
    if rep.dim() != 2 {
        return Err(Error::DimensionNotTwo(rep.dim()));
    }
    let snap = rep.snapshot(t);
    Ok(choi_matrix(|x| snap.dissipator(x), 2))
}

const DECOMPOSE_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-9;

fn positive_part(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spec = hermitian_eig(&m.hermitian_part())?;
    let mut out = ComplexMatrix::zeros(m.dim());
    for (lam, v) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
        if *lam > 0.0 {
            out.add_scaled(C64::new(*lam, 0.0), &ComplexMatrix::outer(v, v));
        }
    }
    Ok(out)
}

/// Looks for PSD `A`, `B` with `C = A + PT(B)`.
///
/// Tries `B = 0`, then `A = 0`, then the split `B = PT` of the negative part of
/// `PT(C)` pushed into the decomposable cone by alternating projections. Returns
/// `Ok(None)` when no certificate is found.
pub fn qubit_choi_decompose(choi: &ComplexMatrix) -> Result<Option<ChoiDecomposition>> {
    if choi.dim() != 4 {
        return Err(Error::DimensionNotTwo((choi.dim() as f64).sqrt() as usize));
    }
    let c = choi.hermitian_part();
    if is_psd(&c, DECOMPOSE_TOL)? {
        return Ok(Some(ChoiDecomposition {
            a: c,
            b: ComplexMatrix::zeros(4),
        }));
    }
    let pt = partial_transpose(&c, 2)?;
    if is_psd(&pt, DECOMPOSE_TOL)? {
        return Ok(Some(ChoiDecomposition {
            a: ComplexMatrix::zeros(4),
            b: pt,
        }));
    }
    let mut b = ComplexMatrix::zeros(4);
    for _ in 0..500 {
        let a = positive_part(&(&c - &partial_transpose(&b, 2)?))?;
        b = positive_part(&partial_transpose(&(&c - &a), 2)?)?;
        let d = ChoiDecomposition { a, b: b.clone() };
        if d.reconstruct().max_abs_diff(&c) < DECOMPOSE_TOL {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// The two ENM jump maps with closed-form Choi decompositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnmMap {
    /// `J + gamma/2`, the jump map of the positive-dissipator representation.
    PositiveDissipator,
    /// `J - gamma_3/2`, the jump map of the representation with no deterministic part
    /// for `gamma_1 = gamma_2`.
    R3,
}

/// Closed-form `A`, `B` for an ENM jump map at rates `g`, checked against `choi`.
///
/// `A` is PSD iff `gamma_1 + gamma_2 + 2 gamma_3 >= |gamma_1 - gamma_2|` and `B = -gamma_3 M`
/// with `M >= 0`.
pub fn enm_choi_decomposition(map: EnmMap, g: [f64; 3], choi: &ComplexMatrix) -> Result<ChoiDecomposition> {
    let [g1, g2, g3] = g;
    let s = g1 + g2;
    let d = g1 - g2;
    let big = s + 2.0 * g3;
    let a_rows = match map {
        EnmMap::PositiveDissipator => [
            [big, 0.0, 0.0, big],
            [0.0, big, d, 0.0],
            [0.0, d, big, 0.0],
            [big, 0.0, 0.0, big],
        ],
        EnmMap::R3 => [
            [0.0; 4],
            [0.0, big, d, 0.0],
            [0.0, d, big, 0.0],
            [0.0; 4],
        ],
    };
    let b_rows = [
        [0.0; 4],
        [0.0, -g3, -g3, 0.0],
        [0.0, -g3, -g3, 0.0],
        [0.0; 4],
    ];
    let out = ChoiDecomposition {
        a: ComplexMatrix::from_real_rows(&a_rows)?.scale_re(0.5),
        b: ComplexMatrix::from_real_rows(&b_rows)?,
    };
    let deviation = out.reconstruct().max_abs_diff(choi);
    if deviation > RECONSTRUCTION_TOL {
        return Err(Error::ReconstructionMismatch { deviation });
    }
    Ok(out)
}
