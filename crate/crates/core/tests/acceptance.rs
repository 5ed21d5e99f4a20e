//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture`. Set
//! `ROQJ_ACCEPTANCE_STRICT=1` to exit non-zero when any criterion fails.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roqj::divisibility::{
    check_dissipativity, check_p_divisibility, default_check_grid, enm_choi_decomposition,
    jump_map_choi, CheckOptions, EnmMap, Verdict,
};
use roqj::generator::Channel;
use roqj::linalg::{is_psd, min_eigenvalue, ComplexMatrix, StateVector};
use roqj::models::{criteria, enm_model, Driving, EnmModel, ModelSpec};
use roqj::rate_ops::{
    haar_average_k, haar_state, haar_unitary, rate_operator_r, rate_operator_w, HaarMethod,
};
use roqj::timefn::{uniform_grid, TimeFunction, TimeOperator};
use roqj::trajectory::{
    bloch_vector_state, ensemble_stats, jump_phase_statistics, Engine, Ensemble, UnravelingChoice,
    UnravelingSpec, DEFAULT_CLUSTER_TOL,
};
use roqj::{Error, GeneratorRepresentation, ShiftOperator};

const N_TRAJ: usize = 10_000;
const DT: f64 = 0.002;
const T_MAX: f64 = 5.0;
/// Record every 25 steps (every 0.05 time units).
const STRIDE: usize = 25;
const SEED: u64 = 20_240_607;
const WORKERS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn enm_undriven() -> (GeneratorRepresentation, StateVector) {
    let spec = ModelSpec::preset("enm_undriven").expect("preset");
    (spec.representation().expect("representation"), spec.initial_state())
}

fn run(choice: UnravelingChoice, workers: usize) -> (Ensemble, f64) {
    let (rep, psi0) = enm_undriven();
    let spec = UnravelingSpec::resolve(choice, &rep).expect("resolve");
    let grid = uniform_grid(T_MAX, DT).expect("grid");
    let start = Instant::now();
    let engine = Engine::new(spec, &rep, &grid).expect("engine").with_record_stride(STRIDE);
    let e = engine.run(&psi0, N_TRAJ, SEED, workers).expect("ensemble");
    (e, start.elapsed().as_secs_f64())
}

/// Criterion 1: ensemble-mean coherence vs `0.3 e^{-t} cosh t`.
fn coherence_agreement(e: &Ensemble) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for idx in 0..e.times.len() {
        let s = ensemble_stats(e, idx);
        let t = s.t;
        let exact = 0.3 * (-t).exp() * t.cosh();
        let z = s.mean[(0, 1)];
        let (se_re, se_im) = (s.std_error_re[1], s.std_error_im[1]);
        let dev_re = (z.re - exact).abs();
        if dev_re > 3.0 * se_re + 1e-12 || z.im.abs() > 3.0 * se_im + 1e-12 {
            pass = false;
        }
        if se_re > 1e-12 {
            worst = worst.max(dev_re / se_re);
        }
    }
    (pass, worst)
}

fn criterion_1(ensembles: &[(UnravelingChoice, Ensemble, f64)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (choice, e, secs) in ensembles {
        let (ok, worst) = coherence_agreement(e);
        pass &= ok;
        parts.push(format!("{choice}: max |dev|/SE {worst:.2} ({secs:.0}s)"));
    }
    outcome(pass, parts.join("; "))
}

fn find(ensembles: &[(UnravelingChoice, Ensemble, f64)], c: UnravelingChoice) -> &Ensemble {
    &ensembles.iter().find(|(k, _, _)| *k == c).expect("ensemble").1
}

fn criterion_2(ensembles: &[(UnravelingChoice, Ensemble, f64)]) -> Outcome {
    let tol = DEFAULT_CLUSTER_TOL;

    // R2: exactly 3 states at every recorded time after the first jump.
    let r2 = find(ensembles, UnravelingChoice::R2);
    let first_jump = r2
        .trajectories
        .iter()
        .filter_map(|tr| tr.jumps.first().map(|j| j.time))
        .fold(f64::INFINITY, f64::min);
    let mut r2_ok = true;
    let mut r2_checked = 0;
    for &t in r2.times.iter().filter(|&&t| t > first_jump) {
        r2_checked += 1;
        r2_ok &= r2.effective_ensemble_size(t, tol).expect("grid time") == 3;
    }
    let w = find(ensembles, UnravelingChoice::W);
    let w_final = w.effective_ensemble_size(T_MAX, tol).expect("grid time");
    let w_char = w.characterize(tol);
    let r1_size = find(ensembles, UnravelingChoice::R1).effective_ensemble_size(T_MAX, tol).expect("t");
    let r3_size = find(ensembles, UnravelingChoice::R3).effective_ensemble_size(T_MAX, tol).expect("t");
    let r1_char = find(ensembles, UnravelingChoice::R1).characterize(tol);
    let r3_char = find(ensembles, UnravelingChoice::R3).characterize(tol);

    let pass = r2_ok
        && r2_checked > 0
        && w_final == 2
        && r1_size > 50
        && r3_size > 50
        && w_char.late_jumps.total == 0
        && r1_char.asymptotic_jumps
        && r3_char.asymptotic_jumps;
    outcome(
        pass,
        format!(
            "R2 size 3 at all {r2_checked} times after first jump: {r2_ok}; W final size {w_final}; R1/R3 final size {r1_size}/{r3_size}; \
             late jumps W/R1/R3 {}/{}/{} (W: about {:.2} net flips are implied by the mean Bloch x over the window)",
            w_char.late_jumps.total,
            r1_char.late_jumps.state_changing,
            r3_char.late_jumps.state_changing,
            implied_w_flips(w.len())
        ),
    )
}

/// The W ensemble sits on `|+>`/`|->`, so the mean Bloch x can only relax by flips;
/// over the final fifth of the window `x(t) = 0.6 e^{-t} cosh t` drops by this many flips' worth.
fn implied_w_flips(n: usize) -> f64 {
    let x = |t: f64| 0.6 * (-t).exp() * t.cosh();
    (x(0.8 * T_MAX) - x(T_MAX)) * n as f64 / 2.0
}

fn criterion_3(ensembles: &[(UnravelingChoice, Ensemble, f64)]) -> Outcome {
    let w = find(ensembles, UnravelingChoice::W);
    let last = w.times.len() - 1;
    let mut plus = 0usize;
    let mut worst: f64 = 0.0;
    for s in w.states_at(last) {
        let b = bloch_vector_state(s).expect("qubit");
        let d_plus = ((b[0] - 1.0).powi(2) + b[1].powi(2) + b[2].powi(2)).sqrt();
        let d_minus = ((b[0] + 1.0).powi(2) + b[1].powi(2) + b[2].powi(2)).sqrt();
        worst = worst.max(d_plus.min(d_minus));
        if d_plus < d_minus {
            plus += 1;
        }
    }
    let n = w.len() as f64;
    let frac = plus as f64 / n;
    let expected = 0.5 * (1.0 + 0.6 * (-T_MAX).exp() * T_MAX.cosh());
    let se = (expected * (1.0 - expected) / n).sqrt();
    let pass = worst < 0.05 && (frac - expected).abs() <= 3.0 * se;
    outcome(
        pass,
        format!("max Bloch distance {worst:.2e}; |+> fraction {frac:.4} vs {expected:.4} (SE {se:.4})"),
    )
}

fn criterion_4() -> Outcome {
    let spec = ModelSpec::preset("enm_driven").expect("preset");
    let rep = spec.representation().expect("representation");
    let psi0 = spec.initial_state();
    let grid = uniform_grid(6.0, DT).expect("grid");
    let prime = UnravelingSpec::resolve(UnravelingChoice::R1Prime, &rep).expect("resolve");
    let engine = Engine::new(prime, &rep, &grid).expect("engine").with_record_stride(500);
    let e = engine.run(&psi0, 2000, SEED, WORKERS).expect("ensemble");
    let odd = [FRAC_PI_4, 3.0 * FRAC_PI_4, -FRAC_PI_4, -3.0 * FRAC_PI_4];
    let stats = jump_phase_statistics(&e.trajectories, 3.0, 0.05).expect("qubit");
    let gaussian_frac = stats.fraction_near(&odd, 0.02);

    let model = EnmModel::driven(1.0, 0.25).with_driving(Driving::Constant(1.0));
    let rep = model.representation();
    let prime = UnravelingSpec::resolve(UnravelingChoice::R1Prime, &rep).expect("resolve");
    let engine = Engine::new(prime, &rep, &grid).expect("engine").with_record_stride(500);
    let e = engine.run(&psi0, 2000, SEED, WORKERS).expect("ensemble");
    let constant = jump_phase_statistics(&e.trajectories, 0.0, 0.05).expect("qubit");
    let constant_frac = constant.fraction_near(&odd, 1e-8);

    let pass = stats.increments.len() > 100
        && gaussian_frac >= 0.95
        && !constant.increments.is_empty()
        && constant_frac == 1.0;
    outcome(
        pass,
        format!(
            "Gaussian driving: {:.4} of {} increments near odd multiples of pi/4; constant b=1: {:.4} of {}",
            gaussian_frac,
            stats.increments.len(),
            constant_frac,
            constant.increments.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let model = EnmModel::undriven();
    let rep = model.representation();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = [f64::INFINITY; 3];
    let shifted: Vec<GeneratorRepresentation> = [model.r1_shift(), model.r2_shift(), model.r3_shift()]
        .iter()
        .map(|c| rep.shift_representation(c))
        .collect();
    for _ in 0..10_000 {
        let t = rng.random_range(0.0..T_MAX);
        let psi = haar_state(2, &mut rng);
        for (k, r) in shifted.iter().enumerate() {
            let m = rate_operator_r(r, t, &psi).expect("rate operator").min_eigenvalue().expect("eig");
            worst[k] = worst[k].min(m);
        }
    }
    let bare = rate_operator_r(&rep, 1.0, &StateVector::excited())
        .expect("rate operator")
        .min_eigenvalue()
        .expect("eig");
    let (rep_u, psi0) = enm_undriven();
    let grid = uniform_grid(T_MAX, DT).expect("grid");
    let mcwf = Engine::new(UnravelingSpec::mcwf(), &rep_u, &grid)
        .expect("engine")
        .run(&psi0, 10, SEED, 1);
    let mcwf_rejected = matches!(
        mcwf,
        Err(Error::Trajectory { ref source, .. }) if matches!(**source, Error::NegativeCoefficient { .. })
    );
    let pass = worst.iter().all(|&m| m >= -1e-9) && bare < -1e-9 && mcwf_rejected;
    outcome(
        pass,
        format!(
            "min eigenvalue R1/R2/R3 {:.2e}/{:.2e}/{:.2e}; bare jump map at |1>, t=1: {bare:.4}; MCWF rejected: {mcwf_rejected}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn random_p_divisible(rng: &mut ChaCha8Rng) -> GeneratorRepresentation {
    let mut g = [0.0; 3];
    loop {
        for x in &mut g {
            *x = rng.random_range(-1.0..2.0);
        }
        if criteria::p_divisible(g, 0.0) {
            break;
        }
    }
    let u = haar_unitary(2, rng);
    let paulis = [ComplexMatrix::pauli_x(), ComplexMatrix::pauli_y(), ComplexMatrix::pauli_z()];
    let channels = paulis
        .iter()
        .zip(g)
        .map(|(s, gk)| Channel::constant_operator(&(&u * s) * &u.dagger(), TimeFunction::Constant(gk / 2.0)))
        .collect();
    let h = ComplexMatrix::from_real_rows(&[[rng.random_range(-1.0..1.0), 0.3], [0.3, -0.2]]).expect("2x2");
    GeneratorRepresentation::new(2, TimeOperator::constant(h), channels).expect("generator")
}

fn criterion_6() -> Outcome {
    let grid = default_check_grid(T_MAX);
    let opts = CheckOptions {
        seed: SEED,
        ..CheckOptions::default()
    };
    let undriven = ModelSpec::preset("enm_undriven").unwrap().representation().unwrap();
    let dissipative = ModelSpec::preset("enm_dissipative").unwrap().representation().unwrap();
    let report = check_dissipativity(&undriven, &grid, &opts);
    let first = report.first_violation_time();
    let crossing = 0.5f64.atanh();
    let step = grid[1] - grid[0];
    let boundary_ok = report.verdict == Verdict::Fails
        && first.is_some_and(|t| (t - crossing).abs() <= step);
    let diss_ok = check_dissipativity(&dissipative, &grid, &opts).verdict == Verdict::Holds;
    let p_ok = check_p_divisibility(&undriven, &grid, &opts).verdict == Verdict::Holds
        && check_p_divisibility(&dissipative, &grid, &opts).verdict == Verdict::Holds;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut two_negative = 0;
    let mut w_negative = 0;
    for _ in 0..500 {
        let rep = random_p_divisible(&mut rng);
        let data: Vec<_> = (0..4)
            .map(|_| roqj::C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let c = ComplexMatrix::from_vec(2, data).expect("2x2");
        let shifted = rep.shift_representation(&ShiftOperator::from_operator(TimeOperator::constant(c)));
        for _ in 0..20 {
            let psi = haar_state(2, &mut rng);
            let r = rate_operator_r(&shifted, 0.0, &psi).expect("rate operator");
            let eig = r.spectrum().expect("eig");
            if eig.eigenvalues.iter().filter(|l| **l < -1e-9).count() >= 2 {
                two_negative += 1;
            }
            let w = rate_operator_w(&shifted, 0.0, &psi).expect("rate operator");
            if min_eigenvalue(&w.matrix).expect("eig") < -1e-9 {
                w_negative += 1;
            }
        }
    }
    let pass = boundary_ok && diss_ok && p_ok && two_negative == 0 && w_negative == 0;
    outcome(
        pass,
        format!(
            "first dissipativity violation {:.4} (crossing {crossing:.4}, step {step:.4}); dissipative preset holds: {diss_ok}; \
             P-divisible both: {p_ok}; rate operators with two negative eigenvalues: {two_negative}",
            first.unwrap_or(f64::NAN)
        ),
    )
}

fn criterion_7() -> Outcome {
    let model = EnmModel::undriven();
    let rep = model.representation();
    let mut design_dev: f64 = 0.0;
    for k in 0..=50 {
        let t = k as f64 * 0.1;
        let gamma: f64 = model.rates(t).iter().sum();
        let want = ComplexMatrix::identity(2).scale_re(-gamma / 2.0);
        design_dev = design_dev.max(haar_average_k(&rep, t, HaarMethod::Design).mean.max_abs_diff(&want));
    }
    let t = 1.0;
    let gamma: f64 = model.rates(t).iter().sum();
    let want = ComplexMatrix::identity(2).scale_re(-gamma / 2.0);
    let mc = haar_average_k(&rep, t, HaarMethod::MonteCarlo { samples: 100_000, seed: SEED });
    let mut mc_ok = true;
    let mut worst_z: f64 = 0.0;
    for k in 0..4 {
        let d = mc.mean.as_slice()[k] - want.as_slice()[k];
        for (dev, se) in [(d.re, mc.std_error_re[k]), (d.im, mc.std_error_im[k])] {
            mc_ok &= dev.abs() <= 3.0 * se + 1e-12;
            if se > 0.0 {
                worst_z = worst_z.max(dev.abs() / se);
            }
        }
    }

    let mut choi_ok = true;
    let mut worst_rec: f64 = 0.0;
    for g3 in [-0.2, -0.5, -1f64.tanh()] {
        let m = enm_model(
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(g3),
            Driving::None,
        );
        let base = m.representation();
        for (map, shift) in [(EnmMap::PositiveDissipator, m.r1_shift()), (EnmMap::R3, m.r3_shift())] {
            let choi = jump_map_choi(&base.shift_representation(&shift), 0.0).expect("qubit");
            match enm_choi_decomposition(map, [1.0, 1.0, g3], &choi) {
                Ok(d) => {
                    worst_rec = worst_rec.max(d.reconstruct().max_abs_diff(&choi));
                    choi_ok &= is_psd(&d.a, 1e-12).unwrap() && is_psd(&d.b, 1e-12).unwrap();
                }
                Err(_) => choi_ok = false,
            }
        }
    }
    let pass = design_dev < 1e-12 && mc_ok && choi_ok && worst_rec < 1e-12;
    outcome(
        pass,
        format!(
            "design deviation {design_dev:.1e}; Monte Carlo max |dev|/SE {worst_z:.2}; Choi certificates PSD: {choi_ok}, \
             reconstruction {worst_rec:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let (rep, psi0) = enm_undriven();
    let grid = uniform_grid(T_MAX, DT).expect("grid");
    let spec = UnravelingSpec::resolve(UnravelingChoice::R1, &rep).expect("resolve");
    let engine = Engine::new(spec, &rep, &grid).expect("engine").with_record_stride(STRIDE);
    let base = engine.run(&psi0, 2000, SEED, 1).expect("ensemble");
    let identical = [4, 16]
        .iter()
        .all(|&w| engine.run(&psi0, 2000, SEED, w).expect("ensemble").trajectories == base.trajectories);

    let mut timings = Vec::new();
    for choice in [UnravelingChoice::R1, UnravelingChoice::W] {
        let (_, secs) = run(choice, 1);
        timings.push((choice, secs));
    }
    let pass = identical && timings.iter().all(|(_, s)| *s <= 300.0);
    let t: Vec<String> = timings.iter().map(|(c, s)| format!("{c} {s:.1}s")).collect();
    outcome(
        pass,
        format!("identical across 1/4/16 workers: {identical}; single-threaded 10^4 x 2500 steps: {}", t.join(", ")),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // `cargo test` passes harness flags such as `--list`; only listing is answered.
    if args.iter().any(|a| a == "--list") {
        for k in 1..=8 {
            println!("criterion_{k}: test");
        }
        return;
    }

    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let choices = [
        UnravelingChoice::W,
        UnravelingChoice::R1,
        UnravelingChoice::R2,
        UnravelingChoice::R3,
    ];
    let ensembles: Vec<(UnravelingChoice, Ensemble, f64)> = choices
        .iter()
        .map(|&c| {
            let (e, secs) = run(c, WORKERS);
            (c, e, secs)
        })
        .collect();
    results.push((1, "unraveling correctness", criterion_1(&ensembles)));
    results.push((2, "ensemble characterization", criterion_2(&ensembles)));
    results.push((3, "W steady states", criterion_3(&ensembles)));
    drop(ensembles);
    results.push((4, "driven phase jumps", criterion_4()));
    results.push((5, "positivity certificates", criterion_5()));
    results.push((6, "divisibility boundary", criterion_6()));
    results.push((7, "Haar average and Choi certificates", criterion_7()));
    results.push((8, "determinism and performance", criterion_8()));

    let mut failed = 0;
    for (k, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {k} [{tag}] {name}: {}", o.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    // Failures are reported, not fatal, unless strict mode is requested.
    if failed > 0 && std::env::var_os("ROQJ_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

