//! The piecewise-deterministic Monte Carlo engine.
//!
//! Each step of length `dt` draws one uniform `u`. With probability
//! `p = (total jump rate) dt` the state jumps into one of the channels of the
//! active rate operator, chosen by partitioning `u / p` by the channel rates.
//! Otherwise it follows `psi -> (1 - i K dt) psi`, renormalized. The rate
//! operator is diagonalized only when a jump happens.

mod export;
mod stats;
mod unraveling;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use export::{write_ensemble_csv, write_trajectories_jsonl, TrajectoryRecord};
pub use stats::{
    bloch_vector, bloch_vector_state, cluster_count, ensemble_mean_state, ensemble_stats,
    jump_phase_statistics, phase_angle, wrap_angle, EnsembleStats, JumpPhaseStatistics, LateJumps,
    UnravelingCharacter, ASYMPTOTIC_JUMP_RATE, DEFAULT_CLUSTER_TOL, DETERMINISTIC_CHANGE_TOL,
};
pub use unraveling::{UnravelingChoice, UnravelingKind, UnravelingSpec, YChoice};

use crate::error::{Error, Result};
use crate::generator::{GeneratorRepresentation, GeneratorSnapshot};
use crate::linalg::{check_same_dim, ComplexMatrix, StateVector, C64, I, PSD_TOL};
use crate::rate_ops::{
    jump_channels, jump_channels_in_basis, k_psi, r_matrix, w_matrix, JumpChannel, RateKind,
    RateOperator,
};
use crate::rng::stream_seed;

/// Above this per-step jump probability the first-order scheme is refused.
pub const MAX_STEP_PROBABILITY: f64 = 0.5;
/// Above this per-step jump probability a warning is logged once per engine.
pub const WARN_STEP_PROBABILITY: f64 = 0.1;

/// `psi' = (1 - i K dt) psi / |...|` and the norm lost before renormalizing.
pub fn deterministic_step(k: &ComplexMatrix, psi: &StateVector, dt: f64) -> Result<(StateVector, f64)> {
    check_same_dim(k.dim(), psi.dim())?;
    let kpsi = k.apply(psi);
    let amps: Vec<C64> = psi
        .as_slice()
        .iter()
        .zip(kpsi.as_slice())
        .map(|(a, b)| a - I * b * dt)
        .collect();
    let mut out = StateVector::from_amplitudes_unnormalized(amps);
    let norm_loss = 1.0 - out.norm_sqr();
    out.normalize()?;
    Ok((out, norm_loss))
}

#[derive(Clone, Debug)]
pub enum StepOutcome {
    Deterministic { state: StateVector, norm_loss: f64 },
    Jump { channel: usize, rate: f64, state: StateVector },
}

impl StepOutcome {
    pub fn state(&self) -> &StateVector {
        match self {
            Self::Deterministic { state, .. } | Self::Jump { state, .. } => state,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    pub channel: usize,
    pub rate: f64,
    #[serde(serialize_with = "export::serialize_state")]
    pub pre_state: StateVector,
    #[serde(serialize_with = "export::serialize_state")]
    pub post_state: StateVector,
}

/// One trajectory, recorded every `record_stride` steps and at the final time.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub jumps: Vec<JumpRecord>,
    /// Largest `1 - |<psi|psi'>|^2` over the deterministic steps taken.
    pub max_deterministic_infidelity: f64,
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    pub master_seed: u64,
    pub unraveling: String,
    pub model: String,
    pub dt: f64,
    pub times: Vec<f64>,
}

/// Per-step data shared by all trajectories.
struct StepData {
    /// Active representation (R, MCWF) or unshifted one (W).
    snap: GeneratorSnapshot,
    /// Linear no-jump generator; unused for W.
    k: ComplexMatrix,
    negative_channel: Option<(usize, f64)>,
}

/// Prepared simulation on a fixed uniform grid.
pub struct Engine {
    spec: UnravelingSpec,
    dim: usize,
    grid: Vec<f64>,
    dt: f64,
    steps: Arc<Vec<StepData>>,
    record_stride: usize,
    warned: AtomicBool,
}

/// Checks that `grid` is increasing with constant spacing and returns the spacing.
pub fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("needs at least two points".into()));
    }
    let dt = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(dt > 0.0) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("times must be finite and increasing".into()));
    }
    for (k, w) in grid.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidGrid(format!("non-uniform spacing at index {k}")));
        }
    }
    Ok(dt)
}

fn step_data(spec: &UnravelingSpec, active: &GeneratorRepresentation, t: f64) -> StepData {
    let snap = active.snapshot(t);
    let k = match spec.kind {
        UnravelingKind::W => ComplexMatrix::zeros(snap.dim),
        _ => snap.effective_hamiltonian(),
    };
    let negative_channel = match spec.kind {
        UnravelingKind::Mcwf => snap
            .channels
            .iter()
            .enumerate()
            .find(|(_, c)| c.rate < 0.0)
            .map(|(i, c)| (i, c.rate)),
        _ => None,
    };
    StepData {
        snap,
        k,
        negative_channel,
    }
}

fn pick(channels: &[JumpChannel], v: f64) -> Option<(usize, &JumpChannel)> {
    let total: f64 = channels.iter().map(|c| c.rate).sum();
    if channels.is_empty() || !(total > 0.0) {
        return None;
    }
    let target = v * total;
    let mut acc = 0.0;
    for (i, c) in channels.iter().enumerate() {
        acc += c.rate;
        if target < acc {
            return Some((i, c));
        }
    }
    channels.iter().enumerate().next_back()
}

impl Engine {
    /// `rep` is the unshifted generator; the spec's shift is applied here.
    pub fn new(spec: UnravelingSpec, rep: &GeneratorRepresentation, grid: &[f64]) -> Result<Self> {
        let dt = uniform_spacing(grid)?;
        let active = spec.active_representation(rep);
        let steps: Vec<StepData> = grid[..grid.len() - 1]
            .par_iter()
            .map(|&t| step_data(&spec, &active, t))
            .collect();
        Ok(Self {
            dim: rep.dim(),
            spec,
            grid: grid.to_vec(),
            dt,
            steps: Arc::new(steps),
            record_stride: 1,
            warned: AtomicBool::new(false),
        })
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn spec(&self) -> &UnravelingSpec {
        &self.spec
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Times at which states are recorded.
    pub fn record_times(&self) -> Vec<f64> {
        let last = self.grid.len() - 1;
        (0..=last)
            .filter(|k| k % self.record_stride == 0 || *k == last)
            .map(|k| self.grid[k])
            .collect()
    }

    fn check_probability(&self, p: f64) -> Result<()> {
        if p > MAX_STEP_PROBABILITY {
            return Err(Error::TimestepTooLarge { probability: p });
        }
        if p > WARN_STEP_PROBABILITY && !self.warned.swap(true, Ordering::Relaxed) {
            warn!("jump probability {p:.3} per step exceeds {WARN_STEP_PROBABILITY}; consider a smaller dt");
        }
        Ok(())
    }

    fn step_at(&self, k: usize, psi: &StateVector, rng: &mut impl Rng) -> Result<StepOutcome> {
        let data = &self.steps[k];
        let t = self.grid[k];
        let dt = self.dt;
        let u: f64 = rng.random();
        let snap = &data.snap;
        match self.spec.kind {
            UnravelingKind::Mcwf => {
                if let Some((channel, value)) = data.negative_channel {
                    return Err(Error::NegativeCoefficient { channel, t, value });
                }
                let images: Vec<(f64, StateVector)> = snap
                    .channels
                    .iter()
                    .map(|ch| {
                        let v = ch.op.apply(psi);
                        (ch.rate * v.norm_sqr(), v)
                    })
                    .collect();
                let p = images.iter().map(|(r, _)| r).sum::<f64>() * dt;
                self.check_probability(p)?;
                if u < p {
                    // channel order: descending rate, then channel index
                    let mut order: Vec<usize> = (0..images.len()).filter(|&i| images[i].0 > 0.0).collect();
                    order.sort_by(|&a, &b| images[b].0.total_cmp(&images[a].0).then(a.cmp(&b)));
                    let channels: Vec<JumpChannel> = order
                        .iter()
                        .map(|&i| JumpChannel {
                            rate: images[i].0,
                            post_state: images[i].1.clone(),
                        })
                        .collect();
                    if let Some((j, ch)) = pick(&channels, u / p) {
                        let mut state = ch.post_state.clone();
                        state.normalize()?;
                        return Ok(StepOutcome::Jump {
                            channel: order[j],
                            rate: ch.rate,
                            state,
                        });
                    }
                }
                let (state, norm_loss) = deterministic_step(&data.k, psi, dt)?;
                Ok(StepOutcome::Deterministic { state, norm_loss })
            }
            UnravelingKind::R => {
                let rate = data.snap.gamma.expectation(psi).re;
                if rate < -PSD_TOL {
                    let r = RateOperator::new(RateKind::R, r_matrix(snap, psi), psi.clone(), t);
                    jump_channels(&r, PSD_TOL)?;
                }
                let p = rate.max(0.0) * dt;
                self.check_probability(p)?;
                if u < p {
                    let r = RateOperator::new(RateKind::R, r_matrix(snap, psi), psi.clone(), t);
                    let channels = match &self.spec.fixed_basis {
                        Some(basis) => match jump_channels_in_basis(&r, basis, PSD_TOL)? {
                            Some(c) => c,
                            None => jump_channels(&r, PSD_TOL)?,
                        },
                        None => jump_channels(&r, PSD_TOL)?,
                    };
                    if let Some((channel, ch)) = pick(&channels, u / p) {
                        return Ok(StepOutcome::Jump {
                            channel,
                            rate: ch.rate,
                            state: ch.post_state.clone(),
                        });
                    }
                }
                let (state, norm_loss) = deterministic_step(&data.k, psi, dt)?;
                Ok(StepOutcome::Deterministic { state, norm_loss })
            }
            UnravelingKind::W => {
                let mut rate = 0.0;
                for ch in &snap.channels {
                    let v = ch.op.apply(psi);
                    rate += ch.rate * (v.norm_sqr() - psi.inner(&v).norm_sqr());
                }
                if rate < -PSD_TOL {
                    let r = RateOperator::new(RateKind::W, w_matrix(snap, psi), psi.clone(), t);
                    jump_channels(&r, PSD_TOL)?;
                }
                let p = rate.max(0.0) * dt;
                self.check_probability(p)?;
                if u < p {
                    let r = RateOperator::new(RateKind::W, w_matrix(snap, psi), psi.clone(), t);
                    let channels = jump_channels(&r, PSD_TOL)?;
                    if let Some((channel, ch)) = pick(&channels, u / p) {
                        return Ok(StepOutcome::Jump {
                            channel,
                            rate: ch.rate,
                            state: ch.post_state.clone(),
                        });
                    }
                }
                let (state, norm_loss) = deterministic_step(&k_psi(snap, psi), psi, dt)?;
                Ok(StepOutcome::Deterministic { state, norm_loss })
            }
        }
    }

    /// Evolves one trajectory from `psi0` with its own RNG seeded by `seed`.
    pub fn evolve(&self, psi0: &StateVector, seed: u64) -> Result<Trajectory> {
        use rand::SeedableRng;
        check_same_dim(self.dim, psi0.dim())?;
        let mut psi = psi0.clone();
        psi.normalize()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = self.grid.len() - 1;
        let n_records = last / self.record_stride + 2;
        let mut times = Vec::with_capacity(n_records);
        let mut states = Vec::with_capacity(n_records);
        times.push(self.grid[0]);
        states.push(psi.clone());
        let mut jumps = Vec::new();
        let mut max_infidelity: f64 = 0.0;
        for k in 0..last {
            match self.step_at(k, &psi, &mut rng)? {
                StepOutcome::Deterministic { state, .. } => {
                    max_infidelity = max_infidelity.max(1.0 - psi.fidelity(&state));
                    psi = state;
                }
                StepOutcome::Jump { channel, rate, state } => {
                    jumps.push(JumpRecord {
                        time: self.grid[k],
                        channel,
                        rate,
                        pre_state: psi.clone(),
                        post_state: state.clone(),
                    });
                    psi = state;
                }
            }
            let idx = k + 1;
            if idx % self.record_stride == 0 || idx == last {
                times.push(self.grid[idx]);
                states.push(psi.clone());
            }
        }
        Ok(Trajectory {
            times,
            states,
            jumps,
            max_deterministic_infidelity: max_infidelity,
        })
    }

    /// `n_traj` trajectories on a pool of `workers` threads; trajectory `i` uses
    /// the seed stream `(master_seed, i)` so the result does not depend on `workers`.
    pub fn run(&self, psi0: &StateVector, n_traj: usize, master_seed: u64, workers: usize) -> Result<Ensemble> {
        if n_traj == 0 {
            return Err(Error::Schema {
                path: "n_traj".into(),
                message: "at least one trajectory is required".into(),
            });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let results: Vec<Result<Trajectory>> = pool.install(|| {
            (0..n_traj)
                .into_par_iter()
                .map(|i| self.evolve(psi0, stream_seed(master_seed, i as u64)))
                .collect()
        });
        let mut trajectories = Vec::with_capacity(n_traj);
        for (index, r) in results.into_iter().enumerate() {
            match r {
                Ok(t) => trajectories.push(t),
                Err(e) => {
                    return Err(Error::Trajectory {
                        index,
                        source: Box::new(e),
                    })
                }
            }
        }
        Ok(Ensemble {
            trajectories,
            master_seed,
            unraveling: self.spec.label.clone(),
            model: String::new(),
            dt: self.dt,
            times: self.record_times(),
        })
    }
}

/// One step at `(t, psi)` outside a prepared engine.
pub fn sample_step(
    spec: &UnravelingSpec,
    rep: &GeneratorRepresentation,
    t: f64,
    psi: &StateVector,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<StepOutcome> {
    let engine = Engine::new(spec.clone(), rep, &[t, t + dt])?;
    engine.step_at(0, psi, rng)
}

pub fn evolve_trajectory(
    spec: &UnravelingSpec,
    rep: &GeneratorRepresentation,
    psi0: &StateVector,
    grid: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    Engine::new(spec.clone(), rep, grid)?.evolve(psi0, seed)
}

/// Seed used for trajectory `index` of an ensemble.
pub fn trajectory_seed(master_seed: u64, index: usize) -> u64 {
    stream_seed(master_seed, index as u64)
}

pub fn run_ensemble(
    spec: &UnravelingSpec,
    rep: &GeneratorRepresentation,
    psi0: &StateVector,
    grid: &[f64],
    n_traj: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Ensemble> {
    Engine::new(spec.clone(), rep, grid)?.run(psi0, n_traj, master_seed, workers)
}
