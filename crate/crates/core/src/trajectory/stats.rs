use std::f64::consts::PI;

use serde::Serialize;

use super::{Ensemble, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, StateVector, C64};

impl Ensemble {
    /// Index of a recorded time, matching to `1e-9` relative.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or(Error::OffGridTime(t))
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn states_at(&self, idx: usize) -> Vec<&StateVector> {
        self.trajectories.iter().map(|tr| &tr.states[idx]).collect()
    }

    /// Number of distinct states (up to global phase) at recorded time `t`.
    pub fn effective_ensemble_size(&self, t: f64, cluster_tol: f64) -> Result<usize> {
        let idx = self.time_index(t)?;
        Ok(cluster_count(self.states_at(idx), cluster_tol))
    }

    /// Jumps at times `>= t_from`, all of them and those that changed the state.
    pub fn jumps_after(&self, t_from: f64) -> LateJumps {
        let mut out = LateJumps::default();
        for tr in &self.trajectories {
            for j in tr.jumps.iter().filter(|j| j.time >= t_from) {
                out.total += 1;
                if j.pre_state.fidelity(&j.post_state) < 1.0 - STATE_CHANGE_TOL {
                    out.state_changing += 1;
                }
            }
        }
        out
    }

    pub fn total_jumps(&self) -> usize {
        self.trajectories.iter().map(|t| t.jumps.len()).sum()
    }

    /// The qualitative characterization: asymptotic jumps, deterministic state
    /// changes, fixed post-jump states and final effective size.
    pub fn characterize(&self, cluster_tol: f64) -> UnravelingCharacter {
        let t0 = self.times[0];
        let t_end = *self.times.last().expect("non-empty grid");
        let late = self.jumps_after(t_end - 0.2 * (t_end - t0));
        let post: Vec<&StateVector> = self
            .trajectories
            .iter()
            .flat_map(|tr| tr.jumps.iter().map(|j| &j.post_state))
            .collect();
        let dim = self.trajectories[0].states[0].dim();
        let distinct_post = cluster_count_capped(post, cluster_tol, 10 * dim);
        let max_infidelity = self
            .trajectories
            .iter()
            .map(|t| t.max_deterministic_infidelity)
            .fold(0.0, f64::max);
        let n = self.len() as f64;
        UnravelingCharacter {
            unraveling: self.unraveling.clone(),
            asymptotic_jumps: late.state_changing as f64 / n > ASYMPTOTIC_JUMP_RATE,
            late_jumps: late,
            deterministic_changes: max_infidelity > DETERMINISTIC_CHANGE_TOL,
            max_deterministic_infidelity: max_infidelity,
            fixed_postjump_states: distinct_post <= dim,
            distinct_postjump_states: distinct_post,
            final_effective_size: cluster_count(self.states_at(self.times.len() - 1), cluster_tol),
        }
    }
}

/// `1 - F` below which a jump is treated as leaving the state unchanged.
const STATE_CHANGE_TOL: f64 = 1e-10;
/// `1 - F` above which a deterministic step is said to change the state.
pub const DETERMINISTIC_CHANGE_TOL: f64 = 1e-10;
/// State-changing jumps per trajectory in the final fifth of the window above
/// which jumps are said to persist asymptotically.
pub const ASYMPTOTIC_JUMP_RATE: f64 = 1e-3;
/// Default fidelity-distance threshold for counting distinct states.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LateJumps {
    pub total: usize,
    pub state_changing: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnravelingCharacter {
    pub unraveling: String,
    pub asymptotic_jumps: bool,
    pub late_jumps: LateJumps,
    pub deterministic_changes: bool,
    pub max_deterministic_infidelity: f64,
    pub fixed_postjump_states: bool,
    /// Capped at ten times the dimension.
    pub distinct_postjump_states: usize,
    pub final_effective_size: usize,
}

/// Greedy clustering under `1 - |<a|b>|^2 < tol`; returns the number of clusters.
pub fn cluster_count<'a>(states: impl IntoIterator<Item = &'a StateVector>, tol: f64) -> usize {
    cluster_count_capped(states, tol, usize::MAX)
}

fn cluster_count_capped<'a>(states: impl IntoIterator<Item = &'a StateVector>, tol: f64, cap: usize) -> usize {
    let mut reps: Vec<&StateVector> = Vec::new();
    for s in states {
        if !reps.iter().any(|r| 1.0 - r.fidelity(s) < tol) {
            reps.push(s);
            if reps.len() >= cap {
                break;
            }
        }
    }
    reps.len()
}

/// `(1/n) sum_i |psi_i(t)><psi_i(t)|` at a recorded time.
pub fn ensemble_mean_state(e: &Ensemble, t: f64) -> Result<ComplexMatrix> {
    let idx = e.time_index(t)?;
    Ok(ensemble_stats(e, idx).mean)
}

/// Mean density matrix, per-entry standard errors and, for qubits, the Bloch vector.
#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub t: f64,
    pub mean: ComplexMatrix,
    pub std_error_re: Vec<f64>,
    pub std_error_im: Vec<f64>,
    pub bloch: Option<[f64; 3]>,
    pub bloch_std_error: Option<[f64; 3]>,
}

/// Statistics at recorded index `idx` (two passes, so identical samples give zero error).
pub fn ensemble_stats(e: &Ensemble, idx: usize) -> EnsembleStats {
    let n = e.trajectories[0].states[idx].dim();
    let m = e.len() as f64;
    let mut sum = vec![C64::new(0.0, 0.0); n * n];
    let mut bloch_sum = [0.0; 3];
    for tr in &e.trajectories {
        let psi = tr.states[idx].as_slice();
        for i in 0..n {
            for j in 0..n {
                sum[i * n + j] += psi[i] * psi[j].conj();
            }
        }
        if n == 2 {
            let b = bloch_of_amplitudes(psi);
            for k in 0..3 {
                bloch_sum[k] += b[k];
            }
        }
    }
    let mean: Vec<C64> = sum.iter().map(|z| z / m).collect();
    let bloch_mean = bloch_sum.map(|s| s / m);
    let mut dev_re = vec![0.0; n * n];
    let mut dev_im = vec![0.0; n * n];
    let mut bloch_dev = [0.0; 3];
    for tr in &e.trajectories {
        let psi = tr.states[idx].as_slice();
        for i in 0..n {
            for j in 0..n {
                let d = psi[i] * psi[j].conj() - mean[i * n + j];
                dev_re[i * n + j] += d.re * d.re;
                dev_im[i * n + j] += d.im * d.im;
            }
        }
        if n == 2 {
            let b = bloch_of_amplitudes(psi);
            for k in 0..3 {
                bloch_dev[k] += (b[k] - bloch_mean[k]).powi(2);
            }
        }
    }
    let se = |ss: f64| if m < 2.0 { 0.0 } else { (ss / (m - 1.0) / m).sqrt() };
    let (bloch, bloch_std_error) = if n == 2 {
        (Some(bloch_mean), Some(bloch_dev.map(se)))
    } else {
        (None, None)
    };
    EnsembleStats {
        t: e.times[idx],
        mean: ComplexMatrix::from_vec(n, mean).expect("square"),
        std_error_re: dev_re.into_iter().map(se).collect(),
        std_error_im: dev_im.into_iter().map(se).collect(),
        bloch,
        bloch_std_error,
    }
}

fn bloch_of_amplitudes(psi: &[C64]) -> [f64; 3] {
    let rho01 = psi[0] * psi[1].conj();
    [
        2.0 * rho01.re,
        -2.0 * rho01.im,
        psi[0].norm_sqr() - psi[1].norm_sqr(),
    ]
}

/// `(Tr rho sigma_x, Tr rho sigma_y, Tr rho sigma_z)` with index 0 at Bloch `+z`
/// and `sigma_y = i(|0><1| - |1><0|)`.
pub fn bloch_vector(rho: &ComplexMatrix) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::DimensionNotTwo(rho.dim()));
    }
    let rho01 = rho[(0, 1)];
    Ok([
        2.0 * rho01.re,
        -2.0 * rho01.im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ])
}

pub fn bloch_vector_state(psi: &StateVector) -> Result<[f64; 3]> {
    if psi.dim() != 2 {
        return Err(Error::DimensionNotTwo(psi.dim()));
    }
    Ok(bloch_of_amplitudes(psi.as_slice()))
}

/// `atan2(y, x)` of the Bloch vector, in `(-pi, pi]`.
pub fn phase_angle(psi: &StateVector) -> Result<f64> {
    let [x, y, _] = bloch_vector_state(psi)?;
    if x * x + y * y <= 1e-12 {
        return Err(Error::UndefinedPhase);
    }
    Ok(wrap_angle(y.atan2(x)))
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Phase increments `phi(t+) - phi(t-)` of jumps between equatorial states.
#[derive(Clone, Debug, Default, Serialize)]
pub struct JumpPhaseStatistics {
    pub increments: Vec<f64>,
    /// Jumps after `t_min` skipped because a pre- or post-jump state was off the equator.
    pub skipped: usize,
}

impl JumpPhaseStatistics {
    /// Counts over `bins` equal bins on `(-pi, pi]`, as `(bin center, count)`.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, usize)> {
        let width = 2.0 * PI / bins as f64;
        let mut counts = vec![0; bins];
        for &d in &self.increments {
            let k = (((d + PI) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| (-PI + (k as f64 + 0.5) * width, c))
            .collect()
    }

    /// Fraction of increments within `tol` of some element of `targets` (mod `2 pi`).
    pub fn fraction_near(&self, targets: &[f64], tol: f64) -> f64 {
        if self.increments.is_empty() {
            return 0.0;
        }
        let hits = self
            .increments
            .iter()
            .filter(|&&d| targets.iter().any(|&a| wrap_angle(d - a).abs() <= tol))
            .count();
        hits as f64 / self.increments.len() as f64
    }
}

/// Increments of jumps at `t > t_min` whose pre- and post-jump states have `|z| < equator_tol`.
pub fn jump_phase_statistics<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    t_min: f64,
    equator_tol: f64,
) -> Result<JumpPhaseStatistics> {
    let mut out = JumpPhaseStatistics::default();
    for tr in trajectories {
        for j in tr.jumps.iter().filter(|j| j.time > t_min) {
            let pre = bloch_vector_state(&j.pre_state)?;
            let post = bloch_vector_state(&j.post_state)?;
            if pre[2].abs() >= equator_tol || post[2].abs() >= equator_tol {
                out.skipped += 1;
                continue;
            }
            out.increments
                .push(wrap_angle(phase_angle(&j.post_state)? - phase_angle(&j.pre_state)?));
        }
    }
    Ok(out)
}
