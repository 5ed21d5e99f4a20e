use std::io::Write;

use serde::{Serialize, Serializer};

use super::stats::ensemble_stats;
use super::{Ensemble, JumpRecord, Trajectory};
use crate::error::Result;
use crate::linalg::StateVector;

pub(super) fn serialize_state<S: Serializer>(psi: &StateVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = psi.as_slice().iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

/// One line of the trajectory JSONL export.
#[derive(Serialize)]
pub struct TrajectoryRecord<'a> {
    pub index: usize,
    pub seed: u64,
    pub times: &'a [f64],
    pub states: Vec<Vec<[f64; 2]>>,
    pub jumps: &'a [JumpRecord],
    pub max_deterministic_infidelity: f64,
}

impl<'a> TrajectoryRecord<'a> {
    pub fn new(index: usize, seed: u64, tr: &'a Trajectory) -> Self {
        Self {
            index,
            seed,
            times: &tr.times,
            states: tr
                .states
                .iter()
                .map(|s| s.as_slice().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            jumps: &tr.jumps,
            max_deterministic_infidelity: tr.max_deterministic_infidelity,
        }
    }
}

/// Writes the first `limit` trajectories as JSON lines.
pub fn write_trajectories_jsonl(e: &Ensemble, limit: usize, mut w: impl Write) -> Result<()> {
    for (i, tr) in e.trajectories.iter().take(limit).enumerate() {
        let rec = TrajectoryRecord::new(i, super::trajectory_seed(e.master_seed, i), tr);
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Ensemble means per recorded time: `t`, every `rho_ij` (re, im) with standard
/// errors, then the Bloch vector with standard errors for qubits.
///
/// Floats use the shortest representation that parses back to the same value.
pub fn write_ensemble_csv(e: &Ensemble, mut w: impl Write) -> Result<()> {
    let n = e.trajectories[0].states[0].dim();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("rho{i}{j}_re"));
            header.push(format!("rho{i}{j}_im"));
            header.push(format!("rho{i}{j}_re_se"));
            header.push(format!("rho{i}{j}_im_se"));
        }
    }
    if n == 2 {
        for c in ["x", "y", "z"] {
            header.push(c.to_string());
            header.push(format!("{c}_se"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for idx in 0..e.times.len() {
        let s = ensemble_stats(e, idx);
        let mut row = vec![s.t.to_string()];
        for k in 0..n * n {
            let z = s.mean.as_slice()[k];
            row.push(z.re.to_string());
            row.push(z.im.to_string());
            row.push(s.std_error_re[k].to_string());
            row.push(s.std_error_im[k].to_string());
        }
        if let (Some(b), Some(se)) = (s.bloch, s.bloch_std_error) {
            for k in 0..3 {
                row.push(b[k].to_string());
                row.push(se[k].to_string());
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
