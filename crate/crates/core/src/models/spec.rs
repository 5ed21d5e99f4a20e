//! Declarative model files (TOML).
//!
//! ```toml
//! name = "enm_undriven"
//! dim = 2
//! initial_state = [[0.316227766, 0.0], [0.948683298, 0.0]]
//!
//! [[channels]]
//! lindblad = "pauli_z"
//! rate = { preset = "neg_tanh" }
//!
//! [driving]
//! kind = "gaussian_integral"
//! mu = 1.0
//! sigma = 0.25
//! ```
//!
//! Pauli channels take their rate as `gamma_k` (the channel coefficient is
//! `gamma_k / 2`); explicit matrix channels take the coefficient directly.

use std::path::Path;

use log::warn;
use serde::Deserialize;

use super::{Driving, EnmModel};
use crate::error::{Error, Result};
use crate::generator::{Channel, GeneratorRepresentation};
use crate::linalg::{ComplexMatrix, StateVector, C64, MAX_DIM};
use crate::timefn::{TimeFunction, TimeOperator};

const PRESETS: &[(&str, &str)] = &[
    ("enm_undriven", include_str!("../../presets/enm_undriven.toml")),
    ("enm_driven", include_str!("../../presets/enm_driven.toml")),
    ("enm_dissipative", include_str!("../../presets/enm_dissipative.toml")),
];

type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    #[serde(default)]
    pub hamiltonian: Option<MatrixRows>,
    #[serde(default)]
    pub driving: DrivingSpec,
    pub initial_state: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub lindblad: LindbladSpec,
    pub rate: RateSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LindbladSpec {
    PauliX,
    PauliY,
    PauliZ,
    Matrix(MatrixRows),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    Constant { value: f64 },
    /// `scale * tanh t`
    Tanh {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `-scale * tanh t`
    NegTanh {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `-tanh(t) / 2`
    NegHalfTanh,
    /// Piecewise-linear `[[t, value], ...]`.
    Table { points: Vec<[f64; 2]> },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DrivingSpec {
    #[default]
    None,
    Constant { b: f64 },
    GaussianIntegral { mu: f64, sigma: f64 },
}

impl RateSpec {
    pub fn function(&self) -> TimeFunction {
        match self {
            RateSpec::Constant { value } => TimeFunction::Constant(*value),
            RateSpec::Tanh { scale } => TimeFunction::Tanh { scale: *scale },
            RateSpec::NegTanh { scale } => TimeFunction::Tanh { scale: -scale },
            RateSpec::NegHalfTanh => TimeFunction::Tanh { scale: -0.5 },
            RateSpec::Table { points } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                TimeFunction::table(&pts)
            }
        }
    }
}

impl DrivingSpec {
    pub fn driving(&self) -> Driving {
        match self {
            DrivingSpec::None => Driving::None,
            DrivingSpec::Constant { b } => Driving::Constant(*b),
            DrivingSpec::GaussianIntegral { mu, sigma } => Driving::GaussianIntegral {
                mu: *mu,
                sigma: *sigma,
            },
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn matrix(rows: &MatrixRows, dim: usize, path: &str) -> Result<ComplexMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(schema(path, format!("expected a {dim}x{dim} matrix of [re, im] pairs")));
    }
    let data = rows
        .iter()
        .flat_map(|r| r.iter().map(|p| C64::new(p[0], p[1])))
        .collect();
    ComplexMatrix::from_vec(dim, data).map_err(|e| schema(path, e.to_string()))
}

/// Parses and validates a model document. Unknown keys are rejected.
pub fn load_model_spec(document: &str) -> Result<ModelSpec> {
    let mut spec: ModelSpec = toml::from_str(document).map_err(|e| {
        let path = e
            .span()
            .map(|s| format!("byte {}..{}", s.start, s.end))
            .unwrap_or_else(|| "document".into());
        schema(path, e.message().to_string())
    })?;
    spec.validate()?;
    Ok(spec)
}

impl ModelSpec {
    /// A shipped preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        let doc = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, d)| *d)
            .ok_or_else(|| schema("model", format!("unknown preset `{name}`")))?;
        load_model_spec(doc)
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        load_model_spec(&std::fs::read_to_string(path)?)
    }

    /// A preset name or a path to a model file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if PRESETS.iter().any(|(n, _)| *n == name_or_path) {
            Self::preset(name_or_path)
        } else {
            let path = Path::new(name_or_path);
            if !path.exists() {
                return Err(schema(
                    "model",
                    format!("`{name_or_path}` is neither a preset nor an existing file"),
                ));
            }
            Self::from_path(path)
        }
    }

    fn validate(&mut self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(schema("dim", format!("must be in 1..={MAX_DIM}")));
        }
        let n = self.dim;
        if n > 1 && self.channels.len() > n * n - 1 {
            return Err(schema("channels", format!("at most {} channels allowed", n * n - 1)));
        }
        for (k, ch) in self.channels.iter().enumerate() {
            let path = format!("channels[{k}].lindblad");
            match &ch.lindblad {
                LindbladSpec::Matrix(rows) => {
                    matrix(rows, n, &path)?;
                }
                _ if n != 2 => return Err(schema(path, "Pauli operators need dim = 2")),
                _ => {}
            }
            if let RateSpec::Table { points } = &ch.rate {
                if points.is_empty() || points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(schema(
                        format!("channels[{k}].rate.points"),
                        "needs increasing, non-empty knot times",
                    ));
                }
            }
        }
        if let Some(h) = &self.hamiltonian {
            let m = matrix(h, n, "hamiltonian")?;
            if !m.is_hermitian(crate::linalg::HERMITICITY_TOL) {
                return Err(schema("hamiltonian", "must be Hermitian"));
            }
        }
        match self.driving {
            DrivingSpec::None => {}
            _ if n != 2 => return Err(schema("driving", "driving along sigma_z needs dim = 2")),
            DrivingSpec::GaussianIntegral { sigma, .. } if !(sigma > 0.0) => {
                return Err(schema("driving.sigma", "must be positive"))
            }
            _ => {}
        }
        if self.initial_state.len() != n {
            return Err(schema("initial_state", format!("expected {n} amplitudes")));
        }
        let norm: f64 = self
            .initial_state
            .iter()
            .map(|p| p[0] * p[0] + p[1] * p[1])
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Normalization(format!("amplitudes have norm {norm}")));
        }
        if (norm - 1.0).abs() > 1e-9 {
            warn!("initial state of `{}` has norm {norm}; normalizing", self.name);
            for p in &mut self.initial_state {
                p[0] /= norm;
                p[1] /= norm;
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::from_amplitudes_unnormalized(
            self.initial_state.iter().map(|p| C64::new(p[0], p[1])).collect(),
        )
    }

    pub fn representation(&self) -> Result<GeneratorRepresentation> {
        let n = self.dim;
        let mut channels = Vec::with_capacity(self.channels.len());
        for (k, ch) in self.channels.iter().enumerate() {
            let f = ch.rate.function();
            let (op, rate) = match &ch.lindblad {
                LindbladSpec::PauliX => (ComplexMatrix::pauli_x(), f.times(0.5)),
                LindbladSpec::PauliY => (ComplexMatrix::pauli_y(), f.times(0.5)),
                LindbladSpec::PauliZ => (ComplexMatrix::pauli_z(), f.times(0.5)),
                LindbladSpec::Matrix(rows) => (matrix(rows, n, &format!("channels[{k}].lindblad"))?, f),
            };
            channels.push(Channel::constant_operator(op, rate));
        }
        let mut h = match &self.hamiltonian {
            Some(rows) => TimeOperator::constant(matrix(rows, n, "hamiltonian")?),
            None => TimeOperator::zero(n),
        };
        let driving = self.driving.driving();
        if !driving.is_none() {
            h = h.with_term(driving.amplitude().times(-0.5), ComplexMatrix::pauli_z());
        }
        GeneratorRepresentation::new(n, h, channels)
    }

    /// ENM structure when the model is a Pauli-channel qubit driven along `sigma_z`.
    pub fn enm(&self) -> Option<EnmModel> {
        if self.dim != 2 || self.hamiltonian.is_some() {
            return None;
        }
        let mut gammas = [None, None, None];
        for ch in &self.channels {
            let k = match ch.lindblad {
                LindbladSpec::PauliX => 0,
                LindbladSpec::PauliY => 1,
                LindbladSpec::PauliZ => 2,
                LindbladSpec::Matrix(_) => return None,
            };
            if gammas[k].is_some() {
                return None;
            }
            gammas[k] = Some(ch.rate.function());
        }
        let [g1, g2, g3] = gammas.map(|g| g.unwrap_or_else(TimeFunction::zero));
        Some(super::enm_model(g1, g2, g3, self.driving.driving()))
    }
}
