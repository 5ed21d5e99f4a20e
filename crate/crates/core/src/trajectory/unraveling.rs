use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::generator::{GeneratorRepresentation, ShiftOperator};
use crate::linalg::{StateVector, C64};
use crate::models::EnmModel;
use crate::rate_ops::positive_dissipator_shift;
use crate::timefn::TimeFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnravelingKind {
    /// Jumps `L_a` at rates `c_a |L_a psi|^2`; needs `c_a >= 0`.
    Mcwf,
    /// Jumps from the spectrum of `W_psi`, state-dependent no-jump generator.
    W,
    /// Jumps from the spectrum of `R_psi` in a shifted representation, linear no-jump generator.
    R,
}

/// `y` of the fixed-post-jump family, either a constant or a fraction of the positivity bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum YChoice {
    Value(f64),
    BoundFraction(f64),
}

/// The named unravelings accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnravelingChoice {
    Mcwf,
    W,
    R1,
    R2,
    R3,
    R1Prime,
    FixedPostjump(YChoice),
}

impl FromStr for UnravelingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownUnraveling(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "mcwf" => Self::Mcwf,
            "w" => Self::W,
            "r1" => Self::R1,
            "r2" => Self::R2,
            "r3" => Self::R3,
            "r1prime" | "r1'" => Self::R1Prime,
            other => {
                let expr = other
                    .strip_prefix("fixed-postjump:y=")
                    .ok_or_else(unknown)?
                    .trim();
                let y = if expr == "bound" {
                    YChoice::BoundFraction(1.0)
                } else if let Some(f) = expr.strip_suffix("*bound") {
                    YChoice::BoundFraction(f.trim().parse().map_err(|_| unknown())?)
                } else {
                    YChoice::Value(expr.parse().map_err(|_| unknown())?)
                };
                Self::FixedPostjump(y)
            }
        })
    }
}

impl fmt::Display for UnravelingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mcwf => write!(f, "mcwf"),
            Self::W => write!(f, "w"),
            Self::R1 => write!(f, "r1"),
            Self::R2 => write!(f, "r2"),
            Self::R3 => write!(f, "r3"),
            Self::R1Prime => write!(f, "r1prime"),
            Self::FixedPostjump(YChoice::Value(y)) => write!(f, "fixed-postjump:y={y}"),
            Self::FixedPostjump(YChoice::BoundFraction(x)) if *x == 1.0 => {
                write!(f, "fixed-postjump:y=bound")
            }
            Self::FixedPostjump(YChoice::BoundFraction(x)) => write!(f, "fixed-postjump:y={x}*bound"),
        }
    }
}

/// A fully resolved unraveling: which rate operator, and for `R` the shift `C(t)`.
#[derive(Clone, Debug)]
pub struct UnravelingSpec {
    pub kind: UnravelingKind,
    pub shift: Option<ShiftOperator>,
    /// Orthonormal post-jump basis to use whenever `R_psi` is diagonal in it.
    pub fixed_basis: Option<Vec<StateVector>>,
    pub label: String,
}

impl UnravelingSpec {
    pub fn mcwf() -> Self {
        Self {
            kind: UnravelingKind::Mcwf,
            shift: None,
            fixed_basis: None,
            label: "mcwf".into(),
        }
    }

    pub fn w() -> Self {
        Self {
            kind: UnravelingKind::W,
            shift: None,
            fixed_basis: None,
            label: "w".into(),
        }
    }

    /// R-type unraveling with a custom shift.
    pub fn r(shift: ShiftOperator, label: impl Into<String>) -> Self {
        Self {
            kind: UnravelingKind::R,
            shift: Some(shift),
            fixed_basis: None,
            label: label.into(),
        }
    }

    pub fn with_fixed_basis(mut self, basis: Vec<StateVector>) -> Self {
        self.fixed_basis = Some(basis);
        self
    }

    /// Resolves a named unraveling against an unshifted representation.
    ///
    /// `r1` and `r1prime` work for any generator (through the Haar-averaged
    /// construction); `r2`, `r3` and `fixed-postjump` need a Pauli-diagonal qubit.
    pub fn resolve(choice: UnravelingChoice, rep: &GeneratorRepresentation) -> Result<Self> {
        if rep.is_shifted() && !matches!(choice, UnravelingChoice::Mcwf | UnravelingChoice::W) {
            return Err(Error::ExplicitFormRequired);
        }
        let enm = EnmModel::from_representation(rep);
        let label = choice.to_string();
        let spec = match choice {
            UnravelingChoice::Mcwf => Self::mcwf(),
            UnravelingChoice::W => Self::w(),
            UnravelingChoice::R1 => match &enm {
                Ok(m) => Self::r(m.r1_shift(), label),
                Err(_) => Self::r(positive_dissipator_shift(rep), label),
            },
            UnravelingChoice::R1Prime => match &enm {
                Ok(m) => Self::r(m.r1prime_shift(), label),
                Err(_) => {
                    let positive = positive_dissipator_shift(rep);
                    let rep = rep.clone();
                    let shift = ShiftOperator::new(rep.dim(), move |t| {
                        let mut c = positive.eval(t);
                        c.add_scaled(C64::new(0.0, -2.0), &rep.hamiltonian(t));
                        c
                    });
                    Self::r(shift, label)
                }
            },
            UnravelingChoice::R2 => {
                let m = enm?;
                Self::r(m.r2_shift(), label).with_fixed_basis(m.fixed_basis().to_vec())
            }
            UnravelingChoice::R3 => Self::r(enm?.r3_shift(), label),
            UnravelingChoice::FixedPostjump(y) => {
                let m = enm?;
                let y = match y {
                    YChoice::Value(v) => TimeFunction::Constant(v),
                    YChoice::BoundFraction(f) => m.y_bound().times(f),
                };
                Self::r(m.fixed_postjump_shift(y)?, label).with_fixed_basis(m.fixed_basis().to_vec())
            }
        };
        Ok(spec)
    }

    /// The representation whose `K` and jump map drive the trajectories.
    pub fn active_representation(&self, rep: &GeneratorRepresentation) -> GeneratorRepresentation {
        match (&self.kind, &self.shift) {
            (UnravelingKind::R, Some(c)) => rep.shift_representation(c),
            (UnravelingKind::R, None) => rep.clone(),
            _ => rep.unshifted(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    #[test]
    fn parse_round_trip() {
        for s in [
            "mcwf",
            "w",
            "r1",
            "r2",
            "r3",
            "r1prime",
            "fixed-postjump:y=0.5",
            "fixed-postjump:y=bound",
            "fixed-postjump:y=0.25*bound",
        ] {
            let c: UnravelingChoice = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert_eq!("R1'".parse::<UnravelingChoice>().unwrap(), UnravelingChoice::R1Prime);
        for bad in ["r4", "fixed-postjump:", "fixed-postjump:y=abc", "fixed-postjump:y=x*bound", ""] {
            assert!(matches!(bad.parse::<UnravelingChoice>(), Err(Error::UnknownUnraveling(_))));
        }
    }

    #[test]
    fn resolve_enm() {
        let model = EnmModel::undriven();
        let rep = model.representation();
        let r2 = UnravelingSpec::resolve(UnravelingChoice::R2, &rep).unwrap();
        assert_eq!(r2.kind, UnravelingKind::R);
        assert_eq!(r2.fixed_basis.as_ref().unwrap().len(), 2);
        assert!(r2.shift.unwrap().eval(1.0).max_abs_diff(&model.r2_shift().eval(1.0)) < 1e-15);
        let fp = UnravelingSpec::resolve(
            UnravelingChoice::FixedPostjump(YChoice::BoundFraction(0.5)),
            &rep,
        )
        .unwrap();
        let want = model.fixed_postjump_shift(model.y_bound().times(0.5)).unwrap();
        assert!(fp.shift.unwrap().eval(2.0).max_abs_diff(&want.eval(2.0)) < 1e-15);
        let shifted = rep.shift_representation(&model.r1_shift());
        assert!(matches!(
            UnravelingSpec::resolve(UnravelingChoice::R3, &shifted),
            Err(Error::ExplicitFormRequired)
        ));
    }

    #[test]
    fn resolve_generic() {
        use crate::generator::Channel;
        use crate::timefn::TimeOperator;
        let rep = GeneratorRepresentation::new(
            2,
            TimeOperator::constant(ComplexMatrix::pauli_x()),
            vec![Channel::constant_operator(ComplexMatrix::sigma_minus(), TimeFunction::Constant(1.0))],
        )
        .unwrap();
        assert!(UnravelingSpec::resolve(UnravelingChoice::R1, &rep).is_ok());
        let prime = UnravelingSpec::resolve(UnravelingChoice::R1Prime, &rep).unwrap();
        // the Hamiltonian is moved into the jump map
        let active = prime.active_representation(&rep);
        assert!(active.hamiltonian(0.3).max_abs() < 1e-12);
        for choice in [UnravelingChoice::R2, UnravelingChoice::R3] {
            assert!(matches!(
                UnravelingSpec::resolve(choice, &rep),
                Err(Error::NonPauliModel(_))
            ));
        }
    }
}
