//! Scalar and operator-valued functions of time.
//!
//! Rates, driving amplitudes and shift operators are all built from these.
//! The named presets evaluate and integrate in closed form; `Custom`
//! closures fall back to composite Simpson quadrature.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{ComplexMatrix, C64};

#[derive(Clone)]
pub enum TimeFunction {
    Constant(f64),
    /// `scale * tanh(t)`
    Tanh { scale: f64 },
    /// `Phi((t - mu) / sigma)`, the normal CDF; equals `C + int_0^t Omega(s; mu, sigma) ds`
    /// with `C = int_{-inf}^0 Omega`.
    GaussianIntegral { mu: f64, sigma: f64 },
    /// Piecewise-linear interpolation through `(times[k], values[k])`,
    /// held constant outside the table.
    Table { times: Vec<f64>, values: Vec<f64> },
    Sum(Vec<TimeFunction>),
    Scaled(f64, Box<TimeFunction>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Tanh { scale } => write!(f, "{scale}*tanh(t)"),
            Self::GaussianIntegral { mu, sigma } => {
                write!(f, "GaussianIntegral(mu={mu}, sigma={sigma})")
            }
            Self::Table { times, .. } => write!(f, "Table({} knots)", times.len()),
            Self::Sum(parts) => f.debug_tuple("Sum").field(parts).finish(),
            Self::Scaled(c, inner) => write!(f, "{c}*({inner:?})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / std::f64::consts::SQRT_2)
}

fn normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl TimeFunction {
    pub fn zero() -> Self {
        Self::Constant(0.0)
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn table(points: &[(f64, f64)]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::Table {
            times: pts.iter().map(|p| p.0).collect(),
            values: pts.iter().map(|p| p.1).collect(),
        }
    }

    pub fn plus(&self, other: &TimeFunction) -> Self {
        match (self, other) {
            (Self::Constant(a), Self::Constant(b)) => Self::Constant(a + b),
            (Self::Constant(a), x) | (x, Self::Constant(a)) if *a == 0.0 => x.clone(),
            _ => Self::Sum(vec![self.clone(), other.clone()]),
        }
    }

    pub fn times(&self, c: f64) -> Self {
        match self {
            Self::Constant(a) => Self::Constant(a * c),
            Self::Tanh { scale } => Self::Tanh { scale: scale * c },
            Self::Scaled(a, inner) => Self::Scaled(a * c, inner.clone()),
            other => Self::Scaled(c, Box::new(other.clone())),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Tanh { scale } => scale * t.tanh(),
            Self::GaussianIntegral { mu, sigma } => normal_cdf((t - mu) / sigma),
            Self::Table { times, values } => table_eval(times, values, t),
            Self::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
            Self::Scaled(c, inner) => c * inner.eval(t),
            Self::Custom(f) => f(t),
        }
    }

    /// `int_a^b f(s) ds`
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::Constant(c) => c * (b - a),
            Self::Tanh { scale } => scale * (ln_cosh(b) - ln_cosh(a)),
            Self::GaussianIntegral { mu, sigma } => {
                let g = |u: f64| u * normal_cdf(u) + normal_pdf(u);
                sigma * (g((b - mu) / sigma) - g((a - mu) / sigma))
            }
            Self::Table { times, values } => table_integral(times, values, a, b),
            Self::Sum(parts) => parts.iter().map(|p| p.integral(a, b)).sum(),
            Self::Scaled(c, inner) => c * inner.integral(a, b),
            Self::Custom(f) => simpson(|s| f(s), a, b, 4096),
        }
    }
}

fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

fn table_eval(times: &[f64], values: &[f64], t: f64) -> f64 {
    match times.len() {
        0 => 0.0,
        1 => values[0],
        _ => {
            if t <= times[0] {
                return values[0];
            }
            let last = times.len() - 1;
            if t >= times[last] {
                return values[last];
            }
            let k = times.partition_point(|&x| x <= t) - 1;
            let w = (t - times[k]) / (times[k + 1] - times[k]);
            values[k] + w * (values[k + 1] - values[k])
        }
    }
}

fn table_integral(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    if b < a {
        return -table_integral(times, values, b, a);
    }
    let mut cuts = vec![a];
    cuts.extend(times.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    // the function is linear between consecutive cuts, so the trapezoid rule is exact
    cuts.windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (table_eval(times, values, w[0]) + table_eval(times, values, w[1])))
        .sum()
}

pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `0, dt, 2 dt, ..., t_max`. `t_max` must be a whole number of steps.
pub fn uniform_grid(t_max: f64, dt: f64) -> crate::Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(crate::Error::InvalidGrid(format!("dt must be positive, got {dt}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(crate::Error::InvalidGrid(format!("t_max must be positive, got {t_max}")));
    }
    let steps = (t_max / dt).round();
    if (steps * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(crate::Error::InvalidGrid(format!(
            "t_max = {t_max} is not a multiple of dt = {dt}"
        )));
    }
    Ok((0..=steps as usize).map(|k| k as f64 * dt).collect())
}

/// `sum_j f_j(t) M_j`, an operator-valued function of time.
#[derive(Clone, Debug)]
pub struct TimeOperator {
    dim: usize,
    terms: Vec<(TimeFunction, ComplexMatrix)>,
}

impl TimeOperator {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(m: ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            terms: vec![(TimeFunction::Constant(1.0), m)],
        }
    }

    pub fn term(f: TimeFunction, m: ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            terms: vec![(f, m)],
        }
    }

    pub fn with_term(mut self, f: TimeFunction, m: ComplexMatrix) -> Self {
        assert_eq!(m.dim(), self.dim, "operator term dimension mismatch");
        self.terms.push((f, m));
        self
    }

    pub fn plus(&self, other: &TimeOperator) -> Self {
        assert_eq!(self.dim, other.dim, "operator sum dimension mismatch");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { dim: self.dim, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(TimeFunction, ComplexMatrix)] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim);
        for (f, op) in &self.terms {
            let c = f.eval(t);
            if c != 0.0 {
                m.add_scaled(C64::new(c, 0.0), op);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_shape() {
        let g = uniform_grid(5.0, 0.002).unwrap();
        assert_eq!(g.len(), 2501);
        assert!((g[2500] - 5.0).abs() < 1e-12);
        assert!(uniform_grid(1.0, 0.3).is_err());
        assert!(uniform_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let fns = [
            TimeFunction::Constant(0.7),
            TimeFunction::Tanh { scale: -1.0 },
            TimeFunction::GaussianIntegral { mu: 1.0, sigma: 0.25 },
            TimeFunction::table(&[(0.0, 1.0), (1.0, -0.5), (2.5, 0.25)]),
            TimeFunction::Tanh { scale: 0.5 }.plus(&TimeFunction::Constant(1.0)).times(-2.0),
        ];
        for f in &fns {
            let exact = f.integral(0.0, 3.7);
            let quad = simpson(|s| f.eval(s), 0.0, 3.7, 20000);
            assert!((exact - quad).abs() < 1e-8, "{f:?}: {exact} vs {quad}");
        }
    }

    #[test]
    fn gaussian_driving_limits() {
        let b = TimeFunction::GaussianIntegral { mu: 1.0, sigma: 0.25 };
        assert!((b.eval(0.0) - 3.167_124_183_311_998e-5).abs() < 1e-12);
        assert_eq!(b.eval(1.0), 0.5);
        assert!((b.eval(1.0 + 10.0 * 0.25) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_holds_ends() {
        let f = TimeFunction::table(&[(1.0, 2.0), (2.0, 4.0)]);
        assert_eq!(f.eval(0.0), 2.0);
        assert_eq!(f.eval(1.5), 3.0);
        assert_eq!(f.eval(9.0), 4.0);
    }

    #[test]
    fn ln_cosh_is_stable_for_large_arguments() {
        assert!((ln_cosh(0.5) - 0.5f64.cosh().ln()).abs() < 1e-15);
        assert!((ln_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }
}
