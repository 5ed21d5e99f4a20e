//! Reference density-matrix solutions used as oracles for the trajectory ensembles.

use super::EnmModel;
use crate::error::{Error, Result};
use crate::generator::GeneratorRepresentation;
use crate::linalg::{check_same_dim, ComplexMatrix, C64};

const TRACE_DRIFT_TOL: f64 = 1e-8;

/// Classic RK4 on `d rho/dt = L_t(rho)`, one step per grid interval.
pub fn integrate_master_equation(
    rep: &GeneratorRepresentation,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
) -> Result<Vec<ComplexMatrix>> {
    integrate_master_equation_substeps(rep, rho0, t_grid, 1)
}

/// RK4 with `substeps` equal steps inside every grid interval; returns `rho` at the grid times.
pub fn integrate_master_equation_substeps(
    rep: &GeneratorRepresentation,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    substeps: usize,
) -> Result<Vec<ComplexMatrix>> {
    check_same_dim(rep.dim(), rho0.dim())?;
    if !rho0.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = rho0.hermiticity_deviation();
    if dev > crate::linalg::HERMITICITY_TOL {
        return Err(Error::NonHermitianInput { deviation: dev });
    }
    let tr0 = rho0.trace().re;
    if (tr0 - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization(format!("initial density matrix has trace {tr0}")));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid times must increase strictly".into()));
    }
    let substeps = substeps.max(1);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut rho = rho0.clone();
    out.push(rho.clone());
    for w in t_grid.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let t = w[0] + s as f64 * h;
            rho = rk4_step(rep, t, h, &rho);
        }
        let drift = (rho.trace().re - tr0).abs();
        if drift > TRACE_DRIFT_TOL || !rho.is_finite() {
            return Err(Error::StepInstability { t: w[1], drift });
        }
        out.push(rho.clone());
    }
    Ok(out)
}

fn rk4_step(rep: &GeneratorRepresentation, t: f64, h: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let start = rep.snapshot(t);
    let mid = rep.snapshot(t + 0.5 * h);
    let end = rep.snapshot(t + h);
    let half = C64::new(0.5 * h, 0.0);
    let k1 = start.generator(rho);
    let mut y = rho.clone();
    y.add_scaled(half, &k1);
    let k2 = mid.generator(&y);
    let mut y = rho.clone();
    y.add_scaled(half, &k2);
    let k3 = mid.generator(&y);
    let mut y = rho.clone();
    y.add_scaled(C64::new(h, 0.0), &k3);
    let k4 = end.generator(&y);
    let mut next = rho.clone();
    let sixth = h / 6.0;
    next.add_scaled(C64::new(sixth, 0.0), &k1);
    next.add_scaled(C64::new(2.0 * sixth, 0.0), &k2);
    next.add_scaled(C64::new(2.0 * sixth, 0.0), &k3);
    next.add_scaled(C64::new(sixth, 0.0), &k4);
    next
}

/// Closed-form Bloch solution of the ENM master equation.
///
/// `x + iy` decays with `exp(-int (gamma_2 + gamma_3))` / `exp(-int (gamma_1 + gamma_3))`
/// and rotates by `-int b`; `z` decays with `exp(-int (gamma_1 + gamma_2))`. With driving
/// the rotation only commutes with the decay when `gamma_1 = gamma_2`.
pub fn enm_analytic_solution(rho0: &ComplexMatrix, t: f64, model: &EnmModel) -> Result<ComplexMatrix> {
    if rho0.dim() != 2 {
        return Err(Error::DimensionNotTwo(rho0.dim()));
    }
    let [x0, y0, z0] = bloch(rho0);
    let tr = rho0.trace().re;
    let int = |k: usize| model.gammas[k].integral(0.0, t);
    let (i1, i2, i3) = (int(0), int(1), int(2));
    let lx = (-(i2 + i3)).exp();
    let ly = (-(i1 + i3)).exp();
    let lz = (-(i1 + i2)).exp();
    let theta = model.driving.amplitude().integral(0.0, t);
    let (x, y) = if theta == 0.0 {
        (lx * x0, ly * y0)
    } else {
        let same = (1..=8).all(|k| {
            let s = t * k as f64 / 8.0;
            (model.gammas[0].integral(0.0, s) - model.gammas[1].integral(0.0, s)).abs() <= 1e-12
        });
        if !same {
            return Err(Error::NoClosedForm(
                "driving with gamma_1 != gamma_2 mixes unequal decays".into(),
            ));
        }
        let (s, c) = theta.sin_cos();
        (lx * (c * x0 + s * y0), lx * (c * y0 - s * x0))
    };
    Ok(from_bloch(tr, [x, y, lz * z0]))
}

fn bloch(rho: &ComplexMatrix) -> [f64; 3] {
    [
        2.0 * rho[(0, 1)].re,
        -2.0 * rho[(0, 1)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

fn from_bloch(tr: f64, v: [f64; 3]) -> ComplexMatrix {
    let [x, y, z] = v;
    ComplexMatrix::from_rows(&[
        [C64::new(0.5 * (tr + z), 0.0), C64::new(0.5 * x, -0.5 * y)],
        [C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (tr - z), 0.0)],
    ])
    .expect("2x2")
}
