//! Positivity certificates of the jump maps: the Haar-averaged shift and the
//! closed-form `A + PT(B)` splittings of their Choi matrices.
//!
//! cargo run --release --example choi_certificates

use roqj::divisibility::{enm_choi_decomposition, jump_map_choi, EnmMap};
use roqj::linalg::min_eigenvalue;
use roqj::models::{enm_model, Driving, EnmModel};
use roqj::rate_ops::{haar_average_k, HaarMethod};
use roqj::TimeFunction;

fn main() -> roqj::Result<()> {
    let model = EnmModel::undriven();
    let rep = model.representation();
    for t in [0.0, 1.0, 3.0] {
        let design = haar_average_k(&rep, t, HaarMethod::Design);
        let mc = haar_average_k(&rep, t, HaarMethod::MonteCarlo { samples: 20_000, seed: 1 });
        let gamma: f64 = model.rates(t).iter().sum();
        println!(
            "t = {t}: design K00 = {:.6}, Monte Carlo K00 = {:.4} +- {:.4}, -gamma/2 = {:.6}",
            design.mean[(0, 0)].re,
            mc.mean[(0, 0)].re,
            mc.std_error_re[0],
            -gamma / 2.0
        );
    }

    for g3 in [-0.2, -0.5, -1f64.tanh()] {
        let m = enm_model(
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(1.0),
            TimeFunction::Constant(g3),
            Driving::None,
        );
        let base = m.representation();
        for (map, shift, name) in [
            (EnmMap::PositiveDissipator, m.r1_shift(), "R1"),
            (EnmMap::R3, m.r3_shift(), "R3"),
        ] {
            let choi = jump_map_choi(&base.shift_representation(&shift), 0.0)?;
            let d = enm_choi_decomposition(map, [1.0, 1.0, g3], &choi)?;
            println!(
                "gamma3 = {g3:.4} {name}: min eig A = {:.4}, min eig B = {:.4}, reconstruction error {:.1e}",
                min_eigenvalue(&d.a)?,
                min_eigenvalue(&d.b)?,
                d.reconstruct().max_abs_diff(&choi)
            );
        }
    }
    Ok(())
}
