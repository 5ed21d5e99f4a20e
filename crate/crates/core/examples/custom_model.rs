//! A model file that is not Pauli diagonal: R1 falls back to the Haar-averaged
//! shift, and the ensemble mean is compared with the density-matrix integrator.
//!
//! cargo run --release --example custom_model

use roqj::linalg::ComplexMatrix;
use roqj::models::{integrate_master_equation, load_model_spec};
use roqj::timefn::uniform_grid;
use roqj::trajectory::{ensemble_stats, Engine, UnravelingChoice, UnravelingSpec};

const MODEL: &str = r#"
name = "damped_dephasing"
dim = 2
initial_state = [[1.0, 0.0], [1.0, 0.0]]

[[channels]]
lindblad = { matrix = [[[0.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]] }
rate = { preset = "constant", value = 0.8 }

[[channels]]
lindblad = { matrix = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]] }
rate = { preset = "constant", value = 0.3 }

[[channels]]
lindblad = "pauli_z"
rate = { preset = "table", points = [[0.0, 0.0], [1.0, -0.04], [3.0, -0.04]] }
"#;

fn main() -> roqj::Result<()> {
    let model = load_model_spec(MODEL)?;
    let rep = model.representation()?;
    let psi0 = model.initial_state();
    let grid = uniform_grid(3.0, 0.002)?;
    let reference = integrate_master_equation(&rep, &ComplexMatrix::projector(&psi0), &grid)?;

    let spec = UnravelingSpec::resolve(UnravelingChoice::R1, &rep)?;
    let e = Engine::new(spec, &rep, &grid)?
        .with_record_stride(300)
        .run(&psi0, 4000, 11, 4)?;
    println!("{:>4} {:>22} {:>22}", "t", "ensemble rho01", "integrator rho01");
    for idx in 0..e.times.len() {
        let s = ensemble_stats(&e, idx);
        let k = (s.t / 0.002).round() as usize;
        let (a, b) = (s.mean[(0, 1)], reference[k][(0, 1)]);
        println!("{:>4.1} {:>10.5} {:>+10.5}i {:>10.5} {:>+10.5}i", s.t, a.re, a.im, b.re, b.im);
    }
    Ok(())
}
