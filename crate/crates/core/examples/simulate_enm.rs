//! R1 unraveling of the undriven ENM qubit against the closed-form coherence.
//!
//! cargo run --release --example simulate_enm

use roqj::models::ModelSpec;
use roqj::timefn::uniform_grid;
use roqj::trajectory::{ensemble_stats, Engine, UnravelingChoice, UnravelingSpec};

fn main() -> roqj::Result<()> {
    let model = ModelSpec::preset("enm_undriven")?;
    let rep = model.representation()?;
    let grid = uniform_grid(5.0, 0.002)?;
    let spec = UnravelingSpec::resolve(UnravelingChoice::R1, &rep)?;
    let engine = Engine::new(spec, &rep, &grid)?.with_record_stride(250);
    let e = engine.run(&model.initial_state(), 5000, 1, 4)?;

    println!("{:>5} {:>10} {:>10} {:>9}", "t", "Re rho01", "exact", "SE");
    for idx in 0..e.times.len() {
        let s = ensemble_stats(&e, idx);
        let exact = 0.3 * (-s.t).exp() * s.t.cosh();
        println!(
            "{:>5.2} {:>10.5} {:>10.5} {:>9.2e}",
            s.t,
            s.mean[(0, 1)].re,
            exact,
            s.std_error_re[1]
        );
    }
    println!("{} jumps over {} trajectories", e.total_jumps(), e.len());
    Ok(())
}
