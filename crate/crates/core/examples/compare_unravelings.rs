//! Qualitative character of the W, R1, R2 and R3 unravelings of the same dynamics.
//!
//! cargo run --release --example compare_unravelings

use roqj::models::ModelSpec;
use roqj::timefn::uniform_grid;
use roqj::trajectory::{Engine, UnravelingChoice, UnravelingSpec, DEFAULT_CLUSTER_TOL};

fn main() -> roqj::Result<()> {
    let model = ModelSpec::preset("enm_undriven")?;
    let rep = model.representation()?;
    let grid = uniform_grid(5.0, 0.002)?;
    println!(
        "{:<6} {:>11} {:>14} {:>15} {:>9}",
        "", "asym.jumps", "determ.change", "fixed.postjump", "eff.size"
    );
    for choice in [
        UnravelingChoice::W,
        UnravelingChoice::R1,
        UnravelingChoice::R2,
        UnravelingChoice::R3,
    ] {
        let spec = UnravelingSpec::resolve(choice, &rep)?;
        let e = Engine::new(spec, &rep, &grid)?
            .with_record_stride(100)
            .run(&model.initial_state(), 2000, 3, 4)?;
        let c = e.characterize(DEFAULT_CLUSTER_TOL);
        println!(
            "{:<6} {:>11} {:>14} {:>15} {:>9}",
            choice.to_string(),
            c.asymptotic_jumps,
            c.deterministic_changes,
            c.fixed_postjump_states,
            c.final_effective_size
        );
    }
    Ok(())
}
