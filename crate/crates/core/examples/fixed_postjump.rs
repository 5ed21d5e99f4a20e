//! Fixed post-jump unravelings: every jump lands on |+> or |->, for any
//! admissible shift parameter y up to the positivity bound.
//!
//! cargo run --release --example fixed_postjump

use roqj::models::ModelSpec;
use roqj::timefn::uniform_grid;
use roqj::trajectory::{bloch_vector_state, Engine, UnravelingChoice, UnravelingSpec, YChoice, DEFAULT_CLUSTER_TOL};

fn main() -> roqj::Result<()> {
    let model = ModelSpec::preset("enm_undriven")?;
    let rep = model.representation()?;
    let grid = uniform_grid(3.0, 0.002)?;
    for fraction in [0.0, 0.5, 1.0] {
        let choice = UnravelingChoice::FixedPostjump(YChoice::BoundFraction(fraction));
        let spec = UnravelingSpec::resolve(choice, &rep)?;
        let e = Engine::new(spec, &rep, &grid)?
            .with_record_stride(150)
            .run(&model.initial_state(), 2000, 2, 4)?;
        let c = e.characterize(DEFAULT_CLUSTER_TOL);
        let mut targets: Vec<[f64; 3]> = Vec::new();
        for j in e.trajectories.iter().flat_map(|t| &t.jumps) {
            let b = bloch_vector_state(&j.post_state)?;
            if !targets.iter().any(|s| (s[0] - b[0]).abs() + (s[1] - b[1]).abs() + (s[2] - b[2]).abs() < 1e-6) {
                targets.push(b);
            }
        }
        println!(
            "{choice}: {} jumps, {} distinct post-jump Bloch vectors {:?}, effective size {}",
            e.total_jumps(),
            c.distinct_postjump_states,
            targets.iter().map(|b| b.map(|x| (x * 1e6).round() / 1e6)).collect::<Vec<_>>(),
            c.final_effective_size
        );
    }
    Ok(())
}
