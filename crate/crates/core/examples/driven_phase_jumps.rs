//! R1' trajectories of the driven model: once the driving saturates, every
//! jump between equatorial states shifts the phase by an odd multiple of pi/4.
//!
//! cargo run --release --example driven_phase_jumps

use std::f64::consts::FRAC_PI_4;

use roqj::models::ModelSpec;
use roqj::timefn::uniform_grid;
use roqj::trajectory::{jump_phase_statistics, Engine, UnravelingChoice, UnravelingSpec};

fn main() -> roqj::Result<()> {
    let model = ModelSpec::preset("enm_driven")?;
    let rep = model.representation()?;
    let spec = UnravelingSpec::resolve(UnravelingChoice::R1Prime, &rep)?;
    let e = Engine::new(spec, &rep, &uniform_grid(6.0, 0.002)?)?
        .with_record_stride(500)
        .run(&model.initial_state(), 1000, 5, 4)?;

    for t_min in [0.0, 1.0, 3.0] {
        let stats = jump_phase_statistics(&e.trajectories, t_min, 0.05)?;
        let odd = [FRAC_PI_4, 3.0 * FRAC_PI_4, -FRAC_PI_4, -3.0 * FRAC_PI_4];
        println!(
            "jumps after t = {t_min}: {} equatorial, {:.3} within 0.02 rad of odd multiples of pi/4",
            stats.increments.len(),
            stats.fraction_near(&odd, 0.02)
        );
    }
    let late = jump_phase_statistics(&e.trajectories, 3.0, 0.05)?;
    println!("histogram of late increments:");
    for (center, count) in late.histogram(16).into_iter().filter(|(_, c)| *c > 0) {
        println!("  {:>6.3} pi  {count}", center / std::f64::consts::PI);
    }
    Ok(())
}
