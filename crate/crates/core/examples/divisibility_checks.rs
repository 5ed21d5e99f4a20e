//! CP, P and dissipativity checks on the two undriven presets.
//!
//! cargo run --release --example divisibility_checks

use roqj::divisibility::{
    check_cp_divisibility, check_dissipativity, check_p_divisibility, default_check_grid, CheckOptions,
};
use roqj::models::ModelSpec;

fn main() -> roqj::Result<()> {
    let grid = default_check_grid(5.0);
    let opts = CheckOptions::default();
    for name in ["enm_undriven", "enm_dissipative"] {
        let rep = ModelSpec::preset(name)?.representation()?;
        println!("{name}");
        for report in [
            check_cp_divisibility(&rep, &grid)?,
            check_p_divisibility(&rep, &grid, &opts),
            check_dissipativity(&rep, &grid, &opts),
        ] {
            let first = report
                .first_violation_time()
                .map_or_else(|| "-".to_string(), |t| format!("{t:.4}"));
            println!("  {:<14} {:<10} first violation {first}", format!("{:?}", report.property), format!("{:?}", report.verdict));
        }
    }
    println!("dissipativity is lost at arctanh(1/2) = {:.4}", 0.5f64.atanh());
    Ok(())
}
