//! Command-line front end: `simulate`, `check` and `compare`.
//!
//! [`run`] parses arguments and returns the process exit code, so the binary stays thin
//! and the commands can be driven from tests.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::divisibility::{
    check_cp_divisibility, check_dissipativity, check_p_divisibility, check_rate_positivity, CheckOptions,
    DivisibilityReport, Verdict,
};
use crate::error::{Error, Result};
use crate::generator::GeneratorRepresentation;
use crate::linalg::ComplexMatrix;
use crate::models::{integrate_master_equation_substeps, ModelSpec};
use crate::rate_ops::RateKind;
use crate::timefn::uniform_grid;
use crate::trajectory::{
    ensemble_stats, write_ensemble_csv, write_trajectories_jsonl, Engine, Ensemble, UnravelingCharacter,
    UnravelingChoice, UnravelingSpec, DEFAULT_CLUSTER_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NEGATIVE_RATE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Trajectories written to the JSONL sample file.
pub const SAMPLE_TRAJECTORIES: usize = 7;

#[derive(Debug, Parser)]
#[command(name = "roqj", version, about = "Quantum-jump unravelings of time-local master equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one unraveling and write ensemble CSV, sample JSONL and a summary.
    Simulate(SimulateArgs),
    /// Check a divisibility or rate-positivity property on a time grid.
    Check(CheckArgs),
    /// Run several unravelings with the same seed and tabulate their character.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Preset name or path to a TOML model file.
    #[arg(long, default_value = "enm_undriven")]
    pub model: String,
    #[arg(long, default_value_t = 1000)]
    pub ntraj: usize,
    #[arg(long, default_value_t = 0.002)]
    pub dt: f64,
    #[arg(long, default_value_t = 5.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Record every n-th step (the final step is always recorded).
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// mcwf, w, r1, r2, r3, r1prime or fixed-postjump:y=<value|bound|f*bound>
    #[arg(long, default_value = "r1")]
    pub unraveling: UnravelingChoice,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value = "enm_undriven")]
    pub model: String,
    /// cp, p, dissipativity or rate-positivity:<unraveling>
    #[arg(long)]
    pub property: String,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Number of grid points on [0, tmax].
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, default_value_t = 5.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated unravelings, at least two.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "w,r1,r2,r3")]
    pub unravelings: Vec<UnravelingChoice>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            exit_code(&e)
        }
    }
}

/// Exit code for an error: 2 for an invalid unraveling, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NegativeRate { .. } | Error::NegativeCoefficient { .. } => EXIT_NEGATIVE_RATE,
        Error::Trajectory { source, .. } => exit_code(source),
        _ => EXIT_CONFIG,
    }
}

fn report_error(e: &Error) {
    eprintln!("error: {e}");
    let inner = match e {
        Error::Trajectory { source, .. } => source.as_ref(),
        other => other,
    };
    if let Error::NegativeRate {
        t,
        min_eigenvalue,
        state,
        ..
    } = inner
    {
        eprintln!("witness: t = {t}, eigenvalue = {min_eigenvalue:e}, psi = {state:?}");
    }
}

fn validate(run: &RunArgs) -> Result<()> {
    let bad = |path: &str, message: &str| {
        Err(Error::Schema {
            path: path.into(),
            message: message.into(),
        })
    };
    if !(run.dt > 0.0 && run.dt.is_finite()) {
        return bad("dt", "must be positive");
    }
    if !(run.tmax > 0.0 && run.tmax.is_finite()) {
        return bad("tmax", "must be positive");
    }
    if run.ntraj == 0 {
        return bad("ntraj", "must be at least 1");
    }
    if run.record_every == 0 {
        return bad("record-every", "must be at least 1");
    }
    Ok(())
}

fn workers(run: &RunArgs) -> usize {
    run.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn simulate_ensemble(
    choice: UnravelingChoice,
    model: &ModelSpec,
    rep: &GeneratorRepresentation,
    grid: &[f64],
    run: &RunArgs,
) -> Result<Ensemble> {
    let spec = UnravelingSpec::resolve(choice, rep)?;
    let engine = Engine::new(spec, rep, grid)?.with_record_stride(run.record_every);
    let mut e = engine.run(&model.initial_state(), run.ntraj, run.seed, workers(run))?;
    e.model = model.name.clone();
    Ok(e)
}

#[derive(Debug, Serialize)]
pub struct SizeSample {
    pub t: f64,
    pub effective_size: usize,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub model: String,
    pub unraveling: String,
    pub n_traj: usize,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub total_jumps: usize,
    pub mean_jumps_per_trajectory: f64,
    pub effective_sizes: Vec<SizeSample>,
    pub character: UnravelingCharacter,
}

/// Summary with effective sizes at (about) eleven evenly spaced recorded times.
pub fn summarize(e: &Ensemble, t_max: f64) -> Summary {
    let n = e.times.len();
    let mut picks: Vec<usize> = (0..=10).map(|k| k * (n - 1) / 10).collect();
    picks.dedup();
    let effective_sizes = picks
        .into_iter()
        .map(|idx| SizeSample {
            t: e.times[idx],
            effective_size: crate::trajectory::cluster_count(e.states_at(idx), DEFAULT_CLUSTER_TOL),
        })
        .collect();
    let total = e.total_jumps();
    Summary {
        model: e.model.clone(),
        unraveling: e.unraveling.clone(),
        n_traj: e.len(),
        dt: e.dt,
        t_max,
        seed: e.master_seed,
        total_jumps: total,
        mean_jumps_per_trajectory: total as f64 / e.len() as f64,
        effective_sizes,
        character: e.characterize(DEFAULT_CLUSTER_TOL),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    validate(&a.run)?;
    let model = ModelSpec::resolve(&a.run.model)?;
    let rep = model.representation()?;
    let grid = uniform_grid(a.run.tmax, a.run.dt)?;
    let e = simulate_ensemble(a.unraveling, &model, &rep, &grid, &a.run)?;

    fs::create_dir_all(&a.run.out)?;
    let mut csv = create(&a.run.out, "ensemble.csv")?;
    write_ensemble_csv(&e, &mut csv)?;
    csv.flush()?;
    let mut jsonl = create(&a.run.out, "trajectories.jsonl")?;
    write_trajectories_jsonl(&e, SAMPLE_TRAJECTORIES, &mut jsonl)?;
    jsonl.flush()?;
    let summary = summarize(&e, a.run.tmax);
    let mut out = create(&a.run.out, "summary.json")?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;

    let c = &summary.character;
    println!(
        "{} on {}: {} trajectories, {} jumps, final effective size {}, asymptotic jumps {}, wrote {}",
        summary.unraveling,
        summary.model,
        summary.n_traj,
        summary.total_jumps,
        c.final_effective_size,
        c.asymptotic_jumps,
        a.run.out.display()
    );
    Ok(EXIT_OK)
}

fn parse_property(p: &str) -> Result<(String, Option<UnravelingChoice>)> {
    match p.split_once(':') {
        Some(("rate-positivity", u)) => Ok(("rate-positivity".into(), Some(u.parse()?))),
        None if matches!(p, "cp" | "p" | "dissipativity") => Ok((p.into(), None)),
        _ => Err(Error::Schema {
            path: "property".into(),
            message: format!("unknown property `{p}` (cp, p, dissipativity, rate-positivity:<unraveling>)"),
        }),
    }
}

pub fn check_report(a: &CheckArgs) -> Result<DivisibilityReport> {
    if a.grid < 2 || !(a.tmax > 0.0) {
        return Err(Error::Schema {
            path: "grid".into(),
            message: "need at least 2 grid points on a positive interval".into(),
        });
    }
    let (property, unraveling) = parse_property(&a.property)?;
    let rep = ModelSpec::resolve(&a.model)?.representation()?;
    let step = a.tmax / (a.grid - 1) as f64;
    let grid: Vec<f64> = (0..a.grid).map(|k| k as f64 * step).collect();
    let opts = CheckOptions {
        samples: a.samples,
        seed: a.seed,
        ..CheckOptions::default()
    };
    match (property.as_str(), unraveling) {
        ("cp", _) => check_cp_divisibility(&rep, &grid),
        ("p", _) => Ok(check_p_divisibility(&rep, &grid, &opts)),
        ("dissipativity", _) => Ok(check_dissipativity(&rep, &grid, &opts)),
        (_, Some(choice)) => {
            let spec = UnravelingSpec::resolve(choice, &rep)?;
            let kind = if choice == UnravelingChoice::W { RateKind::W } else { RateKind::R };
            let active = spec.active_representation(&rep);
            Ok(check_rate_positivity(&active, kind, &grid, &opts, None))
        }
        _ => unreachable!("parse_property covers every case"),
    }
}

pub fn cmd_check(a: &CheckArgs) -> Result<i32> {
    let report = check_report(a)?;
    let json = report.to_json()?;
    match &a.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, format!("{json}\n"))?;
        }
        None => println!("{json}"),
    }
    let first = report
        .first_violation_time()
        .map_or(String::new(), |t| format!(", first violation at t = {t}"));
    eprintln!("{:?}: {:?}{first}", report.property, report.verdict);
    Ok(if report.verdict == Verdict::Fails {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

#[derive(Debug, Serialize)]
pub struct CompareEntry {
    pub unraveling: String,
    /// `None` when the unraveling failed.
    pub summary: Option<Summary>,
    /// Max entrywise deviation of the ensemble mean from the reference integrator.
    pub max_reference_deviation: Option<f64>,
    pub error: Option<String>,
}

/// Max over recorded times of `max |rho_mean - rho_ref|`.
fn reference_deviation(e: &Ensemble, reference: &[ComplexMatrix], grid: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (idx, &t) in e.times.iter().enumerate() {
        let k = grid
            .iter()
            .position(|&g| (g - t).abs() <= 1e-9 * t.abs().max(1.0))
            .expect("recorded times lie on the grid");
        worst = worst.max(ensemble_stats(e, idx).mean.max_abs_diff(&reference[k]));
    }
    worst
}

pub fn compare(a: &CompareArgs) -> Result<Vec<CompareEntry>> {
    validate(&a.run)?;
    if a.unravelings.len() < 2 {
        return Err(Error::Schema {
            path: "unravelings".into(),
            message: "compare needs at least two unravelings".into(),
        });
    }
    let model = ModelSpec::resolve(&a.run.model)?;
    let rep = model.representation()?;
    let grid = uniform_grid(a.run.tmax, a.run.dt)?;
    let rho0 = ComplexMatrix::projector(&model.initial_state());
    let reference = integrate_master_equation_substeps(&rep, &rho0, &grid, 4)?;
    let mut entries = Vec::new();
    for &choice in &a.unravelings {
        let entry = match simulate_ensemble(choice, &model, &rep, &grid, &a.run) {
            Ok(e) => CompareEntry {
                unraveling: choice.to_string(),
                max_reference_deviation: Some(reference_deviation(&e, &reference, &grid)),
                summary: Some(summarize(&e, a.run.tmax)),
                error: None,
            },
            Err(err) => {
                log::warn!("{choice} failed: {err}");
                CompareEntry {
                    unraveling: choice.to_string(),
                    summary: None,
                    max_reference_deviation: None,
                    error: Some(err.to_string()),
                }
            }
        };
        entries.push(entry);
    }
    Ok(entries)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Plain-text table in the column order asymptotic jumps, deterministic change,
/// fixed post-jump states, final effective size, reference deviation.
pub fn format_table(entries: &[CompareEntry]) -> String {
    let mut s = format!(
        "{:<20} {:>10} {:>14} {:>15} {:>10} {:>12}\n",
        "unraveling", "asym.jumps", "determ.change", "fixed.postjump", "eff.size", "ref.dev"
    );
    for e in entries {
        match (&e.summary, e.max_reference_deviation) {
            (Some(sm), Some(dev)) => {
                let c = &sm.character;
                s += &format!(
                    "{:<20} {:>10} {:>14} {:>15} {:>10} {:>12.3e}\n",
                    e.unraveling,
                    yes_no(c.asymptotic_jumps),
                    yes_no(c.deterministic_changes),
                    yes_no(c.fixed_postjump_states),
                    c.final_effective_size,
                    dev
                );
            }
            _ => {
                s += &format!(
                    "{:<20} failed: {}\n",
                    e.unraveling,
                    e.error.as_deref().unwrap_or("unknown error")
                );
            }
        }
    }
    s
}

pub fn cmd_compare(a: &CompareArgs) -> Result<i32> {
    let entries = compare(a)?;
    fs::create_dir_all(&a.run.out)?;
    let table = format_table(&entries);
    fs::write(a.run.out.join("compare.txt"), &table)?;
    let mut out = create(&a.run.out, "compare.json")?;
    serde_json::to_writer_pretty(&mut out, &entries)?;
    writeln!(out)?;
    out.flush()?;
    print!("{table}");
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_parsing() {
        assert_eq!(parse_property("cp").unwrap().0, "cp");
        let (p, u) = parse_property("rate-positivity:r2").unwrap();
        assert_eq!(p, "rate-positivity");
        assert_eq!(u, Some(UnravelingChoice::R2));
        assert!(parse_property("kadison").is_err());
        assert!(parse_property("rate-positivity:bogus").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let neg = Error::NegativeCoefficient {
            channel: 2,
            t: 0.0,
            value: -0.1,
        };
        assert_eq!(exit_code(&neg), EXIT_NEGATIVE_RATE);
        let wrapped = Error::Trajectory {
            index: 3,
            source: Box::new(neg),
        };
        assert_eq!(exit_code(&wrapped), EXIT_NEGATIVE_RATE);
        assert_eq!(exit_code(&Error::InvalidGrid("x".into())), EXIT_CONFIG);
    }

    #[test]
    fn bad_arguments_are_config_errors() {
        assert_eq!(run(["roqj", "simulate", "--dt", "-1"]), EXIT_CONFIG);
        assert_eq!(run(["roqj", "simulate", "--unraveling", "nope"]), EXIT_CONFIG);
        assert_eq!(run(["roqj", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["roqj", "check", "--property", "p", "--model", "no_such_model"]), EXIT_CONFIG);
    }
}
