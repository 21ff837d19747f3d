//! `gpk`: command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical budget
//! exceeded, 4 invariant violation.

use clap::{Parser, Subcommand};
use gpk_core::convergence_bench::config::{read_potential_table, ExperimentConfig, FockScenarioFile};
use gpk_core::convergence_bench::io::{read_field, read_json};
use gpk_core::convergence_bench::pipeline::{
    evolve_stage, fock_stage, kernels_stage, solution_from_summary, write_scattering, EvolveInputs, REPORT_JSON,
};
use gpk_core::convergence_bench::run_pipeline;
use gpk_core::correlation_kernels::{KernelOptions, Sampling};
use gpk_core::scattering::{solve_zero_energy, PotentialShape, RadialPotential, ScatteringSolution};
use gpk_core::{Execution, GpkError, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gpk", version, about = "Gross–Pitaevskii numerical laboratory")]
struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by an experiment config.
    Run { config: PathBuf },
    /// Solve the zero-energy scattering equation.
    Scattering {
        /// Two-column table file, or `square-well:height=8,radius=1`, `gaussian:strength=..,range=..`, `zero`.
        #[arg(long)]
        potential: String,
        #[arg(long)]
        rmax: f64,
        #[arg(long)]
        points: usize,
        /// Profile CSV (r, f, w, dw_dr); the summary JSON goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the GP or modified GP equation from an experiment config.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation-kernel bounds for a 3D field dump.
    Kernels {
        #[arg(long)]
        phi: PathBuf,
        /// `scattering.json` written by `gpk scattering`.
        #[arg(long)]
        scattering: PathBuf,
        /// Comma-separated particle numbers.
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        kernel_points: usize,
        /// Pair sampling: cell-average or point.
        #[arg(long, default_value = "cell-average")]
        sampling: String,
    },
    /// Toy Fock-space scenario: identities, spectral constants and N-convergence.
    Fock {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `scattering.json` for the correlation profile; defaults to the square well V0 = 8, R = 1.
        #[arg(long)]
        scattering: Option<PathBuf>,
    },
    /// Summarise the report of a finished pipeline run.
    Report { dir: PathBuf },
}

fn parse_potential(spec: &str) -> Result<RadialPotential> {
    let path = Path::new(spec);
    if path.is_file() {
        let (radii, values) = read_potential_table(path)?;
        return RadialPotential::tabulated(radii, values);
    }
    let (family, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = std::collections::BTreeMap::new();
    for item in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| GpkError::Config(format!("--potential: expected key=value, got `{item}`")))?;
        let v: f64 = v.parse().map_err(|_| GpkError::Config(format!("--potential: `{k}` is not a number")))?;
        kv.insert(k.trim().to_string(), v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| GpkError::Config(format!("--potential: missing `{k}` for {family}")));
    let shape = match family {
        "zero" => PotentialShape::Zero,
        "square-well" => PotentialShape::SquareWell { height: get("height")?, radius: get("radius")? },
        "gaussian" => PotentialShape::Gaussian { strength: get("strength")?, range: get("range")? },
        other => return Err(GpkError::Config(format!("--potential: no file or family named `{other}`"))),
    };
    RadialPotential::new(shape)
}

fn reference_solution() -> Result<ScatteringSolution> {
    solve_zero_energy(&RadialPotential::square_well(8.0, 1.0)?, 5.0, 2001)
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    print!("{}", gpk_core::convergence_bench::io::to_sorted_json(v)?);
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| GpkError::Invariant(format!("JSON encoding failed: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let bundle = run_pipeline(&cfg, exec)?;
            for stage in &bundle.cache_hits {
                eprintln!("cached: {stage}");
            }
            println!("{}", bundle.dir.join(REPORT_JSON).display());
        }
        Command::Scattering { potential, rmax, points, out } => {
            let pot = parse_potential(&potential)?;
            let sol = solve_zero_energy(&pot, rmax, points)?;
            print_json(&write_scattering(&sol, &out, &out.with_extension("json"))?)?;
        }
        Command::Evolve { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let pot = cfg.potential.potential()?;
            let sol = solve_zero_energy(&pot, cfg.potential.r_max, cfg.potential.points)?;
            let inp = EvolveInputs {
                grid: cfg.grid_spec(),
                datum: &cfg.datum,
                kind: cfg.nonlinearity.kind,
                a0: cfg.nonlinearity.a0.unwrap_or(sol.a0),
                n: cfg.nonlinearity.n,
                stride: cfg.snapshots.stride,
                dumps: cfg.snapshots.dumps,
                sweep: cfg.sweep.as_ref().map(|s| (s.n_list.as_slice(), s.t_star)),
            };
            print_json(&to_value(&evolve_stage(&inp, &sol, &out, exec)?)?)?;
        }
        Command::Kernels { phi, scattering, n, out, kernel_points, sampling } => {
            let sampling = match sampling.as_str() {
                "cell-average" => Sampling::CellAverage,
                "point" => Sampling::Point,
                other => return Err(GpkError::Config(format!("--sampling: unknown `{other}`"))),
            };
            let dump = read_field(&phi)?;
            let psi = dump.to_wave_function(1e-3, 0.0)?;
            let sol = solution_from_summary(&scattering)?;
            let opts = KernelOptions { sampling, kernel_points, time: dump.t, exec };
            print_json(&to_value(&kernels_stage(&psi, &sol, &n, &opts, &out)?)?)?;
        }
        Command::Fock { scenario, out, scattering } => {
            let file = FockScenarioFile::load(&scenario)?;
            let sol = match scattering {
                Some(p) => solution_from_summary(&p)?,
                None => reference_solution()?,
            };
            let report = fock_stage(&file, &sol, &out, exec)?;
            print_json(&to_value(&report.identities)?)?;
        }
        Command::Report { dir } => {
            let report = read_json(&dir.join(REPORT_JSON))?;
            print_report(&report);
        }
    }
    Ok(())
}

fn print_report(report: &serde_json::Value) {
    let get = |path: &[&str]| {
        let mut v = report;
        for k in path {
            v = match v.get(k) {
                Some(x) => x,
                None => return None,
            };
        }
        Some(v.clone())
    };
    let flags = get(&["flags"]).unwrap_or_default();
    println!("flags: {flags}");
    if let Some(s) = get(&["stages", "scattering", "summary"]) {
        println!("scattering: a0_tail = {} a0_integral = {}", s["a0_tail"], s["a0_integral"]);
    }
    if let Some(s) = get(&["stages", "evolve", "summary"]) {
        println!("evolve: mass drift = {} energy drift = {}", s["mass_drift"], s["energy_drift"]);
        if let Some(fit) = s.get("comparison").and_then(|c| c.get("fit")).filter(|f| !f.is_null()) {
            println!("evolve: slope = {} r2 = {}", fit["slope"], fit["r_squared"]);
        }
    }
    if let Some(s) = get(&["stages", "kernels", "summary"]) {
        println!("kernels: spread over N = {}", s["spread"]);
    }
    if let Some(s) = get(&["stages", "fock", "summary"]) {
        let toy = &s["toy"];
        println!("fock: fluctuation ratio = {} max leakage = {}", toy["fluctuation_ratio"], s["max_leakage"]);
        if !toy["fit"].is_null() {
            println!("fock: slope = {} r2 = {}", toy["fit"]["slope"], toy["fit"]["r_squared"]);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
