//! Stage runners and the cached scattering → GP → kernels → Fock pipeline.
//!
//! Each stage writes its artifacts into a fresh cache directory named by a
//! SHA-256 over the crate version, the stage name, the config subsections it
//! reads, the bytes of any input file and the hashes of upstream stages.
//! Artifacts are then copied into the output directory. A changed section
//! therefore invalidates that stage and everything downstream of it.

use super::config::{ExperimentConfig, FockScenarioFile, KernelPhi, NonlinearityKind};
use super::io::{fmt_f64, read_field, read_json, to_sorted_json, write_bytes, write_csv, write_json, encode_field};
use crate::correlation_kernels::{
    cancellation_budget, kernel_bound_report, zero_energy_cancellation_residual, KernelBoundReport, KernelOptions,
};
use crate::error::{GpkError, Result};
use crate::exec::Execution;
use crate::fock_lab::{
    check_tnt_inequality, correlation_matrix, generator_cancellation_check, identity_suite, toy_main_theorem,
    GeneratorReport, IdentityReport, TntReport, ToyReport, ToyScenario,
};
use crate::gp_dynamics::{
    compare_dynamics, evolve_with, sobolev_report, ComparisonReport, Datum, GridSpec, NonlinearitySpec, Propagator,
    WaveFunction,
};
use crate::linalg::CMatrix;
use crate::scattering::{solve_zero_energy, summarize, PotentialShape, RadialPotential, RadialTransform, ScatteringSolution};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::cell::OnceCell;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCATTERING_CSV: &str = "scattering.csv";
pub const SCATTERING_JSON: &str = "scattering.json";
pub const NORMS_CSV: &str = "norms.csv";
pub const RATES_CSV: &str = "rates.csv";
pub const EVOLVE_JSON: &str = "evolve.json";
pub const FINAL_FIELD: &str = "final_field.bin";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const KERNEL_CSV: &str = "kernel_bounds.csv";
pub const KERNEL_JSON: &str = "kernels.json";
pub const FOCK_JSON: &str = "fock_report.json";
pub const TOY_CSV: &str = "toy_convergence.csv";
pub const REPORT_JSON: &str = "report.json";
pub const CACHE_DIR: &str = ".cache";

fn io_err(path: &Path, e: std::io::Error) -> GpkError {
    GpkError::io(path.display().to_string(), e)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------- scattering

/// Profile CSV (r, f, w, dw_dr) and summary JSON at the given paths; returns the summary.
pub fn write_scattering(sol: &ScatteringSolution, csv_path: &Path, json_path: &Path) -> Result<Value> {
    let rows: Vec<Vec<String>> = (0..sol.r_grid.len())
        .map(|i| vec![fmt_f64(sol.r_grid[i]), fmt_f64(sol.f[i]), fmt_f64(sol.w[i]), fmt_f64(sol.dw_dr[i])])
        .collect();
    write_csv(csv_path, &["r", "f", "w", "dw_dr"], &rows)?;
    let summary = serde_json::to_value(summarize(sol)?).map_err(json_err)?;
    write_json(json_path, &summary)?;
    Ok(summary)
}

/// Writes `scattering.csv` and `scattering.json` into `dir`.
pub fn scattering_stage(sol: &ScatteringSolution, dir: &Path) -> Result<Value> {
    create_dir(dir)?;
    write_scattering(sol, &dir.join(SCATTERING_CSV), &dir.join(SCATTERING_JSON))
}

fn json_err(e: serde_json::Error) -> GpkError {
    GpkError::Invariant(format!("JSON encoding failed: {e}"))
}

/// Re-solve the scattering problem described by a `scattering.json` summary.
pub fn solution_from_summary(path: &Path) -> Result<ScatteringSolution> {
    let v = read_json(path)?;
    let field = |key: &str| v.get(key).ok_or_else(|| GpkError::Config(format!("{}: missing `{key}`", path.display())));
    let shape: PotentialShape = serde_json::from_value(field("potential")?.get("shape").cloned().unwrap_or(Value::Null))
        .map_err(|e| GpkError::Config(format!("{}: potential.shape: {e}", path.display())))?;
    let r_max = field("r_max")?.as_f64().ok_or_else(|| GpkError::Config(format!("{}: r_max is not a number", path.display())))?;
    let points = field("points")?
        .as_u64()
        .ok_or_else(|| GpkError::Config(format!("{}: points is not an integer", path.display())))? as usize;
    solve_zero_energy(&RadialPotential::new(shape)?, r_max, points)
}

// ------------------------------------------------------------------- evolve

/// Inputs of the GP stage.
pub struct EvolveInputs<'a> {
    pub grid: GridSpec,
    pub datum: &'a Datum,
    pub kind: NonlinearityKind,
    pub a0: f64,
    pub n: Option<f64>,
    pub stride: usize,
    pub dumps: bool,
    pub sweep: Option<(&'a [f64], f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub steps: usize,
    pub snapshots: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub aliasing_warning: bool,
    pub comparison: Option<ComparisonReport>,
}

/// Writes `norms.csv`, `final_field.bin`, optional snapshot dumps and, with a
/// sweep, `rates.csv` (N, l2_difference, slope).
pub fn evolve_stage(inp: &EvolveInputs, sol: &ScatteringSolution, dir: &Path, exec: Execution) -> Result<EvolveSummary> {
    create_dir(dir)?;
    let psi0 = inp.datum.sample(&inp.grid)?;
    let uhat = RadialTransform::of_interaction(sol);
    let nl = match inp.kind {
        NonlinearityKind::Gp => NonlinearitySpec::Gp { a0: inp.a0 },
        NonlinearityKind::Modified => NonlinearitySpec::Modified {
            n: inp.n.ok_or_else(|| GpkError::Config("nonlinearity.n: required for the modified equation".into()))?,
            uhat: uhat.clone(),
        },
    };
    let prop = Propagator::with_exec(&inp.grid, &nl, exec)?;
    let traj = evolve_with(&prop, &psi0, &inp.grid, inp.stride)?;
    let norms = sobolev_report(&traj, &nl)?;
    let rows: Vec<Vec<String>> = (0..norms.times.len())
        .map(|i| {
            let mut r = vec![fmt_f64(norms.times[i]), fmt_f64(norms.l2[i]), fmt_f64(norms.energy[i])];
            r.extend(norms.h_norms.iter().map(|h| fmt_f64(h[i])));
            r
        })
        .collect();
    write_csv(&dir.join(NORMS_CSV), &["t", "l2", "energy", "h1", "h2", "h3", "h4"], &rows)?;
    if inp.dumps {
        let snap = dir.join(SNAPSHOT_DIR);
        create_dir(&snap)?;
        for (i, (t, psi)) in traj.times.iter().zip(&traj.states).enumerate() {
            write_bytes(&snap.join(format!("field_{i:05}.bin")), &encode_field(psi, *t))?;
        }
    }
    let t_last = *traj.times.last().expect("trajectory is non-empty");
    write_bytes(&dir.join(FINAL_FIELD), &encode_field(traj.last(), t_last))?;
    let e0 = norms.energy[0];
    let energy_drift = norms.energy.iter().map(|e| (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let mass_drift = norms.l2.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    let comparison = match inp.sweep {
        Some((n_list, t_star)) => {
            let rep = compare_dynamics(&psi0, inp.a0, &uhat, n_list, t_star, exec)?;
            let slope = rep.fit.as_ref().map(|f| fmt_f64(f.slope)).unwrap_or_default();
            let rows: Vec<Vec<String>> = rep
                .n_values
                .iter()
                .zip(&rep.l2_differences)
                .map(|(n, d)| vec![fmt_f64(*n), fmt_f64(*d), slope.clone()])
                .collect();
            write_csv(&dir.join(RATES_CSV), &["N", "l2_difference", "slope"], &rows)?;
            Some(rep)
        }
        None => None,
    };
    let summary = EvolveSummary {
        steps: inp.grid.steps(),
        snapshots: traj.states.len(),
        mass_drift,
        energy_drift,
        aliasing_warning: norms.aliasing_warning,
        comparison,
    };
    write_json(&dir.join(EVOLVE_JSON), &summary)?;
    Ok(summary)
}

// ------------------------------------------------------------------ kernels

#[derive(Debug, Clone, Serialize)]
pub struct KernelRow {
    #[serde(flatten)]
    pub bounds: KernelBoundReport,
    pub cancellation_residual: f64,
    pub cancellation_budget: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub rows: Vec<KernelRow>,
    /// max/min over N of ‖k‖, ‖∇₁k‖/√N, ‖∇₁(k k̄)‖ and sup_x‖k(·,x)‖ (1 when all vanish).
    pub spread: [f64; 4],
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi == 0.0 {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Writes `kernel_bounds.csv` (N, l2_k, grad1_k_over_sqrtN, grad1_kkbar, sup_slice, cancellation_residual).
pub fn kernels_stage(phi: &WaveFunction, sol: &ScatteringSolution, n_list: &[f64], opts: &KernelOptions, dir: &Path) -> Result<KernelSummary> {
    create_dir(dir)?;
    let bounds = kernel_bound_report(phi, sol, n_list, opts)?;
    let rows = bounds
        .into_iter()
        .map(|b| {
            let residual = zero_energy_cancellation_residual(sol, &sol.potential, b.n)?;
            Ok(KernelRow { cancellation_budget: cancellation_budget(b.n), cancellation_residual: residual, bounds: b })
        })
        .collect::<Result<Vec<_>>>()?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let b = &r.bounds;
            [b.n, b.l2_k, b.grad1_k_over_sqrt_n, b.l2_grad1_kkbar, b.sup_x_l2_slice, r.cancellation_residual]
                .iter()
                .map(|&x| fmt_f64(x))
                .collect()
        })
        .collect();
    write_csv(
        &dir.join(KERNEL_CSV),
        &["N", "l2_k", "grad1_k_over_sqrtN", "grad1_kkbar", "sup_slice", "cancellation_residual"],
        &csv_rows,
    )?;
    let s = |f: fn(&KernelBoundReport) -> f64| spread(rows.iter().map(|r| f(&r.bounds)));
    let summary = KernelSummary {
        spread: [s(|b| b.l2_k), s(|b| b.grad1_k_over_sqrt_n), s(|b| b.l2_grad1_kkbar), s(|b| b.sup_x_l2_slice)],
        rows,
    };
    write_json(&dir.join(KERNEL_JSON), &summary)?;
    Ok(summary)
}

// --------------------------------------------------------------------- fock

#[derive(Debug, Clone, Serialize)]
pub struct FockReport {
    pub identities: IdentityReport,
    pub spectral: Vec<TntReport>,
    pub generator: GeneratorReport,
    pub toy: ToyReport,
    pub max_leakage: f64,
}

/// Unit-norm direction for the spectral check: the correlation kernel when it
/// is non-zero, otherwise the identity.
fn kernel_direction(sc: &ToyScenario) -> CMatrix {
    let d = sc.d();
    let k = correlation_matrix(&sc.w, &sc.phi0);
    let norm = k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        k / num_complex::Complex64::new(norm, 0.0)
    } else {
        CMatrix::identity(d, d) / num_complex::Complex64::new((d as f64).sqrt(), 0.0)
    }
}

/// Writes `fock_report.json` and `toy_convergence.csv` (N, t, trace_distance, number_expectation).
pub fn fock_stage(file: &FockScenarioFile, sol: &ScatteringSolution, dir: &Path, exec: Execution) -> Result<FockReport> {
    create_dir(dir)?;
    let sc = file.scenario(sol)?;
    let margin = 4;
    let identities = identity_suite(file.n_max, margin)?;
    let direction = kernel_direction(&sc);
    let n_cut = file.n_max.saturating_sub(margin);
    let spectral = file
        .tnt_norms
        .iter()
        .map(|&s| {
            let k = &direction * num_complex::Complex64::new(s, 0.0);
            let candidate = (2.0 * s).exp();
            check_tnt_inequality(&k, n_cut, candidate)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gen_file = file.clone();
    gen_file.amplitude = file.generator_amplitude;
    let gen_sc = gen_file.scenario(sol)?;
    let n_gen = *sc.n_list.iter().max().expect("validated non-empty") as f64;
    let generator = generator_cancellation_check(&gen_sc, &sc.phi0, n_gen, 20)?;
    let toy = toy_main_theorem(&sc, exec)?;
    let rows: Vec<Vec<String>> = toy
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt_f64(r.t), fmt_f64(r.trace_distance), fmt_f64(r.number_expectation)])
        .collect();
    write_csv(&dir.join(TOY_CSV), &["N", "t", "trace_distance", "number_expectation"], &rows)?;
    let max_leakage = toy.rows.iter().map(|r| r.leakage).fold(0.0, f64::max);
    let report = FockReport { identities, spectral, generator, toy, max_leakage };
    write_json(&dir.join(FOCK_JSON), &report)?;
    Ok(report)
}

// ----------------------------------------------------------------- pipeline

/// Outcome of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub dir: PathBuf,
    /// Contents of `report.json`.
    pub report: Value,
    /// Stages served from the cache.
    pub cache_hits: Vec<String>,
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn canonical<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    Ok(to_sorted_json(v)?.into_bytes())
}

fn file_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_err(path, e))
}

/// Copy every regular file under `src` into `dst`, keeping relative paths.
fn copy_tree(src: &Path, dst: &Path) -> Result<()> {
    create_dir(dst)?;
    let mut entries: Vec<_> = fs::read_dir(src).map_err(|e| io_err(src, e))?.collect::<std::io::Result<_>>().map_err(|e| io_err(src, e))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let from = entry.path();
        let to = dst.join(entry.file_name());
        if from.is_dir() {
            copy_tree(&from, &to)?;
        } else {
            fs::copy(&from, &to).map_err(|e| io_err(&from, e))?;
        }
    }
    Ok(())
}

struct Cache {
    root: PathBuf,
    out: PathBuf,
    hits: Vec<String>,
}

impl Cache {
    /// Serve `stage` from the cache or produce it, then copy its files into the output directory.
    fn stage(&mut self, stage: &str, hash: &str, produce: impl FnOnce(&Path) -> Result<Value>) -> Result<Value> {
        let dir = self.root.join(format!("{stage}-{}", &hash[..16]));
        let summary_path = dir.join("summary.json");
        let summary = if summary_path.is_file() {
            self.hits.push(stage.to_string());
            read_json(&summary_path)?
        } else {
            let tmp = self.root.join(format!("{stage}-{}.partial", &hash[..16]));
            if tmp.exists() {
                fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
            }
            create_dir(&tmp)?;
            let summary = produce(&tmp).map_err(|e| e.in_stage(stage, format!("output {}", tmp.display())))?;
            write_json(&tmp.join("summary.json"), &summary)?;
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            }
            fs::rename(&tmp, &dir).map_err(|e| io_err(&dir, e))?;
            summary
        };
        copy_tree(&dir, &self.out)?;
        let stale = self.out.join("summary.json");
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| io_err(&stale, e))?;
        }
        Ok(summary)
    }
}

/// Run every configured stage in dependency order, writing artifacts and
/// `report.json` into the configured output directory.
pub fn run_pipeline(cfg: &ExperimentConfig, exec: Execution) -> Result<ReportBundle> {
    cfg.validate()?;
    let out = cfg.output.dir.clone();
    create_dir(&out)?;
    // Fully regenerated outputs: drop artifacts from earlier runs.
    for name in [SCATTERING_CSV, SCATTERING_JSON, NORMS_CSV, RATES_CSV, EVOLVE_JSON, FINAL_FIELD, KERNEL_CSV, KERNEL_JSON, FOCK_JSON, TOY_CSV, REPORT_JSON] {
        let p = out.join(name);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
        }
    }
    let snaps = out.join(SNAPSHOT_DIR);
    if snaps.exists() {
        fs::remove_dir_all(&snaps).map_err(|e| io_err(&snaps, e))?;
    }
    let mut cache = Cache { root: out.join(CACHE_DIR), out: out.clone(), hits: Vec::new() };
    let version = env!("CARGO_PKG_VERSION").as_bytes();

    let mut potential_input = canonical(&cfg.potential)?;
    if let Some(p) = &cfg.potential.path {
        potential_input.extend(file_bytes(p)?);
    }
    let scattering_hash = hash_parts(&[version, b"scattering", &potential_input]);
    let solution: OnceCell<ScatteringSolution> = OnceCell::new();
    let solve = || -> Result<&ScatteringSolution> {
        if let Some(s) = solution.get() {
            return Ok(s);
        }
        let pot = cfg.potential.potential()?;
        let s = solve_zero_energy(&pot, cfg.potential.r_max, cfg.potential.points).map_err(|e| e.in_stage("scattering", "potential"))?;
        Ok(solution.get_or_init(|| s))
    };

    let mut stages = serde_json::Map::new();
    let scattering = cache.stage("scattering", &scattering_hash, |dir| scattering_stage(solve()?, dir))?;
    let a0_tail = scattering.get("a0_tail").and_then(Value::as_f64).unwrap_or(0.0);
    let a0 = cfg.nonlinearity.a0.unwrap_or(a0_tail);
    let degenerate = cfg.potential.family == "zero" || a0 == 0.0;
    stages.insert("scattering".into(), json!({ "hash": scattering_hash, "summary": scattering }));

    let evolve_input = canonical(&(&cfg.grid, &cfg.nonlinearity, &cfg.datum, &cfg.snapshots, &cfg.sweep))?;
    let evolve_hash = hash_parts(&[version, b"evolve", &evolve_input, scattering_hash.as_bytes()]);
    let evolve = cache.stage("evolve", &evolve_hash, |dir| {
        let inp = EvolveInputs {
            grid: cfg.grid_spec(),
            datum: &cfg.datum,
            kind: cfg.nonlinearity.kind,
            a0,
            n: cfg.nonlinearity.n,
            stride: cfg.snapshots.stride,
            dumps: cfg.snapshots.dumps,
            sweep: cfg.sweep.as_ref().map(|s| (s.n_list.as_slice(), s.t_star)),
        };
        serde_json::to_value(evolve_stage(&inp, solve()?, dir, exec)?).map_err(json_err)
    })?;
    stages.insert("evolve".into(), json!({ "hash": evolve_hash, "summary": evolve }));

    if let Some(k) = &cfg.kernels {
        let upstream = if k.phi == KernelPhi::Evolved { evolve_hash.as_str() } else { "" };
        let kernel_input = canonical(&(k, &cfg.datum))?;
        let kernels_hash = hash_parts(&[version, b"kernels", &kernel_input, scattering_hash.as_bytes(), upstream.as_bytes()]);
        let summary = cache.stage("kernels", &kernels_hash, |dir| {
            let (phi, time) = match k.phi {
                KernelPhi::Datum => (cfg.datum.sample(&GridSpec::new(3, k.box_length, k.points, 1e-3, 0.0))?, 0.0),
                KernelPhi::Evolved => {
                    let dump = read_field(&out.join(FINAL_FIELD))?;
                    (dump.to_wave_function(cfg.grid.dt, cfg.grid.t_final)?, dump.t)
                }
            };
            let opts = KernelOptions { sampling: k.sampling()?, kernel_points: k.kernel_points, time, exec };
            serde_json::to_value(kernels_stage(&phi, solve()?, &k.n_list, &opts, dir)?).map_err(json_err)
        })?;
        stages.insert("kernels".into(), json!({ "hash": kernels_hash, "summary": summary }));
    }

    if let Some(f) = &cfg.fock {
        let file = f.scenario_file()?;
        let fock_hash = hash_parts(&[version, b"fock", &canonical(&file)?, scattering_hash.as_bytes()]);
        let summary = cache.stage("fock", &fock_hash, |dir| serde_json::to_value(fock_stage(&file, solve()?, dir, exec)?).map_err(json_err))?;
        stages.insert("fock".into(), json!({ "hash": fock_hash, "summary": summary }));
    }

    let mut flags = Vec::new();
    if degenerate {
        flags.push("degenerate scenario".to_string());
    }
    let report = json!({
        "seed": cfg.seed,
        "threads": exec.threads(),
        "version": env!("CARGO_PKG_VERSION"),
        "flags": flags,
        "stages": stages,
    });
    write_json(&out.join(REPORT_JSON), &report)?;
    Ok(ReportBundle { dir: out, report, cache_hits: cache.hits })
}
