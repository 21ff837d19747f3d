//! Experiment configuration: a TOML file with one table per stage.
//!
//! ```toml
//! seed = 0                          # recorded only; the pipeline is deterministic
//!
//! [potential]                       # family = square-well | gaussian | zero | file
//! family = "square-well"
//! height = 8.0
//! radius = 1.0
//! r_max = 5.0
//! points = 2001
//!
//! [grid]
//! dim = 1
//! box_length = 40.0
//! points = 512
//! dt = 1e-3
//! t_final = 0.5
//!
//! [nonlinearity]                    # kind = gp | modified (needs n)
//! kind = "gp"
//!
//! [datum]                           # family = gaussian | constant | plane-wave
//! family = "gaussian"
//! width = 1.0
//! momentum = [0.5, 0.0, 0.0]
//!
//! [snapshots]
//! stride = 250
//!
//! [sweep]                           # optional: modified GP against GP
//! n_list = [8, 16, 32, 64]
//! t_star = 0.5
//!
//! [kernels]                         # optional: 3D kernel bounds
//! n_list = [4, 8, 16, 32]
//!
//! [fock]                            # optional: toy Fock scenario
//! scenario = "toy.toml"
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected; errors name the file, the key path and the
//! line and column reported by the TOML parser.

use crate::error::{GpkError, Result};
use crate::fock_lab::{profile_kernel, ToyScenario};
use crate::gp_dynamics::{Datum, GridSpec};
use crate::scattering::{PotentialShape, RadialPotential, ScatteringSolution};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub potential: PotentialSection,
    pub grid: GridSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    pub datum: Datum,
    #[serde(default)]
    pub snapshots: SnapshotSection,
    pub sweep: Option<SweepSection>,
    pub kernels: Option<KernelSection>,
    pub fock: Option<FockSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub family: String,
    pub height: Option<f64>,
    pub radius: Option<f64>,
    pub strength: Option<f64>,
    pub range: Option<f64>,
    /// Two-column (radius, value) table for `family = "file"`.
    pub path: Option<PathBuf>,
    pub r_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub box_length: f64,
    pub points: usize,
    pub dt: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    #[default]
    Gp,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default)]
    pub kind: NonlinearityKind,
    /// Overrides the scattering length from the potential.
    pub a0: Option<f64>,
    /// Particle number for the modified equation.
    pub n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSection {
    /// Steps between snapshots; 0 keeps only the first and last state.
    #[serde(default)]
    pub stride: usize,
    /// Write a binary field dump for every snapshot.
    #[serde(default = "yes")]
    pub dumps: bool,
}

impl Default for SnapshotSection {
    fn default() -> Self {
        SnapshotSection { stride: 0, dumps: true }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_list: Vec<f64>,
    pub t_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelPhi {
    /// The datum sampled on the kernel grid.
    #[default]
    Datum,
    /// The final GP state (needs a 3D grid).
    Evolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub n_list: Vec<f64>,
    #[serde(default)]
    pub phi: KernelPhi,
    #[serde(default = "kernel_box")]
    pub box_length: f64,
    #[serde(default = "kernel_points")]
    pub points: usize,
    /// Points per axis of the coarse grid for the dense k k̄ product.
    #[serde(default = "kernel_dense_points")]
    pub kernel_points: usize,
    #[serde(default = "cell_average")]
    pub sampling: String,
}

fn kernel_box() -> f64 {
    8.0
}
fn kernel_points() -> usize {
    32
}
fn kernel_dense_points() -> usize {
    16
}
fn cell_average() -> String {
    "cell-average".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    /// Scenario file, same format as `gpk fock --scenario`.
    pub scenario: PathBuf,
}

/// Toy Fock scenario: modes, one-body matrix, density-density pair matrix,
/// mean-field coupling g/N, correlation source, times and particle numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockScenarioFile {
    pub d: usize,
    /// Cutoff for the identity and spectral checks.
    #[serde(default = "identity_n_max")]
    pub n_max: usize,
    pub h: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub coupling: f64,
    /// Only the mean-field law g/N is supported.
    #[serde(default = "mean_field")]
    pub coupling_law: String,
    /// Real parts of φ0; normalised on load.
    pub phi0: Vec<f64>,
    #[serde(default)]
    pub phi0_imag: Option<Vec<f64>>,
    /// `profile` (W = amplitude · w(separation)) or `none` (K0 = 0).
    #[serde(default = "profile")]
    pub kernel: String,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub separations: Option<Vec<Vec<f64>>>,
    pub times: Vec<f64>,
    pub n_list: Vec<usize>,
    #[serde(default = "margin")]
    pub margin: usize,
    #[serde(default = "ode_steps")]
    pub ode_steps: usize,
    /// Amplitude for the linear-term cancellation check.
    #[serde(default = "generator_amplitude")]
    pub generator_amplitude: f64,
    /// Hilbert–Schmidt norms for the T*𝒩T spectral constant.
    #[serde(default = "tnt_norms")]
    pub tnt_norms: Vec<f64>,
}

fn identity_n_max() -> usize {
    10
}
fn one() -> f64 {
    1.0
}
fn mean_field() -> String {
    "mean-field".into()
}
fn profile() -> String {
    "profile".into()
}
fn margin() -> usize {
    32
}
fn ode_steps() -> usize {
    4000
}
fn generator_amplitude() -> f64 {
    0.05
}
fn tnt_norms() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 1.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let at = e
            .span()
            .map(|span| {
                let line = text[..span.start].matches('\n').count() + 1;
                let col = span.start - text[..span.start].rfind('\n').map_or(0, |p| p + 1) + 1;
                format!(" at line {line}, column {col}")
            })
            .unwrap_or_default();
        GpkError::Config(format!("{}{at}: {msg}", origin.display()))
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| GpkError::io(path.display().to_string(), e))
}

/// Relative paths inside a config resolve against the config's directory.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.potential.path {
            cfg.potential.path = Some(resolve(base, p));
        }
        if let Some(fock) = &mut cfg.fock {
            fock.scenario = resolve(base, &fock.scenario);
        }
        cfg.output.dir = resolve(base, &cfg.output.dir);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse without resolving paths or validating.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        parse_toml(text, origin)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.shape()?;
        self.grid_spec().validate().map_err(|e| prefix("grid", e))?;
        match self.nonlinearity.kind {
            NonlinearityKind::Modified if !self.nonlinearity.n.is_some_and(|n| n >= 1.0) => {
                return Err(GpkError::Config("nonlinearity.n: the modified equation needs n ≥ 1".into()));
            }
            _ => {}
        }
        if let Some(a0) = self.nonlinearity.a0 {
            if !(a0 >= 0.0 && a0.is_finite()) {
                return Err(GpkError::Config(format!("nonlinearity.a0: must be finite and non-negative, got {a0}")));
            }
        }
        if let Some(s) = &self.sweep {
            if s.n_list.len() < 4 || s.n_list.iter().any(|&n| !(n >= 1.0)) {
                return Err(GpkError::Config("sweep.n_list: needs at least four values, all ≥ 1".into()));
            }
            if !(s.t_star > 0.0) {
                return Err(GpkError::Config("sweep.t_star: must be positive".into()));
            }
        }
        if let Some(k) = &self.kernels {
            if k.n_list.is_empty() || k.n_list.iter().any(|&n| !(n >= 1.0)) {
                return Err(GpkError::Config("kernels.n_list: needs at least one value, all ≥ 1".into()));
            }
            k.sampling()?;
            if k.phi == KernelPhi::Evolved && self.grid.dim != 3 {
                return Err(GpkError::Config("kernels.phi: `evolved` needs grid.dim = 3".into()));
            }
            if k.kernel_points > k.points && k.phi == KernelPhi::Datum {
                return Err(GpkError::Config("kernels.kernel_points: must not exceed kernels.points".into()));
            }
        }
        if let Some(f) = &self.fock {
            f.scenario_file()?;
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        let g = &self.grid;
        GridSpec::new(g.dim, g.box_length, g.points, g.dt, g.t_final)
    }
}

fn prefix(section: &str, e: GpkError) -> GpkError {
    match e {
        GpkError::Config(m) => GpkError::Config(format!("{section}: {m}")),
        other => other,
    }
}

impl PotentialSection {
    fn need(&self, v: Option<f64>, key: &str) -> Result<f64> {
        v.ok_or_else(|| GpkError::Config(format!("potential.{key}: required for family `{}`", self.family)))
    }

    /// Potential described by this section; reads the table for `family = "file"`.
    pub fn shape(&self) -> Result<PotentialShape> {
        match self.family.as_str() {
            "zero" => Ok(PotentialShape::Zero),
            "square-well" => Ok(PotentialShape::SquareWell {
                height: self.need(self.height, "height")?,
                radius: self.need(self.radius, "radius")?,
            }),
            "gaussian" => Ok(PotentialShape::Gaussian {
                strength: self.need(self.strength, "strength")?,
                range: self.need(self.range, "range")?,
            }),
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| GpkError::Config("potential.path: required for family `file`".into()))?;
                if !path.is_file() {
                    return Err(GpkError::Config(format!("potential.path: file {} does not exist", path.display())));
                }
                let (radii, values) = read_potential_table(path)?;
                Ok(PotentialShape::Tabulated { radii, values })
            }
            other => Err(GpkError::Config(format!(
                "potential.family: unknown family `{other}` (expected square-well, gaussian, zero or file)"
            ))),
        }
    }

    pub fn potential(&self) -> Result<RadialPotential> {
        RadialPotential::new(self.shape()?).map_err(|e| prefix("potential", e))
    }
}

/// Two whitespace- or comma-separated columns (radius, value); `#` starts a comment.
pub fn read_potential_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = read_text(path)?;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parse = |s: &str| s.parse::<f64>().ok();
        match cols.as_slice() {
            [r, v] => match (parse(r), parse(v)) {
                (Some(r), Some(v)) => {
                    radii.push(r);
                    values.push(v);
                }
                _ => return Err(GpkError::Config(format!("{} line {}: expected two numbers", path.display(), i + 1))),
            },
            _ => return Err(GpkError::Config(format!("{} line {}: expected two columns", path.display(), i + 1))),
        }
    }
    Ok((radii, values))
}

impl KernelSection {
    pub fn sampling(&self) -> Result<crate::correlation_kernels::Sampling> {
        use crate::correlation_kernels::Sampling;
        match self.sampling.as_str() {
            "cell-average" => Ok(Sampling::CellAverage),
            "point" => Ok(Sampling::Point),
            other => Err(GpkError::Config(format!("kernels.sampling: unknown `{other}` (expected cell-average or point)"))),
        }
    }
}

impl FockSection {
    pub fn scenario_file(&self) -> Result<FockScenarioFile> {
        if !self.scenario.is_file() {
            return Err(GpkError::Config(format!("fock.scenario: file {} does not exist", self.scenario.display())));
        }
        FockScenarioFile::load(&self.scenario)
    }
}

fn matrix(rows: &[Vec<f64>], d: usize, key: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(GpkError::Config(format!("fock.{key}: expected a {d}×{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl FockScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        parse_toml(&read_text(path)?, path)
    }

    /// Scenario with the correlation matrix built from the scattering profile.
    pub fn scenario(&self, sol: &ScatteringSolution) -> Result<ToyScenario> {
        let d = self.d;
        if d == 0 {
            return Err(GpkError::Config("fock.d: must be positive".into()));
        }
        if self.coupling_law != "mean-field" {
            return Err(GpkError::Config(format!("fock.coupling_law: unsupported `{}` (only mean-field)", self.coupling_law)));
        }
        let h = matrix(&self.h, d, "h")?;
        let v = matrix(&self.v, d, "v")?;
        if self.phi0.len() != d {
            return Err(GpkError::Config(format!("fock.phi0: expected {d} entries")));
        }
        let imag = self.phi0_imag.clone().unwrap_or_else(|| vec![0.0; d]);
        if imag.len() != d {
            return Err(GpkError::Config(format!("fock.phi0_imag: expected {d} entries")));
        }
        let mut phi0: Vec<Complex64> = self.phi0.iter().zip(&imag).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let norm = phi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(GpkError::Config("fock.phi0: must be non-zero".into()));
        }
        phi0.iter_mut().for_each(|z| *z /= norm);
        let w = match self.kernel.as_str() {
            "none" => DMatrix::zeros(d, d),
            "profile" => {
                let sep = match &self.separations {
                    Some(rows) => matrix(rows, d, "separations")?,
                    None => DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { std::f64::consts::SQRT_2 }),
                };
                profile_kernel(sol, &sep, self.amplitude)
            }
            other => return Err(GpkError::Config(format!("fock.kernel: unknown source `{other}` (expected profile or none)"))),
        };
        let sc = ToyScenario {
            h,
            v,
            coupling: self.coupling,
            w,
            phi0,
            times: self.times.clone(),
            n_list: self.n_list.clone(),
            margin: self.margin,
            ode_steps: self.ode_steps,
        };
        sc.validate().map_err(|e| prefix("fock", e))?;
        Ok(sc)
    }
}
