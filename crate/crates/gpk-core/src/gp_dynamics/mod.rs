//! Pseudo-spectral GP and modified-GP evolution on a periodic box.
//!
//! Units follow `i ∂φ = −Δφ + (interaction) φ`; the free propagator is
//! `exp(−i |k|² dt)` in frequency space.

mod spectral;

pub use spectral::SpectralGrid;

use crate::convergence_bench::fit::{fit_rate, RateReport};
use crate::error::{GpkError, Result};
use crate::exec::Execution;
use crate::scattering::RadialTransform;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Default bound on dt · max|k|² (phase advance of the fastest mode per step).
pub const DEFAULT_STABILITY_BUDGET: f64 = PI;
/// Spectral mass fraction outside the 2/3 box above which norms carry a warning.
pub const ALIASING_TAIL_THRESHOLD: f64 = 1e-8;
/// Tolerated deviation of ‖φ‖₂ from one.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub box_length: f64,
    pub points_per_axis: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_budget")]
    pub stability_budget: f64,
}

fn default_budget() -> f64 {
    DEFAULT_STABILITY_BUDGET
}

impl GridSpec {
    pub fn new(dim: usize, box_length: f64, points_per_axis: usize, dt: f64, t_final: f64) -> Self {
        GridSpec { dim, box_length, points_per_axis, dt, t_final, stability_budget: DEFAULT_STABILITY_BUDGET }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(GpkError::Config(format!("grid.dim must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.points_per_axis < 16 || !self.points_per_axis.is_power_of_two() {
            return Err(GpkError::Config(format!(
                "grid.n must be a power of two ≥ 16, got {}",
                self.points_per_axis
            )));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(GpkError::Config(format!("grid.L must be positive, got {}", self.box_length)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.t_final < 0.0 {
            return Err(GpkError::Config("grid.dt must be positive and grid.T non-negative".into()));
        }
        let phase = self.dt * self.max_k2();
        if phase > self.stability_budget {
            return Err(GpkError::Config(format!(
                "dt·max|k|² = {phase:.4} exceeds the stability budget {}",
                self.stability_budget
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn max_k2(&self) -> f64 {
        let kmax = PI * self.points_per_axis as f64 / self.box_length;
        self.dim as f64 * kmax * kmax
    }

    /// Coordinate of `index` along one axis, in [−L/2, L/2).
    pub fn coordinate(&self, index: usize) -> f64 {
        -0.5 * self.box_length + index as f64 * self.spacing()
    }

    /// Position of a flat (row-major) index.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let n = self.points_per_axis;
        let mut p = [0.0; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            p[axis] = self.coordinate(rem % n);
            rem /= n;
        }
        p
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Complex field on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub values: Vec<Complex64>,
    pub grid: GridSpec,
    pub l2_norm: f64,
}

impl WaveFunction {
    pub fn new(values: Vec<Complex64>, grid: GridSpec) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(GpkError::Config(format!(
                "field has {} values but the grid needs {}",
                values.len(),
                grid.total_points()
            )));
        }
        let l2_norm = l2(&values, grid.cell_volume());
        Ok(WaveFunction { values, grid, l2_norm })
    }

    /// Sample `f` at grid points and normalise to unit L² norm.
    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> Complex64) -> Result<Self> {
        let values: Vec<Complex64> = (0..grid.total_points()).map(|i| f(grid.position(i))).collect();
        let mut psi = WaveFunction::new(values, grid.clone())?;
        psi.normalize()?;
        Ok(psi)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = l2(&self.values, self.grid.cell_volume());
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(GpkError::Domain("cannot normalise a zero or non-finite field".into()));
        }
        for z in &mut self.values {
            *z /= norm;
        }
        self.l2_norm = l2(&self.values, self.grid.cell_volume());
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// ‖self − other‖₂ on the shared grid.
    pub fn distance(&self, other: &WaveFunction) -> f64 {
        let d: Vec<Complex64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        l2(&d, self.grid.cell_volume())
    }
}

impl WaveFunction {
    /// Spectral resampling onto `points` per axis (same box), renormalised.
    ///
    /// Modes representable on both grids are kept; the Nyquist mode of the
    /// smaller grid is dropped so real fields stay real.
    pub fn resample(&self, points: usize) -> Result<WaveFunction> {
        let src = &self.grid;
        if points == src.points_per_axis {
            return Ok(self.clone());
        }
        if points < 2 || points % 2 != 0 {
            return Err(GpkError::Config(format!("resample target must be even and ≥ 2, got {points}")));
        }
        let mut target = src.clone();
        target.points_per_axis = points;
        let (n_src, n_dst, d) = (src.points_per_axis, points, src.dim);
        let keep = n_src.min(n_dst) / 2;
        let mut hat = self.values.clone();
        SpectralGrid::new(src).forward(&mut hat);
        let mut out = vec![Complex64::new(0.0, 0.0); target.total_points()];
        let scale = target.total_points() as f64 / src.total_points() as f64;
        'modes: for (idx, z) in hat.iter().enumerate() {
            let mut rem = idx;
            let mut dst = 0;
            let mut stride = 1;
            for _ in 0..d {
                let i = rem % n_src;
                rem /= n_src;
                let m = if i <= n_src / 2 { i as i64 } else { i as i64 - n_src as i64 };
                if m.unsigned_abs() as usize >= keep {
                    continue 'modes;
                }
                dst += m.rem_euclid(n_dst as i64) as usize * stride;
                stride *= n_dst;
            }
            out[dst] = z * scale;
        }
        SpectralGrid::new(&target).inverse(&mut out);
        let mut psi = WaveFunction::new(out, target)?;
        psi.normalize()?;
        Ok(psi)
    }
}

pub(crate) fn l2(values: &[Complex64], cell: f64) -> f64 {
    (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell).sqrt()
}

/// Initial data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Datum {
    /// (πσ²)^{−d/4} exp(−|x−c|²/2σ²) e^{i k·x}
    Gaussian {
        width: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        momentum: [f64; 3],
    },
    /// L^{−d/2}
    Constant,
    /// e^{2πi m·x/L} / L^{d/2}
    PlaneWave { mode: [i64; 3] },
}

impl Datum {
    pub fn sample(&self, grid: &GridSpec) -> Result<WaveFunction> {
        let d = grid.dim;
        match self {
            Datum::Gaussian { width, center, momentum } => {
                if !(*width > 0.0) {
                    return Err(GpkError::Config(format!("gaussian datum width must be positive, got {width}")));
                }
                let pref = (PI * width * width).powf(-(d as f64) / 4.0);
                WaveFunction::from_fn(grid, |x| {
                    let mut r2 = 0.0;
                    let mut phase = 0.0;
                    for a in 0..d {
                        r2 += (x[a] - center[a]).powi(2);
                        phase += momentum[a] * x[a];
                    }
                    Complex64::from_polar(pref * (-r2 / (2.0 * width * width)).exp(), phase)
                })
            }
            Datum::Constant => WaveFunction::from_fn(grid, |_| Complex64::new(1.0, 0.0)),
            Datum::PlaneWave { mode } => {
                let k = 2.0 * PI / grid.box_length;
                WaveFunction::from_fn(grid, |x| {
                    let phase: f64 = (0..d).map(|a| k * mode[a] as f64 * x[a]).sum();
                    Complex64::from_polar(1.0, phase)
                })
            }
        }
    }
}

/// Interaction term of the evolution equation.
#[derive(Debug, Clone)]
pub enum NonlinearitySpec {
    /// 8π a0 |φ|² φ
    Gp { a0: f64 },
    /// (N³ U(N·) ∗ |φ|²) φ with U = V f, applied as Û(|k|/N).
    Modified { n: f64, uhat: RadialTransform },
}

impl NonlinearitySpec {
    /// Interaction multiplier at every flat index of the frequency grid.
    pub fn multiplier(&self, spec: &SpectralGrid) -> Vec<f64> {
        match self {
            NonlinearitySpec::Gp { a0 } => vec![8.0 * PI * a0; spec.len()],
            NonlinearitySpec::Modified { n, uhat } => {
                let dk = 2.0 * PI / spec.grid.box_length;
                let mut cache: HashMap<usize, f64> = HashMap::new();
                spec.m2
                    .iter()
                    .map(|&m2| *cache.entry(m2).or_insert_with(|| uhat.eval(dk * (m2 as f64).sqrt() / n)))
                    .collect()
            }
        }
    }
}

/// Precomputed operators for one (grid, nonlinearity) pair.
pub struct Propagator {
    pub spectral: SpectralGrid,
    /// Dealiased interaction multiplier.
    interaction: Vec<f64>,
}

impl Propagator {
    pub fn new(grid: &GridSpec, nl: &NonlinearitySpec) -> Result<Self> {
        Self::with_exec(grid, nl, Execution::default())
    }

    pub fn with_exec(grid: &GridSpec, nl: &NonlinearitySpec, exec: Execution) -> Result<Self> {
        grid.validate()?;
        let spectral = SpectralGrid::with_exec(grid, exec);
        let mut interaction = nl.multiplier(&spectral);
        for (m, keep) in interaction.iter_mut().zip(&spectral.dealias) {
            if !keep {
                *m = 0.0;
            }
        }
        Ok(Propagator { spectral, interaction })
    }

    /// Mean-field potential Φ = P(Û ρ̂) in position space.
    pub fn potential(&self, psi: &[Complex64]) -> Vec<f64> {
        let mut rho: Vec<Complex64> = psi.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
        self.spectral.forward(&mut rho);
        for (z, m) in rho.iter_mut().zip(&self.interaction) {
            *z *= *m;
        }
        self.spectral.inverse(&mut rho);
        rho.iter().map(|z| z.re).collect()
    }

    fn nonlinear_phase(&self, psi: &mut [Complex64], tau: f64) {
        let pot = self.potential(psi);
        for (z, v) in psi.iter_mut().zip(pot) {
            *z *= Complex64::from_polar(1.0, -v * tau);
        }
    }

    /// exp(−i|k|² dt) at every frequency.
    fn free_factors(&self, dt: f64) -> Vec<Complex64> {
        self.spectral.k2.iter().map(|k2| Complex64::from_polar(1.0, -k2 * dt)).collect()
    }

    fn free_step(&self, psi: &mut [Complex64], factors: &[Complex64]) {
        self.spectral.forward(psi);
        for (z, f) in psi.iter_mut().zip(factors) {
            *z *= f;
        }
        self.spectral.inverse(psi);
    }

    /// H φ = −Δφ + Φ φ.
    pub fn hamiltonian_action(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut lap = psi.to_vec();
        self.spectral.forward(&mut lap);
        for (z, k2) in lap.iter_mut().zip(&self.spectral.k2) {
            *z *= k2;
        }
        self.spectral.inverse(&mut lap);
        let pot = self.potential(psi);
        lap.iter().zip(psi).zip(pot).map(|((l, z), v)| l + z * v).collect()
    }

    /// ∂φ/∂t = −i H φ.
    pub fn time_derivative(&self, psi: &WaveFunction) -> WaveFunction {
        let values: Vec<Complex64> =
            self.hamiltonian_action(&psi.values).into_iter().map(|z| z * Complex64::new(0.0, -1.0)).collect();
        let l2_norm = l2(&values, psi.grid.cell_volume());
        WaveFunction { values, grid: psi.grid.clone(), l2_norm }
    }

    /// Discrete energy: ∫|∇φ|² + ½∫|φ|² Φ.
    pub fn energy(&self, psi: &[Complex64]) -> f64 {
        let cell = self.spectral.grid.cell_volume();
        let mut hat = psi.to_vec();
        self.spectral.forward(&mut hat);
        let n_total = psi.len() as f64;
        let kinetic: f64 = hat.iter().zip(&self.spectral.k2).map(|(z, k2)| k2 * z.norm_sqr()).sum::<f64>() * cell / n_total;
        let pot = self.potential(psi);
        let interaction: f64 = psi.iter().zip(pot).map(|(z, v)| z.norm_sqr() * v).sum::<f64>() * cell;
        kinetic + 0.5 * interaction
    }

    /// Evolve over `steps` steps of size `dt` (negative dt runs backwards).
    /// `observe` is called after every `stride` steps with (step, state).
    pub fn run(
        &self,
        psi: &mut Vec<Complex64>,
        dt: f64,
        steps: usize,
        stride: usize,
        t0: f64,
        mut observe: impl FnMut(usize, &[Complex64]),
    ) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        let cell = self.spectral.grid.cell_volume();
        let factors = self.free_factors(dt);
        let mut half_pending = true;
        for step in 1..=steps {
            if half_pending {
                self.nonlinear_phase(psi, 0.5 * dt);
            }
            self.free_step(psi, &factors);
            let emit = stride > 0 && step % stride == 0;
            if emit || step == steps {
                self.nonlinear_phase(psi, 0.5 * dt);
                half_pending = true;
            } else {
                // Two consecutive half phases share the same density, so they merge exactly.
                self.nonlinear_phase(psi, dt);
                half_pending = false;
            }
            let mass = l2(psi, cell);
            if !mass.is_finite() {
                return Err(GpkError::Blowup {
                    last_good_time: t0 + (step - 1) as f64 * dt,
                    message: "non-finite field value".into(),
                });
            }
            if emit {
                observe(step, psi);
            }
        }
        Ok(())
    }
}

/// Snapshot sequence returned by [`evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
}

impl Trajectory {
    pub fn last(&self) -> &WaveFunction {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Strang-split evolution from 0 to `grid.t_final` with snapshots every `stride` steps.
pub fn evolve(psi0: &WaveFunction, nl: &NonlinearitySpec, grid: &GridSpec, stride: usize) -> Result<Trajectory> {
    let prop = Propagator::new(grid, nl)?;
    evolve_with(&prop, psi0, grid, stride)
}

pub fn evolve_with(prop: &Propagator, psi0: &WaveFunction, grid: &GridSpec, stride: usize) -> Result<Trajectory> {
    if psi0.grid != *grid {
        return Err(GpkError::Config("initial datum lives on a different grid".into()));
    }
    if (psi0.l2_norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(GpkError::Domain(format!("initial datum is not normalised: ‖ψ0‖ = {}", psi0.l2_norm)));
    }
    let steps = grid.steps();
    let stride = if stride == 0 { steps.max(1) } else { stride };
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut psi = psi0.values.clone();
    let mut failure = None;
    prop.run(&mut psi, grid.dt, steps, stride, 0.0, |step, state| {
        let wf = WaveFunction { values: state.to_vec(), grid: grid.clone(), l2_norm: l2(state, grid.cell_volume()) };
        if (wf.l2_norm - 1.0).abs() > NORM_TOLERANCE && failure.is_none() {
            failure = Some(GpkError::Invariant(format!("‖φ‖₂ = {} after step {step}", wf.l2_norm)));
        }
        times.push(step as f64 * grid.dt);
        states.push(wf);
    })?;
    if let Some(err) = failure {
        return Err(err);
    }
    if steps % stride != 0 {
        let l2_norm = l2(&psi, grid.cell_volume());
        times.push(steps as f64 * grid.dt);
        states.push(WaveFunction { values: psi, grid: grid.clone(), l2_norm });
    }
    Ok(Trajectory { times, states })
}

/// Energy functional consistent with `nl`.
pub fn gp_energy(psi: &WaveFunction, nl: &NonlinearitySpec) -> Result<f64> {
    let prop = Propagator::new(&psi.grid, nl)?;
    Ok(prop.energy(&psi.values))
}

/// Sobolev norm with its aliasing diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevNorm {
    pub value: f64,
    /// Spectral mass outside the 2/3 box relative to the total.
    pub tail_fraction: f64,
    pub aliasing_warning: bool,
}

/// Σ_{|α|≤n} Π k_i^{2α_i}, i.e. the sum of complete homogeneous symmetric
/// polynomials h_0..h_n in the squared components.
fn sobolev_weight(k2s: &[f64], n: u32) -> f64 {
    // h_m(x_1..x_d) via h_m = Σ_j x_j-recursion over variables.
    let mut h = vec![0.0; n as usize + 1];
    h[0] = 1.0;
    for &x in k2s {
        for m in 1..=n as usize {
            h[m] += x * h[m - 1];
        }
    }
    h.iter().sum()
}

/// ‖φ‖_{H^n} from frequency multipliers.
pub fn sobolev_norm(psi: &WaveFunction, n: u32) -> Result<SobolevNorm> {
    if !(1..=4).contains(&n) {
        return Err(GpkError::Config(format!("Sobolev order must be in 1..=4, got {n}")));
    }
    let spectral = SpectralGrid::new(&psi.grid);
    Ok(sobolev_norm_with(&spectral, psi, n))
}

pub fn sobolev_norm_with(spectral: &SpectralGrid, psi: &WaveFunction, n: u32) -> SobolevNorm {
    let mut hat = psi.values.clone();
    spectral.forward(&mut hat);
    let dim = psi.grid.dim;
    let scale = psi.grid.cell_volume() / hat.len() as f64;
    let mut sum = 0.0;
    let mut total = 0.0;
    let mut tail = 0.0;
    let mut comps = [0.0; 3];
    for (idx, z) in hat.iter().enumerate() {
        for (a, c) in comps.iter_mut().enumerate().take(dim) {
            *c = spectral.k_component(idx, a).powi(2);
        }
        let p = z.norm_sqr();
        sum += p * sobolev_weight(&comps[..dim], n);
        total += p;
        if !spectral.dealias[idx] {
            tail += p;
        }
    }
    let tail_fraction = if total > 0.0 { tail / total } else { 0.0 };
    SobolevNorm { value: (sum * scale).sqrt(), tail_fraction, aliasing_warning: tail_fraction > ALIASING_TAIL_THRESHOLD }
}

/// Observables along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevReport {
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub energy: Vec<f64>,
    /// h_norms[n-1][i] = ‖φ_{t_i}‖_{H^n}
    pub h_norms: [Vec<f64>; 4],
    pub aliasing_warning: bool,
}

pub fn sobolev_report(traj: &Trajectory, nl: &NonlinearitySpec) -> Result<SobolevReport> {
    let grid = &traj.last().grid;
    let prop = Propagator::new(grid, nl)?;
    let mut report = SobolevReport {
        times: traj.times.clone(),
        l2: vec![],
        energy: vec![],
        h_norms: Default::default(),
        aliasing_warning: false,
    };
    for psi in &traj.states {
        report.l2.push(psi.l2_norm);
        report.energy.push(prop.energy(&psi.values));
        for n in 1..=4u32 {
            let s = sobolev_norm_with(&prop.spectral, psi, n);
            report.aliasing_warning |= s.aliasing_warning;
            report.h_norms[n as usize - 1].push(s.value);
        }
    }
    Ok(report)
}

/// Fit of log‖φ_t‖_{H^n} ≈ log C + K t (exponential growth envelope).
pub fn exponential_envelope(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    if times.len() < 2 || values.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let n = times.len() as f64;
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let stt: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    if stt == 0.0 {
        return None;
    }
    let sty: f64 = times.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let k = sty / stt;
    // Smallest C so that the envelope dominates every sample.
    let c = times.iter().zip(&ys).map(|(t, y)| y - k * t).fold(f64::NEG_INFINITY, f64::max).exp();
    Some((c, k))
}

/// Outcome of the modified-vs-GP comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n_values: Vec<f64>,
    pub l2_differences: Vec<f64>,
    pub t_star: f64,
    /// None when the differences vanish or are too few to fit.
    pub fit: Option<RateReport>,
    /// Differences decrease strictly with N.
    pub monotone: bool,
    pub flags: Vec<String>,
    /// Not serialised: cached summaries must not depend on the thread count.
    #[serde(skip)]
    pub threads: usize,
}

/// ‖φ^{(N)}_{t*} − φ_{t*}‖₂ for each N, with the log-log slope.
pub fn compare_dynamics(
    psi0: &WaveFunction,
    a0: f64,
    uhat: &RadialTransform,
    n_list: &[f64],
    t_star: f64,
    exec: Execution,
) -> Result<ComparisonReport> {
    if n_list.len() < 4 {
        return Err(GpkError::Config(format!("comparison needs ≥ 4 values of N, got {}", n_list.len())));
    }
    let mut grid = psi0.grid.clone();
    grid.t_final = t_star;
    grid.validate()?;
    let reference = evolve(psi0, &NonlinearitySpec::Gp { a0 }, &grid, 0)?;
    let phi_ref = reference.last().clone();
    let results: Vec<Result<f64>> = exec.map(n_list, |&n| {
        let nl = NonlinearitySpec::Modified { n, uhat: uhat.clone() };
        // FFT lines stay sequential inside each worker; the sweep is the parallel axis.
        let prop = Propagator::with_exec(&grid, &nl, Execution::Sequential)?;
        let traj = evolve_with(&prop, psi0, &grid, 0)?;
        Ok(traj.last().distance(&phi_ref))
    });
    let l2_differences = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let monotone = l2_differences.windows(2).all(|p| p[1] < p[0]);
    let mut flags = Vec::new();
    let fit = if l2_differences.iter().all(|&d| d > 0.0) {
        Some(fit_rate(n_list, &l2_differences)?)
    } else {
        flags.push("slope undefined: vanishing differences".to_string());
        None
    };
    if !monotone && fit.is_some() {
        flags.push("non-monotone differences across N (resolution artifact)".to_string());
    }
    Ok(ComparisonReport {
        n_values: n_list.to_vec(),
        l2_differences,
        t_star,
        fit,
        monotone,
        flags,
        threads: exec.threads(),
    })
}
