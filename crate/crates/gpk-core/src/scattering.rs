//! Zero-energy scattering problem for radial, non-negative potentials.
//!
//! The profile is obtained from the radial reduction `u(r) = r f(r)` with
//! `u'' = (V/2) u`, `u(0) = 0`, normalised so that `u(r) -> r - a0`.

use crate::error::{GpkError, Result};
use crate::quadrature::GaussLegendre;
use serde::{Deserialize, Serialize};

/// Fraction of `∫ r² V` that the support radius must enclose for non-compact shapes.
pub const SUPPORT_MASS_FRACTION: f64 = 1.0 - 1e-10;
/// Minimum number of radial grid points.
pub const MIN_POINTS: usize = 1000;
/// Required ratio between the radial box and the support radius.
pub const MIN_RMAX_OVER_SUPPORT: f64 = 5.0;

/// Analytic or tabulated potential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PotentialShape {
    Zero,
    SquareWell { height: f64, radius: f64 },
    /// `strength * exp(-(r/range)²)`
    Gaussian { strength: f64, range: f64 },
    /// Linear interpolation between samples; zero beyond the last radius.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

/// Which one-sided limit to take at a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    pub shape: PotentialShape,
    /// V is treated as zero for r > r_support.
    pub r_support: f64,
    /// ∫ V over ℝ³.
    pub l1_norm: f64,
    /// (∫ V³ (1 + |x|⁶) dx)^{1/3}
    pub l3_weighted_norm: f64,
}

impl RadialPotential {
    pub fn zero() -> Self {
        Self::new(PotentialShape::Zero).expect("zero potential is valid")
    }

    pub fn square_well(height: f64, radius: f64) -> Result<Self> {
        Self::new(PotentialShape::SquareWell { height, radius })
    }

    pub fn gaussian(strength: f64, range: f64) -> Result<Self> {
        Self::new(PotentialShape::Gaussian { strength, range })
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(PotentialShape::Tabulated { radii, values })
    }

    pub fn new(shape: PotentialShape) -> Result<Self> {
        let r_support = match &shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::SquareWell { height, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(GpkError::Config(format!("square-well radius must be positive, got {radius}")));
                }
                if !(height.is_finite() && *height >= 0.0) {
                    return Err(GpkError::Domain(format!("square-well height must be non-negative, got {height}")));
                }
                *radius
            }
            PotentialShape::Gaussian { strength, range } => {
                if !(range.is_finite() && *range > 0.0) {
                    return Err(GpkError::Config(format!("gaussian range must be positive, got {range}")));
                }
                if !(strength.is_finite() && *strength >= 0.0) {
                    return Err(GpkError::Domain(format!("gaussian strength must be non-negative, got {strength}")));
                }
                let (s, l) = (*strength, *range);
                support_by_mass(move |r| s * (-(r / l).powi(2)).exp(), 12.0 * l)
            }
            PotentialShape::Tabulated { radii, values } => {
                if radii.len() != values.len() || radii.len() < 2 {
                    return Err(GpkError::Config("tabulated potential needs ≥ 2 (radius, value) rows".into()));
                }
                if radii[0] < 0.0 || radii.windows(2).any(|p| p[1] <= p[0]) {
                    return Err(GpkError::Config("tabulated radii must be non-negative and strictly increasing".into()));
                }
                if let Some((r, v)) = radii.iter().zip(values).find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                    return Err(GpkError::Domain(format!("negative or non-finite potential sample {v} at r = {r}")));
                }
                let last = values.iter().rposition(|v| v.abs() > 1e-12);
                match last {
                    None => 0.0,
                    Some(i) if i + 1 < radii.len() => radii[i + 1],
                    Some(i) => radii[i],
                }
            }
        };
        let mut pot = RadialPotential { shape, r_support, l1_norm: 0.0, l3_weighted_norm: 0.0 };
        let rule = GaussLegendre::new(16);
        let edges = pot.panel_edges(0.0, r_support, 400);
        let (mut l1, mut l3) = (0.0, 0.0);
        for p in edges.windows(2) {
            for (r, w) in rule.on(p[0], p[1]) {
                let v = pot.value(r);
                let shell = 4.0 * std::f64::consts::PI * r * r * w;
                l1 += shell * v;
                l3 += shell * v.powi(3) * (1.0 + r.powi(6));
            }
        }
        pot.l1_norm = l1;
        pot.l3_weighted_norm = l3.cbrt();
        Ok(pot)
    }

    pub fn is_zero(&self) -> bool {
        self.r_support == 0.0
    }

    /// V(r), taking the limit from below at discontinuities.
    pub fn value(&self, r: f64) -> f64 {
        self.value_side(r, Side::Below)
    }

    /// One-sided value of V at r.
    pub fn value_side(&self, r: f64, side: Side) -> f64 {
        let inside = match side {
            Side::Below => r <= self.r_support,
            Side::Above => r < self.r_support,
        };
        if !inside {
            return 0.0;
        }
        match &self.shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::SquareWell { height, .. } => *height,
            PotentialShape::Gaussian { strength, range } => strength * (-(r / range).powi(2)).exp(),
            PotentialShape::Tabulated { radii, values } => {
                if r <= radii[0] {
                    return values[0];
                }
                let j = radii.partition_point(|&x| x < r).min(radii.len() - 1);
                let (r0, r1) = (radii[j - 1], radii[j]);
                let t = (r - r0) / (r1 - r0);
                values[j - 1] + t * (values[j] - values[j - 1])
            }
        }
    }

    /// Radii where V or its derivative is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            PotentialShape::Zero => vec![],
            PotentialShape::SquareWell { radius, .. } => vec![*radius],
            PotentialShape::Gaussian { .. } => vec![self.r_support],
            PotentialShape::Tabulated { radii, .. } => {
                radii.iter().copied().filter(|&r| r > 0.0 && r <= self.r_support).collect()
            }
        }
    }

    /// Values of V on a radial grid (the `samples` view of the potential).
    pub fn samples(&self, r_grid: &[f64]) -> Vec<f64> {
        r_grid.iter().map(|&r| self.value(r)).collect()
    }

    /// `panels` equal panels on [a, b], refined so that every breakpoint is an edge.
    fn panel_edges(&self, a: f64, b: f64, panels: usize) -> Vec<f64> {
        if b <= a {
            return vec![a];
        }
        let mut edges: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
        edges.extend(self.breakpoints().into_iter().filter(|&x| x > a && x < b));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }
}

/// Smallest radius enclosing `SUPPORT_MASS_FRACTION` of `∫₀^r_hi s² v(s) ds`.
fn support_by_mass(v: impl Fn(f64) -> f64, r_hi: f64) -> f64 {
    let rule = GaussLegendre::new(16);
    let panels = 2000;
    let h = r_hi / panels as f64;
    let mut cumulative = Vec::with_capacity(panels + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for i in 0..panels {
        acc += rule.integrate(i as f64 * h, (i + 1) as f64 * h, |s| s * s * v(s));
        cumulative.push(acc);
    }
    if acc == 0.0 {
        return 0.0;
    }
    let target = SUPPORT_MASS_FRACTION * acc;
    let i = cumulative.partition_point(|&c| c < target).clamp(1, panels);
    // Bisection inside the panel that crosses the target.
    let (mut lo, mut hi) = ((i - 1) as f64 * h, i as f64 * h);
    let base = cumulative[i - 1];
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let partial = base + rule.integrate((i - 1) as f64 * h, mid, |s| s * s * v(s));
        if partial < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Solved scattering profile on a uniform radial grid.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub potential: RadialPotential,
    pub r_grid: Vec<f64>,
    /// Scaled radial function u = r f, with u(r) → r − a0.
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub f: Vec<f64>,
    pub w: Vec<f64>,
    pub dw_dr: Vec<f64>,
    /// Canonical scattering length (least-squares tail fit).
    pub a0: f64,
    pub a0_tail: f64,
    pub a0_fit: f64,
    /// Largest local one-step defect of the integrator in the scaled variable.
    pub ode_residual: f64,
    pub tail_fit_error: f64,
}

/// Derivative field of `(u, u')`.
#[inline]
fn rhs(v: f64, state: [f64; 2]) -> [f64; 2] {
    [state[1], 0.5 * v * state[0]]
}

/// One RK4 step on [r0, r1] inside a smooth piece of V.
fn rk4_step(pot: &RadialPotential, r0: f64, r1: f64, y: [f64; 2]) -> [f64; 2] {
    let h = r1 - r0;
    let v0 = pot.value_side(r0, Side::Above);
    let vm = pot.value(0.5 * (r0 + r1));
    let v1 = pot.value_side(r1, Side::Below);
    let k1 = rhs(v0, y);
    let k2 = rhs(vm, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = rhs(vm, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = rhs(v1, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Advance across [r0, r1], splitting at interior breakpoints.
fn advance(pot: &RadialPotential, cuts: &[f64], r0: f64, r1: f64, mut y: [f64; 2]) -> [f64; 2] {
    let mut a = r0;
    for &b in cuts.iter().filter(|&&b| b > r0 && b < r1) {
        y = rk4_step(pot, a, b, y);
        a = b;
    }
    rk4_step(pot, a, r1, y)
}

/// Solve the zero-energy scattering equation on `n_points` uniform radii in [0, r_max].
pub fn solve_zero_energy(pot: &RadialPotential, r_max: f64, n_points: usize) -> Result<ScatteringSolution> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(GpkError::Config(format!("r_max must be positive, got {r_max}")));
    }
    if n_points < MIN_POINTS {
        return Err(GpkError::Config(format!("radial grid needs ≥ {MIN_POINTS} points, got {n_points}")));
    }
    if r_max < MIN_RMAX_OVER_SUPPORT * pot.r_support {
        return Err(GpkError::Config(format!(
            "r_max = {r_max} is below {MIN_RMAX_OVER_SUPPORT} × r_support = {}",
            MIN_RMAX_OVER_SUPPORT * pot.r_support
        )));
    }
    if let PotentialShape::Tabulated { values, .. } = &pot.shape {
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(GpkError::Domain(format!("negative potential sample {v}")));
        }
    }
    let h = r_max / (n_points - 1) as f64;
    let r_grid: Vec<f64> = (0..n_points).map(|i| i as f64 * h).collect();
    let cuts = pot.breakpoints();

    let mut u = vec![0.0; n_points];
    let mut du = vec![0.0; n_points];
    du[0] = 1.0;
    let mut defect: f64 = 0.0;
    for i in 0..n_points - 1 {
        let (r0, r1) = (r_grid[i], r_grid[i + 1]);
        let y0 = [u[i], du[i]];
        let full = advance(pot, &cuts, r0, r1, y0);
        let mid = 0.5 * (r0 + r1);
        let half = advance(pot, &cuts, mid, r1, advance(pot, &cuts, r0, mid, y0));
        defect = defect.max((full[0] - half[0]).abs()).max((full[1] - half[1]).abs());
        u[i + 1] = full[0];
        du[i + 1] = full[1];
    }
    if !u.iter().chain(&du).all(|x| x.is_finite()) {
        return Err(GpkError::Budget("radial integration overflowed; reduce r_max or the potential height".into()));
    }

    // Normalise so that u' → 1 at r_max.
    let scale = 1.0 / du[n_points - 1];
    for x in u.iter_mut().chain(du.iter_mut()) {
        *x *= scale;
    }
    let ode_residual = defect * scale.abs();

    let a0_tail = r_max - u[n_points - 1] / du[n_points - 1];
    let start = n_points - n_points / 5;
    let a0_fit = {
        let xs = &r_grid[start..];
        let ys = &u[start..];
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        -intercept / slope
    };
    let a0 = a0_fit;

    let mut f = vec![0.0; n_points];
    let mut w = vec![0.0; n_points];
    let mut dw_dr = vec![0.0; n_points];
    for i in 0..n_points {
        let r = r_grid[i];
        if i == 0 {
            f[0] = du[0];
            dw_dr[0] = 0.0;
        } else {
            f[i] = u[i] / r;
            dw_dr[i] = (u[i] - r * du[i]) / (r * r);
        }
        w[i] = 1.0 - f[i];
    }
    let tail_fit_error = (start..n_points)
        .map(|i| (f[i] - (1.0 - a0 / r_grid[i])).abs())
        .fold(0.0, f64::max);

    Ok(ScatteringSolution {
        potential: pot.clone(),
        r_grid,
        u,
        du,
        f,
        w,
        dw_dr,
        a0,
        a0_tail,
        a0_fit,
        ode_residual,
        tail_fit_error,
    })
}

impl ScatteringSolution {
    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().expect("non-empty grid")
    }

    pub fn step(&self) -> f64 {
        self.r_grid[1] - self.r_grid[0]
    }

    /// Cubic Hermite interpolation of (u, u') at s; returns (u, u').
    fn hermite(&self, s: f64) -> (f64, f64) {
        let h = self.step();
        let i = ((s / h) as usize).min(self.r_grid.len() - 2);
        let t = (s - self.r_grid[i]) / h;
        let (p0, p1, m0, m1) = (self.u[i], self.u[i + 1], self.du[i] * h, self.du[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1;
        let slope = ((6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * m1) / h;
        (value, slope)
    }

    /// u(s) by interpolation, exterior form beyond the grid.
    pub fn u_at(&self, s: f64) -> f64 {
        if s >= self.r_max() {
            s - self.a0
        } else {
            self.hermite(s.max(0.0)).0
        }
    }

    /// f(s) = u(s)/s.
    pub fn f_at(&self, s: f64) -> f64 {
        if s >= self.r_max() {
            return 1.0 - self.a0 / s;
        }
        if s <= 0.0 {
            return self.du[0];
        }
        self.hermite(s).0 / s
    }

    /// w(s) = 1 − f(s).
    pub fn w_at(&self, s: f64) -> f64 {
        if s >= self.r_max() {
            return self.a0 / s;
        }
        1.0 - self.f_at(s)
    }

    /// w'(s).
    pub fn dw_at(&self, s: f64) -> f64 {
        if s >= self.r_max() {
            return -self.a0 / (s * s);
        }
        if s <= 0.0 {
            return 0.0;
        }
        let (u, du) = self.hermite(s);
        (u - s * du) / (s * s)
    }

    /// True when the potential vanishes identically.
    pub fn is_trivial(&self) -> bool {
        self.potential.is_zero()
    }
}

/// a0 from 8π a0 = ∫ V f, i.e. a0 = ½ ∫₀^∞ r V(r) u(r) dr.
pub fn scattering_length_integral(sol: &ScatteringSolution, pot: &RadialPotential) -> Result<f64> {
    if &sol.potential != pot {
        return Err(GpkError::Domain("scattering solution was produced from a different potential".into()));
    }
    if pot.is_zero() {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(8);
    let end = pot.r_support.min(sol.r_max());
    let mut edges: Vec<f64> = sol.r_grid.iter().copied().take_while(|&r| r < end).collect();
    edges.push(end);
    edges.extend(pot.breakpoints().into_iter().filter(|&b| b > 0.0 && b < end));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    // Gauss nodes are interior to each panel, so jump points are never sampled.
    let total: f64 = edges
        .windows(2)
        .map(|p| rule.integrate(p[0], p[1], |r| r * pot.value(r) * sol.u_at(r)))
        .sum();
    Ok(0.5 * total)
}

/// Empirical constants of the profile bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCertificate {
    /// Smallest C with w(r) ≤ C/(r+1) on the grid.
    pub c1: f64,
    /// Smallest C with |w'(r)| ≤ C/(r²+1) on the grid.
    pub c2: f64,
    /// 0 ≤ w ≤ 1 at every grid radius (to 1e-12).
    pub w_in_unit_interval: bool,
}

pub fn verify_w_bounds(sol: &ScatteringSolution) -> BoundCertificate {
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    let mut ok = true;
    for (i, &r) in sol.r_grid.iter().enumerate() {
        let w = sol.w[i];
        ok &= (-1e-12..=1.0 + 1e-12).contains(&w);
        c1 = c1.max(w * (r + 1.0));
        c2 = c2.max(sol.dw_dr[i].abs() * (r * r + 1.0));
    }
    BoundCertificate { c1, c2, w_in_unit_interval: ok }
}

/// w(N r): the correlation profile of the scaled potential N²V(N·).
pub fn scaled_profile(sol: &ScatteringSolution, n: f64, r: f64) -> Result<f64> {
    if n < 1.0 {
        return Err(GpkError::Domain(format!("scaling parameter N must be ≥ 1, got {n}")));
    }
    if r < 0.0 {
        return Err(GpkError::Domain(format!("radius must be non-negative, got {r}")));
    }
    Ok(sol.w_at(n * r))
}

/// Scattering length of N²V(N·).
pub fn scaled_scattering_length(sol: &ScatteringSolution, n: f64) -> f64 {
    sol.a0 / n
}

/// Summary written next to the profile CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringSummary {
    pub a0_tail: f64,
    pub a0_fit: f64,
    pub a0_integral: f64,
    pub ode_residual: f64,
    pub tail_fit_error: f64,
    pub potential: RadialPotential,
    pub r_max: f64,
    pub points: usize,
    pub bounds: BoundCertificate,
}

pub fn summarize(sol: &ScatteringSolution) -> Result<ScatteringSummary> {
    Ok(ScatteringSummary {
        a0_tail: sol.a0_tail,
        a0_fit: sol.a0_fit,
        a0_integral: scattering_length_integral(sol, &sol.potential)?,
        ode_residual: sol.ode_residual,
        tail_fit_error: sol.tail_fit_error,
        potential: sol.potential.clone(),
        r_max: sol.r_max(),
        points: sol.r_grid.len(),
        bounds: verify_w_bounds(sol),
    })
}

/// Radial Fourier transform Û(p) = 4π ∫ r² U(r) sin(pr)/(pr) dr of U = V f.
#[derive(Debug, Clone)]
pub struct RadialTransform {
    /// Quadrature radii and weights including 4π r² V(r) f(r).
    radii: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialTransform {
    /// Tabulate the quadrature for U = V·f once.
    pub fn of_interaction(sol: &ScatteringSolution) -> Self {
        let pot = &sol.potential;
        if pot.is_zero() {
            return RadialTransform { radii: vec![], weights: vec![] };
        }
        let rule = GaussLegendre::new(8);
        let end = pot.r_support;
        let panels = 2000;
        let mut edges: Vec<f64> = (0..=panels).map(|i| end * i as f64 / panels as f64).collect();
        edges.extend(pot.breakpoints().into_iter().filter(|&b| b > 0.0 && b < end));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut radii = Vec::new();
        let mut weights = Vec::new();
        for p in edges.windows(2) {
            for (r, w) in rule.on(p[0], p[1]) {
                radii.push(r);
                weights.push(4.0 * std::f64::consts::PI * r * r * w * pot.value(r) * sol.f_at(r));
            }
        }
        RadialTransform { radii, weights }
    }

    /// Û(p); Û(0) = ∫ U = 8π a0.
    pub fn eval(&self, p: f64) -> f64 {
        self.radii.iter().zip(&self.weights).map(|(&r, &w)| w * sinc(p * r)).sum()
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
