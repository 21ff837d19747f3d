//! Correlation kernel k(x,y) = −N w(N(x−y)) φ(x) φ(y) and its hyperbolic calculus.
//!
//! Kernels live on a periodic grid and use minimum-image distances. A kernel
//! is stored by its pointwise values; the operator it defines on ℓ² of the
//! grid is `values · cell_volume`, so operator products carry the quadrature
//! weight and the Hilbert–Schmidt norm is `cell · ‖values‖_F`.
//!
//! Two samplings of the radial factor are provided. [`Sampling::Point`]
//! evaluates the defining formula at grid points. [`Sampling::CellAverage`]
//! averages `N w(N|x−y|)` over pairs of grid cells (a Galerkin projection),
//! which stays meaningful when `1/N` is far below the grid spacing.

mod bounds;
mod cancellation;

pub use bounds::{kernel_bound_report, kkbar_gradient_norm, radial_spectral_norms, KernelBoundReport, KernelOptions, RadialNorms};
pub use cancellation::{cancellation_budget, zero_energy_cancellation_residual, CANCELLATION_TOLERANCE};

use crate::error::{GpkError, Result};
use crate::exec::Execution;
use crate::gp_dynamics::{GridSpec, SpectralGrid, WaveFunction};
use crate::linalg::{conj, frobenius, max_abs, par_matmul, CMatrix};
use crate::quadrature::GaussLegendre;
use crate::scattering::ScatteringSolution;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest grid (total points) for which a dense kernel is materialised.
pub const MAX_DENSE_POINTS: usize = 4096;
/// Largest kernel grid for the streamed pair sums, which cost O(points²).
pub const MAX_STREAMED_POINTS: usize = 16384;
/// Gauss points per half-cell for offsets touching the diagonal.
const NEAR_ORDER: usize = 16;
/// Gauss points per half-cell elsewhere.
const FAR_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Point,
    #[default]
    CellAverage,
}

/// Translation-invariant radial factor A(m) ≈ N w(N|m·dx|) indexed by grid offset.
#[derive(Debug, Clone)]
pub struct OffsetTable {
    pub grid: GridSpec,
    /// A at every offset, stored in FFT order (offset m at index m mod n).
    pub values: Vec<f64>,
}

impl OffsetTable {
    pub fn new(sol: &ScatteringSolution, n: f64, grid: &GridSpec, sampling: Sampling, exec: Execution) -> Self {
        let np = grid.points_per_axis;
        let d = grid.dim;
        let dx = grid.spacing();
        let near = tent_rule(NEAR_ORDER, dx);
        let far = tent_rule(FAR_ORDER, dx);
        let values = exec.map_range(grid.total_points(), |idx| {
            // Absolute offsets make A(m) and A(−m) bitwise equal.
            let mut m = [0usize; 3];
            let mut rem = idx;
            for a in (0..d).rev() {
                let i = rem % np;
                rem /= np;
                m[a] = i.min(np - i);
            }
            if sol.is_trivial() {
                return 0.0;
            }
            match sampling {
                Sampling::Point => {
                    let r = (0..d).map(|a| (m[a] as f64 * dx).powi(2)).sum::<f64>().sqrt();
                    n * sol.w_at(n * r)
                }
                Sampling::CellAverage => {
                    let rule = if m[..d].iter().all(|&c| c <= 1) { &near } else { &far };
                    cell_average(sol, n, &m[..d], dx, rule)
                }
            }
        });
        OffsetTable { grid: grid.clone(), values }
    }

    /// Flat index of the offset i − j.
    pub fn offset_index(&self, i: usize, j: usize) -> usize {
        let np = self.grid.points_per_axis;
        let mut out = 0;
        let mut stride = 1;
        let (mut ri, mut rj) = (i, j);
        for _ in 0..self.grid.dim {
            let di = (ri % np + np - rj % np) % np;
            out += di * stride;
            stride *= np;
            ri /= np;
            rj /= np;
        }
        out
    }

    /// A(i − j).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.offset_index(i, j)]
    }
}

/// Nodes and weights for t ∈ [−dx, dx] with density (dx − |t|)/dx²: the
/// distribution of the difference of two uniform points in a cell.
fn tent_rule(order: usize, dx: f64) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(order);
    let mut nodes = Vec::with_capacity(2 * order);
    let mut weights = Vec::with_capacity(2 * order);
    for (lo, hi) in [(-dx, 0.0), (0.0, dx)] {
        for (t, w) in gl.on(lo, hi) {
            nodes.push(t);
            weights.push(w * (dx - t.abs()) / (dx * dx));
        }
    }
    (nodes, weights)
}

fn cell_average(sol: &ScatteringSolution, n: f64, m: &[usize], dx: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (t, wt) = rule;
    let q = t.len();
    let d = m.len();
    let mut total = 0.0;
    let mut counter = vec![0usize; d];
    loop {
        let mut r2 = 0.0;
        let mut weight = 1.0;
        for a in 0..d {
            let x = m[a] as f64 * dx + t[counter[a]];
            r2 += x * x;
            weight *= wt[counter[a]];
        }
        total += weight * n * sol.w_at(n * r2.sqrt());
        let mut a = 0;
        loop {
            if a == d {
                return total;
            }
            counter[a] += 1;
            if counter[a] < q {
                break;
            }
            counter[a] = 0;
            a += 1;
        }
    }
}

/// Kernel values on pairs of grid points.
#[derive(Debug, Clone)]
pub struct TwoPointKernel {
    pub values: CMatrix,
    pub grid: GridSpec,
    pub symmetric: bool,
    pub warning: Option<String>,
}

impl TwoPointKernel {
    pub fn zeros(grid: &GridSpec) -> Self {
        let p = grid.total_points();
        TwoPointKernel { values: CMatrix::zeros(p, p), grid: grid.clone(), symmetric: true, warning: None }
    }

    pub fn from_values(values: CMatrix, grid: &GridSpec) -> Self {
        let symmetric = values == values.transpose();
        TwoPointKernel { values, grid: grid.clone(), symmetric, warning: None }
    }

    /// Kernel of the ℓ² operator `op`.
    pub fn from_operator(op: &CMatrix, grid: &GridSpec) -> Self {
        Self::from_values(op / Complex64::new(grid.cell_volume(), 0.0), grid)
    }

    /// c · φ(x) φ(y).
    pub fn rank_one(phi: &WaveFunction, c: f64) -> Self {
        let p = phi.values.len();
        let values = CMatrix::from_fn(p, p, |i, j| phi.values[i] * phi.values[j] * c);
        Self::from_values(values, &phi.grid)
    }

    pub fn cell(&self) -> f64 {
        self.grid.cell_volume()
    }

    pub fn operator(&self) -> CMatrix {
        &self.values * Complex64::new(self.cell(), 0.0)
    }

    /// Discrete L² norm over both arguments.
    pub fn hs_norm(&self) -> f64 {
        frobenius(&self.values) * self.cell()
    }

    /// sup_y ‖k(·, y)‖₂.
    pub fn sup_slice_norm(&self) -> f64 {
        let cell = self.cell();
        self.values
            .column_iter()
            .map(|c| (c.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell).sqrt())
            .fold(0.0, f64::max)
    }

    /// ‖∇₁k‖₂ with spectral differentiation in the first argument.
    pub fn grad1_hs_norm(&self, exec: Execution) -> f64 {
        let spectral = SpectralGrid::with_exec(&self.grid, Execution::Sequential);
        let cell = self.cell();
        let p = self.values.nrows();
        let per_column = exec.map_range(self.values.ncols(), |j| {
            let mut col: Vec<Complex64> = self.values.column(j).iter().copied().collect();
            spectral.forward(&mut col);
            col.iter().enumerate().map(|(i, z)| spectral.gradient_symbol(i) * z.norm_sqr()).sum::<f64>() / p as f64
        });
        (per_column.iter().sum::<f64>() * cell * cell).sqrt()
    }

    /// Kernel of the operator product k k̄.
    pub fn compose_conj(&self, exec: Execution) -> TwoPointKernel {
        let op = self.operator();
        TwoPointKernel::from_operator(&par_matmul(&op, &conj(&op), exec), &self.grid)
    }
}

fn ensure_dense(grid: &GridSpec) -> Result<()> {
    if grid.total_points() > MAX_DENSE_POINTS {
        return Err(GpkError::Budget(format!(
            "dense kernel on {} points exceeds the limit of {MAX_DENSE_POINTS}; coarsen the kernel grid",
            grid.total_points()
        )));
    }
    Ok(())
}

fn resolution_warning(sol: &ScatteringSolution, n: f64, grid: &GridSpec) -> Option<String> {
    let r_support = sol.potential.r_support;
    if r_support > 0.0 && n * grid.spacing() > 10.0 * r_support {
        Some(format!(
            "N·dx = {:.3} exceeds 10·r_support = {:.3}; w(N·) is under-resolved on this grid",
            n * grid.spacing(),
            10.0 * r_support
        ))
    } else {
        None
    }
}

fn check_normalized(phi: &WaveFunction) -> Result<()> {
    let norm = crate::gp_dynamics::l2(&phi.values, phi.grid.cell_volume());
    if (norm - 1.0).abs() > 1e-8 {
        return Err(GpkError::Domain(format!("kernel construction needs ‖φ‖₂ = 1, got {norm}")));
    }
    Ok(())
}

/// −A(i−j) · (a_i b_j + b_i a_j) / 2 with exact symmetry.
fn symmetric_kernel(table: &OffsetTable, a: &[Complex64], b: &[Complex64], exec: Execution) -> CMatrix {
    let p = a.len();
    let columns = exec.map_range(p, |j| {
        (0..=j)
            .map(|i| {
                let pair = (a[i] * b[j] + b[i] * a[j]) * 0.5;
                -pair * table.at(i, j)
            })
            .collect::<Vec<_>>()
    });
    let mut m = CMatrix::zeros(p, p);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, z) in col.into_iter().enumerate() {
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}

/// k(x,y) = −N w(N(x−y)) φ(x) φ(y) on φ's grid.
pub fn build_kt(phi: &WaveFunction, sol: &ScatteringSolution, n: f64, sampling: Sampling, exec: Execution) -> Result<TwoPointKernel> {
    ensure_dense(&phi.grid)?;
    check_normalized(phi)?;
    if !(n >= 1.0) {
        return Err(GpkError::Config(format!("N must be ≥ 1, got {n}")));
    }
    let table = OffsetTable::new(sol, n, &phi.grid, sampling, exec);
    let values = symmetric_kernel(&table, &phi.values, &phi.values, exec);
    Ok(TwoPointKernel {
        values,
        grid: phi.grid.clone(),
        symmetric: true,
        warning: resolution_warning(sol, n, &phi.grid),
    })
}

/// k̇(x,y) = −N w(N(x−y)) (φ̇(x)φ(y) + φ(x)φ̇(y)).
pub fn time_derivative_kt(
    phi: &WaveFunction,
    phi_dot: &WaveFunction,
    sol: &ScatteringSolution,
    n: f64,
    sampling: Sampling,
    exec: Execution,
) -> Result<TwoPointKernel> {
    ensure_dense(&phi.grid)?;
    if phi.grid != phi_dot.grid {
        return Err(GpkError::Config("φ and φ̇ must share a grid".into()));
    }
    let table = OffsetTable::new(sol, n, &phi.grid, sampling, exec);
    // (a_i b_j + b_i a_j)/2 with a = 2φ̇, b = φ.
    let twice: Vec<Complex64> = phi_dot.values.iter().map(|z| z * 2.0).collect();
    let values = symmetric_kernel(&table, &twice, &phi.values, exec);
    Ok(TwoPointKernel {
        values,
        grid: phi.grid.clone(),
        symmetric: true,
        warning: resolution_warning(sol, n, &phi.grid),
    })
}

/// ch(k) = 1 + p, sh(k) = k + r from the absolutely convergent series.
#[derive(Debug, Clone)]
pub struct BogoliubovKernels {
    pub p: TwoPointKernel,
    pub r: TwoPointKernel,
    pub sh: TwoPointKernel,
    /// Same kernel as `p`; kept under the name used by ch(k) − 1.
    pub ch_minus_identity: TwoPointKernel,
    /// Number of (k k̄)ⁿ powers summed, n = 0..terms.
    pub series_terms_used: usize,
    /// Σ_{j > 2·terms − 1} ‖k‖^j / j!, which dominates every omitted term.
    pub truncation_error_bound: f64,
    pub k_norm: f64,
}

impl BogoliubovKernels {
    pub fn ch_operator(&self) -> CMatrix {
        let p = self.p.values.nrows();
        CMatrix::identity(p, p) + self.p.operator()
    }

    pub fn sh_operator(&self) -> CMatrix {
        self.sh.operator()
    }

    /// max |ch ch† − sh sh† − 1| entrywise.
    pub fn symplectic_residual(&self, exec: Execution) -> f64 {
        let ch = self.ch_operator();
        let sh = self.sh_operator();
        let p = ch.nrows();
        let lhs = par_matmul(&ch, &ch.adjoint(), exec) - par_matmul(&sh, &sh.adjoint(), exec);
        max_abs(&(lhs - CMatrix::identity(p, p)))
    }

    /// ‖p‖₂, ‖r‖₂, ‖sh‖₂ ≤ e^{‖k‖₂}.
    pub fn within_exponential_bound(&self) -> bool {
        let bound = self.k_norm.exp();
        [&self.p, &self.r, &self.sh].iter().all(|k| k.hs_norm() <= bound)
    }
}

/// Σ_{j ≥ from} x^j / j!, summed directly to avoid cancellation in e^x − partial sum.
fn exp_tail(x: f64, from: usize) -> f64 {
    let mut term = 1.0;
    for j in 1..=from {
        term *= x / j as f64;
    }
    let mut sum = 0.0;
    let mut j = from;
    while term > 0.0 && term >= sum * f64::EPSILON {
        sum += term;
        j += 1;
        term *= x / j as f64;
    }
    sum
}

/// Sum ch = Σ (k k̄)ⁿ/(2n)! and sh = Σ (k k̄)ⁿ k/(2n+1)! until ‖k‖^{2n}/(2n)! < tol.
pub fn hyperbolic_series(k: &TwoPointKernel, tol: f64, exec: Execution) -> Result<BogoliubovKernels> {
    if !(tol > 0.0) {
        return Err(GpkError::Config(format!("series tolerance must be positive, got {tol}")));
    }
    let x = k.hs_norm();
    let kop = k.operator();
    let p_dim = kop.nrows();
    let kkbar = par_matmul(&kop, &conj(&kop), exec);
    let mut ch = CMatrix::zeros(p_dim, p_dim);
    let mut sh = kop.clone();
    let mut power = CMatrix::identity(p_dim, p_dim);
    let mut terms = 1;
    // term_scale = x^{2n}/(2n)! for the next n.
    let mut n = 1;
    let mut term_scale = x * x / 2.0;
    while term_scale >= tol && x > 0.0 {
        power = par_matmul(&power, &kkbar, exec);
        let f_even = inv_factorial(2 * n);
        let f_odd = inv_factorial(2 * n + 1);
        ch += &power * Complex64::new(f_even, 0.0);
        sh += par_matmul(&power, &kop, exec) * Complex64::new(f_odd, 0.0);
        terms += 1;
        n += 1;
        term_scale = x.powi(2 * n as i32) * inv_factorial(2 * n);
    }
    let r_op = &sh - &kop;
    let grid = &k.grid;
    let p = TwoPointKernel::from_operator(&ch, grid);
    Ok(BogoliubovKernels {
        ch_minus_identity: p.clone(),
        p,
        r: TwoPointKernel::from_operator(&r_op, grid),
        sh: TwoPointKernel::from_operator(&sh, grid),
        series_terms_used: terms,
        truncation_error_bound: if x > 0.0 { exp_tail(x, 2 * terms) } else { 0.0 },
        k_norm: x,
    })
}

fn inv_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc / j as f64)
}
