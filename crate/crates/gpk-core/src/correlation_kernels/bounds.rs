//! Norm bounds for the correlation kernel without materialising it.
//!
//! ‖k‖₂, ‖∇₁k‖₂ and sup_x‖k(·,x)‖₂ depend on k only through radial integrals
//! of w² and w′², so they are evaluated in frequency space with the radial
//! Fourier transform resolved at scale 1/N. ‖∇₁(k k̄)‖₂ is streamed one column
//! at a time on the (coarser) kernel grid.

use super::{resolution_warning, OffsetTable, Sampling, MAX_STREAMED_POINTS};
use crate::error::{GpkError, Result};
use crate::exec::Execution;
use crate::gp_dynamics::{SpectralGrid, WaveFunction};
use crate::quadrature::GaussLegendre;
use crate::scattering::{sinc, ScatteringSolution};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub sampling: Sampling,
    /// Points per axis of the grid on which k k̄ is streamed.
    pub kernel_points: usize,
    /// Time stamp copied into the reports.
    pub time: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { sampling: Sampling::CellAverage, kernel_points: 16, time: 0.0, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub n: f64,
    pub t: f64,
    pub l2_k: f64,
    pub l2_grad1_k: f64,
    pub grad1_k_over_sqrt_n: f64,
    pub l2_grad1_kkbar: f64,
    pub sup_x_l2_slice: f64,
    /// max |k(x,y)| / min(N|φ(x)φ(y)|, |φ(x)φ(y)|/|x−y|) over grid pairs.
    pub pointwise_ratio_max: f64,
    pub kernel_points: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialNorms {
    pub l2_k: f64,
    pub l2_grad1_k: f64,
    pub sup_slice: f64,
}

const RADIAL_ORDER: usize = 16;

/// Panel edges on [0, r_cut] resolving the inner scale 1/N and the kinks of w(N·).
fn radial_edges(sol: &ScatteringSolution, n: f64, r_cut: f64) -> Vec<f64> {
    let inner = 1.0 / n;
    let mut edges: Vec<f64> = (0..=8).map(|i| inner * i as f64 / 8.0).collect();
    if inner < 1.0 {
        let ratio = (1.0 / inner).powf(1.0 / 40.0);
        edges.extend((1..=40).map(|i| inner * ratio.powi(i)));
    }
    let mut r = 1.0;
    while r < r_cut {
        edges.push(r);
        r += 0.05;
    }
    edges.push(r_cut);
    edges.extend(sol.potential.breakpoints().iter().map(|b| b / n));
    edges.retain(|&e| (0.0..=r_cut).contains(&e));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    edges
}

/// ĝ(k) = ∫₀^{r_cut} 4πr² g(r) sinc(kr) dr for every distinct |k| on the grid.
fn radial_transform(spectral: &SpectralGrid, nodes: &[(f64, f64)], g: impl Fn(f64) -> f64, exec: Execution) -> Vec<f64> {
    let weighted: Vec<(f64, f64)> = nodes.iter().map(|&(r, w)| (r, 4.0 * PI * r * r * w * g(r))).collect();
    let max_m2 = spectral.m2.iter().copied().max().unwrap_or(0);
    let mut present = vec![false; max_m2 + 1];
    for &m in &spectral.m2 {
        present[m] = true;
    }
    let dk = 2.0 * PI / spectral.grid.box_length;
    let by_m2 = exec.map_range(max_m2 + 1, |m2| {
        if !present[m2] {
            return 0.0;
        }
        let k = dk * (m2 as f64).sqrt();
        weighted.iter().map(|&(r, w)| w * sinc(k * r)).sum()
    });
    spectral.m2.iter().map(|&m| by_m2[m]).collect()
}

/// ‖k‖₂, ‖∇₁k‖₂ and sup_x‖k(·,x)‖₂ for the continuum kernel restricted to
/// |x − y| ≤ L/2, with φ band-limited on its grid. Three-dimensional grids only.
pub fn radial_spectral_norms(phi: &WaveFunction, sol: &ScatteringSolution, n: f64, exec: Execution) -> Result<RadialNorms> {
    let grid = &phi.grid;
    if grid.dim != 3 {
        return Err(GpkError::Config(format!("kernel norms use the 3D radial transform; grid has dim {}", grid.dim)));
    }
    if sol.is_trivial() {
        return Ok(RadialNorms { l2_k: 0.0, l2_grad1_k: 0.0, sup_slice: 0.0 });
    }
    let spectral = SpectralGrid::with_exec(grid, exec);
    let gl = GaussLegendre::new(RADIAL_ORDER);
    let edges = radial_edges(sol, n, 0.5 * grid.box_length);
    let nodes: Vec<(f64, f64)> = edges.windows(2).flat_map(|e| gl.on(e[0], e[1]).collect::<Vec<_>>()).collect();
    let g_hat = radial_transform(&spectral, &nodes, |r| (n * sol.w_at(n * r)).powi(2), exec);
    let ga_hat = radial_transform(&spectral, &nodes, |r| (n * n * sol.dw_at(n * r)).powi(2), exec);

    let cell = grid.cell_volume();
    let volume = grid.box_length.powi(3);
    let rho: Vec<f64> = phi.values.iter().map(|z| z.norm_sqr()).collect();
    let mut rho_hat: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r * cell, 0.0)).collect();
    spectral.forward(&mut rho_hat);
    let mut tau = vec![0.0; rho.len()];
    for axis in 0..3 {
        for (t, z) in tau.iter_mut().zip(spectral.derivative(&phi.values, axis)) {
            *t += z.norm_sqr();
        }
    }
    let mut tau_hat: Vec<Complex64> = tau.iter().map(|&t| Complex64::new(t * cell, 0.0)).collect();
    spectral.forward(&mut tau_hat);

    let mut l2 = 0.0;
    let mut grad = 0.0;
    for i in 0..rho_hat.len() {
        let r2 = rho_hat[i].norm_sqr();
        l2 += r2 * g_hat[i];
        // |∇_x(N w φ)|² integrated against ρ(y): w′² term, ½Δ-cross term, |∇φ|² term.
        grad += r2 * (ga_hat[i] + 0.5 * spectral.k2[i] * g_hat[i]) + (rho_hat[i].conj() * tau_hat[i]).re * g_hat[i];
    }
    let mut conv: Vec<Complex64> = rho_hat.iter().zip(&g_hat).map(|(z, g)| z * g).collect();
    spectral.inverse(&mut conv);
    let sup2 = rho.iter().zip(&conv).map(|(r, c)| r * c.re / cell).fold(0.0, f64::max);
    Ok(RadialNorms {
        l2_k: (l2 / volume).max(0.0).sqrt(),
        l2_grad1_k: (grad / volume).max(0.0).sqrt(),
        sup_slice: sup2.sqrt(),
    })
}

/// ‖∇₁(k k̄)‖₂ for k = −A(x−y)φ(x)φ(y), one column of k k̄ at a time.
///
/// Column y of k k̄ is φ φ̄(y) · dV · A ∗ (ρ · A(· − y)), so each column costs
/// three FFTs and nothing quadratic is stored.
pub fn kkbar_gradient_norm(phi: &WaveFunction, table: &OffsetTable, exec: Execution) -> f64 {
    let grid = &phi.grid;
    let spectral = SpectralGrid::with_exec(grid, Execution::Sequential);
    let p = grid.total_points();
    let cell = grid.cell_volume();
    let rho: Vec<f64> = phi.values.iter().map(|z| z.norm_sqr()).collect();
    let mut a_hat: Vec<Complex64> = table.values.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    spectral.forward(&mut a_hat);
    let symbol: Vec<f64> = (0..p).map(|i| spectral.gradient_symbol(i)).collect();
    let per_column = exec.map_range(p, |y| {
        let mut col: Vec<Complex64> = (0..p).map(|z| Complex64::new(rho[z] * table.at(z, y), 0.0)).collect();
        spectral.forward(&mut col);
        for (c, a) in col.iter_mut().zip(&a_hat) {
            *c *= a;
        }
        spectral.inverse(&mut col);
        let scale = phi.values[y].conj() * cell;
        for (c, f) in col.iter_mut().zip(&phi.values) {
            *c *= f * scale;
        }
        spectral.forward(&mut col);
        // Parseval: Σ_x |∇col|² = (1/P) Σ_k |k|² |ĉol|².
        col.iter().zip(&symbol).map(|(c, s)| s * c.norm_sqr()).sum::<f64>() / p as f64
    });
    (per_column.iter().sum::<f64>() * cell * cell).sqrt()
}

fn pointwise_ratio(sol: &ScatteringSolution, n: f64, phi: &WaveFunction) -> f64 {
    let grid = &phi.grid;
    let table = OffsetTable::new(sol, n, grid, Sampling::Point, Execution::Sequential);
    let np = grid.points_per_axis;
    let dx = grid.spacing();
    let mut worst: f64 = 0.0;
    for (idx, &a) in table.values.iter().enumerate() {
        let mut rem = idx;
        let mut r2 = 0.0;
        for _ in 0..grid.dim {
            let i = rem % np;
            rem /= np;
            r2 += (i.min(np - i) as f64 * dx).powi(2);
        }
        let r = r2.sqrt();
        let cap = if r > 0.0 { n.min(1.0 / r) } else { n };
        worst = worst.max(a.abs() / cap);
    }
    worst
}

/// Kernel norms for each N in `n_list`.
pub fn kernel_bound_report(
    phi: &WaveFunction,
    sol: &ScatteringSolution,
    n_list: &[f64],
    opts: &KernelOptions,
) -> Result<Vec<KernelBoundReport>> {
    if n_list.is_empty() {
        return Err(GpkError::Config("kernel bounds need at least one N".into()));
    }
    if let Some(bad) = n_list.iter().find(|&&n| !(n >= 1.0)) {
        return Err(GpkError::Config(format!("N must be ≥ 1, got {bad}")));
    }
    let streamed = opts.kernel_points.pow(phi.grid.dim as u32);
    if streamed > MAX_STREAMED_POINTS {
        return Err(GpkError::Budget(format!(
            "kernel grid of {streamed} points exceeds the streamed limit of {MAX_STREAMED_POINTS}; lower kernel_points"
        )));
    }
    let coarse = phi.resample(opts.kernel_points)?;
    n_list
        .iter()
        .map(|&n| {
            let radial = radial_spectral_norms(phi, sol, n, opts.exec)?;
            let table = OffsetTable::new(sol, n, &coarse.grid, opts.sampling, opts.exec);
            let kkbar = kkbar_gradient_norm(&coarse, &table, opts.exec);
            Ok(KernelBoundReport {
                n,
                t: opts.time,
                l2_k: radial.l2_k,
                l2_grad1_k: radial.l2_grad1_k,
                grad1_k_over_sqrt_n: radial.l2_grad1_k / n.sqrt(),
                l2_grad1_kkbar: kkbar,
                sup_x_l2_slice: radial.sup_slice,
                pointwise_ratio_max: pointwise_ratio(sol, n, phi),
                kernel_points: opts.kernel_points,
                warning: resolution_warning(sol, n, &coarse.grid),
            })
        })
        .collect()
}
