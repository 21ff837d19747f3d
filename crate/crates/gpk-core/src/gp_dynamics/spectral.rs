use super::GridSpec;
use crate::exec::Execution;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// FFT plans and wavenumber tables for a periodic grid.
///
/// Forward transforms are unnormalised; inverse transforms divide by the
/// total number of points, so `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct SpectralGrid {
    pub grid: GridSpec,
    /// Wavenumbers along one axis in FFT order.
    pub k_axis: Vec<f64>,
    /// |k|² at every flat index.
    pub k2: Vec<f64>,
    /// Integer |m|² at every flat index (k = 2π m / L).
    pub m2: Vec<usize>,
    /// 2/3-rule mask for nonlinear products.
    pub dealias: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    pub exec: Execution,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("grid", &self.grid).finish()
    }
}

impl SpectralGrid {
    pub fn new(grid: &GridSpec) -> Self {
        Self::with_exec(grid, Execution::default())
    }

    pub fn with_exec(grid: &GridSpec, exec: Execution) -> Self {
        let n = grid.points_per_axis;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * std::f64::consts::PI / grid.box_length;
        let m_axis: Vec<i64> = (0..n).map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 }).collect();
        // Nyquist mode is treated as +n/2; its mask entry is always off.
        let k_axis: Vec<f64> = m_axis.iter().map(|&m| dk * m as f64).collect();
        let total = grid.total_points();
        let cutoff = n as i64 / 3;
        let mut k2 = vec![0.0; total];
        let mut m2 = vec![0usize; total];
        let mut dealias = vec![true; total];
        for idx in 0..total {
            let mut rem = idx;
            let mut s = 0i64;
            let mut keep = true;
            for _ in 0..grid.dim {
                let m = m_axis[rem % n];
                rem /= n;
                s += m * m;
                keep &= m.abs() <= cutoff;
            }
            m2[idx] = s as usize;
            k2[idx] = dk * dk * s as f64;
            dealias[idx] = keep;
        }
        SpectralGrid { grid: grid.clone(), k_axis, k2, m2, dealias, forward, inverse, exec }
    }

    pub fn len(&self) -> usize {
        self.k2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k2.is_empty()
    }

    /// Wavenumber component along `axis` at a flat index.
    pub fn k_component(&self, idx: usize, axis: usize) -> f64 {
        let n = self.grid.points_per_axis;
        let stride = n.pow((self.grid.dim - 1 - axis) as u32);
        self.k_axis[(idx / stride) % n]
    }

    /// Σ_a k_a² with Nyquist components dropped: the symbol of −∇·∇ when
    /// each partial derivative uses [`SpectralGrid::derivative`].
    pub fn gradient_symbol(&self, idx: usize) -> f64 {
        let n = self.grid.points_per_axis;
        let mut rem = idx;
        let mut s = 0.0;
        for _ in 0..self.grid.dim {
            let i = rem % n;
            rem /= n;
            if 2 * i != n {
                s += self.k_axis[i] * self.k_axis[i];
            }
        }
        s
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis;
        let total = data.len();
        let lines = total / n;
        // Enough lines per task to amortise scheduling.
        let per_task = (lines / (4 * self.exec.threads().max(1))).max(1) * n;
        if self.grid.dim == 1 {
            plan.process(data);
            return;
        }
        // Transform the contiguous axis, then rotate axes (a, b, c) -> (c, a, b).
        // After `dim` rotations the layout is back to row-major order.
        let mut scratch = vec![Complex64::new(0.0, 0.0); total];
        for _ in 0..self.grid.dim {
            self.exec.for_each_chunk_mut(data, per_task, |_, chunk| plan.process(chunk));
            rotate_axes(data, &mut scratch, n, self.exec);
            data.copy_from_slice(&scratch);
        }
    }

    /// Spectral derivative along `axis`.
    pub fn derivative(&self, values: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        let n = self.grid.points_per_axis;
        for (idx, z) in buf.iter_mut().enumerate() {
            let k = self.k_component(idx, axis);
            // Odd derivative of the Nyquist mode is zeroed.
            let m = (idx / n.pow((self.grid.dim - 1 - axis) as u32)) % n;
            *z *= if 2 * m == n { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) };
        }
        self.inverse(&mut buf);
        buf
    }
}

/// `dst[c·outer + o] = src[o·n + c]`, where `outer = len / n`.
fn rotate_axes(src: &[Complex64], dst: &mut [Complex64], n: usize, exec: Execution) {
    const TILE: usize = 16;
    let outer = src.len() / n;
    // Each task owns a band of destination rows (fixed c).
    let rows_per_task = TILE.min(n);
    exec.for_each_chunk_mut(dst, rows_per_task * outer, |band, out| {
        let c0 = band * rows_per_task;
        let rows = out.len() / outer;
        for o0 in (0..outer).step_by(TILE) {
            let o1 = (o0 + TILE).min(outer);
            for dc in 0..rows {
                let c = c0 + dc;
                let row = &mut out[dc * outer..(dc + 1) * outer];
                for o in o0..o1 {
                    row[o] = src[o * n + c];
                }
            }
        }
    });
}
