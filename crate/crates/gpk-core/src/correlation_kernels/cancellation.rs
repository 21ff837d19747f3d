use crate::error::{GpkError, Result};
use crate::scattering::{RadialPotential, ScatteringSolution};

/// Residual budget per unit of N³.
pub const CANCELLATION_TOLERANCE: f64 = 1e-6;

pub fn cancellation_budget(n: f64) -> f64 {
    CANCELLATION_TOLERANCE * n.powi(3)
}

/// Five-point first-derivative weights (times 12h), by position of the target node.
const STENCILS: [[f64; 5]; 5] = [
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
    [1.0, -8.0, 0.0, 8.0, -1.0],
    [-1.0, 6.0, -18.0, 10.0, 3.0],
    [3.0, -16.0, 36.0, -48.0, 25.0],
];

/// N³ · max_r r² |(−Δ + ½V) f|(r) = N³ · max_r r |−u″ + ½V u|.
///
/// u″ is obtained by differentiating the stored u′ with fourth-order
/// stencils that never straddle a discontinuity of V, so the value measures
/// how well the tabulated profile solves the scattering equation.
pub fn zero_energy_cancellation_residual(sol: &ScatteringSolution, pot: &RadialPotential, n: f64) -> Result<f64> {
    if &sol.potential != pot {
        return Err(GpkError::Config("scattering solution was computed for a different potential".into()));
    }
    if pot.is_zero() {
        return Ok(0.0);
    }
    let h = sol.step();
    let r = &sol.r_grid;
    let last = r.len() - 1;
    let breaks = pot.breakpoints();
    let at_break = |x: f64| breaks.iter().any(|b| (x - b).abs() < 1e-9 * h);
    let mut worst: f64 = 0.0;
    for i in 0..=last {
        if at_break(r[i]) {
            continue;
        }
        // Nodes reachable without crossing a breakpoint (breakpoint nodes themselves are usable).
        let lo_edge = breaks.iter().copied().filter(|&b| b < r[i]).fold(f64::NEG_INFINITY, f64::max);
        let hi_edge = breaks.iter().copied().filter(|&b| b > r[i]).fold(f64::INFINITY, f64::min);
        let lo = r.partition_point(|&x| x < lo_edge - 1e-9 * h);
        let hi = r.partition_point(|&x| x <= hi_edge + 1e-9 * h) - 1;
        if hi - lo < 4 {
            continue;
        }
        let start = i.saturating_sub(2).clamp(lo, hi - 4);
        let weights = &STENCILS[i - start];
        let d2u: f64 = weights.iter().enumerate().map(|(k, w)| w * sol.du[start + k]).sum::<f64>() / (12.0 * h);
        let defect = -d2u + 0.5 * pot.value(r[i]) * sol.u[i];
        worst = worst.max(r[i] * defect.abs());
    }
    Ok(n.powi(3) * worst)
}
