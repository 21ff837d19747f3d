use super::basis::FockBasis;
use super::operator::FockOperator;
use crate::error::{GpkError, Result};
use crate::linalg::CMatrix;
use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

/// Largest dimension for which dense exponentials are formed.
pub const DENSE_EXP_LIMIT: usize = 1500;

/// e^{A} by nalgebra's scaling-and-squaring Padé approximant.
pub fn dense_exp(a: &FockOperator) -> Result<CMatrix> {
    if a.dim() > DENSE_EXP_LIMIT {
        return Err(GpkError::Budget(format!(
            "dense exponential of dimension {} exceeds {DENSE_EXP_LIMIT}; use the vector action",
            a.dim()
        )));
    }
    Ok(a.to_dense().exp())
}

/// e^{tA} v by a Taylor series on substeps with ‖tA‖₁/s ≤ 1.
///
/// Each substep is summed until a term falls below 1e−17 of the running
/// vector, which keeps the accumulated error near round-off.
pub fn expm_action(a: &FockOperator, v: &[Complex64], t: Complex64) -> Vec<Complex64> {
    let norm = a.norm1() * t.norm();
    if norm == 0.0 {
        return v.to_vec();
    }
    let substeps = norm.ceil().max(1.0) as usize;
    let tau = t / substeps as f64;
    let mut out = v.to_vec();
    for _ in 0..substeps {
        let mut term = out.clone();
        let mut k = 1.0;
        loop {
            term = a.apply(&term);
            for z in term.iter_mut() {
                *z *= tau / k;
            }
            let term_norm = vec_norm(&term);
            for (o, z) in out.iter_mut().zip(&term) {
                *o += z;
            }
            if term_norm <= 1e-17 * vec_norm(&out) || k > 200.0 {
                break;
            }
            k += 1.0;
        }
    }
    out
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Exact evolution e^{−iHt} for a particle-conserving Hermitian H, by
/// eigendecomposition of each particle-number shell.
#[derive(Debug, Clone)]
pub struct ShellEvolution {
    shells: Vec<(std::ops::Range<usize>, SymmetricEigen<Complex64, nalgebra::Dyn>)>,
}

impl ShellEvolution {
    pub fn new(basis: &FockBasis, h: &FockOperator) -> Result<Self> {
        if !h.particle_conserving {
            return Err(GpkError::Domain("shell evolution needs a particle-conserving operator".into()));
        }
        let mut shells = Vec::with_capacity(basis.n_max + 1);
        for n in 0..=basis.n_max {
            let range = basis.shell(n);
            let size = range.len();
            let mut block = CMatrix::zeros(size, size);
            for (row, vec) in h.matrix.outer_iterator().enumerate().skip(range.start).take(size) {
                for (col, &val) in vec.iter() {
                    if !range.contains(&col) {
                        return Err(GpkError::Invariant("Hamiltonian couples different particle numbers".into()));
                    }
                    block[(row - range.start, col - range.start)] += val;
                }
            }
            // Symmetrise round-off so the Hermitian solver sees an exactly Hermitian block.
            let herm = (&block + block.adjoint()) * Complex64::new(0.5, 0.0);
            shells.push((range, SymmetricEigen::new(herm)));
        }
        Ok(ShellEvolution { shells })
    }

    /// e^{−iHt} v.
    pub fn apply(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (range, eig) in &self.shells {
            let local = DVector::from_column_slice(&v[range.clone()]);
            let mut coeffs = eig.eigenvectors.adjoint() * local;
            for (c, &lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
                *c *= Complex64::from_polar(1.0, -lambda * t);
            }
            let back = &eig.eigenvectors * coeffs;
            out[range.clone()].copy_from_slice(back.as_slice());
        }
        out
    }

    /// Lowest eigenvalue over all shells.
    pub fn ground_energy(&self) -> f64 {
        self.shells.iter().flat_map(|(_, e)| e.eigenvalues.iter().copied()).fold(f64::INFINITY, f64::min)
    }
}
