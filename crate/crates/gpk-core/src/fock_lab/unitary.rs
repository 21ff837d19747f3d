use super::basis::FockBasis;
use super::expm::{dense_exp, expm_action};
use super::operator::{bogoliubov_generator, weyl_generator};
use super::states::{poisson_tail, squeezed_masses};
use crate::error::{GpkError, Result};
use crate::linalg::{max_abs, CMatrix};
use num_complex::Complex64;

/// Largest admissible probability mass beyond the cutoff.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;
/// Largest admissible ‖K‖_HS for Bogoliubov unitaries.
pub const MAX_KERNEL_NORM: f64 = 1.5;

/// Dense unitary with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct Unitary {
    pub matrix: CMatrix,
    /// max |U†U − 1|: the truncated generator is anti-Hermitian, so this is round-off.
    pub unitarity_defect: f64,
    /// Mass the untruncated unitary sends from the vacuum beyond n_max.
    pub tail_bound: f64,
}

fn unitary(matrix: CMatrix, tail_bound: f64) -> Unitary {
    let p = matrix.nrows();
    let defect = max_abs(&(matrix.adjoint() * &matrix - CMatrix::identity(p, p)));
    Unitary { matrix, unitarity_defect: defect, tail_bound }
}

pub fn l2_sq(f: &[Complex64]) -> f64 {
    f.iter().map(|z| z.norm_sqr()).sum()
}

/// Poisson tail of W(f)Ω; errors when ‖f‖² > n_max/4 or the tail exceeds the tolerance.
pub fn weyl_budget(basis: &FockBasis, f: &[Complex64]) -> Result<f64> {
    if f.len() != basis.d {
        return Err(GpkError::Config(format!("f must have {} components", basis.d)));
    }
    let mean = l2_sq(f);
    if mean > basis.n_max as f64 / 4.0 {
        return Err(GpkError::Budget(format!("‖f‖² = {mean:.3} exceeds n_max/4 = {:.3}", basis.n_max as f64 / 4.0)));
    }
    let tail = poisson_tail(mean, basis.n_max);
    if tail > LEAKAGE_TOLERANCE {
        return Err(GpkError::Budget(format!("coherent-state tail {tail:.2e} beyond n_max = {}", basis.n_max)));
    }
    Ok(tail)
}

/// Number-distribution tail of T(K)Ω; errors when ‖K‖_HS > 1.5 or the tail exceeds the tolerance.
pub fn bogoliubov_budget(basis: &FockBasis, k: &CMatrix) -> Result<f64> {
    let hs = k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if hs > MAX_KERNEL_NORM {
        return Err(GpkError::Budget(format!("‖K‖_HS = {hs:.3} exceeds {MAX_KERNEL_NORM}")));
    }
    let sv: Vec<f64> = k.clone().svd(false, false).singular_values.iter().copied().collect();
    let tail = (1.0 - squeezed_masses(&sv, basis.n_max).iter().sum::<f64>()).max(0.0);
    if tail > LEAKAGE_TOLERANCE {
        return Err(GpkError::Budget(format!("squeezed-state tail {tail:.2e} beyond n_max = {}", basis.n_max)));
    }
    Ok(tail)
}

/// W(f) = exp(a†(f) − a(f)) as a dense matrix.
pub fn weyl(basis: &FockBasis, f: &[Complex64]) -> Result<Unitary> {
    let tail = weyl_budget(basis, f)?;
    Ok(unitary(dense_exp(&weyl_generator(basis, f))?, tail))
}

/// T(K) = exp(½ Σ (K a†a† − K̄ aa)) as a dense matrix.
pub fn bogoliubov(basis: &FockBasis, k: &CMatrix) -> Result<Unitary> {
    let tail = bogoliubov_budget(basis, k)?;
    Ok(unitary(dense_exp(&bogoliubov_generator(basis, k)?)?, tail))
}

/// W(f)^{±1} v without forming the matrix.
pub fn weyl_apply(basis: &FockBasis, f: &[Complex64], v: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    weyl_budget(basis, f)?;
    let sign = if inverse { -1.0 } else { 1.0 };
    Ok(expm_action(&weyl_generator(basis, f), v, Complex64::new(sign, 0.0)))
}

/// T(K)^{±1} v without forming the matrix.
pub fn bogoliubov_apply(basis: &FockBasis, k: &CMatrix, v: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    bogoliubov_budget(basis, k)?;
    let sign = if inverse { -1.0 } else { 1.0 };
    Ok(expm_action(&bogoliubov_generator(basis, k)?, v, Complex64::new(sign, 0.0)))
}

/// ch(K) = Σ (K K̄)ⁿ/(2n)!, sh(K) = Σ (K K̄)ⁿ K/(2n+1)! on the mode space.
pub fn mode_hyperbolics(k: &CMatrix) -> (CMatrix, CMatrix) {
    let d = k.nrows();
    let kkbar = k * k.map(|z| z.conj());
    let mut ch = CMatrix::identity(d, d);
    let mut sh = k.clone();
    let mut power = CMatrix::identity(d, d);
    let mut n = 1;
    loop {
        power = &power * &kkbar;
        let even = 1.0 / (1..=2 * n).map(|j| j as f64).product::<f64>();
        let odd = even / (2 * n + 1) as f64;
        let t_ch = &power * Complex64::new(even, 0.0);
        let t_sh = &power * k * Complex64::new(odd, 0.0);
        let small = max_abs(&t_ch) < 1e-18 && max_abs(&t_sh) < 1e-18;
        ch += t_ch;
        sh += t_sh;
        if small || n > 200 {
            return (ch, sh);
        }
        n += 1;
    }
}
