use super::basis::FockBasis;
use super::operator::{ladder, FockOperator};
use crate::error::{GpkError, Result};
use crate::linalg::CMatrix;
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use std::sync::Arc;

/// Vector in a truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockVector {
    pub basis: Arc<FockBasis>,
    pub coefficients: Vec<Complex64>,
}

impl FockVector {
    pub fn new(basis: Arc<FockBasis>, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != basis.dim {
            return Err(GpkError::Config(format!(
                "vector has {} entries, basis has {}",
                coefficients.len(),
                basis.dim
            )));
        }
        Ok(FockVector { basis, coefficients })
    }

    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); basis.dim];
        c[basis.vacuum_index()] = Complex64::new(1.0, 0.0);
        FockVector { basis, coefficients: c }
    }

    pub fn norm(&self) -> f64 {
        super::expm::vec_norm(&self.coefficients)
    }

    /// ‖P_n ψ‖² for n = 0..=n_max.
    pub fn shell_masses(&self) -> Vec<f64> {
        (0..=self.basis.n_max)
            .map(|n| self.coefficients[self.basis.shell(n)].iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Mass on the n_max shell: the part most exposed to truncation.
    pub fn leakage(&self) -> f64 {
        *self.shell_masses().last().expect("n_max shell exists")
    }

    /// ⟨ψ, 𝒩 ψ⟩.
    pub fn number_expectation(&self) -> f64 {
        (0..self.basis.dim).map(|i| self.basis.particles(i) as f64 * self.coefficients[i].norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &FockOperator) -> Complex64 {
        let av = op.apply(&self.coefficients);
        self.coefficients.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
    }
}

/// P_n ψ and its norm.
pub fn project_n(psi: &FockVector, n: usize) -> Result<(FockVector, f64)> {
    if n > psi.basis.n_max {
        return Err(GpkError::Config(format!("shell {n} is above n_max = {}", psi.basis.n_max)));
    }
    let range = psi.basis.shell(n);
    let mut c = vec![Complex64::new(0.0, 0.0); psi.basis.dim];
    c[range.clone()].copy_from_slice(&psi.coefficients[range]);
    let projected = FockVector { basis: psi.basis.clone(), coefficients: c };
    let norm = projected.norm();
    Ok((projected, norm))
}

/// One-particle reduced density Γ_ij = ⟨ψ, a_j† a_i ψ⟩ / ⟨ψ, 𝒩 ψ⟩.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    pub matrix: CMatrix,
}

impl ReducedDensity {
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

pub fn reduced_density(psi: &FockVector) -> Result<ReducedDensity> {
    let d = psi.basis.d;
    let lowered: Vec<Vec<Complex64>> =
        (0..d).map(|i| ladder(&psi.basis, i).map(|(a, _)| a.apply(&psi.coefficients))).collect::<Result<_>>()?;
    let mut g = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = lowered[j].iter().zip(&lowered[i]).map(|(x, y)| x.conj() * y).sum();
        }
    }
    let n = g.trace().re;
    if !(n > 0.0) {
        return Err(GpkError::Domain("reduced density of a state with no particles".into()));
    }
    Ok(ReducedDensity { matrix: g / Complex64::new(n, 0.0) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceDistance {
    /// Tr|Γ − |φ⟩⟨φ||.
    pub trace_norm: f64,
    /// ‖Γ − |φ⟩⟨φ|‖_HS.
    pub hs_norm: f64,
    /// Number of negative eigenvalues of Γ − |φ⟩⟨φ| (at most one for PSD Γ).
    pub negative_eigenvalues: usize,
}

pub fn trace_distance_to_rank_one(gamma: &ReducedDensity, phi: &[Complex64]) -> Result<TraceDistance> {
    let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(GpkError::Domain(format!("φ must be normalised, ‖φ‖ = {norm}")));
    }
    let d = phi.len();
    let proj = CMatrix::from_fn(d, d, |i, j| phi[i] * phi[j].conj());
    let diff = &gamma.matrix - proj;
    let herm = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    Ok(TraceDistance {
        trace_norm: eig.eigenvalues.iter().map(|l| l.abs()).sum(),
        hs_norm: diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        negative_eigenvalues: eig.eigenvalues.iter().filter(|&&l| l < -1e-12 * scale.max(1e-300)).count(),
    })
}

/// Poisson probabilities e^{−λ} λⁿ / n! for n = 0..=n_max.
pub fn poisson_masses(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n_max + 1);
    let mut term = (-lambda).exp();
    for n in 0..=n_max {
        if n > 0 {
            term *= lambda / n as f64;
        }
        p.push(term);
    }
    p
}

/// P(n > n_max) for a Poisson variable of mean λ.
pub fn poisson_tail(lambda: f64, n_max: usize) -> f64 {
    (1.0 - poisson_masses(lambda, n_max).iter().sum::<f64>()).max(0.0)
}

/// Particle-number distribution of a multimode squeezed vacuum with squeezing
/// parameters `r` (singular values of K), up to `n_max`.
pub fn squeezed_masses(r: &[f64], n_max: usize) -> Vec<f64> {
    let mut total = vec![0.0; n_max + 1];
    total[0] = 1.0;
    for &rk in r {
        // Single mode: P(2m) = tanh^{2m} r / cosh r · (2m)! / (4^m (m!)²).
        let t2 = rk.tanh().powi(2);
        let mut single = vec![0.0; n_max + 1];
        let mut p = 1.0 / rk.cosh();
        let mut m = 0;
        while 2 * m <= n_max {
            single[2 * m] = p;
            let mf = (m + 1) as f64;
            p *= t2 * (2.0 * mf - 1.0) / (2.0 * mf);
            m += 1;
        }
        let mut next = vec![0.0; n_max + 1];
        for (i, &a) in total.iter().enumerate() {
            for (j, &b) in single.iter().enumerate().take(n_max + 1 - i) {
                next[i + j] += a * b;
            }
        }
        total = next;
    }
    total
}
