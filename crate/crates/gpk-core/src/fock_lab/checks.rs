//! Operator identities verified on the sub-cutoff subspace.
//!
//! Truncation only corrupts matrix elements that connect to the top shells,
//! so identities are compared after projecting both sides onto n ≤ n_max − margin.

use super::basis::FockBasis;
use super::expm::dense_exp;
use super::operator::{bogoliubov_generator, ladder, FockOperator, OperatorBuilder};
use super::states::{poisson_masses, squeezed_masses};
use super::unitary::{bogoliubov, l2_sq, mode_hyperbolics, weyl, weyl_budget};
use crate::error::{GpkError, Result};
use crate::linalg::CMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

/// Indices of basis states with at most `n_cut` particles.
fn low_states(basis: &FockBasis, n_cut: usize) -> Vec<usize> {
    (0..basis.dim).filter(|&i| basis.particles(i) <= n_cut).collect()
}

/// Max |M_ij| over i, j in `keep`.
fn projected_max(m: &CMatrix, keep: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for &i in keep {
        for &j in keep {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

fn cut(basis: &FockBasis, margin: usize) -> Result<usize> {
    basis
        .n_max
        .checked_sub(margin)
        .ok_or_else(|| GpkError::Config(format!("margin {margin} exceeds n_max = {}", basis.n_max)))
}

/// a(g) = Σ ḡ_i a_i.
fn annihilation(basis: &FockBasis, g: &[Complex64]) -> FockOperator {
    let mut b = OperatorBuilder::new(basis);
    for (i, gi) in g.iter().enumerate() {
        b.add(gi.conj(), &[], &[i]);
    }
    b.build()
}

/// a†(g) = Σ g_i a_i†.
fn creation(basis: &FockBasis, g: &[Complex64]) -> FockOperator {
    let mut b = OperatorBuilder::new(basis);
    for (i, &gi) in g.iter().enumerate() {
        b.add(gi, &[i], &[]);
    }
    b.build()
}

/// ⟨f, g⟩ = Σ f̄_i g_i.
fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum()
}

/// max |[a_i, a_j†] − δ_ij| over states with fewer than n_max particles.
pub fn ccr_residual(basis: &FockBasis) -> Result<f64> {
    let keep: Vec<usize> = (0..basis.dim).filter(|&i| basis.particles(i) < basis.n_max).collect();
    let mut worst: f64 = 0.0;
    for i in 0..basis.d {
        let (ai, _) = ladder(basis, i)?;
        for j in 0..basis.d {
            let (_, aj_dag) = ladder(basis, j)?;
            let comm = &(&ai.matrix * &aj_dag.matrix) - &(&aj_dag.matrix * &ai.matrix);
            let mut dense = FockOperator { matrix: comm, hermitian: false, particle_conserving: true }.to_dense();
            if i == j {
                for k in 0..basis.dim {
                    dense[(k, k)] -= 1.0;
                }
            }
            // Columns below the cutoff; rows follow since the commutator conserves n.
            for &c in &keep {
                for r in 0..basis.dim {
                    worst = worst.max(dense[(r, c)].norm());
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylCheck {
    /// max |W(f)W(g) − W(f+g) e^{−i Im⟨f,g⟩}| on the low subspace.
    pub product_residual: f64,
    /// max |W(f)* a(g) W(f) − a(g) − ⟨g,f⟩| on the low subspace.
    pub shift_residual: f64,
    pub unitarity_defect: f64,
}

pub fn check_weyl_relations(basis: &FockBasis, f: &[Complex64], g: &[Complex64], margin: usize) -> Result<WeylCheck> {
    let n_cut = cut(basis, margin)?;
    let sum: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
    weyl_budget(basis, &sum)?;
    let wf = weyl(basis, f)?;
    let wg = weyl(basis, g)?;
    let wfg = weyl(basis, &sum)?;
    let keep = low_states(basis, n_cut);
    let phase = Complex64::from_polar(1.0, -inner(f, g).im);
    let product = &wf.matrix * &wg.matrix - &wfg.matrix * phase;
    let ag = annihilation(basis, g).to_dense();
    let mut shift = wf.matrix.adjoint() * &ag * &wf.matrix - &ag;
    let c = inner(g, f);
    for k in 0..basis.dim {
        shift[(k, k)] -= c;
    }
    Ok(WeylCheck {
        product_residual: projected_max(&product, &keep),
        shift_residual: projected_max(&shift, &keep),
        unitarity_defect: wf.unitarity_defect.max(wg.unitarity_defect).max(wfg.unitarity_defect),
    })
}

/// max |T* a(f) T − a(ch f) − a*(sh f̄)| on the low subspace.
pub fn bogoliubov_conjugation_residual(basis: &FockBasis, k: &CMatrix, f: &[Complex64], margin: usize) -> Result<f64> {
    let n_cut = cut(basis, margin)?;
    let t = bogoliubov(basis, k)?;
    let (ch, sh) = mode_hyperbolics(k);
    let fv = nalgebra::DVector::from_column_slice(f);
    let ch_f: Vec<Complex64> = (&ch * &fv).iter().copied().collect();
    let sh_fbar: Vec<Complex64> = (&sh * fv.map(|z| z.conj())).iter().copied().collect();
    let lhs = t.matrix.adjoint() * annihilation(basis, f).to_dense() * &t.matrix;
    let rhs = annihilation(basis, &ch_f).to_dense() + creation(basis, &sh_fbar).to_dense();
    Ok(projected_max(&(lhs - rhs), &low_states(basis, n_cut)))
}

/// max |ch ch† − sh sh† − 1| for the mode-space blocks of K.
pub fn mode_symplectic_residual(k: &CMatrix) -> f64 {
    let (ch, sh) = mode_hyperbolics(k);
    let d = k.nrows();
    let r = &ch * ch.adjoint() - &sh * sh.adjoint() - CMatrix::identity(d, d);
    r.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// The coherent state W(f)Ω from its closed form e^{−‖f‖²/2} Π f_i^{n_i}/√(n_i!).
pub fn coherent_state_exact(basis: &FockBasis, f: &[Complex64]) -> Vec<Complex64> {
    let pref = (-0.5 * l2_sq(f)).exp();
    (0..basis.dim)
        .map(|i| {
            basis.state(i).iter().zip(f).fold(Complex64::new(pref, 0.0), |acc, (&n, &fi)| {
                let fact: f64 = (1..=n as usize).map(|j| j as f64).product();
                acc * fi.powu(n as u32) / fact.sqrt()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentCheck {
    /// max_n |‖P_n W(f)Ω‖² − e^{−λ}λⁿ/n!| with λ = ‖f‖².
    pub shell_residual: f64,
    /// max |W(f)Ω − closed form| over shells n ≤ n_max − margin.
    pub component_residual: f64,
    /// |⟨W(f)Ω, 𝒩 W(f)Ω⟩ − ‖f‖²|.
    pub number_residual: f64,
}

pub fn check_coherent_state(basis: &FockBasis, f: &[Complex64], margin: usize) -> Result<CoherentCheck> {
    let n_cut = cut(basis, margin)?;
    let w = weyl(basis, f)?;
    let state: Vec<Complex64> = w.matrix.column(basis.vacuum_index()).iter().copied().collect();
    let lambda = l2_sq(f);
    let poisson = poisson_masses(lambda, basis.n_max);
    let mut shell_residual: f64 = 0.0;
    for n in 0..=n_cut {
        let mass: f64 = state[basis.shell(n)].iter().map(|z| z.norm_sqr()).sum();
        shell_residual = shell_residual.max((mass - poisson[n]).abs());
    }
    let exact = coherent_state_exact(basis, f);
    let component_residual = (0..basis.dim)
        .filter(|&i| basis.particles(i) <= n_cut)
        .map(|i| (state[i] - exact[i]).norm())
        .fold(0.0, f64::max);
    let number: f64 = (0..basis.dim).map(|i| basis.particles(i) as f64 * state[i].norm_sqr()).sum();
    Ok(CoherentCheck { shell_residual, component_residual, number_residual: (number - lambda).abs() })
}

/// ⟨Ω, T(K)* 𝒩 T(K) Ω⟩ from the dense unitary.
pub fn squeezed_vacuum_number(basis: &FockBasis, k: &CMatrix) -> Result<f64> {
    let t = bogoliubov(basis, k)?;
    let col = t.matrix.column(basis.vacuum_index());
    Ok((0..basis.dim).map(|i| basis.particles(i) as f64 * col[i].norm_sqr()).sum())
}

/// Σ_k sinh²(s_k) over the singular values of K; equals tr(sh sh†).
pub fn squeezed_vacuum_number_exact(k: &CMatrix) -> f64 {
    k.clone().svd(false, false).singular_values.iter().map(|s| s.sinh().powi(2)).sum()
}

/// Expected number from the squeezed distribution, for cross-checks.
pub fn squeezed_distribution_mean(k: &CMatrix, n_max: usize) -> f64 {
    let sv: Vec<f64> = k.clone().svd(false, false).singular_values.iter().copied().collect();
    squeezed_masses(&sv, n_max).iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TntReport {
    pub k_norm: f64,
    /// Smallest C with T*(𝒩+1)T ≤ C(𝒩+1) on n ≤ n_cut; equals 1 at K = 0.
    pub c_min: f64,
    /// Smallest C with T*𝒩T ≤ C(𝒩+1) on n ≤ n_cut.
    pub c_literal: f64,
    /// e^{2‖K‖_HS}, the growth a Grönwall argument produces.
    pub heuristic_bound: f64,
    pub candidate: f64,
    /// λ_min(C_candidate(𝒩+1) − T*𝒩T) on n ≤ n_cut.
    pub candidate_min_eigenvalue: f64,
    pub n_cut: usize,
}

/// Spectral constants of T(K)*𝒩T(K) relative to 𝒩 + 1 on states with at most
/// `n_cut` particles.
///
/// Uses T* a_i T = Σ_j (conj(ch_ji) a_j + sh_ji a_j†), which is exact in the
/// untruncated Fock space; b_i v stays below n_cut + 1 for low v, so the
/// matrix elements carry no truncation error.
pub fn check_tnt_inequality(k: &CMatrix, n_cut: usize, candidate: f64) -> Result<TntReport> {
    let d = k.nrows();
    if k.ncols() != d {
        return Err(GpkError::Config("K must be square".into()));
    }
    let k_norm = k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let basis = FockBasis::new(d, n_cut + 1)?;
    let (ch, sh) = mode_hyperbolics(k);
    let keep = low_states(&basis, n_cut);
    let s = keep.len();
    let mut m = CMatrix::zeros(s, s);
    for i in 0..d {
        let mut b = OperatorBuilder::new(&basis);
        for j in 0..d {
            b.add(ch[(j, i)].conj(), &[], &[j]);
            b.add(sh[(j, i)], &[j], &[]);
        }
        let bi = b.build().to_dense();
        let cols = bi.select_columns(&keep);
        m += cols.adjoint() * cols;
    }
    let inv_sqrt: Vec<f64> = keep.iter().map(|&i| 1.0 / ((basis.particles(i) + 1) as f64).sqrt()).collect();
    let scaled = |extra: f64| {
        CMatrix::from_fn(s, s, |a, b| {
            let diag = if a == b { extra } else { 0.0 };
            (m[(a, b)] + diag) * inv_sqrt[a] * inv_sqrt[b]
        })
    };
    let largest = |x: CMatrix| SymmetricEigen::new(hermitize(x)).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_min = largest(scaled(1.0));
    let c_literal = largest(scaled(0.0));
    let shifted = CMatrix::from_fn(s, s, |a, b| {
        let diag = if a == b { candidate * (basis.particles(keep[a]) + 1) as f64 } else { 0.0 };
        Complex64::new(diag, 0.0) - m[(a, b)]
    });
    let candidate_min_eigenvalue =
        SymmetricEigen::new(hermitize(shifted)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TntReport {
        k_norm,
        c_min,
        c_literal,
        heuristic_bound: (2.0 * k_norm).exp(),
        candidate,
        candidate_min_eigenvalue,
        n_cut,
    })
}

/// Same constant as [`TntReport::c_min`] computed from the dense truncated T(K);
/// agrees with the exact version when the cutoff leaves a wide margin.
pub fn tnt_constant_from_unitary(basis: &FockBasis, k: &CMatrix, n_cut: usize) -> Result<f64> {
    let t = dense_exp(&bogoliubov_generator(basis, k)?)?;
    let keep = low_states(basis, n_cut);
    let n_plus_one = DMatrix::from_fn(basis.dim, basis.dim, |i, j| {
        Complex64::new(if i == j { (basis.particles(i) + 1) as f64 } else { 0.0 }, 0.0)
    });
    let full = t.adjoint() * n_plus_one * &t;
    let s = keep.len();
    let scaled = CMatrix::from_fn(s, s, |a, b| {
        full[(keep[a], keep[b])] / (((basis.particles(keep[a]) + 1) * (basis.particles(keep[b]) + 1)) as f64).sqrt()
    });
    Ok(SymmetricEigen::new(hermitize(scaled)).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Identity residuals of the reference two-mode suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n_max: usize,
    pub margin: usize,
    pub ccr: f64,
    pub weyl: WeylCheck,
    pub bogoliubov_conjugation: f64,
    pub coherent: CoherentCheck,
    pub squeezed_number: f64,
    pub squeezed_number_exact: f64,
}

impl IdentityReport {
    pub fn squeezed_error(&self) -> f64 {
        (self.squeezed_number - self.squeezed_number_exact).abs()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Two-mode identity suite on n ≤ n_max − margin.
///
/// Truncating the generator perturbs low matrix elements by roughly
/// ‖f‖^(2(margin+1)) for Weyl operators and ‖K‖^6 for Bogoliubov ones at
/// margin 4, so the displacements (‖f‖ ≈ 0.1) and the kernel (‖K‖ ≈ 0.02)
/// are kept small.
pub fn identity_suite(n_max: usize, margin: usize) -> Result<IdentityReport> {
    let basis = FockBasis::new(2, n_max)?;
    let f = [c(0.06, 0.02), c(-0.03, 0.07)];
    let g = [c(0.01, -0.05), c(0.08, 0.01)];
    let s = 0.02;
    let k = CMatrix::from_row_slice(2, 2, &[c(0.5 * s, 0.1 * s), c(0.2 * s, -0.3 * s), c(0.2 * s, -0.3 * s), c(-0.4 * s, 0.2 * s)]);
    let coherent = [c(0.3, 0.0), c(0.0, 0.2)];
    let squeeze = CMatrix::from_row_slice(2, 2, &[c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.05, 0.0)]);
    Ok(IdentityReport {
        n_max,
        margin,
        ccr: ccr_residual(&basis)?,
        weyl: check_weyl_relations(&basis, &f, &g, margin)?,
        bogoliubov_conjugation: bogoliubov_conjugation_residual(&basis, &k, &f, margin)?,
        coherent: check_coherent_state(&basis, &coherent, margin)?,
        squeezed_number: squeezed_vacuum_number(&basis, &squeeze)?,
        squeezed_number_exact: squeezed_vacuum_number_exact(&squeeze),
    })
}
