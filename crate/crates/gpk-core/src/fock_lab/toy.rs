//! Discrete-mode analogue of the correlated coherent-state approximation.
//!
//! Modes i = 1..d carry a one-body matrix h and a pair coupling V_ij; the
//! many-body Hamiltonian is Σ h_ij a_i†a_j + (g/2N) Σ V_ij a_i†a_j†a_j a_i.
//! The correlation matrix W_ij plays the role of w(N(x−y)): it enters the
//! kernel K = −W∘φφᵀ and the modified one-body equation through V(1 − W/N).

use super::basis::FockBasis;
use super::expm::{dense_exp, ShellEvolution};
use super::operator::{bogoliubov_generator, hamiltonian, InteractionTensor, OperatorBuilder};
use super::states::{reduced_density, trace_distance_to_rank_one, FockVector};
use super::unitary::{bogoliubov_apply, weyl_apply, LEAKAGE_TOLERANCE};
use crate::convergence_bench::fit::{fit_rate, RateReport};
use crate::error::{GpkError, Result};
use crate::exec::Execution;
use crate::linalg::CMatrix;
use crate::scattering::ScatteringSolution;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// Correlation matrix W_ij = amplitude · w(s_ij) from the scattering profile,
/// where s_ij are mode separations (s_ii = 0).
pub fn profile_kernel(sol: &ScatteringSolution, separations: &DMatrix<f64>, amplitude: f64) -> DMatrix<f64> {
    separations.map(|s| amplitude * sol.w_at(s))
}

/// K = −W∘φφᵀ.
pub fn correlation_matrix(w: &DMatrix<f64>, phi: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(w.nrows(), w.ncols(), |i, j| -phi[i] * phi[j] * w[(i, j)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyScenario {
    pub h: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub coupling: f64,
    pub w: DMatrix<f64>,
    pub phi0: Vec<Complex64>,
    /// Observation times, ascending; the last one is used for the N-fit.
    pub times: Vec<f64>,
    pub n_list: Vec<usize>,
    /// n_max = 4N + margin.
    pub margin: usize,
    /// RK4 steps per unit time for the one-body equation.
    pub ode_steps: usize,
}

impl ToyScenario {
    /// Two modes at separation √2 with the profile-derived correlation matrix.
    pub fn reference(sol: &ScatteringSolution, amplitude: f64) -> Self {
        let sep = DMatrix::from_row_slice(2, 2, &[0.0, std::f64::consts::SQRT_2, std::f64::consts::SQRT_2, 0.0]);
        let norm = (1.0f64 + 0.09).sqrt();
        ToyScenario {
            h: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.5]),
            v: DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]),
            coupling: 1.0,
            w: profile_kernel(sol, &sep, amplitude),
            phi0: vec![Complex64::new(1.0 / norm, 0.0), Complex64::new(0.3 / norm, 0.0)],
            times: vec![0.5, 1.0],
            n_list: vec![4, 8, 16, 32],
            margin: 32,
            ode_steps: 4000,
        }
    }

    pub fn d(&self) -> usize {
        self.h.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        let shapes_ok = self.h.ncols() == d
            && self.v.shape() == (d, d)
            && self.w.shape() == (d, d)
            && self.phi0.len() == d;
        if !shapes_ok {
            return Err(GpkError::Config(format!("scenario matrices and φ0 must all be indexed by {d} modes")));
        }
        if self.h != self.h.transpose() || self.v != self.v.transpose() || self.w != self.w.transpose() {
            return Err(GpkError::Config("scenario h, v and w must be symmetric".into()));
        }
        let norm: f64 = self.phi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(GpkError::Config(format!("φ0 must be normalised, ‖φ0‖ = {norm}")));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(GpkError::Config("N list must be non-empty and positive".into()));
        }
        if self.ode_steps == 0 {
            return Err(GpkError::Config("ode_steps must be positive".into()));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(*t >= 0.0)) || self.times.windows(2).any(|p| p[1] <= p[0]) {
            return Err(GpkError::Config("times must be non-empty, non-negative and strictly increasing".into()));
        }
        Ok(())
    }

    /// Pair coupling of the one-body equation: g V (1 − W/N), or g V in the limit.
    fn mean_field_coupling(&self, n: Option<f64>) -> DMatrix<f64> {
        let mut u = &self.v * self.coupling;
        if let Some(n) = n {
            u.zip_apply(&self.w, |x, w| *x *= 1.0 - w / n);
        }
        u
    }

    /// φ_t from i∂φ_i = (hφ)_i + Σ_j U_ij |φ_j|² φ_i (RK4).
    pub fn one_body(&self, n: Option<f64>, t: f64) -> Vec<Complex64> {
        let u = self.mean_field_coupling(n);
        let h = self.h.map(|x| Complex64::new(x, 0.0));
        let rhs = |phi: &[Complex64]| -> Vec<Complex64> {
            let dens: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
            (0..phi.len())
                .map(|i| {
                    let hop: Complex64 = (0..phi.len()).map(|j| h[(i, j)] * phi[j]).sum();
                    let pot: f64 = (0..phi.len()).map(|j| u[(i, j)] * dens[j]).sum();
                    (hop + phi[i] * pot) * Complex64::new(0.0, -1.0)
                })
                .collect()
        };
        let steps = ((self.ode_steps as f64) * t.abs()).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut phi = self.phi0.clone();
        let axpy = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
        for _ in 0..steps {
            let k1 = rhs(&phi);
            let k2 = rhs(&axpy(&phi, &k1, 0.5 * dt));
            let k3 = rhs(&axpy(&phi, &k2, 0.5 * dt));
            let k4 = rhs(&axpy(&phi, &k3, dt));
            for i in 0..phi.len() {
                phi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
            }
        }
        phi
    }

    pub fn hamiltonian(&self, basis: &FockBasis, n: f64) -> Result<super::operator::FockOperator> {
        hamiltonian(
            basis,
            &self.h.map(|x| Complex64::new(x, 0.0)),
            &InteractionTensor::density_density(&self.v),
            self.coupling / n,
        )
    }
}

fn scaled(phi: &[Complex64], s: f64) -> Vec<Complex64> {
    phi.iter().map(|z| z * s).collect()
}

fn check_leak(state: &FockVector, factor: &str) -> Result<f64> {
    let leak = state.leakage();
    if leak > LEAKAGE_TOLERANCE {
        return Err(GpkError::Budget(format!(
            "truncation leakage {leak:.2e} on the n_max = {} shell after {factor}",
            state.basis.n_max
        )));
    }
    Ok(leak)
}

/// Result of applying the fluctuation dynamics.
#[derive(Debug, Clone)]
pub struct FluctuationOutput {
    /// 𝒰(t;0)ψ.
    pub fluctuation: FockVector,
    /// e^{−iHt} W(√N φ0) T(K0) ψ.
    pub evolved: FockVector,
    /// Largest top-shell mass over the five factors.
    pub leakage: f64,
}

/// 𝒰(t;0)ψ = T*(K_t) W*(√N φ_t) e^{−iHt} W(√N φ_0) T(K_0) ψ.
#[allow(clippy::too_many_arguments)]
pub fn fluctuation_dynamics(
    psi: &FockVector,
    evolution: &ShellEvolution,
    n: f64,
    phi0: &[Complex64],
    k0: &CMatrix,
    phi_t: &[Complex64],
    k_t: &CMatrix,
    t: f64,
) -> Result<FluctuationOutput> {
    let basis = psi.basis.clone();
    let wrap = |c: Vec<Complex64>| FockVector { basis: basis.clone(), coefficients: c };
    let mut leak: f64 = 0.0;
    let s = n.sqrt();
    let v = wrap(bogoliubov_apply(&basis, k0, &psi.coefficients, false)?);
    leak = leak.max(check_leak(&v, "T(K_0)")?);
    let v = wrap(weyl_apply(&basis, &scaled(phi0, s), &v.coefficients, false)?);
    leak = leak.max(check_leak(&v, "W(√N φ_0)")?);
    let evolved = wrap(evolution.apply(&v.coefficients, t));
    leak = leak.max(check_leak(&evolved, "e^{−iHt}")?);
    let v = wrap(weyl_apply(&basis, &scaled(phi_t, s), &evolved.coefficients, true)?);
    leak = leak.max(check_leak(&v, "W*(√N φ_t)")?);
    let v = wrap(bogoliubov_apply(&basis, k_t, &v.coefficients, true)?);
    leak = leak.max(check_leak(&v, "T*(K_t)")?);
    Ok(FluctuationOutput { fluctuation: v, evolved, leakage: leak })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyRow {
    pub n: usize,
    pub n_max: usize,
    pub dim: usize,
    pub t: f64,
    pub trace_distance: f64,
    pub hs_distance: f64,
    /// ⟨𝒰(t;0)Ω, 𝒩 𝒰(t;0)Ω⟩.
    pub number_expectation: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyReport {
    /// One row per (N, t), grouped by N.
    pub rows: Vec<ToyRow>,
    /// Log–log fit of trace distance against N (absent when a distance vanishes).
    pub fit: Option<RateReport>,
    /// max/min of the fluctuation number over N.
    pub fluctuation_ratio: f64,
}

fn toy_rows(sc: &ToyScenario, n: usize) -> Result<Vec<ToyRow>> {
    let nf = n as f64;
    let basis = Arc::new(FockBasis::new(sc.d(), 4 * n + sc.margin)?);
    let h = sc.hamiltonian(&basis, nf)?;
    let evolution = ShellEvolution::new(&basis, &h)?;
    let k0 = correlation_matrix(&sc.w, &sc.phi0);
    let vac = FockVector::vacuum(basis.clone());
    sc.times
        .iter()
        .map(|&t| {
            let phi_n = sc.one_body(Some(nf), t);
            let phi_lim = sc.one_body(None, t);
            let kt = correlation_matrix(&sc.w, &phi_n);
            let out = fluctuation_dynamics(&vac, &evolution, nf, &sc.phi0, &k0, &phi_n, &kt, t)?;
            let gamma = reduced_density(&out.evolved)?;
            let dist = trace_distance_to_rank_one(&gamma, &phi_lim)?;
            Ok(ToyRow {
                n,
                n_max: basis.n_max,
                dim: basis.dim,
                t,
                trace_distance: dist.trace_norm,
                hs_distance: dist.hs_norm,
                number_expectation: out.fluctuation.number_expectation(),
                leakage: out.leakage,
            })
        })
        .collect()
}

/// Exact many-body evolution of W(√N φ0)T(K0)Ω for each N, compared with the
/// limiting one-body evolution. The fit and the fluctuation ratio use the last time.
pub fn toy_main_theorem(sc: &ToyScenario, exec: Execution) -> Result<ToyReport> {
    sc.validate()?;
    // Largest N first so the longest job starts early.
    let mut order: Vec<usize> = (0..sc.n_list.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(sc.n_list[i]));
    let results = exec.map(&order, |&i| toy_rows(sc, sc.n_list[i]));
    let mut per_n = vec![Vec::new(); sc.n_list.len()];
    for (&i, r) in order.iter().zip(results) {
        per_n[i] = r?;
    }
    let last: Vec<&ToyRow> = per_n.iter().map(|r| r.last().expect("times is non-empty")).collect();
    let xs: Vec<f64> = last.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = last.iter().map(|r| r.trace_distance).collect();
    let fit = if last.len() >= 3 && ys.iter().all(|&y| y > 0.0) { Some(fit_rate(&xs, &ys)?) } else { None };
    let (lo, hi) = last.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.number_expectation), hi.max(r.number_expectation)));
    let fluctuation_ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(ToyReport { rows: per_n.into_iter().flatten().collect(), fit, fluctuation_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorReport {
    /// ‖ℓ₁ + ℓ₃‖ / ‖ℓ₁‖ with the correlated kernel.
    pub ratio: f64,
    pub l1_norm: f64,
    pub l3_norm: f64,
    /// Same ratio with K = 0.
    pub ratio_uncorrelated: f64,
}

/// Linear (one-creation / one-annihilation) matrix elements of T*𝓛₁T and T*𝓛₃T,
///
/// 𝓛₁ = N^{−1/2} Σ_i (Σ_j g V_ij W_ij |φ_j|²) φ_i a_i† + h.c.,
/// 𝓛₃ = N^{−1/2} Σ_ij g V_ij (φ_j a_i†a_j†a_i + φ̄_j a_i†a_j a_i),
///
/// between Ω and the one-particle states. With K = −W∘φφᵀ the quadratic part
/// of T*𝓛₃T produces a linear term that cancels the one of 𝓛₁ to first order in W.
pub fn generator_cancellation_check(sc: &ToyScenario, phi: &[Complex64], n: f64, n_max: usize) -> Result<GeneratorReport> {
    sc.validate()?;
    let d = sc.d();
    let basis = FockBasis::new(d, n_max)?;
    let g = sc.coupling;
    let inv = 1.0 / n.sqrt();
    let mut l1 = OperatorBuilder::new(&basis);
    for i in 0..d {
        let coeff: f64 = (0..d).map(|j| g * sc.v[(i, j)] * sc.w[(i, j)] * phi[j].norm_sqr()).sum();
        let u = phi[i] * coeff * inv;
        l1.add(u, &[i], &[]);
        l1.add(u.conj(), &[], &[i]);
    }
    let mut l3 = OperatorBuilder::new(&basis);
    for i in 0..d {
        for j in 0..d {
            let c = g * sc.v[(i, j)] * inv;
            l3.add(phi[j] * c, &[i, j], &[i]);
            l3.add(phi[j].conj() * c, &[i], &[j, i]);
        }
    }
    let l1 = l1.build().to_dense();
    let l3 = l3.build().to_dense();
    let linear = |t: &CMatrix, x: &CMatrix| -> Vec<Complex64> {
        let conj = t.adjoint() * x * t;
        let mut out = Vec::with_capacity(2 * d);
        for i in 0..d {
            out.push(conj[(basis.single(i), basis.vacuum_index())]);
        }
        for i in 0..d {
            out.push(conj[(basis.vacuum_index(), basis.single(i))]);
        }
        out
    };
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ratio_for = |k: &CMatrix| -> Result<(f64, f64, f64)> {
        let t = dense_exp(&bogoliubov_generator(&basis, k)?)?;
        let a = linear(&t, &l1);
        let b = linear(&t, &l3);
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let na = norm(&a);
        if na == 0.0 {
            return Ok((0.0, 0.0, norm(&b)));
        }
        Ok((norm(&sum) / na, na, norm(&b)))
    };
    let k = correlation_matrix(&sc.w, phi);
    let (ratio, l1_norm, l3_norm) = ratio_for(&k)?;
    let (ratio_uncorrelated, _, _) = ratio_for(&CMatrix::zeros(d, d))?;
    Ok(GeneratorReport { ratio, l1_norm, l3_norm, ratio_uncorrelated })
}
