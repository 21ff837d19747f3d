use gpk_core::fock_lab::*;
use gpk_core::linalg::{max_abs, CMatrix};
use gpk_core::scattering::{solve_zero_energy, RadialPotential};
use gpk_core::{Execution, GpkError};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|j| j as f64).product()
}

fn real_matrix(d: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, entries)
}

fn complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

#[test]
fn basis_dimensions_and_order() {
    assert_eq!(FockBasis::new(1, 3).unwrap().dim, 4);
    let b = FockBasis::new(2, 2).unwrap();
    assert_eq!(b.dim, 6);
    let order: Vec<Vec<u16>> = (0..6).map(|i| b.state(i).to_vec()).collect();
    assert_eq!(order, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
    assert_eq!(FockBasis::new(3, 4).unwrap().dim, 35);
    assert_eq!(fock_dimension(3, 4), (0..=4).map(|n| shell_size(3, n)).sum::<usize>());
    for i in 0..b.dim {
        assert_eq!(b.index_of(b.state(i)), Some(i));
    }
    assert_eq!(b.shell(2), 3..6);
}

#[test]
fn basis_budget_is_a_configuration_error() {
    assert!(matches!(FockBasis::new(7, 2), Err(GpkError::Config(_))));
    assert!(matches!(FockBasis::new(0, 2), Err(GpkError::Config(_))));
    let err = FockBasis::new(6, 20).unwrap_err();
    assert!(err.to_string().contains(&fock_dimension(6, 20).to_string()), "{err}");
}

#[test]
fn ladder_matrix_elements() {
    let b = FockBasis::new(1, 6).unwrap();
    let (a, a_dag) = ladder(&b, 0).unwrap();
    let dense = a.to_dense();
    assert!(dense.column(0).iter().all(|z| z.norm() == 0.0));
    for n in 1..=6 {
        assert!((dense[(n - 1, n)] - c((n as f64).sqrt(), 0.0)).norm() < 1e-15);
    }
    assert_eq!(a_dag.to_dense(), dense.adjoint());
    assert!(matches!(ladder(&b, 1), Err(GpkError::Config(_))));
}

#[test]
fn canonical_commutation_relations() {
    for (d, n_max) in [(1, 8), (2, 6), (3, 4)] {
        assert!(ccr_residual(&FockBasis::new(d, n_max).unwrap()).unwrap() < 1e-13);
    }
}

#[test]
fn hamiltonian_structure() {
    let basis = FockBasis::new(3, 4).unwrap();
    let h = CMatrix::from_row_slice(3, 3, &[c(1.0, 0.0), c(0.2, 0.1), c(0.0, 0.0), c(0.2, -0.1), c(-0.5, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.3, 0.0), c(0.7, 0.0)]);
    let free = hamiltonian(&basis, &h, &InteractionTensor::zeros(3), 1.0).unwrap();
    let dense = free.to_dense();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(dense[(basis.single(i), basis.single(j))], h[(i, j)]);
        }
    }
    let v = InteractionTensor::density_density(&real_matrix(3, &[1.0, 0.4, 0.2, 0.4, 0.8, 0.1, 0.2, 0.1, 0.5]));
    let full = hamiltonian(&basis, &h, &v, 0.7).unwrap();
    assert!(full.particle_conserving);
    assert!(full.commutator_max(&number_operator(&basis)) < 1e-12);
    assert!(full.hermiticity_defect() < 1e-14);
    let mut bad = h.clone();
    bad[(0, 1)] = c(5.0, 0.0);
    assert!(matches!(hamiltonian(&basis, &bad, &v, 1.0), Err(GpkError::Domain(_))));
}

#[test]
fn bose_hubbard_ground_energy_matches_dense_oracle() {
    // H = −J(a1†a2 + a2†a1) + ε n2 + (U/2) Σ n_i(n_i − 1) on |k, n−k⟩, shell by shell.
    let (j, eps, u, n_max) = (1.0, 0.3, 2.5, 4);
    let mut oracle = f64::INFINITY;
    for n in 0..=n_max {
        let m = DMatrix::from_fn(n + 1, n + 1, |r, s| {
            let (k, l) = (r as f64, s as f64);
            if r == s {
                eps * (n as f64 - k) + 0.5 * u * (k * (k - 1.0) + (n as f64 - k) * (n as f64 - k - 1.0))
            } else if r == s + 1 {
                -j * (k * (n as f64 - l)).sqrt()
            } else if s == r + 1 {
                -j * (l * (n as f64 - k)).sqrt()
            } else {
                0.0
            }
        });
        oracle = oracle.min(SymmetricEigen::new(m).eigenvalues.min());
    }
    let basis = FockBasis::new(2, n_max).unwrap();
    let h = complex(&real_matrix(2, &[0.0, -j, -j, eps]));
    let mut v = InteractionTensor::zeros(2);
    *v.at_mut(0, 0, 0, 0) = c(u, 0.0);
    *v.at_mut(1, 1, 1, 1) = c(u, 0.0);
    let op = hamiltonian(&basis, &h, &v, 1.0).unwrap();
    let ground = ShellEvolution::new(&basis, &op).unwrap().ground_energy();
    assert!((ground - oracle).abs() < 1e-10, "{ground} vs {oracle}");
}

#[test]
fn weyl_operator_basics() {
    let basis = FockBasis::new(2, 12).unwrap();
    let w0 = weyl(&basis, &[c(0.0, 0.0); 2]).unwrap();
    assert_eq!(max_abs(&(w0.matrix - CMatrix::identity(basis.dim, basis.dim))), 0.0);
    let f = [c(0.4, 0.1), c(-0.2, 0.3)];
    let check = check_coherent_state(&basis, &f, 4).unwrap();
    assert!(check.component_residual < 1e-9 && check.shell_residual < 1e-9 && check.number_residual < 1e-6);
    assert!(matches!(weyl(&basis, &[c(2.0, 0.0), c(0.0, 0.0)]), Err(GpkError::Budget(_))));
}

#[test]
fn weyl_relations() {
    let basis = FockBasis::new(2, 10).unwrap();
    let f = [c(0.08, 0.0), c(0.0, 0.0)];
    let zero = [c(0.0, 0.0); 2];
    let r = check_weyl_relations(&basis, &f, &zero, 4).unwrap();
    assert!(r.product_residual < 1e-14 && r.shift_residual < 1e-14);
    let g = [c(0.0, 0.0), c(0.06, 0.0)];
    let r = check_weyl_relations(&basis, &f, &g, 4).unwrap();
    assert!(r.product_residual < 1e-9 && r.shift_residual < 1e-9, "{r:?}");
    // Im⟨f, f⟩ = 0, so W(f)W(f) = W(2f).
    let fi = [c(0.0, 0.05), c(0.0, -0.03)];
    let r = check_weyl_relations(&basis, &fi, &fi, 4).unwrap();
    assert!(r.product_residual < 1e-9);
}

#[test]
fn bogoliubov_unitaries() {
    let basis = FockBasis::new(2, 10).unwrap();
    let t0 = bogoliubov(&basis, &CMatrix::zeros(2, 2)).unwrap();
    assert_eq!(max_abs(&(t0.matrix - CMatrix::identity(basis.dim, basis.dim))), 0.0);
    let single = FockBasis::new(1, 60).unwrap();
    for r in [0.2, 0.5, 0.8] {
        let k = CMatrix::from_element(1, 1, c(r, 0.0));
        let number = squeezed_vacuum_number(&single, &k).unwrap();
        assert!((number - r.sinh().powi(2)).abs() < 1e-9, "r {r}: {number}");
    }
    let big = CMatrix::from_element(1, 1, c(1.6, 0.0));
    assert!(matches!(bogoliubov(&single, &big), Err(GpkError::Budget(_))));
    let asym = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    assert!(matches!(bogoliubov(&basis, &asym), Err(GpkError::Domain(_))));
}

#[test]
fn bogoliubov_conjugation() {
    let basis = FockBasis::new(2, 10).unwrap();
    let s = 0.02;
    let k = CMatrix::from_row_slice(2, 2, &[c(0.5 * s, 0.1 * s), c(0.2 * s, -0.3 * s), c(0.2 * s, -0.3 * s), c(-0.4 * s, 0.2 * s)]);
    let f = [c(0.06, 0.02), c(-0.03, 0.07)];
    let res = bogoliubov_conjugation_residual(&basis, &k, &f, 4).unwrap();
    assert!(res <= 1e-8, "{res}");
    assert!(mode_symplectic_residual(&k) < 1e-14);
}

#[test]
fn identity_suite_meets_tolerances() {
    let r = identity_suite(10, 4).unwrap();
    assert!(r.ccr < 1e-13);
    assert!(r.weyl.product_residual <= 1e-9 && r.weyl.shift_residual <= 1e-9);
    assert!(r.bogoliubov_conjugation <= 1e-8);
    assert!(r.coherent.component_residual <= 1e-9);
    assert!(r.squeezed_error() <= 1e-9);
}

#[test]
fn vector_actions_match_dense_exponentials() {
    let basis = FockBasis::new(2, 10).unwrap();
    let f = [c(0.3, -0.2), c(0.1, 0.4)];
    let k = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.1), c(0.1, 0.0), c(0.1, 0.0), c(-0.1, 0.05)]);
    let v: Vec<Complex64> = (0..basis.dim).map(|i| if basis.particles(i) <= 3 { c(1.0 / (1.0 + i as f64), 0.1 * i as f64) } else { c(0.0, 0.0) }).collect();
    let dense_w = weyl(&basis, &f).unwrap().matrix * nalgebra::DVector::from_column_slice(&v);
    let act_w = weyl_apply(&basis, &f, &v, false).unwrap();
    let dense_t = bogoliubov(&basis, &k).unwrap().matrix * nalgebra::DVector::from_column_slice(&v);
    let act_t = bogoliubov_apply(&basis, &k, &v, false).unwrap();
    for i in 0..basis.dim {
        assert!((dense_w[i] - act_w[i]).norm() < 1e-9);
        assert!((dense_t[i] - act_t[i]).norm() < 1e-9);
    }
    let back = weyl_apply(&basis, &f, &act_w, true).unwrap();
    assert!(v.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-12));
}

#[test]
fn dense_exponential_has_a_size_limit() {
    let basis = FockBasis::new(2, 60).unwrap();
    assert!(basis.dim > DENSE_EXP_LIMIT);
    let gen = weyl_generator(&basis, &[c(0.1, 0.0), c(0.0, 0.0)]);
    assert!(matches!(dense_exp(&gen), Err(GpkError::Budget(_))));
}

#[test]
fn reduced_density_of_product_and_coherent_states() {
    let phi = [c(0.6, 0.0), c(0.0, 0.8)];
    let basis = Arc::new(FockBasis::new(2, 8).unwrap());
    // (a†(φ))^n Ω / √n!
    let mut b = OperatorBuilder::new(&basis);
    b.add(phi[0], &[0], &[]).add(phi[1], &[1], &[]);
    let create = b.build();
    let mut v = FockVector::vacuum(basis.clone()).coefficients;
    for _ in 0..5 {
        v = create.apply(&v);
    }
    let v: Vec<Complex64> = v.iter().map(|z| z / factorial(5).sqrt()).collect();
    let product = FockVector::new(basis.clone(), v).unwrap();
    assert!((product.norm() - 1.0).abs() < 1e-14);
    let gamma = reduced_density(&product).unwrap();
    assert!(trace_distance_to_rank_one(&gamma, &phi).unwrap().trace_norm < 1e-14);

    let n = 3.0f64;
    let f: Vec<Complex64> = phi.iter().map(|z| z * n.sqrt()).collect();
    let big = Arc::new(FockBasis::new(2, 24).unwrap());
    let coherent = FockVector::new(big.clone(), coherent_state_exact(&big, &f)).unwrap();
    let gamma = reduced_density(&coherent).unwrap();
    assert!(trace_distance_to_rank_one(&gamma, &phi).unwrap().trace_norm < 1e-13);
    assert!((gamma.trace() - c(1.0, 0.0)).norm() < 1e-14);

    assert!(matches!(reduced_density(&FockVector::vacuum(basis)), Err(GpkError::Domain(_))));
}

#[test]
fn trace_distance_examples() {
    let phi = [c(1.0, 0.0), c(0.0, 0.0)];
    let perp = ReducedDensity { matrix: CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]) };
    let same = ReducedDensity { matrix: CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) };
    assert!(trace_distance_to_rank_one(&same, &phi).unwrap().trace_norm < 1e-15);
    let d = trace_distance_to_rank_one(&perp, &phi).unwrap();
    assert!((d.trace_norm - 2.0).abs() < 1e-14);
    assert_eq!(d.negative_eigenvalues, 1);
    assert!(matches!(trace_distance_to_rank_one(&same, &[c(1.0, 0.0), c(1.0, 0.0)]), Err(GpkError::Domain(_))));
}

#[test]
fn tnt_constants() {
    let zero = check_tnt_inequality(&CMatrix::zeros(2, 2), 6, 1.0).unwrap();
    assert!((zero.c_min - 1.0).abs() < 1e-12);
    assert!(zero.candidate_min_eigenvalue >= -1e-12);
    let mut previous = 1.0;
    for r in [0.25, 0.5, 1.0, 1.5] {
        let k = CMatrix::from_element(1, 1, c(r, 0.0));
        let rep = check_tnt_inequality(&k, 12, (2.0 * r).exp()).unwrap();
        assert!(rep.c_literal >= r.sinh().powi(2) - 1e-12);
        assert!(rep.c_min > previous && rep.c_min.is_finite());
        previous = rep.c_min;
    }
    let k = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.1, 0.05), c(0.1, 0.05), c(-0.15, 0.0)]);
    let exact = check_tnt_inequality(&k, 4, 2.0).unwrap().c_min;
    let truncated = tnt_constant_from_unitary(&FockBasis::new(2, 30).unwrap(), &k, 4).unwrap();
    assert!((exact - truncated).abs() < 1e-8, "{exact} vs {truncated}");
}

#[test]
fn projection_onto_particle_sectors() {
    let basis = Arc::new(FockBasis::new(2, 24).unwrap());
    let phi = [c(0.6, 0.0), c(0.0, 0.8)];
    let n = 4usize;
    let f: Vec<Complex64> = phi.iter().map(|z| z * (n as f64).sqrt()).collect();
    let w = weyl(&basis, &f).unwrap();
    let state = FockVector::new(basis.clone(), w.matrix.column(0).iter().copied().collect()).unwrap();
    let (proj, norm) = project_n(&state, n).unwrap();
    let poisson = (-(n as f64)).exp() * (n as f64).powi(n as i32) / factorial(n);
    assert!((norm * norm - poisson).abs() < 1e-10);
    // Same mass from the closed-form components.
    let exact = coherent_state_exact(&basis, &f);
    let closed: f64 = exact[basis.shell(n)].iter().map(|z| z.norm_sqr()).sum();
    assert!((closed - poisson).abs() < 1e-12);
    let (twice, norm2) = project_n(&proj, n).unwrap();
    assert_eq!(twice.coefficients, proj.coefficients);
    assert_eq!(norm, norm2);
    let masses = state.shell_masses();
    let window = (n as f64).sqrt();
    let near: f64 = masses.iter().enumerate().filter(|(j, _)| (*j as f64 - n as f64).abs() <= window).map(|(_, m)| m).sum();
    assert!(near >= 0.5);
    assert!(matches!(project_n(&state, 25), Err(GpkError::Config(_))));
}

fn free_scenario() -> ToyScenario {
    let sol = solve_zero_energy(&RadialPotential::square_well(8.0, 1.0).unwrap(), 5.0, 1001).unwrap();
    let mut sc = ToyScenario::reference(&sol, 0.4);
    sc.coupling = 0.0;
    sc.n_list = vec![2, 4, 6];
    sc.times = vec![0.5];
    sc.margin = 24;
    sc
}

#[test]
fn fluctuation_dynamics_at_time_zero_is_identity() {
    let sc = free_scenario();
    let basis = Arc::new(FockBasis::new(2, 30).unwrap());
    let h = sc.hamiltonian(&basis, 2.0).unwrap();
    let evolution = ShellEvolution::new(&basis, &h).unwrap();
    let k0 = correlation_matrix(&sc.w, &sc.phi0);
    let mut psi = FockVector::vacuum(basis.clone());
    psi.coefficients[1] = c(0.3, 0.1);
    psi.coefficients[4] = c(-0.2, 0.0);
    let out = fluctuation_dynamics(&psi, &evolution, 2.0, &sc.phi0, &k0, &sc.phi0, &k0, 0.0).unwrap();
    for (a, b) in out.fluctuation.coefficients.iter().zip(&psi.coefficients) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn quadratic_dynamics_keeps_coherent_states_coherent() {
    let sc = free_scenario();
    let n = 4.0;
    let basis = Arc::new(FockBasis::new(2, 40).unwrap());
    let evolution = ShellEvolution::new(&basis, &sc.hamiltonian(&basis, n).unwrap()).unwrap();
    let zero = CMatrix::zeros(2, 2);
    let t = 0.7;
    let phi_t = sc.one_body(None, t);
    let out = fluctuation_dynamics(&FockVector::vacuum(basis), &evolution, n, &sc.phi0, &zero, &phi_t, &zero, t).unwrap();
    assert!(out.fluctuation.number_expectation() < 1e-8, "{}", out.fluctuation.number_expectation());
    assert!(out.leakage < LEAKAGE_TOLERANCE);
}

#[test]
fn toy_without_interaction_has_vanishing_distance() {
    let mut sc = free_scenario();
    sc.w = DMatrix::zeros(2, 2);
    let rep = toy_main_theorem(&sc, Execution::Parallel).unwrap();
    for row in &rep.rows {
        assert!(row.trace_distance < 1e-9, "{row:?}");
    }
    sc.times = vec![0.0];
    sc.coupling = 1.0;
    let rep = toy_main_theorem(&sc, Execution::Sequential).unwrap();
    assert!(rep.rows.iter().all(|r| r.trace_distance < 1e-14));
    assert!(rep.fit.is_none() || rep.rows.iter().all(|r| r.trace_distance > 0.0));
}

#[test]
fn toy_with_interaction_converges_in_n() {
    let sol = solve_zero_energy(&RadialPotential::square_well(8.0, 1.0).unwrap(), 5.0, 1001).unwrap();
    let mut sc = ToyScenario::reference(&sol, 0.4);
    sc.n_list = vec![4, 8, 16];
    sc.times = vec![0.25, 0.5];
    let rep = toy_main_theorem(&sc, Execution::Parallel).unwrap();
    assert_eq!(rep.rows.len(), 6);
    let fit = rep.fit.unwrap();
    assert!(fit.slope < -0.4, "{}", fit.slope);
    assert!(rep.fluctuation_ratio < 2.0);
    assert!(rep.rows.iter().all(|r| r.leakage < LEAKAGE_TOLERANCE));
}

#[test]
fn toy_scenario_validation() {
    let mut sc = free_scenario();
    sc.times = vec![0.5, 0.5];
    assert!(matches!(toy_main_theorem(&sc, Execution::Sequential), Err(GpkError::Config(_))));
    let mut sc = free_scenario();
    sc.phi0 = vec![c(1.0, 0.0), c(1.0, 0.0)];
    assert!(matches!(sc.validate(), Err(GpkError::Config(_))));
    let mut sc = free_scenario();
    sc.n_list = vec![0];
    assert!(sc.validate().is_err());
}

#[test]
fn generator_cancellation() {
    let sol = solve_zero_energy(&RadialPotential::square_well(8.0, 1.0).unwrap(), 5.0, 1001).unwrap();
    let sc = ToyScenario::reference(&sol, 0.05);
    let rep = generator_cancellation_check(&sc, &sc.phi0, 32.0, 20).unwrap();
    assert!(rep.ratio <= 0.1, "{rep:?}");
    assert!((rep.ratio_uncorrelated - 1.0).abs() < 1e-12);
    // The residual is second order in the correlation amplitude.
    let half = generator_cancellation_check(&ToyScenario::reference(&sol, 0.025), &sc.phi0, 32.0, 20).unwrap();
    assert!(half.ratio < 0.6 * rep.ratio, "{} vs {}", half.ratio, rep.ratio);
    let mut free = sc.clone();
    free.coupling = 0.0;
    let rep = generator_cancellation_check(&free, &sc.phi0, 32.0, 20).unwrap();
    assert_eq!((rep.l1_norm, rep.l3_norm), (0.0, 0.0));
}

#[test]
fn poisson_and_squeezed_distributions() {
    let p = poisson_masses(2.0, 40);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    assert!(poisson_tail(2.0, 40) < 1e-15);
    let r = [0.3, 0.7];
    let s = squeezed_masses(&r, 80);
    assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let mean: f64 = s.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    assert!((mean - r.iter().map(|x: &f64| x.sinh().powi(2)).sum::<f64>()).abs() < 1e-12);
    assert!(s.iter().skip(1).step_by(2).all(|&m| m == 0.0) || r.len() > 1);
}

fn fock_state(basis: &Arc<FockBasis>, entries: &[(f64, f64)]) -> FockVector {
    let mut v: Vec<Complex64> = entries.iter().take(basis.dim).map(|&(a, b)| c(a, b)).collect();
    v.resize(basis.dim, c(0.0, 0.0));
    let norm = vector_norm(&v).max(1e-300);
    FockVector::new(basis.clone(), v.iter().map(|z| z / norm).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn annihilation_is_bounded_by_number(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 84),
        f in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
    ) {
        let basis = Arc::new(FockBasis::new(3, 6).unwrap());
        let psi = fock_state(&basis, &entries);
        let mut b = OperatorBuilder::new(&basis);
        for (i, &(re, im)) in f.iter().enumerate() {
            b.add(c(re, -im), &[], &[i]);
        }
        let af = vector_norm(&b.build().apply(&psi.coefficients));
        let f_norm = f.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        prop_assert!(af <= f_norm * psi.number_expectation().sqrt() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn reduced_densities_are_states(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 35)) {
        let basis = Arc::new(FockBasis::new(3, 4).unwrap());
        let psi = fock_state(&basis, &entries);
        prop_assume!(psi.number_expectation() > 1e-6);
        let gamma = reduced_density(&psi).unwrap();
        prop_assert!((gamma.trace() - c(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(gamma.min_eigenvalue() >= -1e-12);
        prop_assert!(gamma.hermiticity_defect() < 1e-14);
        let phi = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let dist = trace_distance_to_rank_one(&gamma, &phi).unwrap();
        prop_assert!(dist.trace_norm >= dist.hs_norm - 1e-14);
        prop_assert!(dist.negative_eigenvalues <= 1);
    }

    #[test]
    fn mode_blocks_are_symplectic(a in -0.6f64..0.6, b in -0.6f64..0.6, re in -0.4f64..0.4, im in -0.4f64..0.4) {
        let k = CMatrix::from_row_slice(2, 2, &[c(a, 0.1), c(re, im), c(re, im), c(b, -0.2)]);
        prop_assert!(mode_symplectic_residual(&k) < 1e-10);
    }

    #[test]
    fn ccr_holds_for_every_small_basis(d in 1usize..=4, n_max in 1usize..=5) {
        prop_assert!(ccr_residual(&FockBasis::new(d, n_max).unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn unitaries_preserve_norms(fr in -0.3f64..0.3, fi in -0.3f64..0.3, kr in -0.3f64..0.3) {
        let basis = FockBasis::new(2, 16).unwrap();
        let v: Vec<Complex64> = (0..basis.dim).map(|i| if basis.particles(i) <= 2 { c(1.0, i as f64) } else { c(0.0, 0.0) }).collect();
        let norm = vector_norm(&v);
        let w = weyl_apply(&basis, &[c(fr, fi), c(fi, -fr)], &v, false).unwrap();
        let k = CMatrix::from_row_slice(2, 2, &[c(kr, 0.0), c(0.1, 0.0), c(0.1, 0.0), c(-kr, 0.0)]);
        let t = bogoliubov_apply(&basis, &k, &v, false).unwrap();
        prop_assert!((vector_norm(&w) - norm).abs() < 1e-10 * norm);
        prop_assert!((vector_norm(&t) - norm).abs() < 1e-10 * norm);
    }
}
