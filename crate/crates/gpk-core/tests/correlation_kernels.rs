use gpk_core::correlation_kernels::*;
use gpk_core::gp_dynamics::{evolve, Datum, GridSpec, NonlinearitySpec, Propagator, WaveFunction};
use gpk_core::linalg::{max_abs, CMatrix};
use gpk_core::scattering::{solve_zero_energy, RadialPotential, ScatteringSolution};
use gpk_core::{Execution, GpkError};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

const EXEC: Execution = Execution::Parallel;

fn square_well() -> ScatteringSolution {
    solve_zero_energy(&RadialPotential::square_well(8.0, 1.0).unwrap(), 5.0, 2001).unwrap()
}

fn gaussian_on(grid: &GridSpec, width: f64) -> WaveFunction {
    Datum::Gaussian { width, center: [0.0; 3], momentum: [0.0; 3] }.sample(grid).unwrap()
}

/// Composite Simpson rule over consecutive breakpoints.
fn simpson(breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let m = 20_000;
    breaks
        .windows(2)
        .map(|e| {
            let h = (e[1] - e[0]) / m as f64;
            let inner: f64 = (1..m).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(e[0] + i as f64 * h)).sum();
            (f(e[0]) + f(e[1]) + inner) * h / 3.0
        })
        .sum()
}

#[test]
fn zero_potential_gives_zero_kernel_and_norms() {
    let zero = solve_zero_energy(&RadialPotential::zero(), 5.0, 1001).unwrap();
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let phi = gaussian_on(&grid, 1.0);
    let k = build_kt(&phi, &zero, 8.0, Sampling::CellAverage, EXEC).unwrap();
    assert_eq!(max_abs(&k.values), 0.0);
    let fine = gaussian_on(&GridSpec::new(3, 8.0, 16, 1e-3, 0.0), 1.0);
    let opts = KernelOptions { kernel_points: 8, ..KernelOptions::default() };
    for row in kernel_bound_report(&fine, &zero, &[4.0, 8.0], &opts).unwrap() {
        assert_eq!([row.l2_k, row.l2_grad1_k, row.l2_grad1_kkbar, row.sup_x_l2_slice], [0.0; 4]);
    }
}

#[test]
fn kernel_is_exactly_symmetric() {
    let sol = square_well();
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let phi = Datum::Gaussian { width: 1.0, center: [0.3, 0.0, -0.2], momentum: [0.5, 0.2, 0.0] }.sample(&grid).unwrap();
    for sampling in [Sampling::Point, Sampling::CellAverage] {
        let k = build_kt(&phi, &sol, 4.0, sampling, EXEC).unwrap();
        assert!(k.symmetric);
        assert_eq!(k.values, k.values.transpose());
    }
}

#[test]
fn pointwise_domination_at_every_pair() {
    let sol = square_well();
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let phi = gaussian_on(&grid, 1.0);
    for n in [1.0, 4.0, 16.0] {
        let k = build_kt(&phi, &sol, n, Sampling::Point, EXEC).unwrap();
        let p = grid.total_points();
        for i in 0..p {
            for j in 0..p {
                let (xi, xj) = (grid.position(i), grid.position(j));
                // Minimum-image distance on the torus.
                let r = (0..3)
                    .map(|a| {
                        let d = (xi[a] - xj[a]).abs();
                        d.min(8.0 - d).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                let pp = (phi.values[i] * phi.values[j]).norm();
                let cap = if r > 0.0 { (n * pp).min(pp / r) } else { n * pp };
                assert!(k.values[(i, j)].norm() <= cap * (1.0 + 1e-12), "N {n} pair ({i}, {j})");
            }
        }
    }
    let fine = gaussian_on(&GridSpec::new(3, 8.0, 16, 1e-3, 0.0), 1.0);
    let opts = KernelOptions { kernel_points: 8, ..KernelOptions::default() };
    for row in kernel_bound_report(&fine, &sol, &[2.0, 8.0, 32.0], &opts).unwrap() {
        assert!(row.pointwise_ratio_max <= 1.0 + 1e-12, "{}", row.pointwise_ratio_max);
    }
}

#[test]
fn kernel_norms_match_radial_quadrature() {
    // For φ = (πσ²)^{-3/4} e^{-x²/2σ²} and g = N w(N·), with r = x − y and s = (x+y)/2:
    //   ‖k‖²        = (2πσ²)^{-3/2} ∫ g² e^{-r²/2σ²}
    //   ‖∇₁k‖²      = (2πσ²)^{-3/2} ∫ [g'² − g g' r/σ² + g²(3σ²/4 + r²/4)/σ⁴] e^{-r²/2σ²}
    //   sup_x slice² = ρ(0) (πσ²)^{-3/2} ∫ g² e^{-r²/σ²}
    // over the ball r ≤ L/2, which is the range the kernel sees on the torus.
    let sol = square_well();
    let (sigma, length, n) = (1.0, 12.0, 8.0);
    let grid = GridSpec::new(3, length, 32, 1e-3, 0.0);
    let phi = gaussian_on(&grid, sigma);
    let got = radial_spectral_norms(&phi, &sol, n, EXEC).unwrap();

    let s2 = sigma * sigma;
    let g = |r: f64| n * sol.w_at(n * r);
    let dg = |r: f64| n * n * sol.dw_at(n * r);
    let breaks = [0.0, 1.0 / n, 0.5 * length];
    let shell = |r: f64| 4.0 * PI * r * r;
    let pref = (2.0 * PI * s2).powf(-1.5);
    let l2 = (pref * simpson(&breaks, |r| shell(r) * g(r).powi(2) * (-r * r / (2.0 * s2)).exp())).sqrt();
    let grad = (pref
        * simpson(&breaks, |r| {
            let bracket = dg(r).powi(2) - g(r) * dg(r) * r / s2 + g(r).powi(2) * (0.75 * s2 + 0.25 * r * r) / (s2 * s2);
            shell(r) * bracket * (-r * r / (2.0 * s2)).exp()
        }))
    .sqrt();
    let rho0 = (PI * s2).powf(-1.5);
    let sup = (rho0 * rho0 * simpson(&breaks, |r| shell(r) * g(r).powi(2) * (-r * r / s2).exp())).sqrt();

    assert!((got.l2_k - l2).abs() <= 1e-10 * l2, "{} vs {l2}", got.l2_k);
    assert!((got.l2_grad1_k - grad).abs() <= 1e-8 * grad, "{} vs {grad}", got.l2_grad1_k);
    assert!((got.sup_slice - sup).abs() <= 1e-8 * sup, "{} vs {sup}", got.sup_slice);
    // Frozen values of the oracle above.
    assert!((l2 - L2_K_GAUSSIAN_N8).abs() <= 1e-9 * l2, "{l2:.16e}");
    assert!((grad - GRAD_K_GAUSSIAN_N8).abs() <= 1e-9 * grad, "{grad:.16e}");
}

const L2_K_GAUSSIAN_N8: f64 = 5.0409148440451912e-1;
const GRAD_K_GAUSSIAN_N8: f64 = 1.4971839842755112e0;

#[test]
fn radial_norms_need_three_dimensions() {
    let grid = GridSpec::new(1, 12.0, 32, 1e-3, 0.0);
    let r = radial_spectral_norms(&gaussian_on(&grid, 1.0), &square_well(), 4.0, EXEC);
    assert!(matches!(r, Err(GpkError::Config(_))));
}

#[test]
fn scaling_ratios_are_bounded() {
    let sol = square_well();
    let grid = GridSpec::new(3, 8.0, 32, 1e-3, 0.0);
    let phi = gaussian_on(&grid, 1.0);
    let opts = KernelOptions { kernel_points: 8, ..KernelOptions::default() };
    let rows = kernel_bound_report(&phi, &sol, &[4.0, 8.0, 16.0, 32.0], &opts).unwrap();
    let spread = |f: &dyn Fn(&KernelBoundReport) -> f64| {
        let v: Vec<f64> = rows.iter().map(f).collect();
        v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    for row in &rows {
        for v in [row.l2_k, row.l2_grad1_k, row.l2_grad1_kkbar, row.sup_x_l2_slice, row.pointwise_ratio_max] {
            assert!(v.is_finite() && v >= 0.0);
        }
    }
    assert!(spread(&|r| r.grad1_k_over_sqrt_n) < 2.0);
    assert!(spread(&|r| r.l2_k) < 2.0);
    assert!(spread(&|r| r.sup_x_l2_slice) < 2.0);
}

#[test]
fn streamed_and_dense_kkbar_gradients_agree() {
    let sol = square_well();
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let phi = Datum::Gaussian { width: 1.0, center: [0.0; 3], momentum: [0.4, 0.0, 0.0] }.sample(&grid).unwrap();
    for n in [2.0, 8.0] {
        let k = build_kt(&phi, &sol, n, Sampling::CellAverage, EXEC).unwrap();
        let dense = k.compose_conj(EXEC).grad1_hs_norm(EXEC);
        let table = OffsetTable::new(&sol, n, &grid, Sampling::CellAverage, EXEC);
        let streamed = kkbar_gradient_norm(&phi, &table, EXEC);
        assert!((dense - streamed).abs() <= 1e-10 * dense, "{dense} vs {streamed}");
    }
}

#[test]
fn dense_kernels_respect_the_point_budget() {
    let grid = GridSpec::new(3, 8.0, 32, 1e-3, 0.0);
    let r = build_kt(&gaussian_on(&grid, 1.0), &square_well(), 8.0, Sampling::CellAverage, EXEC);
    match r {
        Err(e @ GpkError::Budget(_)) => assert_eq!(e.exit_code(), 3),
        other => panic!("expected a budget error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn coarse_grid_warns() {
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let k = build_kt(&gaussian_on(&grid, 1.0), &square_well(), 64.0, Sampling::Point, EXEC).unwrap();
    assert!(k.warning.is_some());
    let k = build_kt(&gaussian_on(&grid, 1.0), &square_well(), 2.0, Sampling::Point, EXEC).unwrap();
    assert!(k.warning.is_none());
}

#[test]
fn zero_kernel_series() {
    let grid = GridSpec::new(1, 8.0, 16, 1e-3, 0.0);
    let b = hyperbolic_series(&TwoPointKernel::zeros(&grid), 1e-14, EXEC).unwrap();
    for k in [&b.p, &b.r, &b.sh] {
        assert_eq!(max_abs(&k.values), 0.0);
    }
    assert_eq!(max_abs(&(b.ch_operator() - CMatrix::identity(16, 16))), 0.0);
    assert_eq!(b.truncation_error_bound, 0.0);
}

#[test]
fn rank_one_series_collapses_to_scalar_hyperbolics() {
    let grid = GridSpec::new(1, 8.0, 16, 1e-3, 0.0);
    let phi = gaussian_on(&grid, 1.0);
    for c in [0.3, 1.0, 2.5] {
        let b = hyperbolic_series(&TwoPointKernel::rank_one(&phi, c), 1e-16, EXEC).unwrap();
        let sh = TwoPointKernel::rank_one(&phi, c.sinh());
        let p = TwoPointKernel::rank_one(&phi, c.cosh() - 1.0);
        assert!(max_abs(&(&b.sh.values - &sh.values)) < 1e-12 * c.sinh());
        assert!(max_abs(&(&b.p.values - &p.values)) < 1e-12 * c.cosh());
        assert_eq!(b.ch_minus_identity.values, b.p.values);
    }
}

#[test]
fn truncation_bound_certifies_the_next_term() {
    let sol = square_well();
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let k = build_kt(&gaussian_on(&grid, 0.8), &sol, 2.0, Sampling::CellAverage, EXEC).unwrap();
    let mut k2 = k.clone();
    k2.values *= Complex64::new(6.0, 0.0);
    for kernel in [k, k2] {
        for tol in [1e-2, 1e-4, 1e-6] {
            let coarse = hyperbolic_series(&kernel, tol, EXEC).unwrap();
            let fine = hyperbolic_series(&kernel, 1e-16, EXEC).unwrap();
            assert!(fine.series_terms_used > coarse.series_terms_used);
            let change = (&fine.sh.values - &coarse.sh.values).norm() * grid.cell_volume()
                + (&fine.p.values - &coarse.p.values).norm() * grid.cell_volume();
            assert!(change <= coarse.truncation_error_bound, "{change:e} > {:e}", coarse.truncation_error_bound);
        }
    }
}

#[test]
fn bogoliubov_relation_on_constructed_kernel() {
    let sol = square_well();
    let grid = GridSpec::new(3, 8.0, 8, 1e-3, 0.0);
    let phi = Datum::Gaussian { width: 1.0, center: [0.0; 3], momentum: [0.3, -0.2, 0.1] }.sample(&grid).unwrap();
    let k = build_kt(&phi, &sol, 4.0, Sampling::CellAverage, EXEC).unwrap();
    let b = hyperbolic_series(&k, 1e-16, EXEC).unwrap();
    assert!(b.symplectic_residual(EXEC) < 1e-8);
    assert!(b.within_exponential_bound());
    assert!(max_abs(&(&b.sh.values - (&k.values + &b.r.values))) < 1e-14 * max_abs(&k.values));
}

#[test]
fn r_is_dominated_by_the_density_under_refinement() {
    // |r(k)(x,y)| ≤ Ĉ |φ(x)| |φ(y)| with Ĉ stable as the grid is refined.
    let sol = square_well();
    let c_hat = |points: usize| {
        let grid = GridSpec::new(1, 12.0, points, 1e-3, 0.0);
        let phi = gaussian_on(&grid, 1.0);
        let k = build_kt(&phi, &sol, 4.0, Sampling::CellAverage, EXEC).unwrap();
        let b = hyperbolic_series(&k, 1e-16, EXEC).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..points {
            for j in 0..points {
                let pp = (phi.values[i] * phi.values[j]).norm();
                if pp > 1e-200 {
                    worst = worst.max(b.r.values[(i, j)].norm() / pp);
                }
            }
        }
        worst
    };
    let (coarse, fine) = (c_hat(32), c_hat(64));
    assert!(coarse.is_finite() && fine.is_finite());
    assert!((fine / coarse - 1.0).abs() < 0.1, "{coarse} vs {fine}");
}

#[test]
fn time_derivative_kernel() {
    let sol = square_well();
    let grid = GridSpec::new(1, 12.0, 64, 1e-5, 0.0);
    let phi = gaussian_on(&grid, 1.0);
    let zero = WaveFunction::new(vec![Complex64::new(0.0, 0.0); 64], grid.clone()).unwrap();
    let kdot = time_derivative_kt(&phi, &zero, &sol, 4.0, Sampling::CellAverage, EXEC).unwrap();
    assert_eq!(max_abs(&kdot.values), 0.0);

    // Product rule against a central difference along a modified-GP trajectory.
    let nl = NonlinearitySpec::Gp { a0: sol.a0 };
    let prop = Propagator::new(&grid, &nl).unwrap();
    let state_at = |t: f64| {
        let mut g = grid.clone();
        g.t_final = t;
        let mut start = phi.clone();
        start.grid = g.clone();
        evolve(&start, &nl, &g, 0).unwrap().last().clone()
    };
    let t = 0.1;
    let center = state_at(t);
    let kdot = time_derivative_kt(&center, &prop.time_derivative(&center), &sol, 4.0, Sampling::CellAverage, EXEC).unwrap();
    assert!(kdot.symmetric);
    let fd_error = |h: f64| {
        let plus = build_kt(&state_at(t + h), &sol, 4.0, Sampling::CellAverage, EXEC).unwrap();
        let minus = build_kt(&state_at(t - h), &sol, 4.0, Sampling::CellAverage, EXEC).unwrap();
        let fd = (&plus.values - &minus.values) / Complex64::new(2.0 * h, 0.0);
        (fd - &kdot.values).norm() / kdot.values.norm()
    };
    let (e1, e2) = (fd_error(0.004), fd_error(0.002));
    assert!(e1 < 2e-3, "{e1:e}");
    assert!((e1 / e2 - 4.0).abs() < 0.5, "{e1:e} {e2:e}");
}

#[test]
fn cancellation_residual_scaling() {
    let sol = square_well();
    let pot = sol.potential.clone();
    let r1 = zero_energy_cancellation_residual(&sol, &pot, 1.0).unwrap();
    assert!(r1 <= 1e-6, "{r1:e}");
    for n in [2.0, 4.0] {
        let rn = zero_energy_cancellation_residual(&sol, &pot, n).unwrap();
        assert!((rn / r1 - n * n * n).abs() < 1e-9 * n * n * n);
        assert!(rn <= cancellation_budget(n));
    }
    let zero = solve_zero_energy(&RadialPotential::zero(), 5.0, 1001).unwrap();
    assert_eq!(zero_energy_cancellation_residual(&zero, &zero.potential, 8.0).unwrap(), 0.0);
    let other = RadialPotential::square_well(4.0, 1.0).unwrap();
    assert!(matches!(zero_energy_cancellation_residual(&sol, &other, 1.0), Err(GpkError::Config(_))));
}

fn random_symmetric(entries: &[(f64, f64)], p: usize, scale: f64) -> CMatrix {
    let mut m = CMatrix::zeros(p, p);
    let mut it = entries.iter();
    for j in 0..p {
        for i in 0..=j {
            let &(re, im) = it.next().unwrap();
            m[(i, j)] = Complex64::new(re, im) * scale;
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_invariants_for_random_symmetric_kernels(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16 * 17 / 2),
        target in 0.0f64..2.5,
    ) {
        let grid = GridSpec::new(1, 8.0, 16, 1e-3, 0.0);
        let mut k = TwoPointKernel::from_values(random_symmetric(&entries, 16, 1.0), &grid);
        let norm = k.hs_norm();
        prop_assume!(norm > 0.0);
        k.values *= Complex64::new(target / norm, 0.0);
        prop_assert!(k.symmetric);
        let b = hyperbolic_series(&k, 1e-15, Execution::Sequential).unwrap();
        let bound = k.hs_norm().exp();
        for kernel in [&b.p, &b.r, &b.sh] {
            prop_assert!(kernel.hs_norm() <= bound);
        }
        prop_assert!(max_abs(&(&b.sh.values - (&k.values + &b.r.values))) <= 1e-12 * (1.0 + max_abs(&k.values)));
        prop_assert!(b.symplectic_residual(Execution::Sequential) < 1e-8);
    }

    #[test]
    fn constructed_kernels_are_symmetric(n in 1.0f64..40.0, width in 0.6f64..1.5, px in -1.0f64..1.0) {
        let grid = GridSpec::new(3, 8.0, 4, 1e-3, 0.0);
        let phi = Datum::Gaussian { width, center: [0.0; 3], momentum: [px, 0.0, 0.0] }.sample(&grid).unwrap();
        let k = build_kt(&phi, &square_well(), n, Sampling::CellAverage, Execution::Sequential).unwrap();
        prop_assert_eq!(&k.values, &k.values.transpose());
        prop_assert!(k.hs_norm().is_finite());
    }
}
