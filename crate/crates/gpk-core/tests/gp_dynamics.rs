use gpk_core::convergence_bench::fit_rate;
use gpk_core::gp_dynamics::*;
use gpk_core::scattering::{solve_zero_energy, RadialPotential, RadialTransform, ScatteringSolution};
use gpk_core::{Execution, GpkError};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn square_well() -> ScatteringSolution {
    solve_zero_energy(&RadialPotential::square_well(8.0, 1.0).unwrap(), 5.0, 2001).unwrap()
}

fn gaussian(width: f64, momentum: f64) -> Datum {
    Datum::Gaussian { width, center: [0.0; 3], momentum: [momentum, 0.0, 0.0] }
}

/// Free Schrödinger flow of a centred Gaussian: the variance σ² becomes σ² + 2it per axis.
fn free_gaussian(width: f64, dim: usize, t: f64, x: [f64; 3]) -> Complex64 {
    let s0 = Complex64::new(width * width, 0.0);
    let s = s0 + Complex64::new(0.0, 2.0 * t);
    let pref = (PI * width * width).powf(-(dim as f64) / 4.0);
    let r2: f64 = x[..dim].iter().map(|c| c * c).sum();
    pref * (s0 / s).powf(dim as f64 / 2.0) * (-r2 / (2.0 * s)).exp()
}

#[test]
fn free_gaussian_matches_closed_form() {
    for (dim, n) in [(1, 256), (2, 64)] {
        let grid = GridSpec::new(dim, 20.0, n, 1e-3, 0.5);
        let psi0 = gaussian(1.0, 0.0).sample(&grid).unwrap();
        let traj = evolve(&psi0, &NonlinearitySpec::Gp { a0: 0.0 }, &grid, 0).unwrap();
        let exact = WaveFunction::new((0..grid.total_points()).map(|i| free_gaussian(1.0, dim, 0.5, grid.position(i))).collect(), grid.clone())
            .unwrap();
        let err = traj.last().distance(&exact);
        assert!(err < 1e-6, "dim {dim}: {err:e}");
    }
}

#[test]
fn constant_datum_picks_up_a_global_phase() {
    let a0 = 0.3;
    for dim in 1..=3 {
        let grid = GridSpec::new(dim, 4.0, 16, 5e-3, 1.0);
        let psi0 = Datum::Constant.sample(&grid).unwrap();
        let traj = evolve(&psi0, &NonlinearitySpec::Gp { a0 }, &grid, 0).unwrap();
        let density = 4.0f64.powi(-(dim as i32));
        let phase = Complex64::from_polar(1.0, -8.0 * PI * a0 * density * 1.0);
        for (z, z0) in traj.last().values.iter().zip(&psi0.values) {
            assert!((z - z0 * phase).norm() < 1e-12);
        }
        let e = gp_energy(&psi0, &NonlinearitySpec::Gp { a0 }).unwrap();
        assert!((e - 4.0 * PI * a0 * density).abs() < 1e-12, "{e}");
    }
}

#[test]
fn free_gaussian_energy_is_kinetic_and_constant() {
    let grid = GridSpec::new(1, 40.0, 256, 1e-3, 1.0);
    let psi0 = gaussian(1.0, 0.0).sample(&grid).unwrap();
    let nl = NonlinearitySpec::Gp { a0: 0.0 };
    // ∫|φ'|² = 1/(2σ²)
    assert!((gp_energy(&psi0, &nl).unwrap() - 0.5).abs() < 1e-10);
    let traj = evolve(&psi0, &nl, &grid, 100).unwrap();
    let report = sobolev_report(&traj, &nl).unwrap();
    for e in &report.energy {
        assert!((e - 0.5).abs() < 1e-8);
    }
}

#[test]
fn mass_is_conserved_along_interacting_runs() {
    let sol = square_well();
    let grid = GridSpec::new(2, 16.0, 64, 1e-3, 0.5);
    let psi0 = gaussian(1.5, 0.7).sample(&grid).unwrap();
    let nl = NonlinearitySpec::Modified { n: 4.0, uhat: RadialTransform::of_interaction(&sol) };
    let traj = evolve(&psi0, &nl, &grid, 50).unwrap();
    assert_eq!(traj.times.len(), 11);
    for psi in &traj.states {
        assert!((psi.l2_norm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn energy_drift_shrinks_with_dt() {
    let sol = square_well();
    let nl = NonlinearitySpec::Gp { a0: sol.a0 };
    let drift = |dt: f64| {
        let grid = GridSpec::new(1, 20.0, 128, dt, 1.0);
        let psi0 = gaussian(0.5, 1.0).sample(&grid).unwrap();
        let prop = Propagator::new(&grid, &nl).unwrap();
        let e0 = prop.energy(&psi0.values);
        let traj = evolve_with(&prop, &psi0, &grid, 0).unwrap();
        (prop.energy(&traj.last().values) - e0).abs() / e0
    };
    let (coarse, fine) = (drift(4e-3), drift(2e-3));
    assert!(coarse / fine >= 4.0 * 0.95, "{coarse:e} {fine:e}");
}

#[test]
fn forward_then_backward_returns_the_datum() {
    let sol = square_well();
    let grid = GridSpec::new(1, 20.0, 128, 1e-3, 0.5);
    let psi0 = gaussian(1.0, 0.5).sample(&grid).unwrap();
    let prop = Propagator::new(&grid, &NonlinearitySpec::Gp { a0: sol.a0 }).unwrap();
    let mut psi = psi0.values.clone();
    prop.run(&mut psi, grid.dt, 500, 0, 0.0, |_, _| {}).unwrap();
    prop.run(&mut psi, -grid.dt, 500, 0, 0.5, |_, _| {}).unwrap();
    let back = WaveFunction::new(psi, grid).unwrap();
    assert!(back.distance(&psi0) < 1e-8);
}

#[test]
fn right_hand_side_is_the_energy_gradient() {
    let sol = square_well();
    let grid = GridSpec::new(1, 8.0, 16, 1e-3, 0.0);
    let psi = gaussian(1.0, 0.8).sample(&grid).unwrap();
    for nl in [NonlinearitySpec::Gp { a0: sol.a0 }, NonlinearitySpec::Modified { n: 2.0, uhat: RadialTransform::of_interaction(&sol) }] {
        let prop = Propagator::new(&grid, &nl).unwrap();
        let cell = grid.cell_volume();
        let rhs = prop.time_derivative(&psi);
        let h = 1e-6;
        for j in 0..grid.total_points() {
            for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut plus = psi.values.clone();
                let mut minus = psi.values.clone();
                plus[j] += dir * h;
                minus[j] -= dir * h;
                let fd = (prop.energy(&plus) - prop.energy(&minus)) / (2.0 * h);
                // dE/d(Re, Im) ψ_j = 2 cell (Re, Im)(Hψ)_j and Hψ = i ∂ψ.
                let hpsi = rhs.values[j] * Complex64::new(0.0, 1.0);
                let exact = 2.0 * cell * if dir.re == 1.0 { hpsi.re } else { hpsi.im };
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "j {j}: {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn plane_wave_sobolev_norm() {
    let grid = GridSpec::new(1, 6.0, 32, 1e-3, 0.0);
    let psi = Datum::PlaneWave { mode: [1, 0, 0] }.sample(&grid).unwrap();
    let h1 = sobolev_norm(&psi, 1).unwrap();
    assert!((h1.value.powi(2) - (1.0 + (2.0 * PI / 6.0f64).powi(2))).abs() < 1e-12);
    assert!(!h1.aliasing_warning);
}

#[test]
fn gaussian_sobolev_norms_match_moments() {
    // |φ̂|² is a Gaussian with variance 1/(2σ²), so E k^{2m} = (2m−1)!! (2σ²)^{−m}.
    let width = 1.0;
    let grid = GridSpec::new(1, 40.0, 256, 1e-3, 0.0);
    let psi = gaussian(width, 0.0).sample(&grid).unwrap();
    let mut exact = 1.0;
    let mut moment = 1.0;
    for n in 1..=4u32 {
        moment *= (2 * n - 1) as f64 / (2.0 * width * width);
        exact += moment;
        let s = sobolev_norm(&psi, n).unwrap();
        assert!((s.value - exact.sqrt()).abs() < 1e-8 * exact.sqrt(), "n {n}");
    }
    // Frozen: √(1 + 1/2 + 3/4 + 15/8 + 105/16).
    assert!((sobolev_norm(&psi, 4).unwrap().value - 10.6875f64.sqrt()).abs() < 1e-8);
}

#[test]
fn under_resolved_datum_raises_aliasing_warning() {
    let grid = GridSpec::new(1, 40.0, 32, 1e-3, 0.0);
    let psi = gaussian(0.3, 0.0).sample(&grid).unwrap();
    assert!(sobolev_norm(&psi, 2).unwrap().aliasing_warning);
}

#[test]
fn sobolev_order_is_checked() {
    let grid = GridSpec::new(1, 8.0, 16, 1e-3, 0.0);
    let psi = Datum::Constant.sample(&grid).unwrap();
    assert!(matches!(sobolev_norm(&psi, 0), Err(GpkError::Config(_))));
    assert!(matches!(sobolev_norm(&psi, 5), Err(GpkError::Config(_))));
}

#[test]
fn growth_envelope_dominates_samples() {
    let times = [0.0, 0.5, 1.0, 1.5];
    let values = [1.0, 1.3, 1.9, 2.6];
    let (c, k) = exponential_envelope(&times, &values).unwrap();
    assert!(k > 0.0);
    for (t, v) in times.iter().zip(values) {
        assert!(c * (k * t).exp() >= v * (1.0 - 1e-12));
    }
    assert!(exponential_envelope(&[0.0], &[1.0]).is_none());
}

#[test]
fn modified_energy_approaches_gp_energy() {
    let sol = square_well();
    let uhat = RadialTransform::of_interaction(&sol);
    let grid = GridSpec::new(1, 20.0, 128, 1e-3, 0.0);
    let psi = gaussian(0.7, 0.0).sample(&grid).unwrap();
    let e_gp = gp_energy(&psi, &NonlinearitySpec::Gp { a0: sol.a0 }).unwrap();
    let ns = [4.0, 8.0, 16.0, 32.0];
    let gaps: Vec<f64> = ns
        .iter()
        .map(|&n| (gp_energy(&psi, &NonlinearitySpec::Modified { n, uhat: uhat.clone() }).unwrap() - e_gp).abs())
        .collect();
    assert!(gaps.windows(2).all(|p| p[1] < p[0]), "{gaps:?}");
    // Û is even in p, so the gap closes at least as fast as 1/N (in fact like 1/N²).
    let fit = fit_rate(&ns, &gaps).unwrap();
    assert!(fit.slope <= -1.0, "{}", fit.slope);
    assert!((fit.slope + 2.0).abs() < 0.1, "{}", fit.slope);
}

#[test]
fn comparison_at_time_zero_is_undefined() {
    let sol = square_well();
    let uhat = RadialTransform::of_interaction(&sol);
    let grid = GridSpec::new(1, 20.0, 64, 1e-3, 0.0);
    let psi = gaussian(1.0, 0.0).sample(&grid).unwrap();
    let rep = compare_dynamics(&psi, sol.a0, &uhat, &[8.0, 16.0, 32.0, 64.0], 0.0, Execution::Sequential).unwrap();
    assert!(rep.l2_differences.iter().all(|&d| d == 0.0));
    assert!(rep.fit.is_none());
    assert!(!rep.flags.is_empty());
}

#[test]
fn comparison_without_interaction_is_exact() {
    let zero = solve_zero_energy(&RadialPotential::zero(), 5.0, 1001).unwrap();
    let uhat = RadialTransform::of_interaction(&zero);
    let grid = GridSpec::new(1, 20.0, 64, 1e-3, 0.2);
    let psi = gaussian(1.0, 0.3).sample(&grid).unwrap();
    let rep = compare_dynamics(&psi, 0.0, &uhat, &[8.0, 16.0, 32.0, 64.0], 0.2, Execution::Parallel).unwrap();
    assert!(rep.l2_differences.iter().all(|&d| d < 1e-14), "{:?}", rep.l2_differences);
}

#[test]
fn comparison_needs_four_particle_numbers() {
    let sol = square_well();
    let grid = GridSpec::new(1, 20.0, 64, 1e-3, 0.1);
    let psi = gaussian(1.0, 0.0).sample(&grid).unwrap();
    let r = compare_dynamics(&psi, sol.a0, &RadialTransform::of_interaction(&sol), &[8.0, 16.0, 32.0], 0.1, Execution::Sequential);
    assert!(matches!(r, Err(GpkError::Config(_))));
}

#[test]
fn sequential_and_parallel_comparisons_agree() {
    let sol = square_well();
    let uhat = RadialTransform::of_interaction(&sol);
    let grid = GridSpec::new(1, 20.0, 64, 1e-3, 0.1);
    let psi = gaussian(1.0, 0.5).sample(&grid).unwrap();
    let ns = [4.0, 8.0, 16.0, 32.0];
    let a = compare_dynamics(&psi, sol.a0, &uhat, &ns, 0.1, Execution::Sequential).unwrap();
    let b = compare_dynamics(&psi, sol.a0, &uhat, &ns, 0.1, Execution::Parallel).unwrap();
    assert_eq!(a.l2_differences, b.l2_differences);
}

#[test]
fn invalid_grids_are_configuration_errors() {
    let nl = NonlinearitySpec::Gp { a0: 0.1 };
    for grid in [
        GridSpec::new(4, 8.0, 16, 1e-3, 1.0),
        GridSpec::new(1, 8.0, 8, 1e-3, 1.0),
        GridSpec::new(1, 8.0, 24, 1e-3, 1.0),
        GridSpec::new(1, -8.0, 16, 1e-3, 1.0),
        GridSpec::new(1, 8.0, 16, 0.0, 1.0),
        GridSpec::new(1, 1.0, 256, 0.1, 1.0),
    ] {
        let err = Propagator::new(&grid, &nl).err().expect("invalid grid accepted");
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}

#[test]
fn non_finite_field_reports_blowup_time() {
    let grid = GridSpec::new(1, 8.0, 16, 1e-2, 1.0);
    let prop = Propagator::new(&grid, &NonlinearitySpec::Gp { a0: 0.1 }).unwrap();
    let mut psi = vec![Complex64::new(0.1, 0.0); 16];
    psi[3] = Complex64::new(f64::NAN, 0.0);
    match prop.run(&mut psi, grid.dt, 10, 0, 0.25, |_, _| {}) {
        Err(GpkError::Blowup { last_good_time, .. }) => assert_eq!(last_good_time, 0.25),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn unnormalised_datum_is_rejected() {
    let grid = GridSpec::new(1, 8.0, 16, 1e-3, 0.1);
    let psi = WaveFunction::new(vec![Complex64::new(1.0, 0.0); 16], grid.clone()).unwrap();
    assert!(matches!(evolve(&psi, &NonlinearitySpec::Gp { a0: 0.1 }, &grid, 0), Err(GpkError::Domain(_))));
}

#[test]
fn resampling_preserves_resolved_fields() {
    let grid = GridSpec::new(2, 12.0, 64, 1e-3, 0.0);
    let psi = gaussian(1.0, 0.4).sample(&grid).unwrap();
    let down = psi.resample(32).unwrap();
    let up = down.resample(64).unwrap();
    assert!(up.distance(&psi) < 1e-8);
    assert!(matches!(psi.resample(31), Err(GpkError::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_is_unitary(width in 0.6f64..1.5, momentum in -1.0f64..1.0, a0 in 0.0f64..0.5) {
        let grid = GridSpec::new(1, 20.0, 64, 2e-3, 0.2);
        let psi0 = gaussian(width, momentum).sample(&grid).unwrap();
        let traj = evolve(&psi0, &NonlinearitySpec::Gp { a0 }, &grid, 10).unwrap();
        for psi in &traj.states {
            prop_assert!((psi.l2_norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sobolev_norms_are_ordered(width in 0.5f64..2.0, momentum in -2.0f64..2.0) {
        let grid = GridSpec::new(1, 24.0, 128, 1e-3, 0.0);
        let psi = gaussian(width, momentum).sample(&grid).unwrap();
        let mut prev = 1.0 - 1e-12;
        for n in 1..=4 {
            let v = sobolev_norm(&psi, n).unwrap().value;
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn constant_energy_formula(a0 in 0.0f64..2.0, length in 2.0f64..10.0, dim in 1usize..=3) {
        let grid = GridSpec::new(dim, length, 16, 1e-4, 0.0);
        let psi = Datum::Constant.sample(&grid).unwrap();
        let e = gp_energy(&psi, &NonlinearitySpec::Gp { a0 }).unwrap();
        let exact = 4.0 * PI * a0 / length.powi(dim as i32);
        prop_assert!((e - exact).abs() <= 1e-12 * exact.max(1.0));
    }
}
