use avm_core::genfunc::{
    coefficients_from_torus, growth_integral, steady_gamma, transform_identity_check, GeneratingPolynomial,
};
use avm_core::moment_ode::init_grid;
use avm_core::{AklGrid, AnalyticSolution, ClosureFactors, GenFuncPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::log_q_by_characteristics;

fn steady(kappa: f64, p: f64) -> AnalyticSolution {
    AnalyticSolution::with_steady_factors(kappa, p).unwrap()
}

#[test]
fn closed_form_matches_integrated_characteristics() {
    let s = steady(4.0, 0.3);
    let oracle = log_q_by_characteristics(4.0, 0.3, s.factors, 0.9, 0.8, 2.0).exp();
    let pt = GenFuncPoint::new(0.9, 0.8, 2.0);
    assert!((s.eval_q(pt) - oracle).abs() <= 1e-8, "{} vs {oracle}", s.eval_q(pt));
    assert!((s.eval_q_literal(pt) - oracle).abs() <= 1e-8);
}

#[test]
fn closed_form_matches_characteristics_for_arbitrary_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p = rng.random_range(0.0..0.9);
        let f = ClosureFactors {
            alpha: rng.random_range(0.0..3.0),
            beta: rng.random_range(0.0..3.0),
            gamma: rng.random_range(0.0..3.0),
        };
        let kappa = rng.random_range(1.0..8.0);
        let (x, y, t) = (rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.0..5.0));
        let s = AnalyticSolution::new(kappa, p, f).unwrap();
        let oracle = log_q_by_characteristics(kappa, p, f, x, y, t);
        let got = s.eval_q(GenFuncPoint::new(x, y, t)).ln();
        assert!((got - oracle).abs() <= 1e-9, "p={p} {f:?}: {got} vs {oracle}");
    }
}

#[test]
fn residual_vanishes_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for kappa in [2.0, 6.0] {
        for p in [0.05, 0.2, 0.35] {
            let s = steady(kappa, p);
            for _ in 0..100 {
                let pt = GenFuncPoint::new(rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.0..10.0));
                assert!(s.pde_residual(pt) <= 1e-9, "κ={kappa} p={p} {pt:?}");
            }
            assert_eq!(s.pde_residual(GenFuncPoint::new(1.0, 1.0, 3.0)), 0.0);
        }
    }
}

#[test]
fn taylor_coefficients_start_from_initial_grid() {
    let s = steady(4.0, 0.3);
    let (grid, _) = init_grid(4.0, 30).unwrap();
    assert!(s.analytic_grid(0.0, 30).max_abs_diff(&grid) < 1e-15);
    assert!((s.analytic_akl(0, 0, 0.0) - (-4.0f64).exp()).abs() < 1e-16);
}

#[test]
fn relaxation_toward_stationary_density() {
    // the slow mode of the flow sets the approach rate; report how close t = 50 gets
    let s = steady(4.0, 0.3);
    let star = steady_gamma(4.0, 0.3).unwrap();
    let gap = (s.gamma_t(50.0) - star).abs();
    let slow = s.flow.eigenvalues[1];
    eprintln!("|γ(50) - γ*| = {gap:e}, slow rate {slow}");
    assert!(gap < 5e-3);
    assert!((s.gamma_t(1e3) - star).abs() < 1e-10);
}

#[test]
fn stationary_ratios_coincide() {
    for p in [0.1, 0.3, 0.5] {
        let r = steady(4.0, p).closure_ratios(1e3);
        assert!((r.alpha - r.beta).abs() < 1e-6 && (r.beta - r.gamma).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn no_discontinuity_at_zero_rewiring() {
    let f = ClosureFactors::uniform(1.5);
    let at_zero = AnalyticSolution::new(4.0, 0.0, f).unwrap();
    let near = AnalyticSolution::new(4.0, 1e-9, f).unwrap();
    for &(x, y, t) in &[(0.6, 0.9, 1.0), (0.95, 0.55, 7.0)] {
        let pt = GenFuncPoint::new(x, y, t);
        assert!((at_zero.eval_q(pt) - near.eval_q(pt)).abs() < 1e-7);
    }
    // the two sides differ by about λt²
    assert!((growth_integral(1e-8, 1.0) - growth_integral(-1e-8, 1.0)).abs() < 1e-7);
}

fn random_interior_grid(rng: &mut ChaCha8Rng, k_max: usize) -> AklGrid {
    AklGrid::from_fn(k_max, |k, l| if k < k_max && l < k_max { rng.random_range(0.0..1.0) } else { 0.0 })
}

#[test]
fn shift_identities_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let g = random_interior_grid(&mut rng, 20);
        for _ in 0..20 {
            let pt = GenFuncPoint::new(rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), 0.0);
            assert!(transform_identity_check(&g, pt) <= 1e-12);
        }
    }
}

#[test]
fn polynomial_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k_max in [1, 7, 20, 33] {
        let g = AklGrid::from_fn(k_max, |_, _| rng.random_range(-1.0..1.0));
        let back = coefficients_from_torus(&GeneratingPolynomial::new(&g).torus_values(), k_max);
        assert!(back.max_abs_diff(&g) <= 1e-12, "k_max {k_max}");
    }
}
