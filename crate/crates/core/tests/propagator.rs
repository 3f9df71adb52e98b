mod common;

use std::f64::consts::PI;

use common::*;
use kgfock::propagator::{
    duhamel_source, evolve_linear, green_hat, green_hat_dt, sharp, sharp_lr, SourcedPath,
};
use kgfock::{CauchyPair, LinearSolution, SpectralField};
use proptest::prelude::*;

#[test]
fn half_period_rotation() {
    let grid = grid1(16);
    let k = [2, 0];
    let u0 = SpectralField::real_mode(grid, k, 1.0, 0.0).unwrap();
    let d = CauchyPair::new(u0.clone(), SpectralField::zeros(grid)).unwrap();
    let t = PI / grid.epsilon_of(k);
    let out = evolve_linear(&d, t);
    assert!(out.u0.max_abs_diff(&u0.scale(-1.0)) < 1e-14);
    assert!(out.u1.l1_coeffs() < 1e-13);
    assert_eq!(evolve_linear(&d, 0.0), d);
}

#[test]
fn green_kernel_values() {
    let tp = (2.0 * PI).powf(-0.5);
    let grid = grid1(16);
    for k in [[0, 0], [1, 0], [5, 0]] {
        assert_eq!(green_hat(&grid, 0.0, k), 0.0);
        assert!((green_hat_dt(&grid, 0.0, k) - tp).abs() < 1e-15);
        assert!((green_hat(&grid, -0.3, k) + green_hat(&grid, 0.3, k)).abs() < 1e-15);
    }
    assert!((green_hat(&grid, PI / 2.0, [0, 0]) - tp).abs() < 1e-15);
    let g2 = grid2(8);
    assert!((green_hat(&g2, PI / 2.0, [0, 0]) - 1.0 / (2.0 * PI)).abs() < 1e-15);
}

#[test]
fn sharp_zero_at_source_time() {
    let v = field(grid1(16), 4);
    let t = 0.8;
    let s = sharp(&v, t, 0).at(t);
    assert!(s.u0.l1_coeffs() < 1e-13);
    assert!(s.u1.max_abs_diff(&v.scale(-1.0)) < 1e-13);
}

fn manufactured(h: f64) -> f64 {
    let grid = grid1(16);
    let e = SpectralField::real_mode(grid, [3, 0], 1.0, 0.5).unwrap();
    let eps = grid.epsilon_of([3, 0]);
    let a = |t: f64| (2.0 * t).sin();
    let da = |t: f64| 2.0 * (2.0 * t).cos();
    let times: Vec<f64> = (0..3).map(|i| 0.4 + (i as f64 - 1.0) * h).collect();
    let states = times.iter().map(|&t| CauchyPair::new(e.scale(a(t)), e.scale(da(t))).unwrap()).collect();
    let sources = times.iter().map(|&t| e.scale((4.0 - eps * eps) * a(t))).collect();
    let path = SourcedPath { times, states, sources };
    let check = duhamel_source(&path, 1).unwrap();
    check.mismatch() / check.source_sharp.norm()
}

#[test]
fn duhamel_manufactured_second_order() {
    let coarse = manufactured(0.02);
    let fine = manufactured(0.01);
    assert!(coarse < 1e-2);
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn duhamel_free_solution() {
    let grid = grid1(16);
    let phi = solution(grid, 2, 1.0);
    let times = vec![0.1, 0.2, 0.3];
    let states = times.iter().map(|&t| phi.at(t)).collect();
    let sources = vec![SpectralField::zeros(grid); 3];
    let check = duhamel_source(&SourcedPath { times, states, sources }, 1).unwrap();
    assert!(check.finite_difference.norm() < 1e-11);
    assert!(check.mismatch() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_law(seed in any::<u64>(), a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let d = pair(grid1(16), seed, 1.0);
        let two = evolve_linear(&evolve_linear(&d, a), b);
        prop_assert!(two.max_abs_diff(&evolve_linear(&d, a + b)) < 1e-12);
    }

    #[test]
    fn pair_norm_invariant(seed in any::<u64>(), t in -10.0..10.0f64) {
        let d = pair(grid2(8), seed, 0.7);
        prop_assert!(rel(evolve_linear(&d, t).norm(), d.norm()) < 1e-12);
        let phi = LinearSolution::new(d);
        prop_assert!(rel(phi.at(t).norm(), phi.norm()) < 1e-12);
    }

    #[test]
    fn sharp_energy_identity(seed in any::<u64>(), t in -3.0..3.0f64, k in 0u32..4, r in -1.0..2.0f64) {
        let v = field(grid1(16), seed);
        let sol = sharp(&v, t, k);
        let sigma = r - k as f64 + 1.0;
        prop_assert!(rel(sol.energy_norm(sigma), v.hs_norm(r)) < 1e-12);
        for x0 in [0.0, 0.4 * t, t] {
            prop_assert!(sol.at(x0).u0.hs_norm(sigma) <= v.hs_norm(r) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sharp_derivative_relation(seed in any::<u64>(), t in -2.0..2.0f64, k in 0u32..3, x0 in -2.0..2.0f64) {
        let v = field(grid1(16), seed);
        let here = sharp(&v, t, k).at(x0);
        let next = sharp(&v, t, k + 1).at(x0);
        let scale = next.u0.l1_coeffs().max(1e-300);
        prop_assert!(here.u1.max_abs_diff(&next.u0.scale(-1.0)) <= 1e-12 * scale);
        let h = 1e-4;
        let fd = {
            let mut a = sharp(&v, t, k).at(x0 + h).u0;
            a.axpy(-1.0, &sharp(&v, t, k).at(x0 - h).u0);
            a.scale(0.5 / h)
        };
        prop_assert!(fd.max_abs_diff(&next.u0.scale(-1.0)) <= 1e-6 * scale);
    }

    #[test]
    fn sharp_is_linear(a in any::<u64>(), b in any::<u64>(), c in -2.0..2.0f64, k in 0u32..3) {
        let grid = grid1(16);
        let (v, w) = (field(grid, a), field(grid, b));
        let mut vw = v.clone();
        vw.axpy(c, &w);
        let mut want = sharp(&v, 0.6, k);
        want.axpy(c, &sharp(&w, 0.6, k));
        prop_assert!(sharp(&vw, 0.6, k).data0.max_abs_diff(&want.data0) < 1e-12);
    }

    #[test]
    fn sharp_lr_round_trip(seed in any::<u64>(), t in -3.0..3.0f64, tau in -2.0..2.0f64) {
        let grid = grid1(16);
        let d = pair(grid, seed, 1.0);
        let sol = sharp_lr(&d, t);
        prop_assert!(sol.at(t).max_abs_diff(&d) < 1e-12);
        prop_assert!(rel(sol.norm(), d.norm()) < 1e-12);
        let shifted = sharp_lr(&evolve_linear(&d, tau), t + tau);
        prop_assert!(shifted.data0.max_abs_diff(&sol.data0) < 1e-12);
        let phi = solution(grid, seed ^ 1, 1.0);
        prop_assert!(sharp_lr(&phi.at(t), t).data0.max_abs_diff(&phi.data0) < 1e-12);
    }
}
