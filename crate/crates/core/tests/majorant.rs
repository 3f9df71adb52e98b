mod common;

use common::*;
use kgfock::dynamics::{Monomial, NonlinearitySpec};
use kgfock::majorant::{majorant_of, Flow, MajorantSeries};
use kgfock::spectral::SobolevChoice;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn riccati_sweep() {
    let a = 0.6;
    let x = MajorantSeries::monomial(a, 2).unwrap();
    for i in 0..12 {
        for j in 1..8 {
            let r = 0.25 * j as f64;
            let t = 0.95 * i as f64 / 12.0 / (a * r);
            let fwd = x.flow(t, r).value().unwrap();
            assert!((fwd - r / (1.0 - a * r * t)).abs() <= 1e-10 * fwd.max(1.0), "fwd t={t} r={r}");
            let bwd = x.flow(-t, r).value().unwrap();
            assert!((bwd - r / (1.0 + a * r * t)).abs() <= 1e-10, "bwd t={t} r={r}");
        }
    }
}

#[test]
fn blowup_time_closed_form() {
    let a = 0.8;
    let x = MajorantSeries::monomial(a, 2).unwrap();
    for r in [0.1, 0.5, 1.0, 3.0] {
        let theta = x.blowup_time(r);
        assert!((theta - 1.0 / (a * r)).abs() <= 1e-8 * theta);
        assert!((x.blowup_time(2.0 * r) - theta / 2.0).abs() <= 1e-8 * theta);
    }
    match x.flow(1.1 / (a * 1.0), 1.0) {
        Flow::BlowUp { theta, warning, .. } => {
            assert!((theta - 1.25).abs() < 1e-8);
            assert!(warning.is_none());
        }
        Flow::Finite(v) => panic!("expected blow-up, got {v}"),
    }
}

#[test]
fn zero_and_constant_fields() {
    let zero = MajorantSeries::new(vec![0.0, 0.0], f64::INFINITY).unwrap();
    assert_eq!(zero.flow(5.0, 0.3), Flow::Finite(0.3));
    assert_eq!(zero.blowup_time(1.0), f64::INFINITY);
    let c = MajorantSeries::new(vec![0.4], f64::INFINITY).unwrap();
    for t in [0.1, 0.5, 1.0] {
        assert!((c.flow(-t, 1.0).value().unwrap() - (1.0 - 0.4 * t)).abs() < 1e-12);
    }
    assert!(MajorantSeries::new(vec![0.0, -1.0], f64::INFINITY).is_err());
}

#[test]
fn admissible_closed_form() {
    let a = 0.5;
    let x = MajorantSeries::monomial(a, 2).unwrap();
    let (kappa, r0) = (0.4, 2.0);
    let limit = (1.0 / (a * kappa)) * (1.0 - kappa / r0);
    assert!(x.admissible(0.98 * limit, kappa, r0).ok);
    assert!(!x.admissible(1.02 * limit, kappa, r0).ok);
    let rep = x.admissible(0.5 * limit, kappa, r0);
    let w = rep.witness.unwrap();
    assert!(w > rep.e_tx_kappa.unwrap() && w < r0);
    assert!(x.admissible(0.98 * limit, 0.8 * kappa, r0).ok);
    assert!(x.admissible(100.0, 0.0, r0).ok);
}

#[test]
fn taylor_residual_examples() {
    let x = MajorantSeries::monomial(0.7, 2).unwrap();
    assert!(x.taylor_flow_residual(&[2.5], 0.4, 1.0, 1).unwrap() < 1e-15);
    let c = MajorantSeries::new(vec![0.3], f64::INFINITY).unwrap();
    assert!(c.taylor_flow_residual(&[0.0, 1.0], 0.5, 1.0, 2).unwrap() < 1e-14);
    let cube = [0.0, 0.0, 0.0, 1.0];
    let (t, r) = (0.1, 1.0);
    assert!(x.taylor_flow_residual(&cube, t, r, 20).unwrap() <= 1e-8);
    let tail: Vec<f64> = (15..=20).map(|k| x.taylor_flow_residual(&cube, 0.6, r, k).unwrap()).collect();
    assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-14), "{tail:?}");
    assert!(tail[5] < tail[0]);
}

#[test]
fn complex_bound_on_random_samples() {
    let a = 0.9;
    let x = MajorantSeries::monomial(a, 2).unwrap();
    let mut r = rng(17);
    for _ in 0..500 {
        let z = Complex64::from_polar(r.random_range(0.0..1.5), r.random_range(0.0..std::f64::consts::TAU));
        let tau_mod = r.random_range(0.0..0.95) / (a * z.norm().max(1e-3));
        let tau = Complex64::from_polar(tau_mod.min(5.0), r.random_range(0.0..std::f64::consts::TAU));
        let rep = x.complex_flow_bound(tau, z).unwrap();
        assert!(rep.ok, "τ={tau} z={z}");
        let exact = z / (Complex64::new(1.0, 0.0) - a * tau * z);
        assert!((rep.value - exact).norm() <= 1e-9 * exact.norm().max(1.0));
    }
    let real = x.complex_flow_bound(Complex64::new(0.5, 0.0), Complex64::new(0.8, 0.0)).unwrap();
    assert!((real.value.norm() - real.bound).abs() < 1e-10);
    let origin = x.complex_flow_bound(Complex64::new(0.3, 2.0), Complex64::new(0.0, 0.0)).unwrap();
    assert_eq!(origin.value.norm(), 0.0);
}

#[test]
fn majorant_of_examples() {
    let grid = grid1(32);
    let i_d = grid.mode_sum_constant(grid.s);
    let sq = majorant_of(&NonlinearitySpec::power(-0.05, 2), &grid, SobolevChoice::ModeSum).unwrap();
    assert!(rel(sq.coeffs[2], 0.05 * 2f64.powf(grid.s) * i_d) < 1e-14);
    assert!(sq.coeffs[..2].iter().all(|&c| c == 0.0));
    assert!(sq.r0.is_infinite());
    let lin = majorant_of(&NonlinearitySpec::power(1.0, 1), &grid, SobolevChoice::ModeSum).unwrap();
    assert_eq!(lin.coeffs, vec![0.0, 1.0]);
    assert!(majorant_of(&NonlinearitySpec::zero(), &grid, SobolevChoice::ModeSum).unwrap().is_zero());
    let constant = NonlinearitySpec { monomials: vec![Monomial { coefficient: 1.0, powers: vec![0] }], lambda: 1.0 };
    assert!(majorant_of(&constant, &grid, SobolevChoice::ModeSum).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flows_are_inverse(c1 in 0.0..1.0f64, c2 in 0.0..1.0f64, c3 in 0.0..0.5f64, r in 0.01..1.0f64, frac in 0.0..0.9f64) {
        let x = MajorantSeries::new(vec![0.0, c1, c2, c3], f64::INFINITY).unwrap();
        let theta = x.blowup_time(r);
        let t = if theta.is_finite() { frac * theta } else { frac * 3.0 };
        let fwd = x.flow(t, r).value().unwrap();
        let back = x.flow(-t, fwd).value().unwrap();
        prop_assert!((back - r).abs() <= 1e-9 * r.max(1.0));
        prop_assert!(fwd >= r);
    }

    #[test]
    fn backward_flow_monotone(c2 in 0.01..1.0f64, r in 0.1..2.0f64, dr in 0.0..1.0f64, t in 0.0..2.0f64, dt in 0.0..1.0f64) {
        let x = MajorantSeries::new(vec![0.0, 0.0, c2], f64::INFINITY).unwrap();
        let base = x.flow(-t, r).value().unwrap();
        prop_assert!(x.flow(-t, r + dr).value().unwrap() >= base - 1e-14);
        prop_assert!(x.flow(-(t + dt), r).value().unwrap() <= base + 1e-14);
    }
}
