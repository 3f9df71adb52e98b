mod common;

use std::sync::Arc;

use common::*;
use kgfock::conserved::i_phi;
use kgfock::dynamics::NonlinearitySpec;
use kgfock::fockspace::{CoVector, ModeBasis, NormMode, NormTag, PolyFunctional};
use kgfock::majorant::majorant_of;
use kgfock::propagator::{sharp, sharp_lr};
use kgfock::spectral::{SobolevChoice, SpectralField};
use kgfock::CauchyPair;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn basis(modes: usize) -> Arc<ModeBasis> {
    ModeBasis::new(grid1(modes))
}

fn vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..dim).map(|_| r.sample(StandardNormal)).collect()
}

fn unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut a = vector(dim, seed);
    let n = dot(&a, &a).sqrt();
    a.iter_mut().for_each(|x| *x /= n);
    a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Kernels with independent Gaussian monomial coefficients up to `top`.
fn random_functional(b: &Arc<ModeBasis>, top: usize, cap: usize, seed: u64) -> PolyFunctional {
    let mut f = PolyFunctional::zero(b, cap).unwrap();
    let mut r = rng(seed);
    for p in 0..=top {
        for c in f.kernels[p].iter_mut() {
            *c = r.sample::<f64, _>(StandardNormal) / (1.0 + p as f64);
        }
    }
    f
}

#[test]
fn gram_identity() {
    for grid in [grid1(8), grid2(4)] {
        let b = ModeBasis::new(grid);
        assert_eq!(b.dim(), 2 * b.modes.len());
        let els: Vec<_> = (0..b.dim()).map(|x| b.element(x)).collect();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((els[i].inner(&els[j]) - want).abs() < 1e-10, "({i},{j})");
            }
        }
    }
}

#[test]
fn decomposition_is_exact() {
    let b = basis(16);
    let phi = solution(b.grid, 5, 1.3);
    let back = b.solution(&b.coords_of(&phi).unwrap()).unwrap();
    assert!(back.data0.max_abs_diff(&phi.data0) < 1e-13);
    assert!(rel(norm(&b.coords_of(&phi).unwrap()), phi.norm()) < 1e-12);
}

#[test]
fn evaluation_examples() {
    let b = basis(8);
    let k = b.dim();
    let phi = vector(k, 1);
    let a = unit(k, 2);
    assert_eq!(PolyFunctional::vacuum(&b, 3).unwrap().evaluate(&phi).unwrap(), 1.0);
    let lin = PolyFunctional::linear(&b, &a, 3).unwrap();
    assert!((lin.evaluate(&phi).unwrap() - dot(&a, &phi)).abs() < 1e-13);
    for p in 2..=4 {
        let f = PolyFunctional::pure_power(&b, &a, p, 4).unwrap();
        let want = dot(&a, &phi).powi(p as i32);
        assert!((f.evaluate(&phi).unwrap() - want).abs() < 1e-12 * norm(&phi).powi(p as i32));
    }
}

#[test]
fn pure_power_norms_in_all_modes() {
    let b = basis(8);
    let a = unit(b.dim(), 3);
    for p in 0..=4 {
        let f = PolyFunctional::pure_power(&b, &a, p, 4).unwrap();
        for mode in [NormMode::Upper, NormMode::sampled()] {
            let n = f.norm_nr(0.7, mode).unwrap().value;
            assert!(rel(n, 0.7f64.powi(p as i32)) < 1e-9, "p={p} {mode:?}");
        }
        if p <= 2 {
            let n = f.norm_nr(0.7, NormMode::Exact).unwrap();
            assert_eq!(n.tag, NormTag::Exact);
            assert!(rel(n.value, 0.7f64.powi(p as i32)) < 1e-12);
        }
    }
    assert_eq!(PolyFunctional::vacuum(&b, 2).unwrap().norm_nr(3.0, NormMode::Exact).unwrap().value, 1.0);
    assert!(PolyFunctional::vacuum(&b, 2).unwrap().norm_nr(-1.0, NormMode::Upper).is_err());
}

#[test]
fn two_kernel_exact_vs_sampled() {
    let b = basis(8);
    for seed in 0..5 {
        let mut f = PolyFunctional::zero(&b, 2).unwrap();
        let g = random_functional(&b, 2, 2, seed);
        f.kernels[2] = g.kernels[2].clone();
        let exact = f.kernel_norm(2, NormMode::Exact).unwrap().value;
        let sampled = f.kernel_norm(2, NormMode::sampled()).unwrap().value;
        let upper = f.frobenius(2);
        assert!((exact - sampled).abs() <= 1e-6 * exact, "{exact} vs {sampled}");
        assert!(exact <= upper * (1.0 + 1e-12));
    }
}

#[test]
fn derivative_examples() {
    let b = basis(8);
    let k = b.dim();
    let (a, psi, phi) = (unit(k, 4), vector(k, 5), vector(k, 6));
    let d = PolyFunctional::linear(&b, &a, 2).unwrap().derivative_along(&psi).unwrap();
    assert!((d.kernels[0][0] - dot(&a, &psi)).abs() < 1e-13);
    assert!(d.kernels[1].iter().all(|&c| c == 0.0));
    let sq = PolyFunctional::pure_power(&b, &a, 2, 2).unwrap().derivative_along(&psi).unwrap();
    let want = 2.0 * dot(&a, &psi) * dot(&a, &phi);
    assert!((sq.evaluate(&phi).unwrap() - want).abs() < 1e-12);
    assert!(PolyFunctional::vacuum(&b, 3).unwrap().derivative_along(&psi).unwrap().max_abs_diff(
        &PolyFunctional::zero(&b, 3).unwrap()
    ) == 0.0);
}

#[test]
fn creation_builds_test_functional() {
    let b = basis(16);
    let grid = b.grid;
    let phi = solution(grid, 7, 1.0);
    let vac = PolyFunctional::vacuum(&b, 2).unwrap();
    let f = vac.creation_pair(&phi.at(0.0), 0.0).unwrap().functional;
    assert_eq!(CoVector::Vacuum.pair(&f).unwrap(), 0.0);
    for seed in 0..4 {
        let psi = solution(grid, 100 + seed, 0.5);
        let got = f.evaluate(&b.coords_of(&psi).unwrap()).unwrap();
        let want = i_phi(&psi.at(0.0), &phi.at(0.0)).unwrap();
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn creation_with_delta_is_point_evaluation() {
    let b = basis(16);
    let grid = b.grid;
    let x = [0.9, 0.0];
    let t = 0.35;
    let delta = SpectralField::dirichlet_delta(grid, x);
    let f = PolyFunctional::vacuum(&b, 1).unwrap().creation_smeared(&delta, t).unwrap().functional;
    let psi = solution(grid, 11, 1.0);
    let got = f.evaluate(&b.coords_of(&psi).unwrap()).unwrap();
    assert!((got - psi.at(t).u0.evaluate_at(x)).abs() < 1e-12);
}

#[test]
fn creation_norm_identity() {
    let b = basis(16);
    let grid = b.grid;
    for (seed, t) in [(1u64, 0.0), (2, 0.7), (3, -1.2)] {
        let w = field(grid, seed);
        let f = PolyFunctional::vacuum(&b, 1).unwrap().creation_smeared(&w, t).unwrap().functional;
        let n = f.kernel_norm(1, NormMode::Exact).unwrap().value;
        let r = 1.7;
        assert!(rel(r * n, r * w.hs_norm(-grid.s - 1.0)) < 1e-12);
    }
}

#[test]
fn apply_u_examples() {
    let b = basis(8);
    let grid = b.grid;
    let a = unit(b.dim(), 8);
    let lin = PolyFunctional::linear(&b, &a, 2).unwrap();
    let zero = lin.apply_u(&CauchyPair::zeros(grid), 0.4).unwrap();
    assert_eq!(zero.max_abs_diff(&PolyFunctional::zero(&b, 2).unwrap()), 0.0);
    let d = pair(grid, 9, 0.6);
    let got = lin.apply_u(&d, 0.4).unwrap();
    let psi = b.coords_of(&sharp_lr(&d, 0.4)).unwrap();
    assert!((got.kernels[0][0] - dot(&a, &psi)).abs() < 1e-13);
}

#[test]
fn apply_d_vanishes_for_zero_nonlinearity() {
    let b = basis(8);
    let f = random_functional(&b, 3, 4, 1);
    let out = f.apply_d(&NonlinearitySpec::zero(), 0.5, false).unwrap();
    assert_eq!(out.functional.max_abs_diff(&PolyFunctional::zero(&b, 4).unwrap()), 0.0);
    assert_eq!(out.dropped_levels, 0);
}

#[test]
fn apply_d_linear_source_is_composition() {
    let b = basis(8);
    let grid = b.grid;
    let a = unit(b.dim(), 12);
    let f = PolyFunctional::linear(&b, &a, 2).unwrap();
    let t = 0.45;
    let g = f.apply_d(&NonlinearitySpec::power(1.0, 1), t, false).unwrap().functional;
    assert!(g.kernels[2].iter().all(|&c| c == 0.0));
    for seed in 0..4 {
        let phi = solution(grid, 40 + seed, 1.0);
        let slice = phi.at(t).u0;
        let inner = b.coords_of(&sharp(&slice, t, 0)).unwrap();
        let want = dot(&a, &inner);
        let got = g.evaluate(&b.coords_of(&phi).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn apply_d_reports_truncation() {
    let b = basis(8);
    let f = PolyFunctional::pure_power(&b, &unit(b.dim(), 1), 2, 2).unwrap();
    let out = f.apply_d(&NonlinearitySpec::power(0.3, 2), 0.2, false).unwrap();
    assert!(out.dropped_levels >= 1);
    assert!(out.dropped_mass > 0.0);
}

#[test]
fn pairing_rules() {
    let b = basis(8);
    let vac = PolyFunctional::vacuum(&b, 3).unwrap();
    assert_eq!(CoVector::Vacuum.pair(&vac).unwrap(), 1.0);
    let hom = PolyFunctional::pure_power(&b, &unit(b.dim(), 2), 3, 3).unwrap();
    assert_eq!(CoVector::Vacuum.pair(&hom).unwrap(), 0.0);
}

/// Applies `ops` right to left: true = derivative along ψ, false = creation with ℓ.
fn word_on_vacuum(b: &Arc<ModeBasis>, ops: &[bool], psi: &[f64], l: &[f64]) -> f64 {
    let mut f = PolyFunctional::vacuum(b, 4).unwrap();
    for &deriv in ops.iter().rev() {
        f = if deriv { f.derivative_along(psi).unwrap() } else { f.multiply_linear(l).unwrap().functional };
    }
    CoVector::Vacuum.pair(&f).unwrap()
}

#[test]
fn wick_vanishing_small_words() {
    let b = basis(8);
    let (psi, l) = (vector(b.dim(), 20), vector(b.dim(), 21));
    for k in 0..=3usize {
        for ell in 0..=3usize {
            let n = k + ell;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let ops: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                let val = word_on_vacuum(&b, &ops, &psi, &l);
                if k != ell {
                    assert_eq!(val, 0.0, "k={k} ell={ell} ops={ops:?}");
                }
            }
        }
    }
    let one = word_on_vacuum(&b, &[true, false], &psi, &l);
    assert!((one - dot(&psi, &l)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kernels_symmetric_under_permutation(seed in any::<u64>(), i in 0usize..14, j in 0usize..14, k in 0usize..14) {
        let b = basis(8);
        let f = random_functional(&b, 3, 3, seed);
        let e = f.entry(&[i, j, k]);
        for perm in [[j, i, k], [k, j, i], [i, k, j], [j, k, i]] {
            prop_assert_eq!(f.entry(&perm), e);
        }
    }

    #[test]
    fn deltapsi_estimate(seed in any::<u64>(), p in 1usize..5, r in 0.1..2.0f64, coef in -3.0..3.0f64) {
        let b = basis(8);
        let f = PolyFunctional::pure_power(&b, &unit(b.dim(), seed), p, 4).unwrap().scale(coef);
        let psi = vector(b.dim(), seed ^ 0x55);
        let lhs = f.derivative_along(&psi).unwrap().norm_nr(r, NormMode::Upper).unwrap().value;
        let rhs = norm(&psi) * f.norm_nr_derivative(r, 1, NormMode::Upper).unwrap().value;
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn estop1(seed in any::<u64>(), p in 1usize..5, r in 0.1..2.0f64, t in -1.0..1.0f64) {
        let b = basis(8);
        let f = PolyFunctional::pure_power(&b, &unit(b.dim(), seed), p, 4).unwrap();
        let d = pair(b.grid, seed ^ 3, 0.8);
        let lhs = f.apply_u(&d, t).unwrap().norm_nr(r, NormMode::Upper).unwrap().value;
        let rhs = d.norm() * f.norm_nr_derivative(r, 1, NormMode::Upper).unwrap().value;
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn estop3(seed in any::<u64>(), p in 1usize..4, r in 0.1..2.0f64, t in 0.0..1.0f64, lambda in -1.0..1.0f64) {
        let b = basis(8);
        let v = NonlinearitySpec::power(lambda, 2);
        let f = PolyFunctional::pure_power(&b, &unit(b.dim(), seed), p, p + 1).unwrap();
        let out = f.apply_d(&v, t, false).unwrap();
        prop_assert_eq!(out.dropped_levels, 0);
        let x = majorant_of(&v, &b.grid, SobolevChoice::ModeSum).unwrap();
        let lhs = out.functional.norm_nr(r, NormMode::Upper).unwrap().value;
        let rhs = x.eval(r) * f.norm_nr_derivative(r, 1, NormMode::Upper).unwrap().value;
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{} > {}", lhs, rhs);
    }

    #[test]
    fn translation_identity(seed in any::<u64>(), t in -1.0..1.0f64) {
        let b = basis(8);
        let f = random_functional(&b, 4, 4, seed);
        let d = pair(b.grid, seed ^ 9, 0.5);
        let psi = b.coords_of(&sharp_lr(&d, t)).unwrap();
        let moved = f.exp_u(&d, t).unwrap();
        let phi = vector(b.dim(), seed ^ 13).iter().map(|x| 0.3 * x).collect::<Vec<_>>();
        let shifted: Vec<f64> = phi.iter().zip(&psi).map(|(a, b)| a + b).collect();
        let want = f.evaluate(&shifted).unwrap();
        prop_assert!((moved.evaluate(&phi).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0));
        let vac = CoVector::Vacuum.pair(&moved).unwrap();
        let state = CoVector::state(&b, &d, t).unwrap().pair(&f).unwrap();
        prop_assert!((vac - state).abs() <= 1e-10 * state.abs().max(1.0));
        prop_assert!(f.exp_u(&CauchyPair::zeros(b.grid), t).unwrap().max_abs_diff(&f) == 0.0);
    }

    #[test]
    fn pure_power_translation_is_binomial(seed in any::<u64>(), p in 1usize..5) {
        let b = basis(8);
        let a = unit(b.dim(), seed);
        let f = PolyFunctional::pure_power(&b, &a, p, 4).unwrap();
        let psi = vector(b.dim(), seed ^ 2);
        let phi = vector(b.dim(), seed ^ 4);
        let (x, y) = (dot(&a, &psi), dot(&a, &phi));
        let mut want = 0.0;
        let mut binom = 1.0;
        for k in 0..=p {
            want += binom * x.powi(k as i32) * y.powi((p - k) as i32);
            binom = binom * (p - k) as f64 / (k + 1) as f64;
        }
        let got = f.translate(&psi).unwrap().evaluate(&phi).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn commutation_rule(seed in any::<u64>(), t in -1.0..1.0f64) {
        let b = basis(8);
        let grid = b.grid;
        let f = random_functional(&b, 3, 4, seed);
        let w = field(grid, seed ^ 21);
        let psi = vector(b.dim(), seed ^ 22);
        let dc = f.creation_smeared(&w, t).unwrap().functional.derivative_along(&psi).unwrap();
        let cd = f.derivative_along(&psi).unwrap().creation_smeared(&w, t).unwrap().functional;
        let comm = dc.sub(&cd).unwrap();
        let l = b.smearing_covector(&w, t, false).unwrap();
        let scalar = dot(&l, &psi);
        let quad = b.solution(&psi).unwrap().at(t).u0.integrate_product(&w);
        prop_assert!((scalar - quad).abs() <= 1e-10 * quad.abs().max(1.0));
        let want = f.scale(scalar);
        prop_assert!(comm.max_abs_diff(&want) <= 1e-10 * scalar.abs().max(1.0));
    }

    #[test]
    fn vacuum_is_annihilated(seed in any::<u64>()) {
        let b = basis(8);
        let psi = vector(b.dim(), seed);
        let d = PolyFunctional::vacuum(&b, 3).unwrap().derivative_along(&psi).unwrap();
        prop_assert!(d.max_abs_diff(&PolyFunctional::zero(&b, 3).unwrap()) == 0.0);
        let w = field(b.grid, seed);
        let c = PolyFunctional::vacuum(&b, 3).unwrap().creation_smeared(&w, 0.2).unwrap().functional;
        prop_assert_eq!(CoVector::Vacuum.pair(&c).unwrap(), 0.0);
    }

    #[test]
    fn norm_monotone_in_r(seed in any::<u64>(), r in 0.01..3.0f64, dr in 0.0..1.0f64) {
        let b = basis(8);
        let f = random_functional(&b, 4, 4, seed);
        let lo = f.norm_nr(r, NormMode::Upper).unwrap().value;
        let hi = f.norm_nr(r + dr, NormMode::Upper).unwrap().value;
        prop_assert!(lo <= hi);
    }
}
