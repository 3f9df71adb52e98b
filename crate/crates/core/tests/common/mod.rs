#![allow(dead_code)]

use std::f64::consts::PI;

use kgfock::{CauchyPair, LinearSolution, SpectralField, SpectralGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn grid1(modes: usize) -> SpectralGrid {
    SpectralGrid::new(1, modes, 2.0 * PI, 1.0, 1.0).unwrap()
}

pub fn grid2(modes: usize) -> SpectralGrid {
    SpectralGrid::new(2, modes, 2.0 * PI, 1.0, 1.5).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn field(grid: SpectralGrid, seed: u64) -> SpectralField {
    SpectralField::random(grid, &mut rng(seed), 1.0)
}

pub fn pair(grid: SpectralGrid, seed: u64, norm: f64) -> CauchyPair {
    CauchyPair::random(grid, &mut rng(seed), norm)
}

pub fn solution(grid: SpectralGrid, seed: u64, norm: f64) -> LinearSolution {
    LinearSolution::new(pair(grid, seed, norm))
}

/// Compensated (Neumaier) summation.
pub fn neumaier<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
