//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use kgfock::fockspace::ModeBasis;
use kgfock::{CauchyPair, LinearSolution, NonlinearitySpec, PolyFunctional, SpectralGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub grid: SpectralGrid,
    pub basis: Arc<ModeBasis>,
    pub v: NonlinearitySpec,
    pub d0: CauchyPair,
    pub phi: LinearSolution,
}

/// One-dimensional grid with `modes` points, λu² with λ = 0.05.
pub fn fixture(modes: usize) -> Fixture {
    let grid = SpectralGrid::new(1, modes, 2.0 * PI, 1.0, 1.0).expect("valid grid");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d0 = CauchyPair::random(grid, &mut rng, 0.3);
    let phi = LinearSolution::new(CauchyPair::random(grid, &mut rng, 1.0));
    Fixture { grid, basis: ModeBasis::new(grid), v: NonlinearitySpec::power(0.05, 2), d0, phi }
}

impl Fixture {
    pub fn f_phi(&self, cap: usize) -> PolyFunctional {
        kgfock::conserved::f_phi(&self.basis, &self.phi, cap).expect("same grid")
    }
}
