//! Quick end-to-end checks on small grids, plus the golden kernel file.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conserved::{f_fock, f_trees, i_phi, SeriesConfig};
use crate::dynamics::{solve_at_times, NonlinearitySpec, SolverConfig};
use crate::error::Result;
use crate::fockspace::{ModeBasis, PolyFunctional};
use crate::io::{kernels_to_json, KernelFile};
use crate::majorant::MajorantSeries;
use crate::propagator::{evolve_linear, LinearSolution};
use crate::spectral::{CauchyPair, SpectralField, SpectralGrid};
use crate::texp::{texp_apply, TexpMethod, TexpOptions};
use crate::trees::{enumerate_trees, vacuum_expectation, wick_weights, WickSymbol};

const GOLDEN: &str = include_str!("../data/golden_kernel.json");

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }
}

/// The functional whose dense kernels are pinned in the golden file.
pub fn golden_functional() -> Result<PolyFunctional> {
    let grid = SpectralGrid::new(1, 4, 2.0 * PI, 1.0, 1.0)?;
    let basis = ModeBasis::new(grid);
    let a: Vec<f64> = (0..basis.dim()).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let f = PolyFunctional::linear(&basis, &a, 2)?;
    Ok(f.apply_d(&NonlinearitySpec::power(0.5, 2), 0.3, false)?.functional)
}

pub fn golden_kernels() -> Result<KernelFile> {
    Ok(serde_json::from_str(GOLDEN)?)
}

fn check(name: &str, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match run() {
        Ok((passed, detail)) => Check { name: name.into(), passed, detail },
        Err(e) => Check { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

pub fn run(seed: u64) -> Report {
    let mut checks = Vec::new();
    checks.push(check("golden kernel", || {
        let now = kernels_to_json(&golden_functional()?);
        let pinned = golden_kernels()?;
        let mut worst: f64 = 0.0;
        let same_shape = now.kernels.len() == pinned.kernels.len()
            && now.kernels.iter().zip(&pinned.kernels).all(|(a, b)| a.data.len() == b.data.len());
        for (a, b) in now.kernels.iter().zip(&pinned.kernels) {
            for (x, y) in a.data.iter().zip(&b.data) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok((same_shape && worst <= 1e-12, format!("max deviation {worst:.2e}")))
    }));
    checks.push(check("riccati flow", || {
        let x = MajorantSeries::monomial(0.8, 2)?;
        let mut worst: f64 = 0.0;
        for &(t, r) in &[(0.2, 0.5), (0.5, 1.0), (1.0, 0.3)] {
            let exact = r / (1.0 - 0.8 * t * r);
            let v = x.flow(t, r).value().unwrap_or(f64::NAN);
            worst = worst.max((v - exact).abs());
        }
        let theta = (x.blowup_time(2.0) - 1.0 / 1.6).abs();
        Ok((worst <= 1e-10 && theta <= 1e-8, format!("flow {worst:.2e}, blow-up {theta:.2e}")))
    }));
    checks.push(check("wick pairs", || {
        let w = [WickSymbol::annihilate("y"), WickSymbol::create("x")];
        let one = vacuum_expectation(&w);
        let unbalanced = vacuum_expectation(&[WickSymbol::annihilate("y"), WickSymbol::annihilate("z")]);
        Ok((one.len() == 1 && one[0].coefficient == 1 && unbalanced.is_empty(), format!("{} term(s)", one.len())))
    }));
    checks.push(check("catalan weights", || {
        let v = NonlinearitySpec::power(1.0, 2);
        let sums: Vec<f64> =
            (0..5).map(|k| enumerate_trees(k, &v, 1).iter().map(|t| t.symmetry).sum()).collect();
        let wick_ok = (1..=2).all(|k| {
            let w = wick_weights(k);
            enumerate_trees(k, &v, 1).iter().all(|t| w.get(&t.child).copied() == Some(t.symmetry))
        });
        Ok((sums == [1.0, 1.0, 2.0, 5.0, 14.0] && wick_ok, format!("{sums:?}")))
    }));
    let grid = match SpectralGrid::new(1, 8, 2.0 * PI, 1.0, 1.0) {
        Ok(g) => g,
        Err(e) => {
            checks.push(Check { name: "grid".into(), passed: false, detail: e.to_string() });
            return Report { checks };
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d0 = CauchyPair::random(grid, &mut rng, 0.3);
    let phi = LinearSolution::new(CauchyPair::random(grid, &mut rng, 1.0));
    checks.push(check("linear invariance", || {
        let i0 = i_phi(&d0, &phi.at(0.0))?;
        let i1 = i_phi(&evolve_linear(&d0, 0.7), &phi.at(0.7))?;
        Ok(((i0 - i1).abs() <= 1e-12, format!("|ΔI| = {:.2e}", (i0 - i1).abs())))
    }));
    checks.push(check("ode vs simplex", || {
        let basis = ModeBasis::new(grid);
        let f = PolyFunctional::vacuum(&basis, 4)?.creation_pair(&phi.at(0.0), 0.0)?.functional;
        let v = NonlinearitySpec::power(0.05, 2);
        let ode = texp_apply(&f, &v, 0.5, &TexpOptions { tol: 1e-12, ..Default::default() })?;
        let simplex =
            texp_apply(&f, &v, 0.5, &TexpOptions { method: TexpMethod::Simplex, order: 3, simplex_nodes: 8, ..Default::default() })?;
        let gap = ode.functional.max_abs_diff(&simplex.functional);
        Ok((gap <= 1e-8, format!("max kernel gap {gap:.2e}")))
    }));
    checks.push(check("dual route", || {
        let v = NonlinearitySpec::power(0.05, 2);
        let t = 0.5;
        let path = solve_at_times(&d0, &v, &[t], &SolverConfig { dt: 0.01, ..Default::default() }, false)?;
        let dt = path.last();
        let series = SeriesConfig { cap: 4, ..Default::default() };
        let fock = f_fock(dt, &phi, &v, t, &series)?.value;
        let trees = f_trees(dt, &phi, &v, t, 3, 12, false)?.value;
        let i0 = i_phi(&d0, &phi.at(0.0))?;
        let ok = (fock - trees).abs() <= 1e-8 && (fock - i0).abs() <= 1e-6 * i0.abs().max(1e-12);
        Ok((ok, format!("fock − trees {:.2e}, fock − I₀ {:.2e}", fock - trees, fock - i0)))
    }));
    checks.push(check("delta recovery", || {
        let x = [1.1, 0.0];
        let delta = SpectralField::dirichlet_delta(grid, x);
        let got = d0.u0.integrate_product(&delta);
        let want = d0.u0.evaluate_at(x);
        Ok(((got - want).abs() <= 1e-12, format!("{got:.6e} vs {want:.6e}")))
    }));
    Report { checks }
}
