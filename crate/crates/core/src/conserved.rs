//! The functionals I^φ and ℱ^φ, conservation scans and point recovery.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{solve_at_times, NonlinearitySpec, SolverConfig};
use crate::error::{Error, Result};
use crate::fockspace::{ModeBasis, PolyFunctional};
use crate::majorant::{majorant_of, AdmissibleReport};
use crate::propagator::{sharp_lr, LinearSolution};
use crate::spectral::{CauchyPair, SobolevChoice, SpectralField};
use crate::texp::{texp_sweep, TexpOptions, TexpResult};
use crate::trees::{enumerate_trees, evaluate_tree};

/// I^φ[u] = ∫(u φ₁ − u₁ φ₀) on one time slice.
pub fn i_phi(d_u: &CauchyPair, d_phi: &CauchyPair) -> Result<f64> {
    d_u.grid().check_same(&d_phi.grid())?;
    Ok(d_u.u0.integrate_product(&d_phi.u1) - d_u.u1.integrate_product(&d_phi.u0))
}

/// |f_φ⟩: the degree-1 functional ψ ↦ I^φ₀[ψ].
pub fn f_phi(basis: &Arc<ModeBasis>, phi: &LinearSolution, cap: usize) -> Result<PolyFunctional> {
    basis.grid.check_same(&phi.grid())?;
    Ok(PolyFunctional::vacuum(basis, cap)?.creation_pair(&phi.at(0.0), 0.0)?.functional)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Degree cap P.
    pub cap: usize,
    pub texp: TexpOptions,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { cap: 4, texp: TexpOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FockValue {
    pub t: f64,
    pub value: f64,
    /// Degree-wise contributions ⟨[u]_t| (Texp f_φ)_p.
    pub by_degree: Vec<f64>,
    pub truncation_mass: f64,
    pub certified: bool,
    pub admissible: AdmissibleReport,
}

fn fock_value(
    basis: &ModeBasis,
    res: &TexpResult,
    d_u: &CauchyPair,
    v: &NonlinearitySpec,
    radius: f64,
) -> Result<FockValue> {
    let coords = basis.coords_of(&sharp_lr(d_u, res.t))?;
    let by_degree: Vec<f64> = (0..=res.functional.cap).map(|p| res.functional.evaluate_degree(p, &coords)).collect();
    let x = majorant_of(v, &basis.grid, SobolevChoice::ModeSum)?;
    let admissible = x.admissible(res.t, d_u.norm(), radius);
    Ok(FockValue {
        t: res.t,
        value: by_degree.iter().sum(),
        by_degree,
        truncation_mass: res.truncation_mass,
        certified: res.certified && admissible.ok,
        admissible,
    })
}

/// ℱ_t^φ[u]_t = ⟨[u]_t| Texp(∫₀ᵗ 𝔻) |f_φ⟩, truncated at the cap.
pub fn f_fock(
    d_u: &CauchyPair,
    phi: &LinearSolution,
    v: &NonlinearitySpec,
    t: f64,
    series: &SeriesConfig,
) -> Result<FockValue> {
    let basis = ModeBasis::new(d_u.grid());
    let f = f_phi(&basis, phi, series.cap)?;
    let res = texp_sweep(&f, v, &[t], &series.texp)?;
    fock_value(&basis, &res[0], d_u, v, series.texp.radius)
}

/// ℱ at several times, each paired with its own slice [u]_t, from one Texp sweep.
pub fn f_fock_sweep(
    slices: &[(f64, CauchyPair)],
    phi: &LinearSolution,
    v: &NonlinearitySpec,
    series: &SeriesConfig,
) -> Result<Vec<FockValue>> {
    let Some((_, first)) = slices.first() else { return Ok(Vec::new()) };
    let basis = ModeBasis::new(first.grid());
    let f = f_phi(&basis, phi, series.cap)?;
    let times: Vec<f64> = slices.iter().map(|(t, _)| *t).collect();
    let res = texp_sweep(&f, v, &times, &series.texp)?;
    res.iter()
        .zip(slices)
        .map(|(r, (_, d))| fock_value(&basis, r, d, v, series.texp.radius))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSum {
    pub value: f64,
    /// Sum of all diagrams with k internal vertices, k = 0..=order.
    pub by_order: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Σ over diagrams with at most `order` internal vertices.
pub fn f_trees(
    d_u: &CauchyPair,
    phi: &LinearSolution,
    v: &NonlinearitySpec,
    t: f64,
    order: usize,
    nodes: usize,
    dealias: bool,
) -> Result<TreeSum> {
    let n = d_u.grid().n;
    let mut by_order = Vec::with_capacity(order + 1);
    let mut warnings = Vec::new();
    for k in 0..=order {
        let mut sum = 0.0;
        for tree in enumerate_trees(k, v, n) {
            let tv = evaluate_tree(&tree, d_u, phi, v, t, nodes, dealias)?;
            if let Some(w) = tv.warning {
                warnings.push(w);
            }
            sum += tv.refined;
        }
        by_order.push(sum);
    }
    Ok(TreeSum { value: by_order.iter().sum(), by_order, warnings })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub f_t: f64,
    pub i_0: f64,
    pub abs_drift: f64,
    pub rel_drift: f64,
    pub certified: bool,
    pub truncation_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub max_rel_drift: f64,
    pub slices: Vec<(f64, CauchyPair)>,
}

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,F_t,I_0,abs_drift,rel_drift,certified,truncation_mass\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.15e},{:.15e},{:.6e},{:.6e},{},{:.6e}\n",
                r.t, r.f_t, r.i_0, r.abs_drift, r.rel_drift, r.certified, r.truncation_mass
            ));
        }
        s
    }
}

/// Solves from d0, evaluates ℱ_t at each time and compares with I^φ₀ of d0.
pub fn conservation_scan(
    d0: &CauchyPair,
    phi: &LinearSolution,
    v: &NonlinearitySpec,
    times: &[f64],
    series: &SeriesConfig,
    solver: &SolverConfig,
) -> Result<ScanTable> {
    let path = solve_at_times(d0, v, times, solver, false)?;
    let slices: Vec<(f64, CauchyPair)> = times
        .iter()
        .map(|&t| {
            path.at_time(t)
                .cloned()
                .map(|d| (t, d))
                .ok_or_else(|| Error::InvalidArgument(format!("no solver state at t = {t}")))
        })
        .collect::<Result<_>>()?;
    let i_0 = i_phi(d0, &phi.at(0.0))?;
    let values = f_fock_sweep(&slices, phi, v, series)?;
    let rows: Vec<ScanRow> = values
        .iter()
        .map(|fv| {
            let abs_drift = (fv.value - i_0).abs();
            ScanRow {
                t: fv.t,
                f_t: fv.value,
                i_0,
                abs_drift,
                rel_drift: abs_drift / i_0.abs().max(f64::EPSILON),
                certified: fv.certified,
                truncation_mass: fv.truncation_mass,
            }
        })
        .collect();
    let max_rel_drift = rows.iter().map(|r| r.rel_drift).fold(0.0, f64::max);
    Ok(ScanTable { rows, max_rel_drift, slices })
}

#[derive(Debug, Clone, Serialize)]
pub struct Recovery {
    pub x: [f64; 2],
    pub u_true: f64,
    pub dtu_true: f64,
    pub u_rec: f64,
    pub dtu_rec: f64,
    pub rel_err_u: f64,
    pub rel_err_dtu: f64,
}

/// Reads u(0,x) and ∂ₜu(0,x) off ℱ_t with δ-type test solutions.
pub fn point_recovery(
    d0: &CauchyPair,
    v: &NonlinearitySpec,
    t: f64,
    x: [f64; 2],
    series: &SeriesConfig,
    solver: &SolverConfig,
) -> Result<Recovery> {
    let grid = d0.grid();
    let path = solve_at_times(d0, v, &[t], solver, false)?;
    let d_t = path.last().clone();
    let delta = SpectralField::dirichlet_delta(grid, x);
    let zero = SpectralField::zeros(grid);
    let phi_u = LinearSolution::new(CauchyPair::new(zero.clone(), delta.clone())?);
    let phi_dt = LinearSolution::new(CauchyPair::new(delta.scale(-1.0), zero)?);
    let slices = vec![(t, d_t)];
    let u_rec = f_fock_sweep(&slices, &phi_u, v, series)?[0].value;
    let dtu_rec = f_fock_sweep(&slices, &phi_dt, v, series)?[0].value;
    let u_true = d0.u0.evaluate_at(x);
    let dtu_true = d0.u1.evaluate_at(x);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::EPSILON);
    Ok(Recovery {
        x,
        u_true,
        dtu_true,
        u_rec,
        dtu_rec,
        rel_err_u: rel(u_rec, u_true),
        rel_err_dtu: rel(dtu_rec, dtu_true),
    })
}

/// Grid point where |u₀| is largest.
pub fn argmax_point(d: &CauchyPair) -> [f64; 2] {
    let samples = d.u0.to_samples();
    let (j, _) = samples
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, &s)| if s.abs() > acc.1 { (j, s.abs()) } else { acc });
    d.grid().sample_point(j)
}
