use serde::{Deserialize, Serialize};

use super::NonlinearitySpec;
use crate::error::{Error, Result};
use crate::propagator::evolve_linear;
use crate::quad::GaussCollocation;
use crate::spectral::{CauchyPair, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Strang,
    DuhamelPicard,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Maximum Picard sweeps per step (duhamel-picard).
    pub picard_iterations: usize,
    /// Picard stopping tolerance relative to the state norm.
    pub tolerance: f64,
    /// Gauss collocation stages (duhamel-picard).
    pub stages: usize,
    pub dealias: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            scheme: Scheme::DuhamelPicard,
            picard_iterations: 60,
            tolerance: 1e-14,
            stages: 4,
            dealias: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if self.stages == 0 || self.picard_iterations == 0 {
            return Err(Error::InvalidArgument("stages and picard iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Time-sampled nonlinear solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionPath {
    pub times: Vec<f64>,
    pub states: Vec<CauchyPair>,
}

impl SolutionPath {
    pub fn last(&self) -> &CauchyPair {
        self.states.last().expect("paths are never empty")
    }

    /// State recorded at time `t` (within 1e-12).
    pub fn at_time(&self, t: f64) -> Option<&CauchyPair> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .map(|i| &self.states[i])
    }

    /// Max L² norm of the a posteriori residual of ∂ₜu₁ + (−Δ+m²)u₀ + V and ∂ₜu₀ − u₁,
    /// by central differences over interior samples.
    pub fn residual(&self, v: &NonlinearitySpec, dealias: bool) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 1..self.states.len().saturating_sub(1) {
            let h = self.times[i + 1] - self.times[i - 1];
            let (a, b, c) = (&self.states[i - 1], &self.states[i], &self.states[i + 1]);
            let g = b.grid();
            let vt = (&c.u1 - &a.u1).scale(1.0 / h);
            let lin = b.u0.map_modes(|k| {
                let e = g.epsilon(k);
                num_complex::Complex64::new(e * e, 0.0)
            });
            let mut r1 = &vt + &lin;
            r1.axpy(1.0, &v.evaluate(b, dealias)?);
            let r0 = &(&c.u0 - &a.u0).scale(1.0 / h) - &b.u1;
            worst = worst.max(r1.hs_norm(0.0)).max(r0.hs_norm(0.0));
        }
        Ok(worst)
    }
}

/// ½(‖u₁‖² + ‖∇u₀‖² + m²‖u₀‖²) + ∫P(u₀), with P' = V.
pub fn energy(d: &CauchyPair, v: &NonlinearitySpec, dealias: bool) -> Result<f64> {
    let kinetic = d.u1.hs_norm(0.0).powi(2);
    // ‖∇u₀‖² + m²‖u₀‖² is the H¹ weight ε²
    let elastic = d.u0.hs_inner(&d.u0, 1.0);
    Ok(0.5 * (kinetic + elastic) + v.potential(&d.u0, dealias)?)
}

fn check_finite(d: &CauchyPair, t: f64) -> Result<()> {
    let bad = d.u0.coeffs.iter().chain(&d.u1.coeffs).any(|c| !c.re.is_finite() || !c.im.is_finite());
    if bad {
        Err(Error::NonFinite(format!("solver state at t = {t}")))
    } else {
        Ok(())
    }
}

fn kick(d: &CauchyPair, v: &NonlinearitySpec, h: f64, dealias: bool) -> Result<CauchyPair> {
    let mut out = d.clone();
    let n = d.grid().n;
    if v.uses_time_derivative(n) {
        // explicit midpoint in the velocity slot
        let mut mid = d.clone();
        mid.u1.axpy(-0.5 * h, &v.evaluate(d, dealias)?);
        out.u1.axpy(-h, &v.evaluate(&mid, dealias)?);
    } else {
        out.u1.axpy(-h, &v.evaluate(d, dealias)?);
    }
    Ok(out)
}

fn strang_step(d: &CauchyPair, v: &NonlinearitySpec, h: f64, dealias: bool) -> Result<CauchyPair> {
    let a = evolve_linear(d, 0.5 * h);
    let b = kick(&a, v, h, dealias)?;
    Ok(evolve_linear(&b, 0.5 * h))
}

/// Interaction-picture vector field: R(−σ)(0, −V(R(σ)w)).
fn pulled_back_force(w: &CauchyPair, v: &NonlinearitySpec, sigma: f64, dealias: bool) -> Result<CauchyPair> {
    let state = evolve_linear(w, sigma);
    let force = v.evaluate(&state, dealias)?.scale(-1.0);
    let g = w.grid();
    Ok(evolve_linear(&CauchyPair { u0: SpectralField::zeros(g), u1: force }, -sigma))
}

fn picard_step(
    d: &CauchyPair,
    v: &NonlinearitySpec,
    h: f64,
    t: f64,
    cfg: &SolverConfig,
    tab: &GaussCollocation,
) -> Result<CauchyPair> {
    let s = tab.stages();
    let mut stages = vec![d.clone(); s];
    let scale = 1.0 + d.norm();
    let mut forces = Vec::with_capacity(s);
    let mut last = f64::INFINITY;
    for it in 0..cfg.picard_iterations {
        forces.clear();
        for j in 0..s {
            forces.push(pulled_back_force(&stages[j], v, tab.c[j] * h, cfg.dealias)?);
        }
        let mut change: f64 = 0.0;
        for j in 0..s {
            let mut w = d.clone();
            for l in 0..s {
                w.axpy(h * tab.a[j][l], &forces[l]);
            }
            change = change.max((&w - &stages[j]).norm());
            stages[j] = w;
        }
        if !change.is_finite() {
            return Err(Error::NonFinite(format!("picard stage at t = {t}")));
        }
        if change <= cfg.tolerance * scale {
            break;
        }
        if it > 3 && change > 0.9 * last && change > 1e2 * cfg.tolerance * scale {
            return Err(Error::PicardStall { t, residual: change });
        }
        if it + 1 == cfg.picard_iterations && change > 1e3 * cfg.tolerance * scale {
            return Err(Error::PicardStall { t, residual: change });
        }
        last = change;
    }
    forces.clear();
    for j in 0..s {
        forces.push(pulled_back_force(&stages[j], v, tab.c[j] * h, cfg.dealias)?);
    }
    let mut w = d.clone();
    for j in 0..s {
        w.axpy(h * tab.b[j], &forces[j]);
    }
    Ok(evolve_linear(&w, h))
}

/// One step from `d` at time `t` to `t + h`, with step rejection on Picard stalls.
fn advance(
    d: &CauchyPair,
    v: &NonlinearitySpec,
    t: f64,
    h: f64,
    cfg: &SolverConfig,
    tab: &GaussCollocation,
) -> Result<CauchyPair> {
    match cfg.scheme {
        Scheme::Strang => strang_step(d, v, h, cfg.dealias),
        Scheme::DuhamelPicard => match picard_step(d, v, h, t, cfg, tab) {
            Ok(x) => Ok(x),
            Err(Error::PicardStall { .. }) if h.abs() > 1e-6 => {
                let mid = advance(d, v, t, 0.5 * h, cfg, tab)?;
                advance(&mid, v, t + 0.5 * h, 0.5 * h, cfg, tab)
            }
            Err(e) => Err(e),
        },
    }
}

/// Integrates from `d0` at time 0 to signed time `t_end`, sampling every step.
pub fn solve(d0: &CauchyPair, v: &NonlinearitySpec, t_end: f64, cfg: &SolverConfig) -> Result<SolutionPath> {
    solve_at_times(d0, v, &[t_end], cfg, true)
}

/// Integrates through the given output times (monotone in one direction from 0).
///
/// With `every_step` all intermediate states are kept; otherwise only the
/// requested times (plus t = 0).
pub fn solve_at_times(
    d0: &CauchyPair,
    v: &NonlinearitySpec,
    times: &[f64],
    cfg: &SolverConfig,
    every_step: bool,
) -> Result<SolutionPath> {
    cfg.validate()?;
    v.validate(d0.grid().n)?;
    let tab = GaussCollocation::new(cfg.stages);
    let mut path = SolutionPath { times: vec![0.0], states: vec![d0.clone()] };
    let mut t = 0.0;
    let mut state = d0.clone();
    for &target in times {
        let span = target - t;
        if span == 0.0 {
            if path.times.last() != Some(&target) {
                path.times.push(target);
                path.states.push(state.clone());
            }
            continue;
        }
        let steps = (span.abs() / cfg.dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for k in 0..steps {
            let t_here = t + k as f64 * h;
            state = if v.is_zero() { evolve_linear(&state, h) } else { advance(&state, v, t_here, h, cfg, &tab)? };
            check_finite(&state, t_here + h)?;
            let now = if k + 1 == steps { target } else { t_here + h };
            if every_step || k + 1 == steps {
                path.times.push(now);
                path.states.push(state.clone());
            }
        }
        t = target;
    }
    Ok(path)
}
