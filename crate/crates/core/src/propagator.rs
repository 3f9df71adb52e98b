//! Linear Klein–Gordon flow, the Green kernel and the ♯-operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{CauchyPair, SpectralField, SpectralGrid};

/// Mode-wise rotation of Cauchy data by time `t`.
pub fn evolve_linear(d: &CauchyPair, t: f64) -> CauchyPair {
    let g = d.grid();
    let mut out = d.clone();
    for i in 0..g.len() {
        let e = g.epsilon(i);
        let (sn, cs) = (e * t).sin_cos();
        let a = d.u0.coeffs[i];
        let b = d.u1.coeffs[i];
        out.u0.coeffs[i] = a * cs + b * (sn / e);
        out.u1.coeffs[i] = -a * (e * sn) + b * cs;
    }
    out
}

/// Ĝ(t, ξ) = (2π)^{-n/2} sin(εt)/ε.
pub fn green_hat(grid: &SpectralGrid, t: f64, k: [i32; 2]) -> f64 {
    let e = grid.epsilon_of(k);
    (2.0 * PI).powf(-(grid.n as f64) / 2.0) * (e * t).sin() / e
}

/// ∂ₜĜ(t, ξ) = (2π)^{-n/2} cos(εt).
pub fn green_hat_dt(grid: &SpectralGrid, t: f64, k: [i32; 2]) -> f64 {
    let e = grid.epsilon_of(k);
    (2.0 * PI).powf(-(grid.n as f64) / 2.0) * (e * t).cos()
}

/// A free solution, stored by its Cauchy data at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub data0: CauchyPair,
}

impl LinearSolution {
    pub fn new(data0: CauchyPair) -> Self {
        LinearSolution { data0 }
    }

    /// The free solution whose Cauchy data at time `t` is `d`.
    pub fn with_data_at(d: &CauchyPair, t: f64) -> Self {
        LinearSolution { data0: evolve_linear(d, -t) }
    }

    pub fn grid(&self) -> SpectralGrid {
        self.data0.grid()
    }

    pub fn at(&self, t: f64) -> CauchyPair {
        if t == 0.0 {
            return self.data0.clone();
        }
        evolve_linear(&self.data0, t)
    }

    /// ℰ^σ norm: (‖φ₀‖²_{H^σ} + ‖φ₁‖²_{H^{σ-1}})^{1/2}.
    pub fn energy_norm(&self, sigma: f64) -> f64 {
        self.data0.norm_at(sigma)
    }

    /// ℰ^{s+1} norm with the grid's s.
    pub fn norm(&self) -> f64 {
        self.data0.norm()
    }

    pub fn inner(&self, other: &LinearSolution) -> f64 {
        self.data0.inner(&other.data0)
    }

    pub fn scale(&self, a: f64) -> LinearSolution {
        LinearSolution { data0: self.data0.scale(a) }
    }

    pub fn axpy(&mut self, a: f64, x: &LinearSolution) {
        self.data0.axpy(a, &x.data0);
    }

    pub fn sub(&self, other: &LinearSolution) -> LinearSolution {
        LinearSolution { data0: &self.data0 - &other.data0 }
    }
}

/// Real multiplier Re(i^j ε^j e^{iθ}) = ε^j cos(θ + jπ/2).
fn sharp_symbol(e: f64, j: i32, theta: f64) -> f64 {
    // exact quadrant values keep the x⁰ = t identities free of rounding
    let c = match j.rem_euclid(4) {
        0 => theta.cos(),
        1 => -theta.sin(),
        2 => -theta.cos(),
        _ => theta.sin(),
    };
    e.powi(j) * c
}

/// v♯ₜG^{(k)}: the free solution with x⁰-profile Re(i^{k-1} ε^{k-1} e^{iε(t-x⁰)}) v̂.
pub fn sharp(v: &SpectralField, t: f64, k: u32) -> LinearSolution {
    let g = v.grid;
    let j = k as i32 - 1;
    let mut d = CauchyPair::zeros(g);
    for i in 0..g.len() {
        let e = g.epsilon(i);
        let th = e * t;
        d.u0.coeffs[i] = v.coeffs[i] * sharp_symbol(e, j, th);
        // ∂_{x⁰} of the profile is −(profile with k+1)
        d.u1.coeffs[i] = v.coeffs[i] * (-sharp_symbol(e, j + 1, th));
    }
    LinearSolution { data0: d }
}

/// u↔♯ₜG = (u|ₜ)♯ₜG^{(1)} − (∂ₜu|ₜ)♯ₜG: the free solution with data `d` at time `t`.
pub fn sharp_lr(d: &CauchyPair, t: f64) -> LinearSolution {
    let mut out = sharp(&d.u0, t, 1);
    out.axpy(-1.0, &sharp(&d.u1, t, 0));
    out
}

/// States and sources of a forced solution □u + m²u = −J on a uniform time grid.
#[derive(Debug, Clone)]
pub struct SourcedPath {
    pub times: Vec<f64>,
    pub states: Vec<CauchyPair>,
    pub sources: Vec<SpectralField>,
}

/// Finite-difference derivative of τ ↦ u↔♯_τG next to the field (J|ₜ)♯ₜG.
#[derive(Debug, Clone)]
pub struct DuhamelCheck {
    pub t: f64,
    pub finite_difference: LinearSolution,
    pub source_sharp: LinearSolution,
}

impl DuhamelCheck {
    /// ℰ-norm of the mismatch.
    pub fn mismatch(&self) -> f64 {
        self.finite_difference.sub(&self.source_sharp).norm()
    }
}

/// Central-difference check of d/dt(u↔♯ₜG) = (J|ₜ)♯ₜG at sample `index`.
pub fn duhamel_source(path: &SourcedPath, index: usize) -> Result<DuhamelCheck> {
    let len = path.times.len();
    if index == 0 || index + 1 >= len || path.states.len() != len || path.sources.len() != len {
        return Err(Error::InsufficientSamples {
            index,
            needed: (index.saturating_sub(1), index + 1),
            len,
        });
    }
    let (tm, tp) = (path.times[index - 1], path.times[index + 1]);
    let h = tp - tm;
    let lo = sharp_lr(&path.states[index - 1], tm);
    let hi = sharp_lr(&path.states[index + 1], tp);
    let fd = hi.sub(&lo).scale(1.0 / h);
    let t = path.times[index];
    Ok(DuhamelCheck { t, finite_difference: fd, source_sharp: sharp(&path.sources[index], t, 0) })
}

/// Per-mode complex value of the profile of `sharp(v, t, k)` at time x⁰.
pub fn sharp_profile(v: &SpectralField, t: f64, k: u32, x0: f64) -> Vec<Complex64> {
    let g = v.grid;
    (0..g.len())
        .map(|i| {
            let e = g.epsilon(i);
            v.coeffs[i] * sharp_symbol(e, k as i32 - 1, e * (t - x0))
        })
        .collect()
}
