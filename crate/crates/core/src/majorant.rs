//! Majorant vector fields X(z) = Σ a_k z^k with a_k ≥ 0 and their flows.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{NonlinearitySpec, Slot};
use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;
use crate::spectral::{sobolev_constant, SobolevChoice, SpectralGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSeries {
    pub coeffs: Vec<f64>,
    /// Radius of validity; infinite for polynomials.
    pub r0: f64,
}

/// Outcome of a scalar flow.
#[derive(Debug, Clone, PartialEq)]
pub enum Flow {
    Finite(f64),
    BlowUp {
        /// Separable-integral estimate of the blow-up time.
        theta: f64,
        /// Time at which the integrator's step size collapsed.
        collapse: f64,
        warning: Option<String>,
    },
}

impl Flow {
    pub fn value(&self) -> Option<f64> {
        match self {
            Flow::Finite(v) => Some(*v),
            Flow::BlowUp { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleReport {
    pub t: f64,
    pub kappa: f64,
    pub r0: f64,
    pub e_tx_kappa: Option<f64>,
    pub ok: bool,
    pub margin: f64,
    pub witness: Option<f64>,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ComplexFlowReport {
    pub value: Complex64,
    pub bound: f64,
    pub ok: bool,
}

pub(crate) trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(&self) -> f64;
}

impl OdeState for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl OdeState for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Dormand–Prince 5(4) on s ∈ [0, span]; Err(s) when the solution escapes or the step collapses.
pub(crate) fn dopri5<S: OdeState, F: Fn(S) -> S>(f: F, y0: S, span: f64, rtol: f64) -> std::result::Result<S, f64> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    if span == 0.0 {
        return Ok(y0);
    }
    let mut s = 0.0;
    let mut y = y0;
    let mut h = (span * 1e-3).min(1e-2).max(span * 1e-9);
    let mut k1 = f(y);
    let escape = 1e15 * (1.0 + y0.magnitude());
    while s < span {
        if s + h > span {
            h = span - s;
        }
        let mut k = [k1; 7];
        for st in 0..6 {
            let mut acc = y;
            for j in 0..=st {
                if A[st][j] != 0.0 {
                    acc = acc + k[j] * (h * A[st][j]);
                }
            }
            k[st + 1] = f(acc);
        }
        // last stage is evaluated at the 5th-order solution (FSAL)
        let mut y5 = y;
        for j in 0..6 {
            if A[5][j] != 0.0 {
                y5 = y5 + k[j] * (h * A[5][j]);
            }
        }
        let mut err = k[0] * (h * E[0]);
        for j in 1..7 {
            if E[j] != 0.0 {
                err = err + k[j] * (h * E[j]);
            }
        }
        let scale = 1e-300 + rtol * y.magnitude().max(y5.magnitude()).max(1e-12);
        let ratio = err.magnitude() / scale;
        if !ratio.is_finite() || !y5.magnitude().is_finite() {
            h *= 0.2;
        } else if ratio <= 1.0 {
            s += h;
            y = y5;
            k1 = k[6];
            if y.magnitude() > escape {
                return Err(s);
            }
            h *= (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h *= (0.9 * ratio.powf(-0.2)).clamp(0.2, 1.0);
        }
        if h < 1e-14 * span.max(1e-300) {
            return Err(s);
        }
    }
    Ok(y)
}

pub fn poly_eval(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

fn poly_eval_c(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_derivative(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

impl MajorantSeries {
    pub fn new(coeffs: Vec<f64>, r0: f64) -> Result<Self> {
        if coeffs.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument("majorant coefficients must be finite and nonnegative".into()));
        }
        if !(r0 > 0.0) {
            return Err(Error::InvalidArgument("radius of validity must be positive".into()));
        }
        Ok(MajorantSeries { coeffs, r0 })
    }

    /// a z^q.
    pub fn monomial(a: f64, q: usize) -> Result<Self> {
        let mut c = vec![0.0; q + 1];
        c[q] = a;
        Self::new(c, f64::INFINITY)
    }

    pub fn eval(&self, z: f64) -> f64 {
        poly_eval(&self.coeffs, z)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        poly_eval_c(&self.coeffs, z)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        poly_eval(&poly_derivative(&self.coeffs), z)
    }

    fn top_degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.top_degree().is_none()
    }

    /// e^{tX}(r) for t ≥ 0, e^{−|t|X}(r) for t < 0.
    pub fn flow(&self, t: f64, r: f64) -> Flow {
        if self.is_zero() || t == 0.0 {
            return Flow::Finite(r);
        }
        let sign = t.signum();
        match dopri5(|g: f64| sign * self.eval(g), r, t.abs(), 1e-13) {
            Ok(v) => Flow::Finite(v),
            Err(collapse) => {
                let theta = if sign > 0.0 { self.blowup_time(r) } else { f64::INFINITY };
                let warning = if theta.is_finite() && ((collapse - theta) / theta).abs() <= 0.05 {
                    None
                } else {
                    Some(format!("step collapse at {collapse:.6e} vs separable estimate {theta:.6e}"))
                };
                Flow::BlowUp { theta, collapse, warning }
            }
        }
    }

    /// θ(r) = ∫_r^∞ dz/X(z): maximal existence time of the forward flow.
    pub fn blowup_time(&self, r: f64) -> f64 {
        let Some(d) = self.top_degree() else { return f64::INFINITY };
        if d <= 1 || (r <= 0.0 && self.coeffs[0] == 0.0) {
            return f64::INFINITY;
        }
        let head = if r < 1.0 {
            integrate_adaptive(|z| 1.0 / self.eval(z), r, 1.0, 1e-14).0
        } else {
            0.0
        };
        let base = r.max(1.0);
        // z = base/u, scaled by u^d so the integrand is regular at u = 0
        let c = &self.coeffs;
        let tail = integrate_adaptive(
            |u: f64| {
                let mut den = 0.0;
                for (k, &a) in c.iter().enumerate().take(d + 1) {
                    den += a * base.powi(k as i32) * u.powi((d - k) as i32);
                }
                base * u.powi(d as i32 - 2) / den
            },
            0.0,
            1.0,
            1e-14,
        )
        .0;
        head + tail
    }

    /// Checks e^{tX}(κ) < r0 and returns a witness radius.
    pub fn admissible(&self, t: f64, kappa: f64, r0: f64) -> AdmissibleReport {
        let theta = self.blowup_time(kappa);
        let e = self.flow(t.abs(), kappa).value();
        let (ok, margin, witness) = match e {
            Some(v) if v.is_finite() && v < r0 => {
                let margin = r0 - v;
                let w = if margin.is_finite() { v + 0.5 * margin } else { v + 1.0 };
                (true, margin, Some(w))
            }
            Some(v) => (false, r0 - v, None),
            None => (false, f64::NEG_INFINITY, None),
        };
        AdmissibleReport { t, kappa, r0, e_tx_kappa: e, ok, margin, witness, theta }
    }

    /// X·h = X h′ as coefficients.
    pub fn apply_to_poly(&self, h: &[f64]) -> Vec<f64> {
        poly_mul(&self.coeffs, &poly_derivative(h))
    }

    /// |h(r) − Σ_{k<K} t^k/k! (X^k·h)(e^{−tX}(r))|.
    pub fn taylor_flow_residual(&self, h: &[f64], t: f64, r: f64, kterms: usize) -> Result<f64> {
        let gamma = self
            .flow(-t, r)
            .value()
            .ok_or_else(|| Error::InvalidArgument("backward flow does not exist".into()))?;
        let mut term = h.to_vec();
        let mut sum = 0.0;
        let mut w = 1.0;
        for k in 0..kterms {
            if k > 0 {
                term = self.apply_to_poly(&term);
                w *= t / k as f64;
            }
            sum += w * poly_eval(&term, gamma);
        }
        Ok((poly_eval(h, r) - sum).abs())
    }

    /// e^{τX}(z) along the ray s ↦ sτ, compared with e^{|τ|X}(|z|).
    pub fn complex_flow_bound(&self, tau: Complex64, z: Complex64) -> Result<ComplexFlowReport> {
        let bound = self
            .flow(tau.norm(), z.norm())
            .value()
            .ok_or_else(|| Error::InvalidArgument("majorant flow blows up before |τ|".into()))?;
        let value = dopri5(|g: Complex64| tau * self.eval_complex(g), z, 1.0, 1e-13)
            .map_err(|s| Error::NonFinite(format!("complex flow escaped at s = {s}")))?;
        Ok(ComplexFlowReport { value, bound, ok: value.norm() <= bound + 1e-9 })
    }
}

/// Coefficient-wise bound ⟦V_q⟧ ≤ Σ_m |λ c_m| (2^s I)^{q−1} max(1, 1/m)^{#u-slots}.
pub fn majorant_of(v: &NonlinearitySpec, grid: &SpectralGrid, choice: SobolevChoice) -> Result<MajorantSeries> {
    v.validate(grid.n)?;
    let s = grid.s;
    let i_const = match choice {
        SobolevChoice::ModeSum => grid.mode_sum_constant(s),
        SobolevChoice::Continuum => sobolev_constant(grid.n, grid.m, s)?.value,
    };
    let alg = 2f64.powf(s) * i_const;
    let mass_factor = (1.0 / grid.m).max(1.0);
    let mut coeffs = vec![0.0; v.max_degree() + 1];
    for m in &v.monomials {
        let q = m.degree();
        let u_slots = m.slots(grid.n).iter().filter(|&&sl| sl == Slot::U).count();
        coeffs[q] += (v.lambda * m.coefficient).abs() * alg.powi(q as i32 - 1) * mass_factor.powi(u_slots as i32);
    }
    MajorantSeries::new(coeffs, f64::INFINITY)
}
