use serde::{Deserialize, Serialize};

use super::basis::ModeBasis;
use super::functional::{Capped, PolyFunctional};
use super::multiset::{factorial, multiplicity};
use crate::error::{Error, Result};
use crate::propagator::sharp_lr;
use crate::spectral::{CauchyPair, SpectralField};

/// A linear form on functionals: f ↦ f(0) or f ↦ f(point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "point")]
pub enum CoVector {
    Vacuum,
    Evaluation(Vec<f64>),
}

impl CoVector {
    /// ⟨[u]_t|: evaluation at the coordinates of u↔♯ₜG.
    pub fn state(basis: &ModeBasis, d: &CauchyPair, t: f64) -> Result<CoVector> {
        Ok(CoVector::Evaluation(basis.coords_of(&sharp_lr(d, t))?))
    }

    pub fn pair(&self, f: &PolyFunctional) -> Result<f64> {
        match self {
            CoVector::Vacuum => Ok(f.kernels[0][0]),
            CoVector::Evaluation(x) => f.evaluate(x),
        }
    }
}

impl PolyFunctional {
    /// δf/δψ: contraction of every kernel with ψ in one slot.
    pub fn derivative_along(&self, psi: &[f64]) -> Result<PolyFunctional> {
        if psi.len() != self.dim() {
            return Err(Error::BasisMismatch);
        }
        let ms = &self.basis.multisets;
        let mut out = PolyFunctional::zero(&self.basis, self.cap)?;
        let mut rest = Vec::with_capacity(self.cap);
        for p in 1..=self.cap {
            let ker = &self.kernels[p];
            let mut s = ms.first(p);
            let mut r = 0;
            loop {
                let c = ker[r];
                if c != 0.0 {
                    let mut j = 0;
                    while j < p {
                        let i = s[j];
                        let mut mu = 1;
                        while j + mu < p && s[j + mu] == i {
                            mu += 1;
                        }
                        rest.clear();
                        rest.extend_from_slice(&s[..j]);
                        rest.extend_from_slice(&s[j + 1..]);
                        out.kernels[p - 1][ms.rank(&rest)] += mu as f64 * psi[i] * c;
                        j += mu;
                    }
                }
                r += 1;
                if !ms.advance(&mut s) {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// f · ⟨ℓ,·⟩, dropping the part above the cap.
    pub fn multiply_linear(&self, l: &[f64]) -> Result<Capped> {
        if l.len() != self.dim() {
            return Err(Error::BasisMismatch);
        }
        let ms = &self.basis.multisets;
        let mut out = PolyFunctional::zero(&self.basis, self.cap)?;
        let mut grown = Vec::with_capacity(self.cap + 1);
        for p in 0..self.cap {
            let ker = &self.kernels[p];
            let mut s = ms.first(p);
            let mut r = 0;
            loop {
                let c = ker[r];
                if c != 0.0 {
                    for (i, &li) in l.iter().enumerate() {
                        if li == 0.0 {
                            continue;
                        }
                        grown.clear();
                        grown.extend_from_slice(&s);
                        let at = grown.partition_point(|&x| x <= i);
                        grown.insert(at, i);
                        out.kernels[p + 1][ms.rank(&grown)] += c * li;
                    }
                }
                r += 1;
                if !ms.advance(&mut s) {
                    break;
                }
            }
        }
        let top = self.frobenius(self.cap);
        let norm_l = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dropped = top > 0.0 && norm_l > 0.0;
        Ok(Capped {
            functional: out,
            dropped_levels: usize::from(dropped),
            dropped_mass: if dropped { top * norm_l } else { 0.0 },
        })
    }

    /// f · ∫ φ(t,·)φ₁.
    pub fn creation_smeared(&self, phi1: &SpectralField, t: f64) -> Result<Capped> {
        let l = self.basis.smearing_covector(phi1, t, false)?;
        self.multiply_linear(&l)
    }

    /// f · ∫ ∂ₜφ(t,·)φ₀.
    pub fn creation_smeared_dt(&self, phi0: &SpectralField, t: f64) -> Result<Capped> {
        let l = self.basis.smearing_covector(phi0, t, true)?;
        self.multiply_linear(&l)
    }

    /// f · ∫_t (φ ∂ₜw − ∂ₜφ w) for the test data w = (w₀, w₁) at time t.
    pub fn creation_pair(&self, w: &CauchyPair, t: f64) -> Result<Capped> {
        let mut l = self.basis.smearing_covector(&w.u1, t, false)?;
        let lv = self.basis.smearing_covector(&w.u0, t, true)?;
        for (a, b) in l.iter_mut().zip(&lv) {
            *a -= b;
        }
        self.multiply_linear(&l)
    }

    /// 𝕌(t)f = δf/δ(u↔♯ₜG).
    pub fn apply_u(&self, d: &CauchyPair, t: f64) -> Result<PolyFunctional> {
        let psi = self.basis.coords_of(&sharp_lr(d, t))?;
        self.derivative_along(&psi)
    }

    /// φ ↦ f(φ + ψ), as Σ_k (δ/δψ)^k f / k!.
    pub fn translate(&self, psi: &[f64]) -> Result<PolyFunctional> {
        let mut out = self.clone();
        let mut term = self.clone();
        for k in 1..=self.cap {
            term = term.derivative_along(psi)?;
            out.axpy(1.0 / factorial(k), &term)?;
        }
        Ok(out)
    }

    /// e^{𝕌(t)} f.
    pub fn exp_u(&self, d: &CauchyPair, t: f64) -> Result<PolyFunctional> {
        let psi = self.basis.coords_of(&sharp_lr(d, t))?;
        self.translate(&psi)
    }

    /// Dense symmetric kernel of degree p in lexicographic multi-index order.
    pub fn dense_kernel(&self, p: usize) -> Vec<f64> {
        let k = self.dim();
        let total = k.pow(p as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; p];
        let mut sorted = vec![0usize; p];
        for _ in 0..total {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let c = if p == 0 { self.kernels[0][0] } else { self.kernels[p][self.basis.multisets.rank(&sorted)] };
            out.push(c / multiplicity(&sorted));
            for pos in (0..p).rev() {
                idx[pos] += 1;
                if idx[pos] < k {
                    break;
                }
                idx[pos] = 0;
            }
        }
        out
    }
}
