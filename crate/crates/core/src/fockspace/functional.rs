use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::basis::ModeBasis;
use super::multiset::multiplicity;
use crate::error::{Error, Result};

/// How ⟦f_p⟧ is computed for p ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Exact for p ≤ 2, Frobenius upper bound above.
    Upper,
    /// Exact for p ≤ 2; fails for p ≥ 3 kernels that are nonzero.
    Exact,
    /// Largest |f_p(x)| found over random unit starts and power iterates.
    SampledLower { restarts: usize, iterations: usize, seed: u64 },
}

impl NormMode {
    pub fn sampled() -> Self {
        NormMode::SampledLower { restarts: 1000, iterations: 200, seed: 7 }
    }
}

/// What was actually used for a norm value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormTag {
    Exact,
    Upper,
    SampledLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub tag: NormTag,
}

/// Degree-capped polynomial functional Σ_p f_p(φ^{⊗p}).
///
/// Kernels are stored as monomial coefficients over sorted multisets of basis
/// indices; the symmetric tensor entry is coefficient / multiplicity.
#[derive(Debug, Clone)]
pub struct PolyFunctional {
    pub basis: Arc<ModeBasis>,
    pub cap: usize,
    pub kernels: Vec<Vec<f64>>,
}

/// Result of an operation that may push terms above the degree cap.
#[derive(Debug, Clone)]
pub struct Capped {
    pub functional: PolyFunctional,
    /// Input degrees whose image landed above the cap.
    pub dropped_levels: usize,
    /// Upper bound on Σ ⟦·⟧ of the dropped kernels.
    pub dropped_mass: f64,
}

impl PolyFunctional {
    pub fn zero(basis: &Arc<ModeBasis>, cap: usize) -> Result<Self> {
        if cap > basis.multisets.max_degree() {
            return Err(Error::InvalidArgument(format!(
                "degree cap {cap} above supported {}",
                basis.multisets.max_degree()
            )));
        }
        let kernels = (0..=cap).map(|p| vec![0.0; basis.multisets.count(p)]).collect();
        Ok(PolyFunctional { basis: basis.clone(), cap, kernels })
    }

    /// |0⟩: the constant functional 1.
    pub fn vacuum(basis: &Arc<ModeBasis>, cap: usize) -> Result<Self> {
        let mut f = Self::zero(basis, cap)?;
        f.kernels[0][0] = 1.0;
        Ok(f)
    }

    pub fn linear(basis: &Arc<ModeBasis>, a: &[f64], cap: usize) -> Result<Self> {
        Self::pure_power(basis, a, 1, cap)
    }

    /// ⟨a,·⟩^p.
    pub fn pure_power(basis: &Arc<ModeBasis>, a: &[f64], p: usize, cap: usize) -> Result<Self> {
        if a.len() != basis.dim() {
            return Err(Error::BasisMismatch);
        }
        if p > cap {
            return Err(Error::InvalidArgument(format!("degree {p} above cap {cap}")));
        }
        let mut f = Self::zero(basis, cap)?;
        let ms = &basis.multisets;
        let mut s = ms.first(p);
        let mut r = 0;
        loop {
            let prod: f64 = s.iter().map(|&i| a[i]).product();
            f.kernels[p][r] = multiplicity(&s) * prod;
            r += 1;
            if !ms.advance(&mut s) {
                break;
            }
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn check_basis(&self, other: &PolyFunctional) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis.compatible(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// Symmetric tensor entry c_p[i₁,…,i_p] for any index order.
    pub fn entry(&self, indices: &[usize]) -> f64 {
        let p = indices.len();
        if p > self.cap {
            return 0.0;
        }
        let mut s = indices.to_vec();
        s.sort_unstable();
        self.kernels[p][self.basis.multisets.rank(&s)] / multiplicity(&s)
    }

    /// f_p(φ^{⊗p}) for one degree.
    pub fn evaluate_degree(&self, p: usize, phi: &[f64]) -> f64 {
        let ms = &self.basis.multisets;
        let ker = &self.kernels[p];
        if p == 0 {
            return ker[0];
        }
        let mut s = ms.first(p);
        let mut acc = 0.0;
        let mut r = 0;
        loop {
            let c = ker[r];
            if c != 0.0 {
                let mut prod = c;
                for &i in &s {
                    prod *= phi[i];
                }
                acc += prod;
            }
            r += 1;
            if !ms.advance(&mut s) {
                break;
            }
        }
        acc
    }

    pub fn evaluate(&self, phi: &[f64]) -> Result<f64> {
        if phi.len() != self.dim() {
            return Err(Error::BasisMismatch);
        }
        Ok((0..=self.cap).map(|p| self.evaluate_degree(p, phi)).sum())
    }

    pub fn scale(&self, a: f64) -> PolyFunctional {
        let mut out = self.clone();
        for k in &mut out.kernels {
            for c in k.iter_mut() {
                *c *= a;
            }
        }
        out
    }

    pub fn axpy(&mut self, a: f64, x: &PolyFunctional) -> Result<()> {
        self.check_basis(x)?;
        for p in 0..=self.cap.min(x.cap) {
            for (c, d) in self.kernels[p].iter_mut().zip(&x.kernels[p]) {
                *c += a * d;
            }
        }
        Ok(())
    }

    pub fn add(&self, x: &PolyFunctional) -> Result<PolyFunctional> {
        let mut out = self.clone();
        out.axpy(1.0, x)?;
        Ok(out)
    }

    pub fn sub(&self, x: &PolyFunctional) -> Result<PolyFunctional> {
        let mut out = self.clone();
        out.axpy(-1.0, x)?;
        Ok(out)
    }

    /// Degrees with a nonzero kernel.
    pub fn support(&self) -> Vec<usize> {
        (0..=self.cap).filter(|&p| self.kernels[p].iter().any(|&c| c != 0.0)).collect()
    }

    /// Largest |coefficient| difference (all degrees).
    pub fn max_abs_diff(&self, other: &PolyFunctional) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..=self.cap.max(other.cap) {
            let a = self.kernels.get(p);
            let b = other.kernels.get(p);
            let len = a.map_or(0, |v| v.len()).max(b.map_or(0, |v| v.len()));
            for i in 0..len {
                let x = a.and_then(|v| v.get(i)).copied().unwrap_or(0.0);
                let y = b.and_then(|v| v.get(i)).copied().unwrap_or(0.0);
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }

    /// Frobenius norm of the symmetric tensor c_p.
    pub fn frobenius(&self, p: usize) -> f64 {
        let ms = &self.basis.multisets;
        let mut s = ms.first(p);
        let mut acc = 0.0;
        let mut r = 0;
        loop {
            let c = self.kernels[p][r];
            if c != 0.0 {
                acc += c * c / multiplicity(&s);
            }
            r += 1;
            if !ms.advance(&mut s) {
                break;
            }
        }
        acc.sqrt()
    }

    fn matrix(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| self.entry(&[i, j]))
    }

    /// ⟦f_p⟧ in the requested mode.
    pub fn kernel_norm(&self, p: usize, mode: NormMode) -> Result<NormValue> {
        if p > self.cap {
            return Ok(NormValue { value: 0.0, tag: NormTag::Exact });
        }
        let ker = &self.kernels[p];
        if ker.iter().all(|&c| c == 0.0) {
            return Ok(NormValue { value: 0.0, tag: NormTag::Exact });
        }
        if let NormMode::SampledLower { restarts, iterations, seed } = mode {
            if p >= 1 {
                let v = self.sampled_lower(p, restarts, iterations, seed);
                return Ok(NormValue { value: v, tag: NormTag::SampledLower });
            }
        }
        match p {
            0 => Ok(NormValue { value: ker[0].abs(), tag: NormTag::Exact }),
            1 => Ok(NormValue { value: ker.iter().map(|c| c * c).sum::<f64>().sqrt(), tag: NormTag::Exact }),
            2 => {
                let eig = SymmetricEigen::new(self.matrix());
                let v = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                Ok(NormValue { value: v, tag: NormTag::Exact })
            }
            _ => match mode {
                NormMode::Exact => Err(Error::InvalidArgument(format!(
                    "no exact injective norm for degree {p}"
                ))),
                _ => Ok(NormValue { value: self.frobenius(p), tag: NormTag::Upper }),
            },
        }
    }

    /// Gradient of f_p at x: ∂_i Σ_S c_S x^S.
    pub fn gradient_degree(&self, p: usize, x: &[f64]) -> Vec<f64> {
        let ms = &self.basis.multisets;
        let mut g = vec![0.0; self.dim()];
        if p == 0 {
            return g;
        }
        let mut s = ms.first(p);
        let mut r = 0;
        loop {
            let c = self.kernels[p][r];
            if c != 0.0 {
                let mut j = 0;
                while j < p {
                    let i = s[j];
                    let mut mu = 1;
                    while j + mu < p && s[j + mu] == i {
                        mu += 1;
                    }
                    let mut prod = c * mu as f64;
                    let mut skipped = false;
                    for (pos, &l) in s.iter().enumerate() {
                        if l == i && !skipped && pos >= j {
                            skipped = true;
                            continue;
                        }
                        prod *= x[l];
                    }
                    g[i] += prod;
                    j += mu;
                }
            }
            r += 1;
            if !ms.advance(&mut s) {
                break;
            }
        }
        g
    }

    fn sampled_lower(&self, p: usize, restarts: usize, iterations: usize, seed: u64) -> f64 {
        let k = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: f64 = 0.0;
        for _ in 0..restarts.max(1) {
            let mut x: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            normalize(&mut x);
            let mut prev = f64::NAN;
            for _ in 0..iterations.max(1) {
                let val = self.evaluate_degree(p, &x);
                best = best.max(val.abs());
                if (val - prev).abs() <= 1e-15 * val.abs().max(1e-300) {
                    break;
                }
                prev = val;
                let mut g = self.gradient_degree(p, &x);
                if val < 0.0 {
                    g.iter_mut().for_each(|c| *c = -*c);
                }
                if normalize(&mut g) == 0.0 {
                    break;
                }
                x = g;
            }
        }
        best
    }

    /// N_r(f) = Σ_p ⟦f_p⟧ r^p; the tag is the weakest mode used.
    pub fn norm_nr(&self, r: f64, mode: NormMode) -> Result<NormValue> {
        self.norm_nr_derivative(r, 0, mode)
    }

    /// N_r^{(k)}(f) = Σ_p p(p−1)…(p−k+1) ⟦f_p⟧ r^{p−k}.
    pub fn norm_nr_derivative(&self, r: f64, k: usize, mode: NormMode) -> Result<NormValue> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("radius {r} must be nonnegative")));
        }
        let mut total = 0.0;
        let mut tag = NormTag::Exact;
        for p in k..=self.cap {
            let nv = self.kernel_norm(p, mode)?;
            if nv.value == 0.0 {
                continue;
            }
            if nv.tag != NormTag::Exact {
                tag = nv.tag;
            }
            let falling: f64 = (0..k).map(|j| (p - j) as f64).product();
            total += falling * nv.value * r.powi((p - k) as i32);
        }
        Ok(NormValue { value: total, tag })
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|c| *c /= n);
    }
    n
}
