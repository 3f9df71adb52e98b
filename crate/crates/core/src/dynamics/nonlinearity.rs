use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{product_many, CauchyPair, SpectralField, SpectralGrid};

/// One factor slot of a monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    U,
    Grad(usize),
    Dt,
}

impl Slot {
    /// Field this slot reads from Cauchy data.
    pub fn field(&self, d: &CauchyPair) -> SpectralField {
        match *self {
            Slot::U => d.u0.clone(),
            Slot::Grad(j) => d.u0.derivative(j),
            Slot::Dt => d.u1.clone(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Slot::U => "u".into(),
            Slot::Grad(j) => format!("d{}u", j + 1),
            Slot::Dt => "dtu".into(),
        }
    }
}

/// c · u^{p0} (∂₁u)^{p1} … (∂ₙu)^{pn} (∂ₜu)^{p_{n+1}}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> usize {
        self.powers.iter().map(|&p| p as usize).sum()
    }

    /// Slot list, grouped by type in the order u, ∂₁u, …, ∂ₜu.
    pub fn slots(&self, n: usize) -> Vec<Slot> {
        let mut out = Vec::new();
        for (i, &p) in self.powers.iter().enumerate() {
            let slot = if i == 0 {
                Slot::U
            } else if i <= n {
                Slot::Grad(i - 1)
            } else {
                Slot::Dt
            };
            for _ in 0..p {
                out.push(slot);
            }
        }
        out
    }
}

/// V = λ Σ c_m (monomial m), evaluated with Galerkin products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub monomials: Vec<Monomial>,
    pub lambda: f64,
}

impl NonlinearitySpec {
    pub fn zero() -> Self {
        NonlinearitySpec { monomials: Vec::new(), lambda: 0.0 }
    }

    /// λ u^q.
    pub fn power(lambda: f64, q: u32) -> Self {
        NonlinearitySpec {
            monomials: vec![Monomial { coefficient: 1.0, powers: vec![q] }],
            lambda,
        }
    }

    /// Checks V(0) = 0 and that powers fit the dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        for m in &self.monomials {
            if m.degree() == 0 {
                return Err(Error::ConstantMonomial);
            }
            if m.powers.len() > n + 2 {
                return Err(Error::InvalidArgument(format!(
                    "monomial has {} powers, at most {} allowed for n = {n}",
                    m.powers.len(),
                    n + 2
                )));
            }
            if !m.coefficient.is_finite() {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidArgument("non-finite coupling".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.lambda == 0.0 || self.monomials.iter().all(|m| m.coefficient == 0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Distinct monomial degrees present, ascending.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self
            .monomials
            .iter()
            .filter(|m| m.coefficient != 0.0)
            .map(Monomial::degree)
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn uses_time_derivative(&self, n: usize) -> bool {
        self.monomials.iter().any(|m| m.powers.get(n + 1).is_some_and(|&p| p > 0))
    }

    pub fn only_u(&self) -> bool {
        self.monomials.iter().all(|m| m.powers.iter().skip(1).all(|&p| p == 0))
    }

    /// V([u]) as a grid field.
    pub fn evaluate(&self, d: &CauchyPair, dealias: bool) -> Result<SpectralField> {
        let grid = d.grid();
        let mut out = SpectralField::zeros(grid);
        if self.lambda == 0.0 {
            return Ok(out);
        }
        for m in &self.monomials {
            if m.coefficient == 0.0 {
                continue;
            }
            let fields: Vec<SpectralField> = m.slots(grid.n).iter().map(|s| s.field(d)).collect();
            let refs: Vec<&SpectralField> = fields.iter().collect();
            let p = product_many(&refs, dealias)?;
            out.axpy(self.lambda * m.coefficient, &p);
        }
        Ok(out)
    }

    /// Monomial m applied to per-slot fields (no coupling, no coefficient).
    pub fn monomial_product(fields: &[SpectralField], dealias: bool) -> Result<SpectralField> {
        let refs: Vec<&SpectralField> = fields.iter().collect();
        product_many(&refs, dealias)
    }

    /// Potential energy ∫ P(u) with P' = V, for nonlinearities in u only.
    pub fn potential(&self, u: &SpectralField, dealias: bool) -> Result<f64> {
        if !self.only_u() {
            return Err(Error::InvalidArgument(
                "energy is only defined for nonlinearities in u alone".into(),
            ));
        }
        let grid: SpectralGrid = u.grid;
        let mut acc = 0.0;
        for m in &self.monomials {
            let q = m.degree();
            let copies: Vec<&SpectralField> = std::iter::repeat_n(u, q + 1).collect();
            let p = product_many(&copies, dealias)?;
            acc += m.coefficient * p.coeffs[0].re * grid.volume() / (q as f64 + 1.0);
        }
        Ok(self.lambda * acc)
    }
}
