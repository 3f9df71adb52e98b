use super::NonlinearitySpec;
use crate::error::{Error, Result};
use crate::propagator::evolve_linear;
use crate::spectral::{product_many, CauchyPair, SpectralField};

/// Per-order paths u₀, u₁, … of u = Σ λ^k u_k on a common uniform time grid.
#[derive(Debug, Clone)]
pub struct PerturbativePaths {
    pub times: Vec<f64>,
    /// `orders[k][i]` is [u_k] at `times[i]`.
    pub orders: Vec<Vec<CauchyPair>>,
    pub lambda: f64,
}

impl PerturbativePaths {
    /// Σ_{k ≤ K} λ^k [u_k] at sample `i`.
    pub fn resummed(&self, i: usize, upto: usize) -> CauchyPair {
        let mut out = self.orders[0][i].clone();
        let mut lk = 1.0;
        for k in 1..=upto.min(self.orders.len() - 1) {
            lk *= self.lambda;
            out.axpy(lk, &self.orders[k][i]);
        }
        out
    }
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Coefficient of λ^{k-1} in V(Σ λ^j u_j)/λ at one time sample.
fn source(v: &NonlinearitySpec, states: &[&CauchyPair], k: usize, dealias: bool) -> Result<SpectralField> {
    let grid = states[0].grid();
    let mut out = SpectralField::zeros(grid);
    for m in &v.monomials {
        let slots = m.slots(grid.n);
        for comp in compositions(k - 1, slots.len()) {
            let fields: Vec<SpectralField> =
                slots.iter().zip(&comp).map(|(s, &j)| s.field(states[j])).collect();
            let refs: Vec<&SpectralField> = fields.iter().collect();
            out.axpy(m.coefficient, &product_many(&refs, dealias)?);
        }
    }
    Ok(out)
}

/// Order-by-order Duhamel recursion from data `d_start` over signed `duration`.
///
/// u₀ is the free solution; u_k (k ≥ 1) starts from zero data and is driven by
/// the lower orders. The Duhamel integral uses the trapezoidal rule in the
/// interaction picture, so errors expand in even powers of the step and
/// Richardson extrapolation applies.
pub fn perturbative(
    d_start: &CauchyPair,
    v: &NonlinearitySpec,
    duration: f64,
    orders: usize,
    steps: usize,
    dealias: bool,
) -> Result<PerturbativePaths> {
    if steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    v.validate(d_start.grid().n)?;
    let grid = d_start.grid();
    let h = duration / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
    let mut all: Vec<Vec<CauchyPair>> = Vec::with_capacity(orders + 1);
    all.push(times.iter().map(|&t| evolve_linear(d_start, t)).collect());
    for k in 1..=orders {
        // pulled-back forces R(−τ)(0, −S_k(τ))
        let mut forces = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let slice: Vec<&CauchyPair> = all.iter().map(|o| &o[i]).collect();
            let s = source(v, &slice, k, dealias)?.scale(-1.0);
            forces.push(evolve_linear(&CauchyPair { u0: SpectralField::zeros(grid), u1: s }, -t));
        }
        let mut w = CauchyPair::zeros(grid);
        let mut path = vec![w.clone()];
        for i in 0..steps {
            w.axpy(0.5 * h, &forces[i]);
            w.axpy(0.5 * h, &forces[i + 1]);
            path.push(evolve_linear(&w, times[i + 1]));
        }
        all.push(path);
    }
    Ok(PerturbativePaths { times, orders: all, lambda: v.lambda })
}
