use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::multiset::Multisets;
use crate::error::{Error, Result};
use crate::propagator::LinearSolution;
use crate::spectral::{CauchyPair, SpectralField, SpectralGrid};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Const,
    Cos,
    Sin,
}

/// An L²-normalized real spatial mode.
#[derive(Debug, Clone, Serialize)]
pub struct RealMode {
    pub k: [i32; 2],
    pub kind: ModeKind,
    pub epsilon: f64,
}

/// A field with few nonzero Fourier coefficients.
pub type Sparse = Vec<([i32; 2], C64)>;

/// Orthonormal basis of the grid's free solutions in the ℰ^{s+1} inner product.
///
/// Element 2r is the solution with data (e_r/ε^{s+1}, 0) at time 0 and
/// element 2r+1 the one with data (0, e_r/ε^s).
#[derive(Debug)]
pub struct ModeBasis {
    pub grid: SpectralGrid,
    pub modes: Vec<RealMode>,
    pub multisets: Multisets,
    lookup: HashMap<[i32; 2], Vec<usize>>,
}

/// Largest kernel degree supported by the rank tables.
pub const MAX_DEGREE: usize = 8;

fn upper_half(k: [i32; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

impl ModeBasis {
    pub fn new(grid: SpectralGrid) -> Arc<Self> {
        let mut modes = Vec::new();
        for i in 0..grid.len() {
            let k = grid.wavenumber(i);
            if !grid.in_band(k) {
                continue;
            }
            let epsilon = grid.epsilon(i);
            if k == [0, 0] {
                modes.push(RealMode { k, kind: ModeKind::Const, epsilon });
            } else if upper_half(k) {
                modes.push(RealMode { k, kind: ModeKind::Cos, epsilon });
                modes.push(RealMode { k, kind: ModeKind::Sin, epsilon });
            }
        }
        modes.sort_by(|a, b| {
            a.epsilon
                .partial_cmp(&b.epsilon)
                .expect("finite")
                .then(a.k.cmp(&b.k))
                .then((a.kind as u8).cmp(&(b.kind as u8)))
        });
        let mut lookup: HashMap<[i32; 2], Vec<usize>> = HashMap::new();
        for (r, m) in modes.iter().enumerate() {
            lookup.entry(m.k).or_default().push(r);
            if m.k != [0, 0] {
                lookup.entry([-m.k[0], -m.k[1]]).or_default().push(r);
            }
        }
        let multisets = Multisets::new(2 * modes.len(), MAX_DEGREE);
        Arc::new(ModeBasis { grid, modes, multisets, lookup })
    }

    /// K, the number of real coordinates.
    pub fn dim(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn s(&self) -> f64 {
        self.grid.s
    }

    /// Fourier coefficients of the normalized real mode r.
    pub fn mode_coeffs(&self, r: usize) -> Sparse {
        let m = &self.modes[r];
        let vol = self.grid.volume();
        match m.kind {
            ModeKind::Const => vec![([0, 0], C64::new(vol.powf(-0.5), 0.0))],
            ModeKind::Cos => {
                let a = 0.5 * (2.0 / vol).sqrt();
                vec![(m.k, C64::new(a, 0.0)), ([-m.k[0], -m.k[1]], C64::new(a, 0.0))]
            }
            ModeKind::Sin => {
                let a = 0.5 * (2.0 / vol).sqrt();
                vec![(m.k, C64::new(0.0, -a)), ([-m.k[0], -m.k[1]], C64::new(0.0, a))]
            }
        }
    }

    /// Scalars (p, v) with element x's time-t slices equal to (p·e_r, v·e_r).
    pub fn slice_factors(&self, x: usize, t: f64) -> (f64, f64) {
        let e = self.modes[x / 2].epsilon;
        let s = self.grid.s;
        let (sn, cs) = (e * t).sin_cos();
        if x.is_multiple_of(2) {
            let n = e.powf(-(s + 1.0));
            (cs * n, -e * sn * n)
        } else {
            let n = e.powf(-s);
            (sn / e * n, cs * n)
        }
    }

    /// ⟨v, e_r⟩_{L²} for a dense field.
    pub fn mode_inner(&self, v: &SpectralField, r: usize) -> f64 {
        let vol = self.grid.volume();
        self.mode_coeffs(r)
            .iter()
            .map(|(k, c)| {
                let i = self.grid.index_of(*k).expect("mode in band");
                (v.coeffs[i] * c.conj()).re
            })
            .sum::<f64>()
            * vol
    }

    /// ⟨v, e_r⟩_{L²} for every mode r touched by a sparse field.
    pub fn sparse_mode_inners(&self, v: &Sparse) -> Vec<(usize, f64)> {
        let vol = self.grid.volume();
        let mut touched: Vec<usize> = Vec::new();
        for (k, c) in v {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            if let Some(rs) = self.lookup.get(k) {
                touched.extend(rs.iter().copied());
            }
        }
        touched.sort_unstable();
        touched.dedup();
        touched
            .into_iter()
            .map(|r| {
                let val: f64 = self
                    .mode_coeffs(r)
                    .iter()
                    .map(|(k, e)| {
                        v.iter().filter(|(kk, _)| kk == k).map(|(_, c)| (c * e.conj()).re).sum::<f64>()
                    })
                    .sum();
                (r, val * vol)
            })
            .collect()
    }

    /// Coordinates of a free solution.
    pub fn coords_of(&self, sol: &LinearSolution) -> Result<Vec<f64>> {
        self.grid.check_same(&sol.grid())?;
        let s = self.grid.s;
        let mut out = vec![0.0; self.dim()];
        for r in 0..self.modes.len() {
            let e = self.modes[r].epsilon;
            out[2 * r] = e.powf(s + 1.0) * self.mode_inner(&sol.data0.u0, r);
            out[2 * r + 1] = e.powf(s) * self.mode_inner(&sol.data0.u1, r);
        }
        Ok(out)
    }

    /// Free solution with the given coordinates.
    pub fn solution(&self, coords: &[f64]) -> Result<LinearSolution> {
        if coords.len() != self.dim() {
            return Err(Error::BasisMismatch);
        }
        let g = self.grid;
        let s = g.s;
        let mut d = CauchyPair::zeros(g);
        for r in 0..self.modes.len() {
            let e = self.modes[r].epsilon;
            let a = coords[2 * r] * e.powf(-(s + 1.0));
            let b = coords[2 * r + 1] * e.powf(-s);
            for (k, c) in self.mode_coeffs(r) {
                let i = g.index_of(k).expect("mode in band");
                d.u0.coeffs[i] += c * a;
                d.u1.coeffs[i] += c * b;
            }
        }
        Ok(LinearSolution::new(d))
    }

    pub fn element(&self, x: usize) -> LinearSolution {
        let mut c = vec![0.0; self.dim()];
        c[x] = 1.0;
        self.solution(&c).expect("own dimension")
    }

    /// Coordinates of v♯ₜG (the free solution with data (0, −v) at time t).
    pub fn sharp_coords(&self, v: &Sparse, t: f64, out: &mut Vec<(usize, f64)>) {
        let s = self.grid.s;
        for (r, ip) in self.sparse_mode_inners(v) {
            let e = self.modes[r].epsilon;
            let (sn, cs) = (e * t).sin_cos();
            let w = e.powf(s);
            let a = w * sn * ip;
            let b = -w * cs * ip;
            if a != 0.0 {
                out.push((2 * r, a));
            }
            if b != 0.0 {
                out.push((2 * r + 1, b));
            }
        }
    }

    /// Linear functional φ ↦ ∫ φ(t,·) w (when `velocity` is false) or ∫ ∂ₜφ(t,·) w.
    pub fn smearing_covector(&self, w: &SpectralField, t: f64, velocity: bool) -> Result<Vec<f64>> {
        self.grid.check_same(&w.grid)?;
        let mut out = vec![0.0; self.dim()];
        for x in 0..self.dim() {
            let (p, v) = self.slice_factors(x, t);
            let f = if velocity { v } else { p };
            out[x] = f * self.mode_inner(w, x / 2);
        }
        Ok(out)
    }

    /// Same grid and dimension.
    pub fn compatible(&self, other: &ModeBasis) -> bool {
        self.grid == other.grid && self.dim() == other.dim()
    }
}

/// Full product of sparse fields, truncated to the band (and the 2/3 band if asked).
pub fn sparse_product(grid: &SpectralGrid, factors: &[Sparse], dealias: bool) -> Sparse {
    let keep = |k: [i32; 2]| if dealias { grid.in_dealiased_band(k) } else { grid.in_band(k) };
    let mut acc: Sparse = vec![([0, 0], C64::new(1.0, 0.0))];
    for f in factors {
        let mut next: Sparse = Vec::with_capacity(acc.len() * f.len());
        for (ka, ca) in &acc {
            for (kb, cb) in f {
                if dealias && !grid.in_dealiased_band(*kb) {
                    continue;
                }
                let k = [ka[0] + kb[0], ka[1] + kb[1]];
                let c = ca * cb;
                match next.iter_mut().find(|(kk, _)| *kk == k) {
                    Some(slot) => slot.1 += c,
                    None => next.push((k, c)),
                }
            }
        }
        acc = next;
    }
    acc.retain(|(k, c)| keep(*k) && *c != C64::new(0.0, 0.0));
    acc
}
