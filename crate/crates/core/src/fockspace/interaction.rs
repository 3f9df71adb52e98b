use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{sparse_product, ModeBasis, Sparse};
use super::functional::{Capped, NormMode, PolyFunctional};
use super::multiset::merge_into;
use crate::dynamics::{NonlinearitySpec, Slot};
use crate::error::{Error, Result};
use crate::majorant::majorant_of;
use crate::spectral::SobolevChoice;

/// Polynomial coefficients of c ↦ coords(V([c]_t)♯ₜG) for one monomial degree q.
#[derive(Debug, Clone)]
pub struct DegreeTable {
    pub q: usize,
    /// `entries[rank(m)]` lists (i, b) with B^i(c) ∋ b·c^m.
    pub entries: Vec<Vec<(u32, f64)>>,
    /// Upper bound on ⟦V_q⟧.
    pub bound: f64,
}

/// The interaction vector field at one time, ready for contraction.
#[derive(Debug, Clone)]
pub struct InteractionTable {
    pub basis: Arc<ModeBasis>,
    pub t: f64,
    pub degrees: Vec<DegreeTable>,
}

fn slot_field(basis: &ModeBasis, x: usize, slot: Slot, t: f64) -> Sparse {
    let (p, v) = basis.slice_factors(x, t);
    let grid = &basis.grid;
    basis
        .mode_coeffs(x / 2)
        .into_iter()
        .map(|(k, c)| {
            let w = match slot {
                Slot::U => Complex64::new(p, 0.0),
                Slot::Grad(j) => Complex64::new(0.0, p * grid.xi_of(k)[j]),
                Slot::Dt => Complex64::new(v, 0.0),
            };
            (k, c * w)
        })
        .collect()
}

fn add_scaled(acc: &mut Sparse, x: &Sparse, a: f64) {
    for (k, c) in x {
        match acc.iter_mut().find(|(kk, _)| kk == k) {
            Some(slot) => slot.1 += c * a,
            None => acc.push((*k, c * a)),
        }
    }
}

/// Distinct orderings of a sorted multiset.
fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(sorted.len());
    let mut used = vec![false; sorted.len()];
    fn rec(s: &[usize], used: &mut [bool], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == s.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..s.len() {
            if used[i] || (i > 0 && s[i] == s[i - 1] && !used[i - 1]) {
                continue;
            }
            used[i] = true;
            cur.push(s[i]);
            rec(s, used, cur, out);
            cur.pop();
            used[i] = false;
        }
    }
    rec(sorted, &mut used, &mut cur, &mut out);
    out
}

impl InteractionTable {
    pub fn new(basis: &Arc<ModeBasis>, v: &NonlinearitySpec, t: f64, dealias: bool) -> Result<Self> {
        let grid = basis.grid;
        v.validate(grid.n)?;
        let ms = &basis.multisets;
        let k = basis.dim();
        let slots_all: Vec<Slot> = std::iter::once(Slot::U)
            .chain((0..grid.n).map(Slot::Grad))
            .chain(std::iter::once(Slot::Dt))
            .collect();
        // cache slot fields per (slot, element)
        let cache: Vec<Vec<Sparse>> = slots_all
            .iter()
            .map(|&sl| (0..k).map(|x| slot_field(basis, x, sl, t)).collect())
            .collect();
        let slot_pos = |sl: Slot| match sl {
            Slot::U => 0,
            Slot::Grad(j) => 1 + j,
            Slot::Dt => grid.n + 1,
        };
        let series = majorant_of(v, &grid, SobolevChoice::ModeSum)?;
        let mut degrees = Vec::new();
        for q in v.degrees() {
            if q > ms.max_degree() {
                return Err(Error::InvalidArgument(format!("monomial degree {q} too large")));
            }
            let monos: Vec<(f64, Vec<Slot>)> = v
                .monomials
                .iter()
                .filter(|m| m.degree() == q && m.coefficient != 0.0)
                .map(|m| (v.lambda * m.coefficient, m.slots(grid.n)))
                .collect();
            let mut entries = Vec::with_capacity(ms.count(q));
            let mut s = ms.first(q);
            let mut factors: Vec<Sparse> = Vec::with_capacity(q);
            loop {
                let perms = distinct_permutations(&s);
                let mut acc: Sparse = Vec::new();
                for (coef, slots) in &monos {
                    for perm in &perms {
                        factors.clear();
                        for (sl, &x) in slots.iter().zip(perm) {
                            factors.push(cache[slot_pos(*sl)][x].clone());
                        }
                        let prod = sparse_product(&grid, &factors, dealias);
                        add_scaled(&mut acc, &prod, *coef);
                    }
                }
                let mut list = Vec::new();
                basis.sharp_coords(&acc, t, &mut list);
                entries.push(list.into_iter().map(|(i, b)| (i as u32, b)).collect());
                if !ms.advance(&mut s) {
                    break;
                }
            }
            degrees.push(DegreeTable { q, entries, bound: series.coeffs.get(q).copied().unwrap_or(0.0) });
        }
        Ok(InteractionTable { basis: basis.clone(), t, degrees })
    }

    /// B(c): the vector field coords(V([c]_t)♯ₜG) at a point.
    pub fn field_at(&self, c: &[f64]) -> Vec<f64> {
        let ms = &self.basis.multisets;
        let mut out = vec![0.0; self.basis.dim()];
        for dt in &self.degrees {
            let mut s = ms.first(dt.q);
            let mut r = 0;
            loop {
                let mono: f64 = s.iter().map(|&i| c[i]).product();
                for &(i, b) in &dt.entries[r] {
                    out[i as usize] += b * mono;
                }
                r += 1;
                if !ms.advance(&mut s) {
                    break;
                }
            }
        }
        out
    }

    /// out += scale · (degree-`d_out` part of apply_D applied to `kernels`).
    pub fn apply_level(&self, kernels: &[Vec<f64>], d_out: usize, scale: f64, out: &mut [f64]) {
        for dt in &self.degrees {
            self.apply_level_q(dt, kernels, d_out, scale, out);
        }
    }

    /// Contribution of one monomial degree to output degree `d_out`.
    pub fn apply_level_q(&self, dt: &DegreeTable, kernels: &[Vec<f64>], d_out: usize, scale: f64, out: &mut [f64]) {
        if d_out + 1 < dt.q + 1 {
            return;
        }
        let p = d_out + 1 - dt.q;
        let Some(fp) = kernels.get(p) else { return };
        if fp.iter().all(|&c| c == 0.0) {
            return;
        }
        let ms = &self.basis.multisets;
        let k = self.basis.dim();
        let mut g = vec![0.0; k];
        let mut with_i = vec![0usize; p];
        let mut merged = vec![0usize; d_out];
        let mut rest = ms.first(p - 1);
        loop {
            // g_i: coefficient of c^rest in ∂_i f_p
            let mut any = false;
            for (i, gi) in g.iter_mut().enumerate() {
                let at = rest.partition_point(|&x| x < i);
                let mu = rest[at..].iter().take_while(|&&x| x == i).count();
                with_i[..at].copy_from_slice(&rest[..at]);
                with_i[at] = i;
                with_i[at + 1..].copy_from_slice(&rest[at..]);
                let c = fp[ms.rank(&with_i)];
                *gi = (mu + 1) as f64 * c;
                any |= c != 0.0;
            }
            if any {
                let mut m = ms.first(dt.q);
                let mut r = 0;
                loop {
                    let h: f64 = dt.entries[r].iter().map(|&(i, b)| g[i as usize] * b).sum();
                    if h != 0.0 {
                        let len = merge_into(&rest, &m, &mut merged);
                        out[ms.rank(&merged[..len])] += scale * h;
                    }
                    r += 1;
                    if !ms.advance(&mut m) {
                        break;
                    }
                }
            }
            if !ms.advance(&mut rest) {
                break;
            }
        }
    }

    /// Upper bound on ⟦·⟧ of what apply_D sends above `cap`, given per-degree input norms.
    pub fn dropped_bound(&self, input_norms: &[f64], cap: usize) -> (usize, f64) {
        let mut levels = 0;
        let mut mass = 0.0;
        for (p, &np) in input_norms.iter().enumerate().skip(1) {
            if np == 0.0 {
                continue;
            }
            for dt in &self.degrees {
                if p + dt.q - 1 > cap {
                    levels += 1;
                    mass += p as f64 * np * dt.bound;
                }
            }
        }
        (levels, mass)
    }

    /// apply_D f = δf/δ(V([φ]_t)♯ₜG), truncated at the cap of f.
    pub fn apply(&self, f: &PolyFunctional) -> Result<Capped> {
        if !self.basis.compatible(&f.basis) {
            return Err(Error::BasisMismatch);
        }
        let mut out = PolyFunctional::zero(&f.basis, f.cap)?;
        for d in 1..=f.cap {
            let mut level = std::mem::take(&mut out.kernels[d]);
            self.apply_level(&f.kernels, d, 1.0, &mut level);
            out.kernels[d] = level;
        }
        let norms: Vec<f64> = (0..=f.cap)
            .map(|p| f.kernel_norm(p, NormMode::Upper).map(|n| n.value))
            .collect::<Result<_>>()?;
        let (dropped_levels, dropped_mass) = self.dropped_bound(&norms, f.cap);
        Ok(Capped { functional: out, dropped_levels, dropped_mass })
    }
}

impl PolyFunctional {
    /// apply_D with a freshly built interaction table (+ sign).
    pub fn apply_d(&self, v: &NonlinearitySpec, t: f64, dealias: bool) -> Result<Capped> {
        InteractionTable::new(&self.basis, v, t, dealias)?.apply(self)
    }
}
