//! Periodic Fourier–Galerkin fields, Sobolev norms and products.
//!
//! Coefficients are mean Fourier coefficients: `f(x) = Σ_k c_k e^{iξ·x}` with
//! `ξ = 2πk/L`. The retained band is `|k_j| < M/2` in every direction; the
//! Nyquist line is kept at zero so that the mode set is symmetric and the
//! coefficients → samples → coefficients round trip is exact.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub n: usize,
    #[serde(rename = "M")]
    pub modes: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub m: f64,
    pub s: f64,
}

impl SpectralGrid {
    pub fn new(n: usize, modes: usize, length: f64, m: f64, s: f64) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidArgument(format!("dimension {n} not in 1..=2")));
        }
        if modes < 4 || !modes.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("M = {modes} must be even and >= 4")));
        }
        if !(length > 0.0) || !(m > 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument("need L > 0, m > 0 and finite s".into()));
        }
        Ok(SpectralGrid { n, modes, length, m, s })
    }

    /// Number of stored coefficients (M^n).
    pub fn len(&self) -> usize {
        self.modes.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice vector of storage index `idx` (second component 0 when n = 1).
    pub fn wavenumber(&self, idx: usize) -> [i32; 2] {
        let m = self.modes;
        let fold = |j: usize| if j < m / 2 { j as i32 } else { j as i32 - m as i32 };
        if self.n == 1 {
            [fold(idx), 0]
        } else {
            [fold(idx / m), fold(idx % m)]
        }
    }

    /// Storage index of lattice vector `k`, or None outside the retained band.
    pub fn index_of(&self, k: [i32; 2]) -> Option<usize> {
        if !self.in_band(k) {
            return None;
        }
        let m = self.modes as i32;
        let unfold = |x: i32| (if x < 0 { x + m } else { x }) as usize;
        Some(if self.n == 1 {
            unfold(k[0])
        } else {
            unfold(k[0]) * self.modes + unfold(k[1])
        })
    }

    pub fn in_band(&self, k: [i32; 2]) -> bool {
        let h = (self.modes / 2) as i32;
        let ok = |x: i32| x.abs() < h;
        ok(k[0]) && (if self.n == 1 { k[1] == 0 } else { ok(k[1]) })
    }

    /// Band used when the 2/3 rule is active.
    pub fn in_dealiased_band(&self, k: [i32; 2]) -> bool {
        let ok = |x: i32| 3 * x.unsigned_abs() as usize <= self.modes;
        self.in_band(k) && ok(k[0]) && ok(k[1])
    }

    pub fn xi_of(&self, k: [i32; 2]) -> [f64; 2] {
        let f = 2.0 * PI / self.length;
        [f * k[0] as f64, f * k[1] as f64]
    }

    pub fn xi(&self, idx: usize) -> [f64; 2] {
        self.xi_of(self.wavenumber(idx))
    }

    pub fn epsilon_of(&self, k: [i32; 2]) -> f64 {
        let x = self.xi_of(k);
        (self.m * self.m + x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    pub fn epsilon(&self, idx: usize) -> f64 {
        self.epsilon_of(self.wavenumber(idx))
    }

    /// Torus volume L^n.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.n as i32)
    }

    /// Sample-space quadrature weight (L/M)^n.
    pub fn weight(&self) -> f64 {
        (self.length / self.modes as f64).powi(self.n as i32)
    }

    /// Sample point coordinates of sample index `j`.
    pub fn sample_point(&self, j: usize) -> [f64; 2] {
        let h = self.length / self.modes as f64;
        if self.n == 1 {
            [j as f64 * h, 0.0]
        } else {
            [(j / self.modes) as f64 * h, (j % self.modes) as f64 * h]
        }
    }

    /// Discrete Sobolev constant: ((2π/L)^n Σ_band ε^{-2s})^{1/2}.
    ///
    /// This is the constant for which the sup-norm and algebra inequalities
    /// hold exactly for bandlimited fields.
    pub fn mode_sum_constant(&self, s: f64) -> f64 {
        let cell = (2.0 * PI / self.length).powi(self.n as i32);
        let mut sum = 0.0;
        for idx in 0..self.len() {
            if self.in_band(self.wavenumber(idx)) {
                sum += self.epsilon(idx).powf(-2.0 * s);
            }
        }
        (cell * sum).sqrt()
    }

    pub fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Which value stands in for I(n, m, s) in discrete estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SobolevChoice {
    /// Lattice sum over the retained band (the default; rigorous for grid fields).
    ModeSum,
    /// Continuum integral.
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevConstant {
    pub value: f64,
    pub bound: f64,
}

/// Continuum I(n,m,s) = (∫ ε^{-2s} dξ)^{1/2} with its closed-form upper bound.
pub fn sobolev_constant(n: usize, m: f64, s: f64) -> Result<SobolevConstant> {
    let nf = n as f64;
    if s <= nf / 2.0 {
        return Err(Error::DivergentIntegral { s, half_n: nf / 2.0 });
    }
    if n == 0 || !(m > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and m > 0".into()));
    }
    let sphere = 2.0 * PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0);
    // ρ = m t, t = u/(1-u)
    let radial = integrate_adaptive(
        |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let t = u / (1.0 - u);
            let jac = 1.0 / ((1.0 - u) * (1.0 - u));
            t.powf(nf - 1.0) * (1.0 + t * t).powf(-s) * jac
        },
        0.0,
        1.0,
        1e-13,
    )
    .0;
    let value = (sphere * m.powf(nf - 2.0 * s) * radial).sqrt();
    let bound = m.powf(nf / 2.0 - s) * sphere.sqrt() * (2.0 * s / (nf * (2.0 * s - nf))).sqrt();
    Ok(SobolevConstant { value, bound })
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place unnormalized n-dimensional FFT on an `side^dim` array.
fn fft_nd(buf: &mut [C64], side: usize, dim: usize, inverse: bool) {
    let f = plan(side, inverse);
    if dim == 1 {
        f.process(buf);
        return;
    }
    for row in buf.chunks_mut(side) {
        f.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); side];
    for c in 0..side {
        for r in 0..side {
            col[r] = buf[r * side + c];
        }
        f.process(&mut col);
        for r in 0..side {
            buf[r * side + c] = col[r];
        }
    }
}

fn wrap(k: i32, side: usize) -> usize {
    k.rem_euclid(side as i32) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub grid: SpectralGrid,
    pub coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: SpectralGrid) -> Self {
        SpectralField { grid, coeffs: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: SpectralGrid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = C64::new(c, 0.0);
        f
    }

    /// Build from coefficients, zeroing anything outside the band.
    pub fn from_coeffs(grid: SpectralGrid, mut coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {}",
                coeffs.len(),
                grid.len()
            )));
        }
        for (i, c) in coeffs.iter_mut().enumerate() {
            if !grid.in_band(grid.wavenumber(i)) {
                *c = C64::new(0.0, 0.0);
            }
        }
        Ok(SpectralField { grid, coeffs })
    }

    /// Real mode a·cos(ξ·x) + b·sin(ξ·x) for lattice vector k.
    pub fn real_mode(grid: SpectralGrid, k: [i32; 2], a: f64, b: f64) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let i = grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {k:?} outside band")))?;
        if k == [0, 0] {
            f.coeffs[i] = C64::new(a, 0.0);
            return Ok(f);
        }
        let j = grid.index_of([-k[0], -k[1]]).expect("band is symmetric");
        f.coeffs[i] += C64::new(0.5 * a, -0.5 * b);
        f.coeffs[j] += C64::new(0.5 * a, 0.5 * b);
        Ok(f)
    }

    /// Samples on the M^n grid, row-major.
    pub fn to_samples(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft_nd(&mut buf, self.grid.modes, self.grid.n, true);
        buf.iter().map(|c| c.re).collect()
    }

    pub fn from_samples(grid: SpectralGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        let mut buf: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
        fft_nd(&mut buf, grid.modes, grid.n, false);
        let norm = 1.0 / grid.len() as f64;
        let coeffs = buf.into_iter().map(|c| c * norm).collect();
        let mut f = Self::from_coeffs(grid, coeffs)?;
        f.symmetrize();
        Ok(f)
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: SpectralGrid, f: F) -> Result<Self> {
        let s: Vec<f64> = (0..grid.len()).map(|j| f(grid.sample_point(j))).collect();
        Self::from_samples(grid, &s)
    }

    /// Random real field with coefficient scale ε^{-decay}.
    pub fn random<R: Rng + ?Sized>(grid: SpectralGrid, rng: &mut R, decay: f64) -> Self {
        let mut f = Self::zeros(grid);
        for i in 0..grid.len() {
            let k = grid.wavenumber(i);
            if !grid.in_band(k) {
                continue;
            }
            let j = grid.index_of([-k[0], -k[1]]).expect("symmetric band");
            if j < i {
                continue;
            }
            let scale = grid.epsilon(i).powf(-decay);
            let re: f64 = rng.sample(StandardNormal);
            if i == j {
                f.coeffs[i] = C64::new(re * scale, 0.0);
            } else {
                let im: f64 = rng.sample(StandardNormal);
                let c = C64::new(re, im) * (scale / 2f64.sqrt());
                f.coeffs[i] = c;
                f.coeffs[j] = c.conj();
            }
        }
        f
    }

    /// Bandlimited Dirac mass at `x` (the grid's Dirichlet kernel).
    pub fn dirichlet_delta(grid: SpectralGrid, x: [f64; 2]) -> Self {
        let mut f = Self::zeros(grid);
        let inv_vol = 1.0 / grid.volume();
        for i in 0..grid.len() {
            if grid.in_band(grid.wavenumber(i)) {
                let xi = grid.xi(i);
                let phase = -(xi[0] * x[0] + xi[1] * x[1]);
                f.coeffs[i] = C64::from_polar(inv_vol, phase);
            }
        }
        f
    }

    /// Enforce c_{-k} = conj(c_k) by averaging.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        for i in 0..g.len() {
            let k = g.wavenumber(i);
            if let Some(j) = g.index_of([-k[0], -k[1]]) {
                if j > i {
                    let a = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
                    self.coeffs[i] = a;
                    self.coeffs[j] = a.conj();
                } else if j == i {
                    self.coeffs[i].im = 0.0;
                }
            }
        }
    }

    /// Largest violation of Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        (0..g.len())
            .filter_map(|i| {
                let k = g.wavenumber(i);
                g.index_of([-k[0], -k[1]]).map(|j| (self.coeffs[i] - self.coeffs[j].conj()).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn hs_norm(&self, s: f64) -> f64 {
        self.hs_inner(self, s).sqrt()
    }

    pub fn hs_inner(&self, other: &SpectralField, s: f64) -> f64 {
        let g = self.grid;
        let mut acc = 0.0;
        for i in 0..g.len() {
            let w = g.epsilon(i).powf(2.0 * s);
            acc += w * (self.coeffs[i] * other.coeffs[i].conj()).re;
        }
        acc * g.volume()
    }

    /// ∫ f g dx over the torus.
    pub fn integrate_product(&self, other: &SpectralField) -> f64 {
        self.hs_inner(other, 0.0)
    }

    /// Σ |c_k|.
    pub fn l1_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn max_abs_samples(&self) -> f64 {
        self.to_samples().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn evaluate_at(&self, x: [f64; 2]) -> f64 {
        let g = self.grid;
        let mut acc = 0.0;
        for i in 0..g.len() {
            let xi = g.xi(i);
            let ph = xi[0] * x[0] + xi[1] * x[1];
            acc += (self.coeffs[i] * C64::from_polar(1.0, ph)).re;
        }
        acc
    }

    /// Mode-wise multiplier `h(idx)`.
    pub fn map_modes<F: Fn(usize) -> C64>(&self, h: F) -> SpectralField {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, c)| c * h(i)).collect();
        SpectralField { grid: self.grid, coeffs }
    }

    /// Spatial derivative along axis `dim`.
    pub fn derivative(&self, dim: usize) -> SpectralField {
        let g = self.grid;
        self.map_modes(|i| C64::new(0.0, g.xi(i)[dim]))
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        SpectralField { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += d * a;
        }
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn masked(&self) -> SpectralField {
        let g = self.grid;
        let mut f = self.clone();
        for (i, c) in f.coeffs.iter_mut().enumerate() {
            if !g.in_dealiased_band(g.wavenumber(i)) {
                *c = C64::new(0.0, 0.0);
            }
        }
        f
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        rhs.scale(self)
    }
}

/// Galerkin product of two fields.
pub fn product(f: &SpectralField, g: &SpectralField, dealias: bool) -> Result<SpectralField> {
    product_many(&[f, g], dealias)
}

/// Galerkin projection of the pointwise product of all factors.
///
/// The full product is formed on a grid fine enough to hold it without
/// aliasing, then truncated once, so the result is symmetric and multilinear
/// in the factors.
pub fn product_many(factors: &[&SpectralField], dealias: bool) -> Result<SpectralField> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidArgument("product of zero factors".into()))?;
    let grid = first.grid;
    for f in factors {
        grid.check_same(&f.grid)?;
    }
    let q = factors.len();
    let m = grid.modes;
    let mut side = ((q + 1) * m).div_ceil(2);
    side += side % 2;
    let total = side.pow(grid.n as u32);
    let mut acc = vec![C64::new(1.0, 0.0); total];
    for f in factors {
        let src = if dealias { f.masked() } else { (*f).clone() };
        let mut buf = vec![C64::new(0.0, 0.0); total];
        for (i, c) in src.coeffs.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            let k = grid.wavenumber(i);
            let j = if grid.n == 1 {
                wrap(k[0], side)
            } else {
                wrap(k[0], side) * side + wrap(k[1], side)
            };
            buf[j] = *c;
        }
        fft_nd(&mut buf, side, grid.n, true);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a *= b.re;
        }
    }
    fft_nd(&mut acc, side, grid.n, false);
    let norm = 1.0 / total as f64;
    let mut out = SpectralField::zeros(grid);
    for i in 0..grid.len() {
        let k = grid.wavenumber(i);
        if !grid.in_band(k) || (dealias && !grid.in_dealiased_band(k)) {
            continue;
        }
        let j = if grid.n == 1 {
            wrap(k[0], side)
        } else {
            wrap(k[0], side) * side + wrap(k[1], side)
        };
        out.coeffs[i] = acc[j] * norm;
    }
    out.symmetrize();
    Ok(out)
}

/// Cauchy data (u(t,·), ∂ₜu(t,·)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyPair {
    pub u0: SpectralField,
    pub u1: SpectralField,
}

impl CauchyPair {
    pub fn new(u0: SpectralField, u1: SpectralField) -> Result<Self> {
        u0.grid.check_same(&u1.grid)?;
        Ok(CauchyPair { u0, u1 })
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        CauchyPair { u0: SpectralField::zeros(grid), u1: SpectralField::zeros(grid) }
    }

    pub fn grid(&self) -> SpectralGrid {
        self.u0.grid
    }

    /// (‖u0‖²_{H^{σ}} + ‖u1‖²_{H^{σ-1}})^{1/2}.
    pub fn norm_at(&self, sigma: f64) -> f64 {
        (self.u0.hs_inner(&self.u0, sigma) + self.u1.hs_inner(&self.u1, sigma - 1.0)).sqrt()
    }

    /// Pair norm in H^{s+1} × H^s with the grid's s.
    pub fn norm(&self) -> f64 {
        self.norm_at(self.grid().s + 1.0)
    }

    pub fn inner(&self, other: &CauchyPair) -> f64 {
        let s = self.grid().s;
        self.u0.hs_inner(&other.u0, s + 1.0) + self.u1.hs_inner(&other.u1, s)
    }

    pub fn scale(&self, a: f64) -> CauchyPair {
        CauchyPair { u0: self.u0.scale(a), u1: self.u1.scale(a) }
    }

    pub fn axpy(&mut self, a: f64, x: &CauchyPair) {
        self.u0.axpy(a, &x.u0);
        self.u1.axpy(a, &x.u1);
    }

    pub fn max_abs_diff(&self, other: &CauchyPair) -> f64 {
        self.u0.max_abs_diff(&other.u0).max(self.u1.max_abs_diff(&other.u1))
    }

    /// Random smooth data rescaled to pair norm `norm`.
    pub fn random<R: Rng + ?Sized>(grid: SpectralGrid, rng: &mut R, norm: f64) -> Self {
        let u0 = SpectralField::random(grid, rng, grid.s + 2.0);
        let u1 = SpectralField::random(grid, rng, grid.s + 1.0);
        let d = CauchyPair { u0, u1 };
        let n = d.norm();
        d.scale(norm / n)
    }
}

impl Add for &CauchyPair {
    type Output = CauchyPair;
    fn add(self, rhs: &CauchyPair) -> CauchyPair {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &CauchyPair {
    type Output = CauchyPair;
    fn sub(self, rhs: &CauchyPair) -> CauchyPair {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}
