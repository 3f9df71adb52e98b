//! Time-ordered exponentials Texp(∫₀ᵗ 𝔻) with 𝔻(τ) = −apply_D(τ), acting on functionals.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::NonlinearitySpec;
use crate::error::{Error, Result};
use crate::fockspace::{InteractionTable, ModeBasis, NormMode, PolyFunctional};
use crate::majorant::{majorant_of, MajorantSeries};
use crate::quad::{gauss_legendre_on, GaussCollocation};
use crate::spectral::SobolevChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TexpMethod {
    /// Collocation on dw/dτ = 𝔻(τ)w.
    Ode,
    /// Iterated Gauss–Legendre sums over ordered simplices.
    Simplex,
}

/// Which end of the ordered product carries the largest time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// 𝔻(s_k)⋯𝔻(s₁) with s₁ < ⋯ < s_k.
    #[default]
    LaterLeft,
    /// 𝔻(s₁)⋯𝔻(s_k) with s₁ < ⋯ < s_k.
    EarlierLeft,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TexpOptions {
    pub method: TexpMethod,
    /// Highest simplex order summed; ignored by the ODE route.
    pub order: usize,
    /// Relative tolerance of the step-doubling controller.
    pub tol: f64,
    pub stages: usize,
    /// Initial number of steps per unit time.
    pub steps_per_unit: usize,
    pub max_doublings: usize,
    /// Gauss–Legendre nodes per simplex dimension.
    pub simplex_nodes: usize,
    pub ordering: Ordering,
    pub dealias: bool,
    /// Radius r of the certificate e^{−tX}(r) > 0.
    pub radius: f64,
    /// Freeze 𝔻 at one time (time-independent generator).
    pub frozen_at: Option<f64>,
}

impl Default for TexpOptions {
    fn default() -> Self {
        TexpOptions {
            method: TexpMethod::Ode,
            order: 3,
            tol: 1e-10,
            stages: 4,
            steps_per_unit: 4,
            max_doublings: 10,
            simplex_nodes: 6,
            ordering: Ordering::LaterLeft,
            dealias: false,
            radius: 1.0,
            frozen_at: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TexpResult {
    pub t: f64,
    pub functional: PolyFunctional,
    /// ∫ of the per-application bound on what fell above the cap.
    pub truncation_mass: f64,
    pub dropped_levels: usize,
    /// e^{−tX}(radius) > 0.
    pub certified: bool,
    pub backward_radius: Option<f64>,
    pub steps: usize,
    pub error_estimate: f64,
}

struct Generator<'a> {
    basis: Arc<ModeBasis>,
    v: &'a NonlinearitySpec,
    dealias: bool,
    frozen_at: Option<f64>,
}

impl Generator<'_> {
    fn table(&self, tau: f64) -> Result<InteractionTable> {
        InteractionTable::new(&self.basis, self.v, self.frozen_at.unwrap_or(tau), self.dealias)
    }
}

fn certificate(x: &MajorantSeries, t: f64, r: f64) -> (bool, Option<f64>) {
    match x.flow(-t.abs(), r).value() {
        Some(g) if g > 0.0 => (true, Some(g)),
        g => (false, g),
    }
}

fn upper_norms(f: &PolyFunctional) -> Result<Vec<f64>> {
    (0..=f.cap).map(|p| f.kernel_norm(p, NormMode::Upper).map(|n| n.value)).collect()
}

/// One collocation step of dw/dτ = sign·apply_D(τ)w from τ₀ to τ₀ + h.
fn gl_step(
    gen: &Generator,
    gc: &GaussCollocation,
    w: &PolyFunctional,
    tau0: f64,
    h: f64,
    sign: f64,
) -> Result<(PolyFunctional, f64, usize)> {
    let s = gc.stages();
    let tables: Vec<InteractionTable> = gc.c.iter().map(|c| gen.table(tau0 + c * h)).collect::<Result<_>>()?;
    let cap = w.cap;
    let zero = PolyFunctional::zero(&w.basis, cap)?;
    let mut stage_w = vec![zero.clone(); s];
    let mut stage_f = vec![zero; s];
    let linear_part = tables.iter().any(|t| t.degrees.iter().any(|d| d.q == 1));
    for d in 0..=cap {
        let len = w.kernels[d].len();
        // contributions from strictly lower input degrees are already final
        for l in 0..s {
            let mut acc = vec![0.0; len];
            for dt in &tables[l].degrees {
                if dt.q >= 2 {
                    tables[l].apply_level_q(dt, &stage_w[l].kernels, d, sign, &mut acc);
                }
            }
            stage_f[l].kernels[d] = acc;
        }
        let base: Vec<Vec<f64>> = stage_f.iter().map(|f| f.kernels[d].clone()).collect();
        let mut iter = 0;
        loop {
            let mut new_w = Vec::with_capacity(s);
            for j in 0..s {
                let mut x = w.kernels[d].clone();
                for l in 0..s {
                    let a = h * gc.a[j][l];
                    for (xi, fi) in x.iter_mut().zip(&stage_f[l].kernels[d]) {
                        *xi += a * fi;
                    }
                }
                new_w.push(x);
            }
            let mut change: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for (j, x) in new_w.into_iter().enumerate() {
                for (a, b) in stage_w[j].kernels[d].iter().zip(&x) {
                    change = change.max((a - b).abs());
                    scale = scale.max(b.abs());
                }
                stage_w[j].kernels[d] = x;
            }
            if !linear_part || iter > 0 && change <= 1e-15 * scale.max(1e-300) {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::NonFinite("collocation fixed point did not converge".into()));
            }
            for l in 0..s {
                let mut acc = base[l].clone();
                for dt in &tables[l].degrees {
                    if dt.q == 1 {
                        tables[l].apply_level_q(dt, &stage_w[l].kernels, d, sign, &mut acc);
                    }
                }
                stage_f[l].kernels[d] = acc;
            }
        }
    }
    let mut out = w.clone();
    for l in 0..s {
        out.axpy(h * gc.b[l], &stage_f[l])?;
    }
    // truncation bound: quadrature of the per-stage dropped mass
    let mut mass = 0.0;
    let mut levels = 0;
    for l in 0..s {
        let norms = upper_norms(&stage_w[l])?;
        let (lv, m) = tables[l].dropped_bound(&norms, cap);
        mass += h.abs() * gc.b[l] * m;
        levels = levels.max(lv);
    }
    Ok((out, mass, levels))
}

struct Run {
    values: Vec<PolyFunctional>,
    masses: Vec<f64>,
    levels: usize,
    steps: usize,
}

/// Integrates through `times` (ascending, ≥ 0) with `per_unit` steps per unit time.
fn ode_run(gen: &Generator, gc: &GaussCollocation, f: &PolyFunctional, times: &[f64], per_unit: usize) -> Result<Run> {
    let mut w = f.clone();
    let mut tau = 0.0;
    let mut mass = 0.0;
    let mut levels = 0;
    let mut steps = 0;
    let mut values = Vec::with_capacity(times.len());
    let mut masses = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - tau;
        if span > 0.0 {
            let n = ((span * per_unit as f64).ceil() as usize).max(1);
            let h = span / n as f64;
            for i in 0..n {
                let (next, m, lv) = gl_step(gen, gc, &w, tau + i as f64 * h, h, -1.0)?;
                w = next;
                mass += m;
                levels = levels.max(lv);
            }
            steps += n;
            tau = t;
        }
        values.push(w.clone());
        masses.push(mass);
    }
    Ok(Run { values, masses, levels, steps })
}

/// Backward integration v(t) = f, dv/da = apply_D(a)v down to a = 0.
fn ode_run_reversed(gen: &Generator, gc: &GaussCollocation, f: &PolyFunctional, t: f64, per_unit: usize) -> Result<Run> {
    let mut w = f.clone();
    let mut mass = 0.0;
    let mut levels = 0;
    let n = if t > 0.0 { ((t * per_unit as f64).ceil() as usize).max(1) } else { 0 };
    if n > 0 {
        let h = -t / n as f64;
        for i in 0..n {
            let (next, m, lv) = gl_step(gen, gc, &w, t + i as f64 * h, h, 1.0)?;
            w = next;
            mass += m;
            levels = levels.max(lv);
        }
    }
    Ok(Run { values: vec![w], masses: vec![mass], levels, steps: n })
}

fn relative_gap(a: &[PolyFunctional], b: &[PolyFunctional]) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff = diff.max(x.max_abs_diff(y));
        for k in &y.kernels {
            for c in k {
                scale = scale.max(c.abs());
            }
        }
    }
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::InvalidArgument("times must be finite, nonnegative and ascending".into()));
        }
        prev = t;
    }
    Ok(())
}

/// Texp applied to `f` at each of the ascending `times`.
pub fn texp_sweep(f: &PolyFunctional, v: &NonlinearitySpec, times: &[f64], opts: &TexpOptions) -> Result<Vec<TexpResult>> {
    check_times(times)?;
    let x = majorant_of(v, &f.basis.grid, SobolevChoice::ModeSum)?;
    let gen = Generator { basis: f.basis.clone(), v, dealias: opts.dealias, frozen_at: opts.frozen_at };
    let finish = |t: f64, functional: PolyFunctional, mass: f64, levels: usize, steps: usize, err: f64| {
        let (certified, backward_radius) = certificate(&x, t, opts.radius);
        TexpResult {
            t,
            functional,
            truncation_mass: mass,
            dropped_levels: levels,
            certified,
            backward_radius,
            steps,
            error_estimate: err,
        }
    };
    if v.is_zero() {
        return Ok(times.iter().map(|&t| finish(t, f.clone(), 0.0, 0, 0, 0.0)).collect());
    }
    match opts.method {
        TexpMethod::Simplex => times
            .iter()
            .map(|&t| {
                let (g, mass, levels) = simplex(&gen, f, t, opts)?;
                Ok(finish(t, g, mass, levels, 0, f64::NAN))
            })
            .collect(),
        TexpMethod::Ode => {
            let gc = GaussCollocation::new(opts.stages.max(1));
            let run = |per_unit: usize| -> Result<Run> {
                match opts.ordering {
                    Ordering::LaterLeft => ode_run(&gen, &gc, f, times, per_unit),
                    Ordering::EarlierLeft => {
                        let mut all = Run { values: vec![], masses: vec![], levels: 0, steps: 0 };
                        for &t in times {
                            let r = ode_run_reversed(&gen, &gc, f, t, per_unit)?;
                            all.values.extend(r.values);
                            all.masses.extend(r.masses);
                            all.levels = all.levels.max(r.levels);
                            all.steps += r.steps;
                        }
                        Ok(all)
                    }
                }
            };
            let mut per_unit = opts.steps_per_unit.max(1);
            let mut coarse = run(per_unit)?;
            for _ in 0..opts.max_doublings {
                per_unit *= 2;
                let fine = run(per_unit)?;
                let gap = relative_gap(&coarse.values, &fine.values);
                if !gap.is_finite() {
                    return Err(Error::NonFinite("time-ordered exponential diverged".into()));
                }
                if gap <= opts.tol {
                    return Ok(fine
                        .values
                        .into_iter()
                        .zip(fine.masses)
                        .zip(times)
                        .map(|((g, m), &t)| finish(t, g, m, fine.levels, fine.steps, gap))
                        .collect());
                }
                coarse = fine;
            }
            Err(Error::NonFinite(format!(
                "step doubling did not reach tolerance {:e} after {} refinements",
                opts.tol, opts.max_doublings
            )))
        }
    }
}

pub fn texp_apply(f: &PolyFunctional, v: &NonlinearitySpec, t: f64, opts: &TexpOptions) -> Result<TexpResult> {
    if t < 0.0 {
        return Err(Error::InvalidArgument("texp needs t ≥ 0".into()));
    }
    Ok(texp_sweep(f, v, &[t], opts)?.remove(0))
}

/// Σ_{k ≤ order} of the ordered iterated integrals, by nested Gauss–Legendre.
fn simplex(gen: &Generator, f: &PolyFunctional, t: f64, opts: &TexpOptions) -> Result<(PolyFunctional, f64, usize)> {
    let mut total = f.clone();
    let mut mass = 0.0;
    let mut levels = 0;
    for k in 1..=opts.order {
        let (term, m, lv) = simplex_term(gen, f, k, 0.0, t, opts)?;
        total.axpy(1.0, &term)?;
        mass += m;
        levels = levels.max(lv);
    }
    Ok((total, mass, levels))
}

/// LaterLeft: I_k(σ) = ∫₀^σ 𝔻(s) I_{k−1}(s) ds; EarlierLeft: J_k(σ) = ∫_σ^t 𝔻(s) J_{k−1}(s) ds.
fn simplex_term(
    gen: &Generator,
    f: &PolyFunctional,
    k: usize,
    lo: f64,
    hi: f64,
    opts: &TexpOptions,
) -> Result<(PolyFunctional, f64, usize)> {
    if k == 0 {
        return Ok((f.clone(), 0.0, 0));
    }
    let mut out = PolyFunctional::zero(&f.basis, f.cap)?;
    let mut mass = 0.0;
    let mut levels = 0;
    if hi <= lo {
        return Ok((out, 0.0, 0));
    }
    let (nodes, weights) = gauss_legendre_on(opts.simplex_nodes, lo, hi);
    for (&s, &w) in nodes.iter().zip(&weights) {
        let (inner, m, lv) = match opts.ordering {
            Ordering::LaterLeft => simplex_term(gen, f, k - 1, lo, s, opts)?,
            Ordering::EarlierLeft => simplex_term(gen, f, k - 1, s, hi, opts)?,
        };
        let applied = gen.table(s)?.apply(&inner)?;
        out.axpy(-w, &applied.functional)?;
        mass += w * (applied.dropped_mass + m);
        levels = levels.max(lv).max(applied.dropped_levels);
    }
    Ok((out, mass, levels))
}

/// One pure-power term c·⟨a,·⟩^p with ‖a‖ = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurePower {
    pub coef: f64,
    pub direction: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseReport {
    pub t: f64,
    /// e^{−tX}(r) − δ: the sampling radius.
    pub rho: f64,
    /// N_r(f), exact for distinct-degree pure powers.
    pub bound: f64,
    pub max_value: f64,
    pub violations: usize,
    pub samples: usize,
    pub certified: bool,
}

/// Builds Σ coef·⟨a,·⟩^p and its exact N_r.
pub fn pure_power_sum(basis: &Arc<ModeBasis>, terms: &[PurePower], cap: usize, r: f64) -> Result<(PolyFunctional, f64)> {
    let mut f = PolyFunctional::zero(basis, cap)?;
    let mut seen = vec![false; cap + 1];
    let mut bound = 0.0;
    for term in terms {
        let norm = term.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("pure-power direction must be a unit vector".into()));
        }
        if term.degree > cap || seen[term.degree] {
            return Err(Error::InvalidArgument("pure-power degrees must be distinct and within the cap".into()));
        }
        seen[term.degree] = true;
        f.axpy(term.coef, &PolyFunctional::pure_power(basis, &term.direction, term.degree, cap)?)?;
        bound += term.coef.abs() * r.powi(term.degree as i32);
    }
    Ok((f, bound))
}

fn random_ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64, on_sphere: bool) -> Vec<f64> {
    let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rad = if on_sphere { radius } else { radius * rng.random::<f64>().powf(1.0 / dim as f64) };
    for v in &mut x {
        *v *= rad / n;
    }
    x
}

/// Monte-Carlo audit of |(Texp f)(φ)| ≤ N_r(f) for ‖φ‖ ≤ e^{−tX}(r) − δ.
pub fn pointwise_bound_check(
    basis: &Arc<ModeBasis>,
    terms: &[PurePower],
    cap: usize,
    v: &NonlinearitySpec,
    times: &[f64],
    r: f64,
    samples: usize,
    seed: u64,
    opts: &TexpOptions,
) -> Result<Vec<PointwiseReport>> {
    let (f, bound) = pure_power_sum(basis, terms, cap, r)?;
    let x = majorant_of(v, &basis.grid, SobolevChoice::ModeSum)?;
    let results = texp_sweep(&f, v, times, &TexpOptions { radius: r, ..opts.clone() })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(times.len());
    for res in results {
        let gamma = x.flow(-res.t, r).value().unwrap_or(f64::NEG_INFINITY);
        let rho = gamma - 1e-6 * r;
        let mut max_value: f64 = 0.0;
        let mut violations = 0;
        if rho > 0.0 {
            for i in 0..samples {
                let phi = random_ball_point(&mut rng, basis.dim(), rho, i % 2 == 0);
                let val = res.functional.evaluate(&phi)?.abs();
                max_value = max_value.max(val);
                if val > bound {
                    violations += 1;
                }
            }
        }
        out.push(PointwiseReport {
            t: res.t,
            rho,
            bound,
            max_value,
            violations,
            samples: if rho > 0.0 { samples } else { 0 },
            certified: res.certified,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub times: Vec<f64>,
    /// N_r(Texp_{t_{i+1}} f − Texp_{t_i} f), Upper mode.
    pub increments: Vec<f64>,
    /// |Δt|·⟦𝒱⟧(r)·max N_r^{(1)} over the two endpoints.
    pub bounds: Vec<f64>,
    pub max_increment: f64,
}

pub fn continuity_in_t(f: &PolyFunctional, v: &NonlinearitySpec, times: &[f64], opts: &TexpOptions) -> Result<ContinuityReport> {
    let r = opts.radius;
    let x = majorant_of(v, &f.basis.grid, SobolevChoice::ModeSum)?;
    let xr = x.eval(r);
    let res = texp_sweep(f, v, times, opts)?;
    let mut increments = Vec::new();
    let mut bounds = Vec::new();
    for pair in res.windows(2) {
        let d = pair[1].functional.sub(&pair[0].functional)?;
        increments.push(d.norm_nr(r, NormMode::Upper)?.value);
        let n1 = pair
            .iter()
            .map(|p| p.functional.norm_nr_derivative(r, 1, NormMode::Upper).map(|n| n.value))
            .collect::<Result<Vec<_>>>()?;
        bounds.push((pair[1].t - pair[0].t).abs() * xr * n1[0].max(n1[1]));
    }
    let max_increment = increments.iter().cloned().fold(0.0, f64::max);
    Ok(ContinuityReport { times: times.to_vec(), increments, bounds, max_increment })
}
