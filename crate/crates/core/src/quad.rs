//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| half * wi).collect(),
    )
}

/// Collocation data of the s-stage Gauss method on [0, 1]: nodes c, weights b, matrix a.
#[derive(Debug, Clone)]
pub struct GaussCollocation {
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

impl GaussCollocation {
    pub fn new(stages: usize) -> Self {
        let (x, w) = gauss_legendre_on(stages, 0.0, 1.0);
        // a[j][l] = integral of the l-th Lagrange polynomial over [0, c_j]
        let v = nalgebra::DMatrix::from_fn(stages, stages, |k, l| x[l].powi(k as i32));
        let lu = v.lu();
        let mut a = vec![vec![0.0; stages]; stages];
        for j in 0..stages {
            let rhs = nalgebra::DVector::from_fn(stages, |k, _| x[j].powi(k as i32 + 1) / (k as f64 + 1.0));
            let sol = lu.solve(&rhs).expect("vandermonde on distinct nodes");
            for l in 0..stages {
                a[j][l] = sol[l];
            }
        }
        GaussCollocation { c: x, b: w, a }
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b].
///
/// Returns the estimate and the accumulated error estimate.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut stack = vec![(a, b, kronrod15(&f, a, b))];
    let mut total = 0.0;
    let mut err = 0.0;
    let width = (b - a).abs();
    let mut evals = 0usize;
    while let Some((lo, hi, (val, e))) = stack.pop() {
        evals += 1;
        let local_tol = tol * ((hi - lo).abs() / width).max(1e-3);
        if e <= local_tol || (hi - lo).abs() < 1e-14 * width || evals > 200_000 {
            total += val;
            err += e;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, kronrod15(&f, lo, mid)));
        stack.push((mid, hi, kronrod15(&f, mid, hi)));
    }
    (total, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn collocation_rows_sum_to_nodes() {
        let g = GaussCollocation::new(4);
        for j in 0..4 {
            let s: f64 = g.a[j].iter().sum();
            assert!((s - g.c[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn kronrod_handles_endpoint_singularity() {
        let (v, _) = integrate_adaptive(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-8);
    }
}
