//! Gauss–Legendre and Gauss–Kronrod rules, cumulative integration on
//! composite grids, and iterated integration over the triangle
//! `0 <= s <= u <= t`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{CasimirError, Result};

/// Values a quadrature rule can accumulate.
pub trait QuadValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
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

/// Composite Gauss–Legendre integral of `f` over [a, b].
pub fn composite_gl<V: QuadValue>(mut f: impl FnMut(f64) -> V, a: f64, b: f64, panels: usize, order: usize) -> V {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels.max(1) as f64;
    let mut acc = V::default();
    for p in 0..panels.max(1) {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc = acc + f(mid + 0.5 * h * xi) * (0.5 * h * wi);
        }
    }
    acc
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial panels never exceed this width.
    pub max_panel: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-8, abs_tol: 1e-14, max_panel: f64::INFINITY, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<V: QuadValue>(f: &mut impl FnMut(f64) -> Result<V>, a: f64, b: f64) -> Result<(V, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    Ok((k * h, (k - g).magnitude() * h.abs()))
}

/// Adaptive G7K15 integration with a fallible integrand.
pub fn integrate_with<V: QuadValue>(
    mut f: impl FnMut(f64) -> Result<V>,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult<V>> {
    if a == b {
        return Ok(QuadResult { value: V::default(), error: 0.0, evaluations: 0 });
    }
    let n0 = if opts.max_panel.is_finite() {
        (((b - a).abs() / opts.max_panel).ceil() as usize).max(1)
    } else {
        1
    };
    let h = (b - a) / n0 as f64;
    let mut intervals: Vec<(f64, f64, V, f64)> = Vec::with_capacity(n0 * 2);
    for i in 0..n0 {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == n0 { b } else { lo + h };
        let (v, e) = gk15(&mut f, lo, hi)?;
        intervals.push((lo, hi, v, e));
    }
    let mut evaluations = 15 * n0;
    loop {
        let total = intervals.iter().fold(V::default(), |acc, iv| acc + iv.2);
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if err <= tol {
            return Ok(QuadResult { value: total, error: err, evaluations });
        }
        if intervals.len() >= opts.max_intervals {
            return Err(CasimirError::Quadrature { a, b, error: err, tolerance: tol });
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, iv)| if iv.3 > best.1 { (i, iv.3) } else { best });
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(CasimirError::Quadrature { a, b, error: err, tolerance: tol });
        }
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Adaptive G7K15 integration of an infallible integrand.
pub fn integrate<V: QuadValue>(mut f: impl FnMut(f64) -> V, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult<V>> {
    integrate_with(|x| Ok(f(x)), a, b, opts)
}

/// Iterated adaptive integral of `f(u, s)` over `0 <= s <= u <= t`.
pub fn triangle_iterated<V: QuadValue>(
    f: impl Fn(f64, f64) -> V,
    t: f64,
    outer: &QuadOptions,
    inner: &QuadOptions,
) -> Result<QuadResult<V>> {
    let mut inner_evals = 0usize;
    let res = integrate_with(
        |u| {
            let r = integrate(|s| f(u, s), 0.0, u, inner)?;
            inner_evals += r.evaluations;
            Ok(r.value)
        },
        0.0,
        t,
        outer,
    )?;
    Ok(QuadResult { evaluations: res.evaluations + inner_evals, ..res })
}

/// Composite Gauss–Legendre grid on [0, t] with spectral cumulative integration.
///
/// `cumulative` returns running integrals at every node without extra
/// evaluations, so separable double integrals over the triangle collapse to
/// single sums.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    pub t: f64,
    pub panels: usize,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Partial-panel integration matrix on [-1, 1], row-major `order x order`.
    partial: Vec<f64>,
    panel_width: f64,
}

impl TimeGrid {
    pub fn new(t: f64, panels: usize, order: usize) -> Self {
        let panels = panels.max(1);
        let (x, w) = gauss_legendre(order);
        let h = t / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        let mut partial = vec![0.0; order * order];
        let pm: Vec<Vec<f64>> = x.iter().map(|&xm| (0..=order).map(|i| legendre(i, xm).0).collect()).collect();
        for j in 0..order {
            let pj = &pm[j];
            for m in 0..order {
                let mut s = 0.5 * (x[j] + 1.0);
                for i in 1..order {
                    s += 0.5 * pm[m][i] * (pj[i + 1] - pj[i - 1]);
                }
                partial[j * order + m] = w[m] * s;
            }
        }
        TimeGrid { t, panels, order, nodes, weights, partial, panel_width: h }
    }

    /// Grid whose panels are no wider than `max_width`.
    pub fn with_max_panel(t: f64, max_width: f64, order: usize) -> Self {
        let panels = if t > 0.0 { ((t / max_width).ceil() as usize).max(1) } else { 1 };
        Self::new(t, panels, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<V: QuadValue>(&self, values: &[V]) -> V {
        values.iter().zip(&self.weights).fold(V::default(), |acc, (v, w)| acc + *v * *w)
    }

    /// Running integral from 0 to each node.
    pub fn cumulative<V: QuadValue>(&self, values: &[V]) -> Vec<V> {
        let n = self.order;
        let half = 0.5 * self.panel_width;
        let mut out = Vec::with_capacity(values.len());
        let mut base = V::default();
        for p in 0..self.panels {
            let block = &values[p * n..(p + 1) * n];
            for j in 0..n {
                let row = &self.partial[j * n..(j + 1) * n];
                let part = block.iter().zip(row).fold(V::default(), |acc, (v, s)| acc + *v * *s);
                out.push(base + part * half);
            }
            let full = block.iter().zip(&self.weights[p * n..(p + 1) * n]).fold(V::default(), |acc, (v, w)| acc + *v * *w);
            base = base + full;
        }
        out
    }

    /// Integral of `outer(u) * inner(s)` over `0 <= s <= u <= t`.
    pub fn triangle<V: QuadValue + Mul<V, Output = V>>(&self, outer: &[V], inner: &[V]) -> V {
        let cum = self.cumulative(inner);
        outer
            .iter()
            .zip(&cum)
            .zip(&self.weights)
            .fold(V::default(), |acc, ((a, b), w)| acc + (*a * *b) * *w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} deg={deg}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_handles_oscillation() {
        let opts = QuadOptions { rel_tol: 1e-12, ..Default::default() };
        let r = integrate(|x: f64| (50.0 * x).sin() * x, 0.0, 3.0, &opts).unwrap();
        let exact = ((50.0f64 * 3.0).sin() - 150.0 * (150.0f64).cos()) / 2500.0;
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let g = TimeGrid::new(2.0, 5, 12);
        let v: Vec<f64> = g.nodes.iter().map(|s| (3.0 * s).cos()).collect();
        let c = g.cumulative(&v);
        for (s, ci) in g.nodes.iter().zip(&c) {
            assert!((ci - (3.0 * s).sin() / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn separable_triangle_matches_iterated() {
        let g = TimeGrid::new(1.5, 8, 12);
        let a: Vec<Complex64> = g.nodes.iter().map(|u| Complex64::from_polar(1.0 + u, 4.0 * u)).collect();
        let b: Vec<Complex64> = g.nodes.iter().map(|s| Complex64::from_polar(s.cos(), -3.0 * s)).collect();
        let sep = g.triangle(&a, &b);
        let opts = QuadOptions { rel_tol: 1e-11, ..Default::default() };
        let it = triangle_iterated(
            |u, s| Complex64::from_polar(1.0 + u, 4.0 * u) * Complex64::from_polar(s.cos(), -3.0 * s),
            1.5,
            &opts,
            &opts,
        )
        .unwrap();
        assert!((sep - it.value).norm() < 1e-10);
    }
}
