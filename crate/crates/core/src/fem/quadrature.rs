//! Quadrature rules on the reference interval `[0, 1]` and the reference
//! triangle `{ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}`.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference coordinates; the second component is unused on intervals.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    /// Gauss-Legendre rule on `[0, 1]` exact for polynomials of `degree`.
    pub fn interval(degree: usize) -> Self {
        let n = degree / 2 + 1;
        let (x, w) = gauss_legendre_unit(n);
        QuadratureRule {
            points: x.into_iter().map(|x| [x, 0.0]).collect(),
            weights: w,
            degree: 2 * n - 1,
        }
    }

    /// Collapsed-coordinate Gauss product rule on the reference triangle,
    /// exact for polynomials of total degree `degree`.
    ///
    /// Maps the unit square through `(s, t) -> (s (1 - t), t)`, whose Jacobian
    /// `1 - t` raises the degree in `t` by one.
    pub fn triangle(degree: usize) -> Self {
        let ns = degree / 2 + 1;
        let nt = (degree + 1) / 2 + 1;
        let (xs, ws) = gauss_legendre_unit(ns);
        let (xt, wt) = gauss_legendre_unit(nt);
        let mut points = Vec::with_capacity(ns * nt);
        let mut weights = Vec::with_capacity(ns * nt);
        for (t, wt) in xt.iter().zip(&wt) {
            for (s, ws) in xs.iter().zip(&ws) {
                points.push([s * (1.0 - t), *t]);
                weights.push(ws * wt * (1.0 - t));
            }
        }
        QuadratureRule {
            points,
            weights,
            degree: (2 * ns - 1).min(2 * nt - 2),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`, ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is descending in i; store ascending on [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Gauss-Lobatto nodes and weights on `[0, 1]`, ascending, endpoints
/// included. Exact for polynomials of degree `2n - 3`.
pub fn gauss_lobatto_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let m = n - 1;
    let scale = 2.0 / (m as f64 * n as f64);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    nodes[m] = 1.0;
    weights[0] = 0.5 * scale;
    weights[m] = 0.5 * scale;
    for i in 1..=m / 2 {
        // Interior nodes are the roots of P_m'; Newton from Chebyshev points.
        let mut x = (PI * i as f64 / m as f64).cos();
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            let dd = (2.0 * x * d - (m * n) as f64 * p) / (1.0 - x * x);
            let dx = d / dd;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, _) = legendre(m, x);
        let w = 0.5 * scale / (p * p);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - i] = 0.5 * (1.0 + x);
        weights[i] = w;
        weights[m - i] = w;
    }
    (nodes, weights)
}

/// Returns `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
