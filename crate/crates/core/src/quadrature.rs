//! Quadrature rules on a half line `(t, ∞)`.

use crate::error::{domain, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    /// Gauss–Legendre pushed through `x = t + L(1+u)/(1-u)`.
    Rational,
    /// Trapezoid in `v` pushed through `u = tanh(π/2 sinh v)` and the rational map.
    TanhSinh,
}

impl MapKind {
    pub fn name(&self) -> &'static str {
        match self {
            MapKind::Rational => "rational",
            MapKind::TanhSinh => "tanh_sinh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub t: f64,
    pub map_kind: MapKind,
    pub scale: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl Quadrature {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes (increasing) and weights on `(-1, 1)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (u, _, _, w) = gauss_legendre_ext(n);
    (u, w)
}

// nodes, 1 - u, 1 + u, weights; the gaps to ±1 come from the angle so the
// rational map has no cancellation at either end
fn gauss_legendre_ext(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; n];
    let mut one_minus = vec![0.0; n];
    let mut one_plus = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut dp = 0.0;
        for _ in 0..100 {
            let x = theta.cos();
            let (p, d) = legendre(n, x);
            dp = d;
            // Newton in θ: d/dθ P(cos θ) = -sin θ P'(cos θ)
            let step = p / (-theta.sin() * d);
            theta -= step;
            if step.abs() < 1e-15 * theta.abs().max(1.0) {
                dp = legendre(n, theta.cos()).1;
                break;
            }
        }
        let x = theta.cos();
        let s = theta.sin();
        let wi = 2.0 / (s * s * dp * dp);
        let sin2 = 2.0 * (0.5 * theta).sin().powi(2);
        let cos2 = 2.0 * (0.5 * theta).cos().powi(2);
        let hi = n - 1 - i;
        let lo = i;
        u[hi] = x;
        one_minus[hi] = sin2;
        one_plus[hi] = cos2;
        w[hi] = wi;
        u[lo] = -x;
        one_minus[lo] = cos2;
        one_plus[lo] = sin2;
        w[lo] = wi;
    }
    (u, one_minus, one_plus, w)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const TANH_SINH_VMAX: f64 = 3.6;

/// Nodes and weights on `(t, ∞)`. `scale` is the map length `L`.
pub fn build_quadrature(t: f64, order: usize, map_kind: MapKind, scale: f64) -> Result<Quadrature> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("quadrature needs t > 0, got {t}"));
    }
    if order < 8 {
        return domain(format!("quadrature order must be at least 8, got {order}"));
    }
    if !(scale > 0.0) {
        return domain(format!("map scale must be positive, got {scale}"));
    }
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    let mut push = |off: f64, w: f64| {
        let x = t + off;
        let last = nodes.last().copied().unwrap_or(t);
        if x > last && x.is_finite() && w > 0.0 && w.is_finite() {
            nodes.push(x);
            weights.push(w);
        }
    };
    match map_kind {
        MapKind::Rational => {
            let (_, om, op, w) = gauss_legendre_ext(order);
            for i in 0..order {
                let (omu, opu) = (om[i], op[i]);
                push(scale * opu / omu, w[i] * 2.0 * scale / (omu * omu));
            }
        }
        MapKind::TanhSinh => {
            let h = 2.0 * TANH_SINH_VMAX / (order - 1) as f64;
            for k in 0..order {
                let v = -TANH_SINH_VMAX + h * k as f64;
                let w = 0.5 * PI * v.sinh();
                // 1-u and 1+u without cancellation
                let e = (-2.0 * w.abs()).exp();
                let (omu, opu) = if w >= 0.0 {
                    (2.0 * e / (1.0 + e), 2.0 / (1.0 + e))
                } else {
                    (2.0 / (1.0 + e), 2.0 * e / (1.0 + e))
                };
                let wt = h * PI * scale * v.cosh() * opu / omu;
                push(scale * opu / omu, wt);
            }
        }
    }
    let order = nodes.len();
    Ok(Quadrature {
        t,
        map_kind,
        scale,
        nodes,
        weights,
        order,
    })
}
