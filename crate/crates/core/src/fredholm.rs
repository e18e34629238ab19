//! Gap probabilities `det(I - K)` on `L²(t, ∞)`.

use crate::chebyshev::{cheb_points, ChebSeries};
use crate::error::{domain, Error, Result};
use crate::kernels::{KernelHandle, KernelKind, PQPair};
use crate::quadrature::{build_quadrature, MapKind, Quadrature};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Anything that can be discretized on a quadrature of `(t, ∞)`.
pub trait IntegralKernel: Sync {
    fn kernel(&self, x: f64, y: f64) -> Result<f64>;

    fn matrix(&self, nodes: &[f64]) -> Result<DMatrix<f64>> {
        let n = nodes.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.kernel(nodes[i], nodes[j])).collect())
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    fn preferred_map(&self) -> MapKind {
        MapKind::Rational
    }
}

impl IntegralKernel for KernelHandle {
    fn kernel(&self, x: f64, y: f64) -> Result<f64> {
        self.eval(x, y)
    }

    fn matrix(&self, nodes: &[f64]) -> Result<DMatrix<f64>> {
        let pq: Vec<PQPair> = nodes.par_iter().map(|&x| self.pq(x)).collect::<Result<_>>()?;
        let n = nodes.len();
        // upper triangle row by row; nodes may come unsorted (series rules)
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| {
                        let (a, b) = if nodes[i] <= nodes[j] { (i, j) } else { (j, i) };
                        self.eval_from(nodes[a], &pq[a], nodes[b], &pq[b])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                m[(i, i + k)] = v;
                m[(i + k, i)] = v;
            }
        }
        Ok(m)
    }

    // The diagonal decays like x^{-2Re s-2}; under the rational map that is a
    // (1-u)^{2Re s} endpoint factor, smooth only for integer 2Re s.
    fn preferred_map(&self) -> MapKind {
        let e = 2.0 * self.s().re();
        if (e - e.round()).abs() < 1e-9 {
            MapKind::Rational
        } else {
            MapKind::TanhSinh
        }
    }
}

/// The zero operator; its determinant is exactly one.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroKernel;

impl IntegralKernel for ZeroKernel {
    fn kernel(&self, _x: f64, _y: f64) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMethod {
    Nystrom,
    Series,
}

impl GapMethod {
    pub fn name(&self) -> &'static str {
        match self {
            GapMethod::Nystrom => "nystrom",
            GapMethod::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub t: f64,
    pub value: f64,
    pub method: GapMethod,
    pub error_estimate: f64,
    pub order_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NystromOptions {
    pub order: usize,
    pub max_order: usize,
    pub tol: f64,
    /// Doubling stops at `order` when false.
    pub adaptive: bool,
    pub map: Option<MapKind>,
    /// Map length; `1 + t` when unset.
    pub scale: Option<f64>,
}

impl Default for NystromOptions {
    fn default() -> Self {
        NystromOptions {
            order: 32,
            max_order: 1280,
            tol: 1e-10,
            adaptive: true,
            map: None,
            scale: None,
        }
    }
}

impl NystromOptions {
    pub fn fixed(order: usize) -> Self {
        NystromOptions {
            order,
            adaptive: false,
            ..Default::default()
        }
    }
}

fn quadrature_for<K: IntegralKernel + ?Sized>(kh: &K, t: f64, order: usize, opts: &NystromOptions) -> Result<Quadrature> {
    let map = opts.map.unwrap_or_else(|| kh.preferred_map());
    build_quadrature(t, order, map, opts.scale.unwrap_or(1.0 + t))
}

fn symmetrized<K: IntegralKernel + ?Sized>(kh: &K, q: &Quadrature) -> Result<DMatrix<f64>> {
    let mut a = kh.matrix(&q.nodes)?;
    let sw: Vec<f64> = q.weights.iter().map(|w| w.sqrt()).collect();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            a[(i, j)] *= sw[i] * sw[j];
        }
    }
    Ok(a)
}

fn nystrom_det<K: IntegralKernel + ?Sized>(kh: &K, t: f64, order: usize, opts: &NystromOptions) -> Result<f64> {
    let q = quadrature_for(kh, t, order, opts)?;
    let a = symmetrized(kh, &q)?;
    let n = a.nrows();
    let m = DMatrix::identity(n, n) - a;
    Ok(m.lu().determinant())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("gap probability needs t > 0, got {t}"));
    }
    Ok(())
}

fn finish_value(v: f64) -> Result<f64> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::Numerical(format!("determinant {v} is not a probability")));
    }
    if v > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("determinant {v} exceeds one")));
    }
    Ok(v.min(1.0))
}

/// `det(I - W^{1/2} K W^{1/2})` with order doubling until two successive
/// values agree to 1e-10.
pub fn gap_nystrom<K: IntegralKernel + ?Sized>(kh: &K, t: f64, order: usize) -> Result<GapResult> {
    gap_nystrom_with(
        kh,
        t,
        &NystromOptions {
            order,
            ..Default::default()
        },
    )
}

pub fn gap_nystrom_with<K: IntegralKernel + ?Sized>(kh: &K, t: f64, opts: &NystromOptions) -> Result<GapResult> {
    check_t(t)?;
    if opts.order < 16 {
        return domain(format!("Nyström order must be at least 16, got {}", opts.order));
    }
    let mut n = opts.order;
    let mut prev = nystrom_det(kh, t, n / 2, opts)?;
    let mut cur = nystrom_det(kh, t, n, opts)?;
    let mut err = (cur - prev).abs();
    while opts.adaptive && err >= opts.tol && 2 * n <= opts.max_order {
        n *= 2;
        prev = cur;
        cur = nystrom_det(kh, t, n, opts)?;
        err = (cur - prev).abs();
    }
    if opts.adaptive && err > 1e-6 {
        return Err(Error::NoConvergence {
            what: "Nyström order doubling",
            terms: n,
        });
    }
    Ok(GapResult {
        t,
        value: finish_value(cur)?,
        method: GapMethod::Nystrom,
        error_estimate: err,
        order_used: n,
    })
}

// det(I - A) and the resolvent diagonal R(t, t) from one factorization.
fn det_and_resolvent<K: IntegralKernel + ?Sized>(kh: &K, t: f64, order: usize, opts: &NystromOptions) -> Result<(f64, f64)> {
    let q = quadrature_for(kh, t, order, opts)?;
    let nodes: Vec<f64> = std::iter::once(t).chain(q.nodes.iter().copied()).collect();
    let sw: Vec<f64> = std::iter::once(1.0).chain(q.weights.iter().map(|w| w.sqrt())).collect();
    let full = kh.matrix(&nodes)?;
    let n = q.nodes.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let a = sw[i + 1] * full[(i + 1, j + 1)] * sw[j + 1];
        if i == j {
            1.0 - a
        } else {
            -a
        }
    });
    let k = DVector::from_fn(n, |i, _| full[(i + 1, 0)] * sw[i + 1]);
    let lu = m.lu();
    let det = lu.determinant();
    let sol = lu
        .solve(&k)
        .ok_or_else(|| Error::Numerical("singular I - K in resolvent".into()))?;
    Ok((det, full[(0, 0)] + k.dot(&sol)))
}

/// `d/dt log det(I - K)` on `(t, ∞)`, which is the resolvent diagonal `R(t, t)`.
/// Returns the value and the change from the half-order rule.
pub fn log_derivative<K: IntegralKernel + ?Sized>(kh: &K, t: f64, opts: &NystromOptions) -> Result<(f64, f64)> {
    check_t(t)?;
    let one = |n: usize| det_and_resolvent(kh, t, n, opts).map(|v| v.1);
    let mut n = opts.order;
    let mut prev = one(n / 2)?;
    let mut cur = one(n)?;
    let mut err = (cur - prev).abs();
    while opts.adaptive && err >= opts.tol * cur.abs().max(1.0) && 2 * n <= opts.max_order {
        n *= 2;
        prev = cur;
        cur = one(n)?;
        err = (cur - prev).abs();
    }
    Ok((cur, err))
}

// Orders of the tensor rules for the k-th series term: (primary, check).
fn series_orders(k: usize) -> (usize, usize) {
    match k {
        1..=3 => (48, 32),
        4 => (32, 24),
        5 => (24, 20),
        6 => (20, 18),
        7 => (18, 16),
        _ => (16, 14),
    }
}

// Determinant of an m×m row-major matrix by partial pivoting, in place.
fn small_det(a: &mut [f64], m: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..m {
        let mut p = c;
        for r in c + 1..m {
            if a[r * m + c].abs() > a[p * m + c].abs() {
                p = r;
            }
        }
        if a[p * m + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..m {
                a.swap(c * m + j, p * m + j);
            }
            det = -det;
        }
        let piv = a[c * m + c];
        det *= piv;
        for r in c + 1..m {
            let f = a[r * m + c] / piv;
            if f != 0.0 {
                for j in c + 1..m {
                    a[r * m + j] -= f * a[c * m + j];
                }
            }
        }
    }
    det
}

// Σ over k-subsets S of {lead.., n-1} of det A_{fixed ∪ S}.
fn subset_sum(a: &DMatrix<f64>, lead: usize, k: usize) -> f64 {
    let n = a.nrows();
    let avail = n - lead;
    if k == 0 {
        return if lead == 0 {
            1.0
        } else {
            let mut b: Vec<f64> = (0..lead * lead).map(|i| a[(i / lead, i % lead)]).collect();
            small_det(&mut b, lead)
        };
    }
    if k > avail {
        return 0.0;
    }
    let m = lead + k;
    (lead..n - k + 1)
        .into_par_iter()
        .map(|first| {
            let mut idx: Vec<usize> = (0..lead).collect();
            idx.push(first);
            idx.extend(first + 1..first + k);
            let mut buf = vec![0.0; m * m];
            let mut total = 0.0;
            loop {
                for (r, &ir) in idx.iter().enumerate() {
                    for (c, &ic) in idx.iter().enumerate() {
                        buf[r * m + c] = a[(ir, ic)];
                    }
                }
                total += small_det(&mut buf, m);
                // advance the free indices after `first`
                let mut pos = m;
                loop {
                    if pos == lead + 1 {
                        return total;
                    }
                    pos -= 1;
                    let limit = n - (m - pos);
                    if idx[pos] < limit {
                        idx[pos] += 1;
                        for q in pos + 1..m {
                            idx[q] = idx[q - 1] + 1;
                        }
                        break;
                    }
                }
            }
        })
        .sum()
}

fn series_terms<K: IntegralKernel + ?Sized>(kh: &K, t: f64, kmax: usize, anchor: bool) -> Result<(f64, f64, f64)> {
    let map = kh.preferred_map();
    let mut sum = 0.0;
    let mut quad_err = 0.0;
    let mut last = 0.0;
    for k in 0..=kmax {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        if k == 0 {
            if anchor {
                let v = kh.kernel(t, t)?;
                sum += v;
                last = v.abs();
            } else {
                sum += 1.0;
            }
            continue;
        }
        let (n1, n2) = series_orders(k);
        let mut vals = [0.0; 2];
        for (slot, n) in [n1, n2].into_iter().enumerate() {
            let q = build_quadrature(t, n, map, 1.0 + t)?;
            let (nodes, sw): (Vec<f64>, Vec<f64>) = if anchor {
                (
                    std::iter::once(t).chain(q.nodes.iter().copied()).collect(),
                    std::iter::once(1.0).chain(q.weights.iter().map(|w| w.sqrt())).collect(),
                )
            } else {
                (q.nodes.clone(), q.weights.iter().map(|w| w.sqrt()).collect())
            };
            let mut a = kh.matrix(&nodes)?;
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    a[(i, j)] *= sw[i] * sw[j];
                }
            }
            vals[slot] = subset_sum(&a, usize::from(anchor), k);
        }
        sum += sign * vals[0];
        quad_err += (vals[0] - vals[1]).abs();
        last = vals[0].abs();
    }
    Ok((sum, last, quad_err))
}

/// Alternating correlation series `1 + Σ_k (-1)^k/k! ∫ρ_k`, truncated at `kmax`.
///
/// Terms up to k = 3 use a 48-point rule per axis; higher terms use coarser
/// rules (32 down to 16 points). The error estimate adds the last term to
/// the change of each term under a second, coarser rule.
pub fn gap_series<K: IntegralKernel + ?Sized>(kh: &K, t: f64, kmax: usize) -> Result<GapResult> {
    check_t(t)?;
    if kmax == 0 {
        return domain("series needs kmax >= 1");
    }
    let (value, last, quad_err) = series_terms(kh, t, kmax, false)?;
    if last > 1e-8 {
        return Err(Error::Truncation { value, last_term: last });
    }
    Ok(GapResult {
        t,
        value,
        method: GapMethod::Series,
        error_estimate: last + quad_err,
        order_used: series_orders(1).0,
    })
}

/// `F'(t) = Σ_k (-1)^k/k! ∫ρ_{k+1}(t, x_1..x_k)`, truncated at `kmax`.
pub fn gap_series_derivative<K: IntegralKernel + ?Sized>(kh: &K, t: f64, kmax: usize) -> Result<GapResult> {
    check_t(t)?;
    let (value, last, quad_err) = series_terms(kh, t, kmax, true)?;
    if last > 1e-8 {
        return Err(Error::Truncation { value, last_term: last });
    }
    Ok(GapResult {
        t,
        value,
        method: GapMethod::Series,
        error_estimate: last + quad_err,
        order_used: series_orders(1).0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBundle {
    pub t: f64,
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOptions {
    pub cheb_order: usize,
    pub max_cheb_order: usize,
    /// Double the Chebyshev order until the trailing coefficients settle.
    pub adaptive: bool,
    /// Fixed Nyström order for every node; chosen at the left end when unset.
    pub quad_order: Option<usize>,
    pub map: Option<MapKind>,
}

impl DerivativeOptions {
    pub fn new(cheb_order: usize) -> Self {
        DerivativeOptions {
            cheb_order,
            max_cheb_order: 256,
            adaptive: true,
            quad_order: None,
            map: None,
        }
    }

    pub fn fixed(cheb_order: usize, quad_order: usize) -> Self {
        DerivativeOptions {
            cheb_order,
            max_cheb_order: cheb_order,
            adaptive: false,
            quad_order: Some(quad_order),
            map: None,
        }
    }
}

/// Chebyshev interpolants of `log F` and of `(log F)' = R(t, t)`; the second
/// and third derivatives come from differentiating the latter.
#[derive(Debug, Clone, PartialEq)]
pub struct GapInterpolant {
    pub a: f64,
    pub b: f64,
    pub quad_order: usize,
    pub cheb_order: usize,
    /// Trailing coefficient magnitude of the fits, in `log F` units.
    pub interp_error: f64,
    series: [ChebSeries; 4],
}

impl GapInterpolant {
    /// `[log F, (log F)', (log F)'', (log F)''']` at `t`.
    pub fn log_derivs(&self, t: f64) -> Result<[f64; 4]> {
        let slack = 1e-12 * (self.b - self.a);
        if t < self.a - slack || t > self.b + slack {
            return domain(format!("t = {t} outside interpolation interval [{}, {}]", self.a, self.b));
        }
        Ok([
            self.series[0].eval(t),
            self.series[1].eval(t),
            self.series[2].eval(t),
            self.series[3].eval(t),
        ])
    }

    pub fn bundle(&self, t: f64) -> Result<DerivativeBundle> {
        let [l0, l1, l2, l3] = self.log_derivs(t)?;
        let f = l0.exp();
        Ok(DerivativeBundle {
            t,
            f,
            f1: f * l1,
            f2: f * (l2 + l1 * l1),
            f3: f * (l3 + 3.0 * l1 * l2 + l1 * l1 * l1),
        })
    }
}

/// Fit `log F` and its resolvent derivative over `[a, b]` and differentiate
/// up to third order.
pub fn gap_derivatives<K: IntegralKernel + ?Sized>(kh: &K, t_interval: [f64; 2], cheb_order: usize) -> Result<GapInterpolant> {
    gap_derivatives_with(kh, t_interval, &DerivativeOptions::new(cheb_order))
}

pub fn gap_derivatives_with<K: IntegralKernel + ?Sized>(
    kh: &K,
    t_interval: [f64; 2],
    opts: &DerivativeOptions,
) -> Result<GapInterpolant> {
    let [a, b] = t_interval;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return domain(format!("derivative interval needs 0 < a < b, got [{a}, {b}]"));
    }
    if opts.cheb_order < 16 {
        return domain(format!("Chebyshev order must be at least 16, got {}", opts.cheb_order));
    }
    let nys = NystromOptions {
        map: opts.map,
        ..Default::default()
    };
    let quad_order = match opts.quad_order {
        Some(q) => q,
        None => gap_nystrom_with(kh, a, &nys)?.order_used,
    };
    let fixed = NystromOptions {
        order: quad_order,
        adaptive: false,
        ..nys
    };
    let mut n = opts.cheb_order;
    loop {
        let pts = cheb_points(a, b, n);
        let vals: Vec<(f64, f64)> = pts
            .par_iter()
            .map(|&t| {
                let (det, r) = det_and_resolvent(kh, t, quad_order, &fixed)?;
                Ok((finish_value(det)?.ln(), r))
            })
            .collect::<Result<_>>()?;
        let (logs, res): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
        let fit = ChebSeries::fit(a, b, &logs);
        let dfit = ChebSeries::fit(a, b, &res);
        let ratio = dfit.trailing_ratio();
        let settled = ratio <= 1e-12;
        if !opts.adaptive || settled || 2 * n > opts.max_cheb_order {
            if opts.adaptive && !settled && ratio > 1e-8 {
                return Err(Error::IllConditioned { ratio });
            }
            let d2 = dfit.derivative();
            let d3 = d2.derivative();
            return Ok(GapInterpolant {
                a,
                b,
                quad_order,
                cheb_order: n,
                interp_error: fit.trailing_abs().max(dfit.trailing_abs() * (b - a)),
                series: [fit, dfit, d2, d3],
            });
        }
        n *= 2;
    }
}

/// `P[λ₁(N)/N ≤ x]` for a finite ensemble or its N → ∞ limit.
pub fn cdf_largest(kind: KernelKind, x: f64) -> Result<f64> {
    cdf_largest_result(kind, x, &NystromOptions::default()).map(|g| g.value)
}

pub fn cdf_largest_result(kind: KernelKind, x: f64, opts: &NystromOptions) -> Result<GapResult> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("largest-eigenvalue CDF needs x > 0, got {x}"));
    }
    gap_nystrom_with(&KernelHandle::new(kind), x, opts)
}
