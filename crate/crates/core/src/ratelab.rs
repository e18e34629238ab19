//! Convergence-rate experiments: N·|finite − limit| for kernels and CDFs,
//! and weighted derivative bounds of the kernels.

use crate::chebyshev::{cheb_points, ChebSeries};
use crate::error::{domain, Result};
use crate::fredholm::cdf_largest;
use crate::kernels::{EnsembleConfig, KernelHandle, KernelKind, PQPair, SParam};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub s: SParam,
    pub x_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    /// One row per N, one column per x.
    pub raw_gaps: Vec<Vec<f64>>,
    pub scaled_gaps: Vec<Vec<f64>>,
}

impl RateTable {
    fn new(s: SParam, x_grid: Vec<f64>, n_list: Vec<usize>, raw_gaps: Vec<Vec<f64>>) -> Self {
        let scaled_gaps = raw_gaps
            .iter()
            .zip(&n_list)
            .map(|(row, &n)| row.iter().map(|g| g * n as f64).collect())
            .collect();
        RateTable {
            s,
            x_grid,
            n_list,
            raw_gaps,
            scaled_gaps,
        }
    }

    /// max/min of N·gap over the N-ladder, per x column.
    pub fn spread(&self) -> Vec<f64> {
        (0..self.x_grid.len())
            .map(|j| {
                let col = self.scaled_gaps.iter().map(|r| r[j]);
                let hi = col.clone().fold(0.0, f64::max);
                let lo = col.fold(f64::INFINITY, f64::min);
                if lo > 0.0 {
                    hi / lo
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    pub fn bounded(&self, limit: f64) -> bool {
        self.spread().iter().all(|&r| r <= limit)
    }
}

/// Geometric grid of `size` points on `[a, b]`.
pub fn geometric_grid(a: f64, b: f64, size: usize) -> Vec<f64> {
    if size <= 1 {
        return vec![a];
    }
    (0..size)
        .map(|k| a * (b / a).powf(k as f64 / (size - 1) as f64))
        .collect()
}

fn check_ladder(x0: f64, n_list: &[usize]) -> Result<()> {
    if !(x0 > 0.0) {
        return domain(format!("x0 must be positive, got {x0}"));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return domain("N-ladder must be non-empty with N >= 1");
    }
    Ok(())
}

/// `sup |K_[N] − K_∞|·(xy)^{Re s+1}` over a `grid_size²` geometric grid in `[x0, 20 x0]²`.
pub fn kernel_rate(s: SParam, x0: f64, n_list: &[usize], grid_size: usize) -> Result<RateTable> {
    check_ladder(x0, n_list)?;
    let grid = geometric_grid(x0, 20.0 * x0, grid_size.max(2));
    let lim = KernelHandle::limit(s);
    let lim_pq: Vec<PQPair> = grid.iter().map(|&x| lim.pq(x)).collect::<Result<_>>()?;
    let weight = |x: f64, y: f64| (x * y).powf(s.re() + 1.0);
    let raw: Vec<Vec<f64>> = n_list
        .par_iter()
        .map(|&n| {
            let kh = KernelHandle::finite(EnsembleConfig::new(s, n)?);
            let pq: Vec<PQPair> = grid.iter().map(|&x| kh.pq(x)).collect::<Result<_>>()?;
            let mut sup: f64 = 0.0;
            for i in 0..grid.len() {
                for j in i..grid.len() {
                    let (x, y) = (grid[i], grid[j]);
                    let a = kh.eval_from(x, &pq[i], y, &pq[j])?;
                    let b = lim.eval_from(x, &lim_pq[i], y, &lim_pq[j])?;
                    sup = sup.max((a - b).abs() * weight(x, y));
                }
            }
            Ok(vec![sup])
        })
        .collect::<Result<_>>()?;
    Ok(RateTable::new(s, vec![x0], n_list.to_vec(), raw))
}

/// `|F_N(x) − F_∞(x)|` at each x for each N.
pub fn cdf_rate(s: SParam, x_points: &[f64], n_list: &[usize]) -> Result<RateTable> {
    for &x in x_points {
        check_ladder(x, n_list)?;
    }
    let lim: Vec<f64> = x_points
        .par_iter()
        .map(|&x| cdf_largest(KernelKind::Limit(s), x))
        .collect::<Result<_>>()?;
    let raw: Vec<Vec<f64>> = n_list
        .par_iter()
        .map(|&n| {
            let cfg = EnsembleConfig::new(s, n)?;
            x_points
                .iter()
                .zip(&lim)
                .map(|(&x, &l)| Ok((cdf_largest(KernelKind::FiniteScaled(cfg), x)? - l).abs()))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(RateTable::new(s, x_points.to_vec(), n_list.to_vec(), raw))
}

const CHEB_LOCAL: usize = 16;
const BAND: f64 = 0.05;

// d/dx f at c from a Chebyshev fit on [c - δ, c + δ]
fn local_derivative(f: &dyn Fn(f64) -> Result<f64>, c: f64) -> Result<f64> {
    let d = 0.01 * c.abs();
    let pts = cheb_points(c - d, c + d, CHEB_LOCAL);
    let vals: Vec<f64> = pts.iter().map(|&t| f(t)).collect::<Result<_>>()?;
    Ok(ChebSeries::fit(c - d, c + d, &vals).derivative().eval(c))
}

fn partial(kh: &KernelHandle, p: usize, q: usize, x: f64, y: f64) -> Result<f64> {
    match (p, q) {
        (0, 0) => kh.eval(x, y),
        (1, 0) => {
            if (x - y).abs() > BAND * x.abs().max(y.abs()) {
                kh.eval_dx(x, y)
            } else {
                local_derivative(&|u| kh.eval(u, y), x)
            }
        }
        (0, 1) => partial(kh, 1, 0, y, x),
        (2, 0) => local_derivative(&|u| partial(kh, 1, 0, u, y), x),
        (1, 1) => local_derivative(&|v| partial(kh, 1, 0, x, v), y),
        (0, 2) => partial(kh, 2, 0, y, x),
        _ => domain(format!("derivative order ({p}, {q}) not supported; need p + q <= 2")),
    }
}

/// `sup |∂_x^p ∂_y^q K|·x^{Re s+p+1} y^{Re s+q+1}` over a geometric grid in `[x0, 20 x0]²`.
pub fn derivative_bound_scan(kh: &KernelHandle, x0: f64, p: usize, q: usize) -> Result<f64> {
    derivative_bound_scan_on(kh, x0, 20.0 * x0, p, q, 16)
}

pub fn derivative_bound_scan_on(kh: &KernelHandle, x0: f64, x1: f64, p: usize, q: usize, grid_size: usize) -> Result<f64> {
    if !(x0 > 0.0 && x1 > x0) {
        return domain(format!("scan needs 0 < x0 < x1, got [{x0}, {x1}]"));
    }
    if p + q > 2 {
        return domain(format!("derivative order ({p}, {q}) not supported; need p + q <= 2"));
    }
    let grid = geometric_grid(x0, x1, grid_size.max(2));
    let r = kh.s().re();
    let rows: Vec<f64> = grid
        .par_iter()
        .map(|&x| {
            grid.iter().try_fold(0.0f64, |m, &y| {
                let v = partial(kh, p, q, x, y)?.abs() * x.powf(r + p as f64 + 1.0) * y.powf(r + q as f64 + 1.0);
                Ok(m.max(v))
            })
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}
