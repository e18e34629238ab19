//! Complex special functions: log-gamma, Pochhammer symbols, terminating
//! Gauss and convergent Kummer series.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type ComplexVal = Complex64;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)) for k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Converged series value with bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: ComplexVal,
    pub terms_used: usize,
    pub tail_estimate: f64,
}

fn is_pole(z: ComplexVal) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor()
}

/// Log-gamma on the principal branch.
///
/// For `Re z >= 0.5` this is the analytic continuation of `ln Γ` from the
/// positive axis; on the reflected half-plane the imaginary part is reduced
/// to `(-π, π]`. Only `exp` of the result and its real part are branch free.
pub fn log_gamma(z: ComplexVal) -> Result<ComplexVal> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log_gamma of non-finite {z}")));
    }
    if is_pole(z) {
        return Err(Error::Pole(z.re));
    }
    if z.re < 0.5 {
        // Γ(z)Γ(1-z) = π / sin(πz)
        let one_minus = log_gamma(ComplexVal::new(1.0, 0.0) - z)?;
        let v = ComplexVal::new(PI.ln(), 0.0) - log_sin_pi(z) - one_minus;
        let im = v.im - 2.0 * PI * ((v.im + PI) / (2.0 * PI)).floor();
        let im = if im <= -PI { im + 2.0 * PI } else { im };
        return Ok(ComplexVal::new(v.re, im));
    }
    Ok(log_gamma_right(z))
}

fn log_sin_pi(z: ComplexVal) -> ComplexVal {
    // sin(πz) overflows for large |Im z|; factor out the growing exponential.
    let w = z * PI;
    if w.im.abs() < 20.0 {
        return w.sin().ln();
    }
    // sin w = (e^{iw} - e^{-iw}) / 2i
    let sgn = w.im.signum();
    let i = ComplexVal::i();
    let lead = -i * sgn * w;
    let rest = ComplexVal::new(1.0, 0.0) - (2.0 * i * sgn * w).exp();
    let denom = if sgn > 0.0 { -2.0 * i } else { 2.0 * i };
    lead + rest.ln() - denom.ln()
}

fn log_gamma_right(mut z: ComplexVal) -> ComplexVal {
    let mut shift = ComplexVal::new(0.0, 0.0);
    while z.re < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut series = ComplexVal::new(0.0, 0.0);
    let mut p = zi;
    for c in STIRLING {
        series += p * c;
        p *= zi2;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    log_gamma_right_real(x)
}

fn log_gamma_right_real(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // ln Γ(x) = ln Γ(x+1) - ln x
        return log_gamma_right(ComplexVal::new(x + 1.0, 0.0)).re - x.ln();
    }
    log_gamma_right(ComplexVal::new(x, 0.0)).re
}

/// Rising factorial `(x)_n = x(x+1)...(x+n-1)`.
pub fn pochhammer(x: ComplexVal, n: usize) -> ComplexVal {
    (0..n).fold(ComplexVal::new(1.0, 0.0), |acc, k| acc * (x + k as f64))
}

/// Partial sums of a terminating Gauss series.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hyp2f1Sum {
    pub value: ComplexVal,
    /// Σ k c_k ζ^k, i.e. ζ d/dζ of the series.
    pub zeta_deriv: ComplexVal,
    /// Σ |c_k ζ^k|, used as a cancellation gauge.
    pub abs_sum: f64,
}

pub(crate) fn hyp2f1_terminating_full(n: usize, h: ComplexVal, a: f64, zeta: ComplexVal) -> Hyp2f1Sum {
    let nf = n as f64;
    let ratio_cap = nf * zeta.norm() * (h.norm() / a).max(1.0);
    let mut term = ComplexVal::new(1.0, 0.0);
    let mut value = term;
    let mut zeta_deriv = ComplexVal::new(0.0, 0.0);
    let mut abs_sum = 1.0;
    for k in 0..n {
        let kf = k as f64;
        term *= (h + kf) * ((kf - nf) / ((a + kf) * (kf + 1.0))) * zeta;
        value += term;
        let kt = term * (kf + 1.0);
        zeta_deriv += kt;
        let m = term.norm();
        abs_sum += m;
        // remaining ratios are bounded by ratio_cap/(k+2) < 1/2 from here on
        if ratio_cap <= 0.5 * (kf + 2.0)
            && m <= 1e-17 * value.norm()
            && kt.norm() <= 1e-17 * zeta_deriv.norm()
        {
            break;
        }
    }
    Hyp2f1Sum {
        value,
        zeta_deriv,
        abs_sum,
    }
}

/// `₂F₁[-n, h; a; ζ]` summed exactly by the term recurrence.
pub fn hyp2f1_terminating(n: usize, h: ComplexVal, a: f64, zeta: ComplexVal) -> ComplexVal {
    hyp2f1_terminating_full(n, h, a, zeta).value
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Hyp1f1Sum {
    pub result: SeriesResult,
    /// Σ k t_k, i.e. z d/dz of the series.
    pub z_deriv: ComplexVal,
    pub abs_sum: f64,
}

const HYP1F1_MAX_TERMS: usize = 100_000;

pub(crate) fn hyp1f1_full(h: ComplexVal, a: f64, z: ComplexVal, tol: f64) -> Result<Hyp1f1Sum> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("hyp1f1 tolerance must be positive, got {tol}")));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("hyp1f1 lower parameter must be positive, got {a}")));
    }
    let mut term = ComplexVal::new(1.0, 0.0);
    let mut value = term;
    let mut z_deriv = ComplexVal::new(0.0, 0.0);
    let mut abs_sum = 1.0;
    let mut small = 0;
    for k in 0..HYP1F1_MAX_TERMS {
        let kf = k as f64;
        term *= (h + kf) / ((a + kf) * (kf + 1.0)) * z;
        value += term;
        z_deriv += term * (kf + 1.0);
        let m = term.norm();
        abs_sum += m;
        let scale = value.norm().max(f64::MIN_POSITIVE);
        if m < tol * scale && (kf + 1.0) * m < tol * z_deriv.norm().max(scale) {
            small += 1;
        } else {
            small = 0;
        }
        if small == 3 || m == 0.0 {
            return Ok(Hyp1f1Sum {
                result: SeriesResult {
                    value,
                    terms_used: k + 2,
                    tail_estimate: m / scale,
                },
                z_deriv,
                abs_sum,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "hyp1f1",
        terms: HYP1F1_MAX_TERMS,
    })
}

/// Kummer's `₁F₁[h; a; z]` by direct summation.
///
/// Stops once three consecutive terms fall below `tol` relative to the
/// partial sum. `tail_estimate` is that last ratio.
pub fn hyp1f1(h: ComplexVal, a: f64, z: ComplexVal, tol: f64) -> Result<SeriesResult> {
    hyp1f1_full(h, a, z, tol).map(|s| s.result)
}
