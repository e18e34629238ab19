//! Cayley-transform bridge to the circular picture: unitary-side kernels,
//! their correspondence with the limit kernel, and the smallest-angle law.

use crate::error::{domain, Error, Result};
use crate::fredholm::{cdf_largest, log_derivative, NystromOptions};
use crate::kernels::{EnsembleConfig, KernelHandle, KernelKind, SParam, DEFAULT_TOL};
use crate::quadrature::gauss_legendre;
use crate::specfun::{hyp1f1, log_gamma, ComplexVal};
use std::f64::consts::PI;

/// Eigenangle in `[0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AngleVal {
    theta: f64,
}

impl AngleVal {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=2.0 * PI).contains(&theta) {
            return domain(format!("angle must lie in [0, 2π], got {theta}"));
        }
        Ok(AngleVal { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// `θ = 2 arccot(a)` in `(0, 2π)`; `a = ±∞` maps to 0 and 2π.
pub fn cayley_angle(a: f64) -> Result<AngleVal> {
    if a.is_nan() {
        return domain("Cayley angle of NaN");
    }
    // arccot with range (0, π): π/2 − atan a
    AngleVal::new(2.0 * (0.5 * PI - a.atan()))
}

/// `cot(θ/2)`, the inverse of [`cayley_angle`].
pub fn cot_half(theta: AngleVal) -> Result<f64> {
    let t = theta.theta;
    if t == 0.0 || t == 2.0 * PI {
        return domain("cot(θ/2) is infinite at θ = 0");
    }
    let h = 0.5 * t;
    Ok(h.cos() / h.sin())
}

/// `Q_N^s(x) = ₂F₁[s, −N, −N−s̄; x]`. The lower parameter never hits a
/// non-positive integer within the N + 1 terms because Re s > −1/2.
pub fn q_finite(n: usize, s: ComplexVal, x: ComplexVal) -> Result<ComplexVal> {
    let c = -(n as f64) - s.conj();
    let mut term = ComplexVal::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..n {
        let kf = k as f64;
        let den = (c + kf) * (kf + 1.0);
        if den.norm() == 0.0 {
            return Err(Error::Pole(c.re));
        }
        term *= (s + kf) * (kf - n as f64) * x / den;
        sum += term;
    }
    Ok(sum)
}

/// `w_U(θ) = (1−e^{iθ})^{s̄}(1−e^{−iθ})^s` through principal logs.
/// Expanded: `|2 sin(θ/2)|^{2 Re s} e^{−Im s (π Sgn θ − θ)}` on `(−π, π)`.
pub fn weight_u(theta: f64, s: SParam) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return domain(format!("unitary weight singular at θ = {theta}"));
    }
    let e = ComplexVal::from_polar(1.0, theta);
    let one = ComplexVal::new(1.0, 0.0);
    let w = (s.conj() * (one - e).ln() + s.complex() * (one - e.conj()).ln()).exp();
    if w.im.abs() > 1e-12 * w.norm() || !(w.re > 0.0) {
        return Err(Error::Numerical(format!("unitary weight not real positive at θ = {theta}: {w}")));
    }
    Ok(w.re)
}

fn check_angle(theta: f64) -> Result<()> {
    if theta == 0.0 || theta.abs() >= PI || !theta.is_finite() {
        return domain(format!("unitary kernel needs θ in (−π, π) \\ {{0}}, got {theta}"));
    }
    Ok(())
}

// ln d_N = ln Γ(s̄+1+N) + ln Γ(s+1+N) − ln Γ(2 Re s+1+N) − ln N! − ln 2π
fn ln_d_n(n: usize, s: SParam) -> Result<ComplexVal> {
    let nn = n as f64;
    let r2 = ComplexVal::new(2.0 * s.re() + 1.0 + nn, 0.0);
    Ok(log_gamma(s.conj() + 1.0 + nn)? + log_gamma(s.complex() + 1.0 + nn)? - log_gamma(r2)?
        - log_gamma(ComplexVal::new(nn + 1.0, 0.0))?
        - (2.0 * PI).ln())
}

/// Finite unitary kernel `K_N^U(e^{iα}, e^{iβ})`, off the diagonal.
pub fn kernel_u_finite(alpha: f64, beta: f64, cfg: EnsembleConfig) -> Result<ComplexVal> {
    check_angle(alpha)?;
    check_angle(beta)?;
    if alpha == beta {
        return domain("unitary kernel diagonal is not implemented");
    }
    let n = cfg.n_dim;
    let s = cfg.s;
    let (sc, sb) = (s.complex(), s.conj());
    let i = ComplexVal::i();
    let half = 0.5 * (alpha - beta);
    let ea = ComplexVal::from_polar(1.0, alpha);
    let eb = ComplexVal::from_polar(1.0, beta);
    let nh = ComplexVal::from_polar(1.0, n as f64 * half);
    let num = nh * q_finite(n, sc, ea.conj())? * q_finite(n, sb, eb)?
        - nh.conj() * q_finite(n, sb, ea)? * q_finite(n, sc, eb.conj())?;
    let den = 2.0 * i * half.sin();
    let d = ln_d_n(n, s)?.exp();
    let w = (weight_u(alpha, s)? * weight_u(beta, s)?).sqrt();
    Ok(d * w * num / den)
}

/// `e(s) = Γ(s+1)Γ(s̄+1)/(2πi Γ(2 Re s+1)²)`.
fn e_const(s: SParam) -> Result<ComplexVal> {
    let r2 = ComplexVal::new(2.0 * s.re() + 1.0, 0.0);
    let l = log_gamma(s.complex() + 1.0)? + log_gamma(s.conj() + 1.0)? - 2.0 * log_gamma(r2)?;
    Ok(l.exp() / (2.0 * PI * ComplexVal::i()))
}

/// Limit unitary kernel `K^U(α, β)`, off the diagonal.
pub fn kernel_u_limit(alpha: f64, beta: f64, s: SParam) -> Result<ComplexVal> {
    if alpha == 0.0 || beta == 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return domain(format!("limit unitary kernel needs nonzero finite angles, got ({alpha}, {beta})"));
    }
    if alpha == beta {
        return domain("limit unitary kernel diagonal is not implemented");
    }
    let (sc, sb) = (s.complex(), s.conj());
    let a = 2.0 * s.re() + 1.0;
    let i = ComplexVal::i();
    let q = |h: ComplexVal, z: ComplexVal| hyp1f1(h, a, z, DEFAULT_TOL).map(|r| r.value);
    let half = ComplexVal::from_polar(1.0, 0.5 * (alpha - beta));
    let num = half * q(sc, -i * alpha)? * q(sb, i * beta)? - half.conj() * q(sb, i * alpha)? * q(sc, -i * beta)?;
    let pre = (alpha * beta).abs().powf(s.re()) * (-0.5 * PI * s.im() * (alpha.signum() + beta.signum())).exp();
    Ok(e_const(s)? * pre * num / (alpha - beta))
}

/// Which way the Cayley variables are matched: `α = 2/x` (as stated) or the
/// reflected `α = −2/x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Stated,
    Reflected,
}

impl Orientation {
    pub fn name(&self) -> &'static str {
        match self {
            Orientation::Stated => "stated",
            Orientation::Reflected => "reflected",
        }
    }

    fn sign(&self) -> f64 {
        match self {
            Orientation::Stated => 1.0,
            Orientation::Reflected => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPair {
    /// `K^U(α, β)·√|dα/dx|·√|dβ/dy| / K_∞(x, y)`.
    pub r_jacobian: ComplexVal,
    /// `K^U(α, β) / K_∞(x, y)`.
    pub r_bare: ComplexVal,
}

/// Both ratios at `(x, y)` with `α = 2/x`, `β = 2/y`.
pub fn correspondence_ratio(x: f64, y: f64, s: SParam) -> Result<RatioPair> {
    correspondence_ratio_oriented(x, y, s, Orientation::Stated)
}

pub fn correspondence_ratio_oriented(x: f64, y: f64, s: SParam, orientation: Orientation) -> Result<RatioPair> {
    if !(x > 0.0 && y > 0.0) {
        return domain(format!("correspondence needs x, y > 0, got ({x}, {y})"));
    }
    if x == y {
        return domain("correspondence ratio needs x != y");
    }
    let g = orientation.sign();
    let ku = kernel_u_limit(g * 2.0 / x, g * 2.0 / y, s)?;
    let kinf = KernelHandle::limit(s).eval(x, y)?;
    if kinf == 0.0 {
        return Err(Error::Numerical(format!("K_∞ vanishes at ({x}, {y})")));
    }
    let jac = 2.0 / (x * y);
    Ok(RatioPair {
        r_jacobian: ku * jac / kinf,
        r_bare: ku / kinf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub orientation: Orientation,
    /// True when the Jacobian-weighted ratio is the constant one.
    pub jacobian: bool,
    /// Mean of the selected ratio over the grid.
    pub constant: ComplexVal,
    /// max |r − constant| / |constant| over the grid.
    pub variation: f64,
}

fn variation(vals: &[ComplexVal]) -> (ComplexVal, f64) {
    let mean = vals.iter().sum::<ComplexVal>() / vals.len() as f64;
    let v = vals.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max) / mean.norm();
    (mean, v)
}

/// Tests which ratio is constant over the off-diagonal pairs of `grid²`,
/// trying the stated orientation first and the reflected one second.
pub fn correspondence_check(s: SParam, grid: &[f64], tol: f64) -> Result<Correspondence> {
    let mut best: Option<Correspondence> = None;
    for orientation in [Orientation::Stated, Orientation::Reflected] {
        let mut rj = Vec::new();
        let mut r0 = Vec::new();
        for (a, &x) in grid.iter().enumerate() {
            for &y in &grid[a + 1..] {
                let p = correspondence_ratio_oriented(x, y, s, orientation)?;
                rj.push(p.r_jacobian);
                r0.push(p.r_bare);
            }
        }
        if rj.is_empty() {
            return domain("correspondence grid needs two distinct points");
        }
        let (cj, vj) = variation(&rj);
        let (c0, v0) = variation(&r0);
        let pick = if vj <= v0 {
            Correspondence {
                orientation,
                jacobian: true,
                constant: cj,
                variation: vj,
            }
        } else {
            Correspondence {
                orientation,
                jacobian: false,
                constant: c0,
                variation: v0,
            }
        };
        if pick.variation <= tol {
            return Ok(pick);
        }
        if best.is_none_or(|b| pick.variation < b.variation) {
            best = Some(pick);
        }
    }
    let b = best.expect("two orientations tried");
    Err(Error::Numerical(format!(
        "no correspondence ratio is constant to {tol}: best variation {} ({} orientation)",
        b.variation,
        b.orientation.name()
    )))
}

/// Raw `σ(t) = (1+t²) d/dt log det(I − K_N)_{(t,∞)}` from the resolvent diagonal.
pub fn resolvent_sigma(cfg: EnsembleConfig) -> impl Fn(f64) -> Result<f64> {
    let kh = KernelHandle::finite(cfg);
    let n = cfg.n_dim as f64;
    move |t: f64| {
        if !(t > 0.0) {
            return domain(format!("σ needs raw t > 0, got {t}"));
        }
        let (r, _) = log_derivative(&kh, t / n, &NystromOptions::default())?;
        Ok((1.0 + t * t) * r / n)
    }
}

const SURVIVAL_ORDER: usize = 48;

/// `P[θ₁(N) ≥ y] = exp(−½ ∫₀^y σ(cot(φ/2)) dφ)` by Gauss–Legendre in φ.
/// `sigma_fn` maps raw t to σ(t); `None` uses [`resolvent_sigma`].
pub fn smallest_angle_survival(
    y: AngleVal,
    cfg: EnsembleConfig,
    sigma_fn: Option<&dyn Fn(f64) -> Result<f64>>,
) -> Result<f64> {
    let yv = y.theta();
    if !(yv > 0.0 && yv < PI) {
        return domain(format!("survival needs y in (0, π), got {yv}"));
    }
    let default = resolvent_sigma(cfg);
    let sigma = sigma_fn.unwrap_or(&default);
    let (u, w) = gauss_legendre(SURVIVAL_ORDER);
    let mut integral = 0.0;
    for (ui, wi) in u.iter().zip(&w) {
        let phi = 0.5 * yv * (ui + 1.0);
        let h = 0.5 * phi;
        integral += wi * 0.5 * yv * sigma(h.cos() / h.sin())?;
    }
    Ok((-0.5 * integral).exp())
}

/// The same survival probability read off the largest-eigenvalue CDF at `cot(y/2)`.
pub fn survival_via_cdf(y: AngleVal, cfg: EnsembleConfig) -> Result<f64> {
    let yv = y.theta();
    if !(yv > 0.0 && yv < PI) {
        return domain(format!("survival needs y in (0, π), got {yv}"));
    }
    let a = cot_half(y)?;
    cdf_largest(KernelKind::FiniteScaled(cfg), a / cfg.n_dim as f64)
}
