//! Weight, orthogonal polynomials and correlation kernels of the generalized
//! Cauchy ensemble, at finite N (scaled variables) and in the N → ∞ limit.

use crate::error::{domain, Error, Result};
use crate::specfun::{hyp1f1_full, hyp2f1_terminating_full, log_gamma, ComplexVal};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Deformation parameter `s` with `Re s > -1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SParam {
    re: f64,
    im: f64,
}

impl SParam {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) {
            return domain(format!("s = {re}+{im}i is not finite"));
        }
        if re <= -0.5 {
            return domain(format!("Re s must exceed -1/2, got {re}"));
        }
        Ok(SParam { re, im })
    }

    pub fn real(re: f64) -> Result<Self> {
        Self::new(re, 0.0)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn complex(&self) -> ComplexVal {
        ComplexVal::new(self.re, self.im)
    }

    pub fn conj(&self) -> ComplexVal {
        ComplexVal::new(self.re, -self.im)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub s: SParam,
    pub n_dim: usize,
}

impl EnsembleConfig {
    pub fn new(s: SParam, n_dim: usize) -> Result<Self> {
        if n_dim == 0 {
            return domain("matrix size N must be at least 1");
        }
        Ok(EnsembleConfig { s, n_dim })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    FiniteScaled(EnsembleConfig),
    Limit(SParam),
}

impl KernelKind {
    pub fn s(&self) -> SParam {
        match self {
            KernelKind::FiniteScaled(cfg) => cfg.s,
            KernelKind::Limit(s) => *s,
        }
    }
}

/// Values and x-derivatives of the two functions spanning a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQPair {
    pub p_val: ComplexVal,
    pub p_deriv: ComplexVal,
    pub q_val: ComplexVal,
    pub q_deriv: ComplexVal,
    /// Cancellation gauge of the underlying series, Σ|term| / |sum| (≥ 1).
    pub cond: f64,
}

/// `ln w_H(x)` with `w_H(x) = (1+x²)^{-Re s-N} e^{2 Im s atan x}`.
pub fn weight_log(x: f64, cfg: &EnsembleConfig) -> f64 {
    let s = cfg.s;
    -(s.re + cfg.n_dim as f64) * (x * x).ln_1p() + 2.0 * s.im * x.atan()
}

fn poly_with_deriv(m: usize, h: ComplexVal, a: f64, x: f64) -> (ComplexVal, ComplexVal) {
    let i = ComplexVal::i();
    let zeta = 2.0 / (1.0 + i * x);
    let f = hyp2f1_terminating_full(m, h, a, zeta);
    // dζ/dx = -(i/2) ζ²
    let df = -0.5 * i * f.zeta_deriv * zeta;
    let base = ComplexVal::new(x, -1.0);
    let pw = base.powu(m as u32);
    let val = pw * f.value;
    let der = if m == 0 {
        df
    } else {
        base.powu(m as u32 - 1) * (f.value * m as f64 + base * df)
    };
    (val, der)
}

/// Monic orthogonal polynomial `p_m` of the N-point ensemble.
pub fn p_monic(m: usize, x: f64, cfg: &EnsembleConfig) -> Result<ComplexVal> {
    p_monic_with_deriv(m, x, cfg).map(|(v, _)| v)
}

fn p_monic_with_deriv(m: usize, x: f64, cfg: &EnsembleConfig) -> Result<(ComplexVal, ComplexVal)> {
    let n = cfg.n_dim;
    if m > n {
        return domain(format!("polynomial degree {m} exceeds N = {n}"));
    }
    let a = 2.0 * cfg.s.re + 2.0 * (n - m) as f64;
    if a <= 0.0 {
        return domain(format!("lower parameter 2Re s+2N-2m = {a} is not positive"));
    }
    let h = cfg.s.complex() + (n - m) as f64;
    Ok(poly_with_deriv(m, h, a, x))
}

/// The modified degree-N polynomial `(x-i)^N ₂F₁[-N, s; 2Re s+1; 2/(1+ix)]`.
pub fn p_tilde(x: f64, cfg: &EnsembleConfig) -> ComplexVal {
    poly_with_deriv(cfg.n_dim, cfg.s.complex(), 2.0 * cfg.s.re + 1.0, x).0
}

/// `ln C` for the normalization constant multiplying the raw kernel.
pub fn normalization_log(cfg: &EnsembleConfig) -> f64 {
    let r = cfg.s.re;
    let n = cfg.n_dim as f64;
    let lg_s = log_gamma(cfg.s.complex() + 1.0).map(|v| v.re).unwrap_or(f64::NAN);
    2.0 * r * 2f64.ln() - PI.ln() + ln_g(2.0 * r + n + 1.0) + 2.0 * lg_s
        - ln_g(n)
        - ln_g(2.0 * r + 1.0)
        - ln_g(2.0 * r + 2.0)
}

fn ln_g(x: f64) -> f64 {
    crate::specfun::ln_gamma(x)
}

/// Unscaled finite-N kernel assembled straight from `p̃_N`, `p_{N-1}`,
/// `√w_H` and `C`. Underflows for moderate N; intended as a reference.
pub fn raw_kernel(u: f64, v: f64, cfg: &EnsembleConfig) -> Result<f64> {
    if u == v {
        return domain("raw kernel is only assembled off the diagonal");
    }
    let n = cfg.n_dim;
    let num = p_tilde(u, cfg) * p_monic(n - 1, v, cfg)? - p_monic(n - 1, u, cfg)? * p_tilde(v, cfg);
    let lw = 0.5 * (weight_log(u, cfg) + weight_log(v, cfg)) + normalization_log(cfg);
    Ok((num / (u - v)).re * lw.exp())
}

/// Common prefactor `(1/2π)|Γ(s+1)|² / (Γ(2Re s+1)Γ(2Re s+2))`.
pub fn kernel_prefactor(s: SParam) -> f64 {
    let lg = log_gamma(s.complex() + 1.0).map(|v| v.re).unwrap_or(f64::NAN);
    (2.0 * lg - ln_g(2.0 * s.re + 1.0) - ln_g(2.0 * s.re + 2.0)).exp() / (2.0 * PI)
}

fn dprime_log(cfg: &EnsembleConfig) -> f64 {
    let r = cfg.s.re;
    let n = cfg.n_dim as f64;
    0.5 * (ln_g(2.0 * r + n + 1.0) - (2.0 * r + 1.0) * n.ln() - ln_g(n))
}

/// Principal `Log(1 + iu)` without forming `1 + iu`.
fn log_1p_iu(u: f64) -> ComplexVal {
    ComplexVal::new(0.5 * (u * u).ln_1p(), u.atan())
}

struct Phi {
    val: ComplexVal,
    deriv: ComplexVal,
    cond: f64,
}

// Stabilized Sgn(x)^N · Φ_N for one (n, h, a) triple.
fn stabilized_phi(x: f64, s: SParam, nn: usize, dlog: f64, n: usize, h: ComplexVal, a: f64) -> Phi {
    let i = ComplexVal::i();
    let nf = nn as f64;
    let k = (nn - n) as f64;
    let sgn = x.signum();
    let u = 1.0 / (nf * x);
    let e1 = (nf - s.complex()) * 0.5 - k;
    let e2 = -(s.conj() + nf) * 0.5;
    let lg = dlog + PI * s.im * sgn * 0.5 + s.re * (2.0 / x.abs()).ln();
    let lpow = e1 * log_1p_iu(-u) + e2 * log_1p_iu(u) + lg;
    let pref = lpow.exp() * (2.0 / x).powi(k as i32);

    let zeta = 2.0 / (1.0 + i * nf * x);
    let f = hyp2f1_terminating_full(n, h, a, zeta);
    let df = -0.5 * i * nf * zeta * f.zeta_deriv;

    let du = i * u / x; // i/(N x²)
    let dlogpref = -(k + s.re) / x + e1 * du / (1.0 - i * u) - e2 * du / (1.0 + i * u);
    Phi {
        val: pref * f.value,
        deriv: pref * (f.value * dlogpref + df),
        cond: f.abs_sum / f.value.norm().max(f64::MIN_POSITIVE),
    }
}

/// `Sgn(x)^N P̃_N(x)`, `Sgn(x)^N Q_N(x)` and their derivatives in the scaled variable.
pub fn eval_pq_scaled(x: f64, cfg: &EnsembleConfig) -> Result<PQPair> {
    eval_pq_scaled_with(x, cfg, dprime_log(cfg))
}

fn eval_pq_scaled_with(x: f64, cfg: &EnsembleConfig, dlog: f64) -> Result<PQPair> {
    if x == 0.0 || !x.is_finite() {
        return domain(format!("scaled functions need finite x != 0, got {x}"));
    }
    let s = cfg.s;
    let n = cfg.n_dim;
    let p = stabilized_phi(x, s, n, dlog, n, s.complex(), 2.0 * s.re + 1.0);
    let q = stabilized_phi(x, s, n, dlog, n - 1, s.complex() + 1.0, 2.0 * s.re + 2.0);
    Ok(PQPair {
        p_val: p.val,
        p_deriv: p.deriv,
        q_val: q.val,
        q_deriv: q.deriv,
        cond: p.cond.max(q.cond),
    })
}

/// Limit functions `P̃`, `Q` built from Kummer series at `2i/x`.
pub fn eval_pq_limit(x: f64, s: SParam, tol: f64) -> Result<PQPair> {
    if x == 0.0 || !x.is_finite() {
        return domain(format!("limit functions need finite x != 0, got {x}"));
    }
    let i = ComplexVal::i();
    let z = 2.0 * i / x;
    let m1 = hyp1f1_full(s.complex(), 2.0 * s.re + 1.0, z, tol)?;
    let m2 = hyp1f1_full(s.complex() + 1.0, 2.0 * s.re + 2.0, z, tol)?;
    let e = (ComplexVal::new(s.re * (2.0 / x.abs()).ln() + PI * s.im * x.signum() * 0.5, 0.0) - i / x).exp();
    let dle = -s.re / x + i / (x * x);
    let (v1, v2) = (m1.result.value, m2.result.value);
    let p_val = e * v1;
    let p_deriv = e * (v1 * dle - m1.z_deriv / x);
    let q_val = e * v2 * (2.0 / x);
    let q_deriv = e * (2.0 / x) * (v2 * (dle - 1.0 / x) - m2.z_deriv / x);
    let cond = (m1.abs_sum / v1.norm()).max(m2.abs_sum / v2.norm());
    Ok(PQPair {
        p_val,
        p_deriv,
        q_val,
        q_deriv,
        cond,
    })
}

/// Relative gap below which the kernel uses the Gauss-integrated Wronskian form.
pub const DEFAULT_DIAG_SWITCH: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-14;
const IMAG_RESIDUE: f64 = 1e-10;

/// Immutable kernel evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelHandle {
    pub kind: KernelKind,
    pub diag_switch: f64,
    pub tol: f64,
    prefactor: f64,
    dlog: f64,
}

impl KernelHandle {
    pub fn new(kind: KernelKind) -> Self {
        let s = kind.s();
        let dlog = match &kind {
            KernelKind::FiniteScaled(cfg) => dprime_log(cfg),
            KernelKind::Limit(_) => 0.0,
        };
        KernelHandle {
            kind,
            diag_switch: DEFAULT_DIAG_SWITCH,
            tol: DEFAULT_TOL,
            prefactor: kernel_prefactor(s),
            dlog,
        }
    }

    pub fn finite(cfg: EnsembleConfig) -> Self {
        Self::new(KernelKind::FiniteScaled(cfg))
    }

    pub fn limit(s: SParam) -> Self {
        Self::new(KernelKind::Limit(s))
    }

    pub fn with_diag_switch(mut self, diag_switch: f64) -> Self {
        self.diag_switch = diag_switch;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn s(&self) -> SParam {
        self.kind.s()
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn pq(&self, x: f64) -> Result<PQPair> {
        match &self.kind {
            KernelKind::FiniteScaled(cfg) => eval_pq_scaled_with(x, cfg, self.dlog),
            KernelKind::Limit(s) => eval_pq_limit(x, *s, self.tol),
        }
    }

    fn check_pair(x: f64, y: f64) -> Result<()> {
        if x == 0.0 || y == 0.0 || x.signum() != y.signum() || !x.is_finite() || !y.is_finite() {
            return domain(format!("kernel needs finite nonzero same-sign arguments, got ({x}, {y})"));
        }
        Ok(())
    }

    fn near_diagonal(&self, x: f64, y: f64) -> bool {
        (x - y).abs() <= self.diag_switch * x.abs().max(y.abs())
    }

    /// Kernel value from precomputed pairs at `x` and `y`.
    pub fn eval_from(&self, x: f64, px: &PQPair, y: f64, py: &PQPair) -> Result<f64> {
        if x == y {
            return self.wronskian(px);
        }
        let (x, px, y, py) = if x < y { (x, px, y, py) } else { (y, py, x, px) };
        if self.near_diagonal(x, y) {
            return self.band(x, px, y);
        }
        let a = px.p_val * py.q_val;
        let b = px.q_val * py.p_val;
        let num = a - b;
        let scale = a.norm() + b.norm();
        check_imag(num, scale, px.cond + py.cond)?;
        Ok(self.prefactor * num.re / (x - y))
    }

    // P(x)Q(y) − Q(x)P(y) = ∫_x^y P(x)Q'(t) − Q(x)P'(t) dt, two-point Gauss in t
    fn band(&self, x: f64, px: &PQPair, y: f64) -> Result<f64> {
        let (m, h) = (0.5 * (x + y), 0.5 * (y - x) / 3f64.sqrt());
        let mut avg = ComplexVal::new(0.0, 0.0);
        let mut scale = 0.0;
        let mut cond = px.cond;
        for t in [m - h, m + h] {
            let pt = self.pq(t)?;
            let (a, b) = (px.p_val * pt.q_deriv, px.q_val * pt.p_deriv);
            avg += 0.5 * (a - b);
            scale += 0.5 * (a.norm() + b.norm());
            cond = cond.max(pt.cond);
        }
        check_imag(avg, scale, 2.0 * cond)?;
        Ok(-self.prefactor * avg.re)
    }

    fn wronskian(&self, p: &PQPair) -> Result<f64> {
        let a = p.p_deriv * p.q_val;
        let b = p.q_deriv * p.p_val;
        let w = a - b;
        check_imag(w, a.norm() + b.norm(), 2.0 * p.cond)?;
        Ok(self.prefactor * w.re)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Self::check_pair(x, y)?;
        if x == y {
            return self.wronskian(&self.pq(x)?);
        }
        // order the pair so K(x,y) and K(y,x) share one floating-point path
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let px = self.pq(x)?;
        if self.near_diagonal(x, y) {
            return self.band(x, &px, y);
        }
        self.eval_from(x, &px, y, &self.pq(y)?)
    }

    /// First partial derivative in `x`, off the near-diagonal band.
    pub fn eval_dx(&self, x: f64, y: f64) -> Result<f64> {
        Self::check_pair(x, y)?;
        if self.near_diagonal(x, y) {
            return domain("analytic partial derivative is not available on the diagonal band");
        }
        let (px, py) = (self.pq(x)?, self.pq(y)?);
        let num = px.p_val * py.q_val - px.q_val * py.p_val;
        let dnum = px.p_deriv * py.q_val - px.q_deriv * py.p_val;
        let d = x - y;
        Ok(self.prefactor * (dnum.re / d - num.re / (d * d)))
    }
}

fn check_imag(v: ComplexVal, scale: f64, cond: f64) -> Result<()> {
    let thr = IMAG_RESIDUE * cond.max(1.0) * scale;
    if v.im.abs() > thr && v.im.abs() > 1e-300 {
        return Err(Error::Numerical(format!(
            "kernel imaginary residue {:.3e} exceeds {:.3e}",
            v.im.abs(),
            thr
        )));
    }
    Ok(())
}

pub fn kernel_eval(kh: &KernelHandle, x: f64, y: f64) -> Result<f64> {
    kh.eval(x, y)
}

/// Matrix `[K(x_i, x_j)]`; its determinant is the n-point correlation.
pub fn correlation_matrix(kh: &KernelHandle, pts: &[f64]) -> Result<DMatrix<f64>> {
    if let Some(&p0) = pts.first() {
        for &p in pts {
            KernelHandle::check_pair(p0, p)?;
        }
    }
    let pq: Vec<PQPair> = pts.iter().map(|&x| kh.pq(x)).collect::<Result<_>>()?;
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if pts[i] <= pts[j] {
                kh.eval_from(pts[i], &pq[i], pts[j], &pq[j])?
            } else {
                kh.eval_from(pts[j], &pq[j], pts[i], &pq[i])?
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Normalized residual of the first-order system satisfied by
/// `φ = √(C w_H) p_N` and `ψ = √(C w_H) p_{N-1}` in raw variables.
pub fn phi_psi_recurrence_residual(x: f64, cfg: &EnsembleConfig) -> Result<f64> {
    let s = cfg.s;
    if s.re <= 0.5 {
        return domain(format!("recurrence needs Re s > 1/2, got {}", s.re));
    }
    let n = cfg.n_dim;
    let nf = n as f64;
    // φ/√(Cw) = p_N; φ'/√(Cw) = p_N' + λ p_N with λ = (ln √w)'
    let lam = (-(s.re + nf) * x + s.im) / (1.0 + x * x);
    let (pn, dpn) = p_monic_with_deriv(n, x, cfg)?;
    let (pm, dpm) = p_monic_with_deriv(n - 1, x, cfg)?;
    let (phi, dphi) = (pn, dpn + pn * lam);
    let (psi, dpsi) = (pm, dpm + pm * lam);
    let m = 1.0 + x * x;
    let a = -x * s.re + s.im * (1.0 + nf / s.re);
    let b = s.norm_sqr() / (s.re * s.re) * nf * (2.0 * s.re + nf) / (2.0 * s.re + 1.0);
    let c = 2.0 * s.re + 1.0;
    let r1 = relative(&[dphi * m, -phi * a, -psi * b]);
    let r2 = relative(&[dpsi * m, phi * c, psi * a]);
    Ok(r1.max(r2))
}

fn relative(terms: &[ComplexVal]) -> f64 {
    let sum: ComplexVal = terms.iter().sum();
    let norm: f64 = terms.iter().map(|t| t.norm()).sum();
    if norm == 0.0 {
        0.0
    } else {
        sum.norm() / norm
    }
}

/// Normalized residual of the first-order system for the limit functions.
///
/// The system holds for `P = P̃ + i s Q / (2Re s (2Re s+1))` and `Q/2`.
pub fn limit_pq_recurrence_residual(x: f64, s: SParam) -> Result<f64> {
    if s.re == 0.0 {
        return domain("limit recurrence needs Re s != 0");
    }
    let pq = eval_pq_limit(x, s, DEFAULT_TOL)?;
    let i = ComplexVal::i();
    let r = s.re;
    let mix = i * s.complex() / (2.0 * r * (2.0 * r + 1.0));
    let (p, dp) = (pq.p_val + mix * pq.q_val, pq.p_deriv + mix * pq.q_deriv);
    let (q, dq) = (pq.q_val * 0.5, pq.q_deriv * 0.5);
    let a = -x * r + s.im / r;
    let b = s.norm_sqr() / (r * r) / (2.0 * r + 1.0);
    let x2 = x * x;
    let r1 = relative(&[dp * x2, -p * a, -q * b]);
    let r2 = relative(&[dq * x2, p * (2.0 * r + 1.0), q * a]);
    Ok(r1.max(r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(re: f64, im: f64, n: usize) -> EnsembleConfig {
        EnsembleConfig::new(SParam::new(re, im).unwrap(), n).unwrap()
    }

    #[test]
    fn sparam_admissibility() {
        assert!(SParam::new(-0.5, 0.0).is_err());
        assert!(SParam::new(-0.49, 3.0).is_ok());
        assert!(SParam::new(f64::NAN, 0.0).is_err());
        assert!(EnsembleConfig::new(SParam::real(0.0).unwrap(), 0).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight_log(0.0, &cfg(0.3, 0.4, 3)), 0.0);
        assert!((weight_log(1.0, &cfg(0.0, 0.0, 1)) + 2f64.ln()).abs() < 1e-15);
        let v = weight_log(2.0, &cfg(0.3, 0.4, 3));
        assert!((v - (-3.3 * 5f64.ln() + 0.8 * 2f64.atan())).abs() < 1e-14);
    }

    #[test]
    fn monic_leading_coefficient() {
        let c = cfg(0.0, 0.0, 2);
        assert_eq!(p_monic(0, 0.3, &c).unwrap(), ComplexVal::new(1.0, 0.0));
        let r3 = p_monic(1, 1e3, &c).unwrap() / 1e3;
        let r4 = p_monic(1, 1e4, &c).unwrap() / 1e4;
        assert!((r4 - 1.0).norm() < (r3 - 1.0).norm());
        assert!((r4 - 1.0).norm() < 1e-3);
        assert!(p_monic(3, 0.1, &c).is_err());
    }

    #[test]
    fn p_tilde_reductions() {
        let c = cfg(0.0, 0.0, 3);
        let x = 2.0;
        let expect = ComplexVal::new(x, -1.0).powu(3);
        assert!((p_tilde(x, &c) - expect).norm() < 1e-13);
        let c1 = cfg(1.0, 0.0, 1);
        let i = ComplexVal::i();
        let expect = ComplexVal::new(1.0, -1.0) * (1.0 - (1.0 / 3.0) * 2.0 / (1.0 + i));
        assert!((p_tilde(1.0, &c1) - expect).norm() < 1e-14);
    }

    #[test]
    fn sine_kernel_diagonal() {
        let kh = KernelHandle::limit(SParam::real(0.0).unwrap());
        let v = kh.eval(2.0, 2.0).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-14);
        let v = kh.eval(1.0, 2.0).unwrap();
        assert!((v - (-0.5f64).sin() / (-PI)).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let kh = KernelHandle::limit(SParam::real(1.0).unwrap());
        assert!(kh.eval(-1.0, 2.0).unwrap_err().is_domain());
        assert!(kh.eval(0.0, 2.0).unwrap_err().is_domain());
        assert!(eval_pq_scaled(0.0, &cfg(1.0, 0.0, 3)).is_err());
        assert!(phi_psi_recurrence_residual(1.0, &cfg(0.5, 0.0, 3)).is_err());
        assert!(limit_pq_recurrence_residual(1.0, SParam::new(0.0, 0.3).unwrap()).is_err());
    }
}
