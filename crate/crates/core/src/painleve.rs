//! σ and θ functions built from logarithmic derivatives of gap
//! determinants, and the residuals of the Painlevé ODEs they satisfy.

use crate::error::{domain, Result};
use crate::fredholm::{gap_derivatives_with, DerivativeOptions, GapInterpolant};
use crate::kernels::{EnsembleConfig, KernelHandle, KernelKind, SParam};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSample {
    pub t: f64,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSample {
    pub tau: f64,
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub grid: Vec<f64>,
    pub residuals: Vec<f64>,
    pub normalizers: Vec<f64>,
    pub max_relative: f64,
}

impl ResidualReport {
    pub fn from_pairs(grid: Vec<f64>, pairs: &[(f64, f64)]) -> Self {
        let residuals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let normalizers: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let max_relative = pairs
            .iter()
            .map(|&(r, n)| if n > 0.0 { r / n } else { 0.0 })
            .fold(0.0, f64::max);
        ResidualReport {
            grid,
            residuals,
            normalizers,
            max_relative,
        }
    }
}

/// `σ(t) = (1+t²) d/dt log det(I - K_N)` on raw `(t, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFunction {
    pub cfg: EnsembleConfig,
    pub interp: GapInterpolant,
}

impl SigmaFunction {
    pub fn sample(&self, t: f64) -> Result<SigmaSample> {
        let n = self.cfg.n_dim as f64;
        let [_, l1, l2, l3] = self.interp.log_derivs(t / n)?;
        Ok(sigma_from_log_derivs(t, n, l1, l2, l3))
    }
}

// raw-variable chain rule for log F_N(t/N)
fn sigma_from_log_derivs(t: f64, n: f64, l1: f64, l2: f64, l3: f64) -> SigmaSample {
    let m = 1.0 + t * t;
    SigmaSample {
        t,
        sigma: m * l1 / n,
        sigma1: 2.0 * t * l1 / n + m * l2 / (n * n),
        sigma2: 2.0 * l1 / n + 4.0 * t * l2 / (n * n) + m * l3 / (n * n * n),
    }
}

/// Interpolated σ over a raw interval `[t_a, t_b]`.
pub fn sigma_from_gap(cfg: EnsembleConfig, t_interval: [f64; 2], cheb_order: usize) -> Result<SigmaFunction> {
    sigma_from_gap_with(cfg, t_interval, &DerivativeOptions::new(cheb_order))
}

pub fn sigma_from_gap_with(cfg: EnsembleConfig, t_interval: [f64; 2], opts: &DerivativeOptions) -> Result<SigmaFunction> {
    let [a, b] = t_interval;
    if !(a > 0.0 && b > a) {
        return domain(format!("σ interval needs 0 < a < b, got [{a}, {b}]"));
    }
    let n = cfg.n_dim as f64;
    let interp = gap_derivatives_with(&KernelHandle::finite(cfg), [a / n, b / n], opts)?;
    Ok(SigmaFunction { cfg, interp })
}

/// Residual and term-magnitude normalizer of the σ-form Painlevé VI equation
///
/// (1+t²)²σ''² + 4(1+t²)σ'³ − 8tσ'²σ + 4σ²(σ' − r²) + 8(tr² − rm − Nm)σσ'
///   + 4(2tm(N+r) − m² − t²r² + N(2r+N))σ'² = 0,  s = r + im.
pub fn sigma_pvi_residual(sample: &SigmaSample, cfg: &EnsembleConfig) -> (f64, f64) {
    let terms = pvi_terms(sample, cfg);
    let lhs: f64 = terms.iter().sum();
    (lhs.abs(), terms.iter().map(|v| v.abs()).sum())
}

fn pvi_terms(p: &SigmaSample, cfg: &EnsembleConfig) -> [f64; 6] {
    let (r, m) = (cfg.s.re(), cfg.s.im());
    let n = cfg.n_dim as f64;
    let t = p.t;
    let (s0, s1, s2) = (p.sigma, p.sigma1, p.sigma2);
    let w = 1.0 + t * t;
    [
        w * w * s2 * s2,
        4.0 * w * s1 * s1 * s1,
        -8.0 * t * s1 * s1 * s0,
        4.0 * s0 * s0 * (s1 - r * r),
        8.0 * (t * r * r - r * m - n * m) * s0 * s1,
        4.0 * (2.0 * t * m * (n + r) - m * m - t * t * r * r + n * (2.0 * r + n)) * s1 * s1,
    ]
}

/// `θ(τ) = τ d/dτ log det(I - K)` on `(1/τ, ∞)`, scaled variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFunction {
    pub kind: KernelKind,
    pub interp: GapInterpolant,
}

impl ThetaFunction {
    pub fn sample(&self, tau: f64) -> Result<ThetaSample> {
        let [_, l1, l2, l3] = self.interp.log_derivs(1.0 / tau)?;
        Ok(theta_from_log_derivs(tau, l1, l2, l3))
    }

    /// σ at raw `t = N/τ` read off the same interpolant; finite kinds only.
    pub fn sigma_at(&self, tau: f64) -> Result<SigmaSample> {
        let KernelKind::FiniteScaled(cfg) = self.kind else {
            return domain("σ is defined for finite-N kernels only");
        };
        let n = cfg.n_dim as f64;
        let [_, l1, l2, l3] = self.interp.log_derivs(1.0 / tau)?;
        Ok(sigma_from_log_derivs(n / tau, n, l1, l2, l3))
    }
}

fn theta_from_log_derivs(tau: f64, l1: f64, l2: f64, l3: f64) -> ThetaSample {
    let (i1, i2) = (1.0 / tau, 1.0 / (tau * tau));
    let (i3, i4, i5) = (i2 * i1, i2 * i2, i2 * i2 * i1);
    ThetaSample {
        tau,
        theta: -l1 * i1,
        theta1: i2 * l1 + i3 * l2,
        theta2: -2.0 * i3 * l1 - 4.0 * i4 * l2 - i5 * l3,
    }
}

pub fn theta_from_gap(kind: KernelKind, tau_interval: [f64; 2], cheb_order: usize) -> Result<ThetaFunction> {
    theta_from_gap_with(kind, tau_interval, &DerivativeOptions::new(cheb_order))
}

pub fn theta_from_gap_with(kind: KernelKind, tau_interval: [f64; 2], opts: &DerivativeOptions) -> Result<ThetaFunction> {
    let [a, b] = tau_interval;
    if !(a > 0.0 && b > a) {
        return domain(format!("τ interval needs 0 < a < b, got [{a}, {b}]"));
    }
    let interp = gap_derivatives_with(&KernelHandle::new(kind), [1.0 / b, 1.0 / a], opts)?;
    Ok(ThetaFunction { kind, interp })
}

/// Residual and normalizer of the σ-form Painlevé V equation for θ.
///
/// The complex form −τ²θ''² = [2u + θ'² + i(s̄−s)θ']² − θ'²(θ'−2is)(θ'+2is̄),
/// u = τθ' − θ, expands to the real polynomial
/// τ²θ''² + 4θ'²u − 4(Re s)²θ'² + 8 Im s θ'u + 4u² = 0.
pub fn theta_pv_residual(sample: &ThetaSample, s: SParam) -> (f64, f64) {
    let terms = pv_terms(sample, s);
    let lhs: f64 = terms.iter().sum();
    (lhs.abs(), terms.iter().map(|v| v.abs()).sum())
}

fn pv_terms(p: &ThetaSample, s: SParam) -> [f64; 5] {
    let (r, m) = (s.re(), s.im());
    let (th, t1, t2) = (p.theta, p.theta1, p.theta2);
    let u = p.tau * t1 - th;
    [
        p.tau * p.tau * t2 * t2,
        4.0 * t1 * t1 * u,
        -4.0 * r * r * t1 * t1,
        8.0 * m * t1 * u,
        4.0 * u * u,
    ]
}

/// One rung of the N-ladder in [`rescaled_expansion_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionRow {
    pub n: usize,
    /// Relative σ-PV residual of θ_N, the leading term of the expansion.
    pub p0: f64,
    /// Relative σ-PVI residual at raw `t = N/τ`.
    pub full: f64,
}

/// Substitute `t = N/τ` into the σ-PVI equation for N, 2N, 4N and report the
/// leading σ-PV part next to the full residual.
pub fn rescaled_expansion_check(cfg: EnsembleConfig, tau: f64) -> Result<Vec<ExpansionRow>> {
    if !(tau > 0.0) {
        return domain(format!("τ must be positive, got {tau}"));
    }
    let window = [tau / 1.25, tau * 1.25];
    [1usize, 2, 4]
        .iter()
        .map(|&k| {
            let c = EnsembleConfig::new(cfg.s, cfg.n_dim * k)?;
            let th = theta_from_gap(KernelKind::FiniteScaled(c), window, 16)?;
            let (r0, n0) = theta_pv_residual(&th.sample(tau)?, c.s);
            let (r1, n1) = sigma_pvi_residual(&th.sigma_at(tau)?, &c);
            Ok(ExpansionRow {
                n: c.n_dim,
                p0: if n0 > 0.0 { r0 / n0 } else { 0.0 },
                full: if n1 > 0.0 { r1 / n1 } else { 0.0 },
            })
        })
        .collect()
}
