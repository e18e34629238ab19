//! Chebyshev interpolation on an interval with spectral differentiation.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

/// First-kind Chebyshev points mapped to `[a, b]`, in decreasing order.
pub fn cheb_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n)
        .map(|j| mid + half * (PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}

impl ChebSeries {
    /// Interpolant through values sampled at `cheb_points(a, b, values.len())`.
    pub fn fit(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        let nf = n as f64;
        let mut coeffs: Vec<f64> = (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, f)| f * (PI * k as f64 * (j as f64 + 0.5) / nf).cos())
                    .sum();
                2.0 * s / nf
            })
            .collect();
        if let Some(c0) = coeffs.first_mut() {
            *c0 *= 0.5;
        }
        ChebSeries { a, b, coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(1)];
        if n >= 2 {
            d[n - 2] = 2.0 * (n - 1) as f64 * self.coeffs[n - 1];
            for k in (1..n - 1).rev() {
                let next = if k + 1 < n { d[k + 1] } else { 0.0 };
                d[k - 1] = next + 2.0 * k as f64 * self.coeffs[k];
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / (self.b - self.a);
        for v in &mut d {
            *v *= scale;
        }
        ChebSeries {
            a: self.a,
            b: self.b,
            coeffs: d,
        }
    }

    /// Largest of the last three coefficient magnitudes over the largest one.
    pub fn trailing_ratio(&self) -> f64 {
        let n = self.coeffs.len();
        let lead = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if lead == 0.0 {
            return 0.0;
        }
        let tail = self.coeffs[n.saturating_sub(3)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        tail / lead
    }

    pub fn trailing_abs(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(3)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_exp() {
        let (a, b) = (1.0, 3.0);
        let v: Vec<f64> = cheb_points(a, b, 30).iter().map(|t| (0.7 * t).exp()).collect();
        let f = ChebSeries::fit(a, b, &v);
        let d1 = f.derivative();
        let d3 = d1.derivative().derivative();
        for t in [1.1f64, 1.7, 2.9] {
            let e = (0.7 * t).exp();
            assert!((f.eval(t) - e).abs() < 1e-13 * e);
            assert!((d1.eval(t) - 0.7 * e).abs() < 1e-11 * e);
            assert!((d3.eval(t) - 0.343 * e).abs() < 1e-9 * e);
        }
        assert!(f.trailing_ratio() < 1e-14);
    }
}
