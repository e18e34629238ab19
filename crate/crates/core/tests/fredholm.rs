use gcye::fredholm::*;
use gcye::kernels::*;
use gcye::quadrature::*;
use gcye::Error;
use std::f64::consts::PI;

fn s(re: f64, im: f64) -> SParam {
    SParam::new(re, im).unwrap()
}

#[test]
fn quadrature_probes() {
    let q = build_quadrature(2.0, 80, MapKind::Rational, 3.0).unwrap();
    assert!((q.integrate(|x| x.powi(-2)) - 0.5).abs() < 1e-12);
    assert!(q.nodes.windows(2).all(|w| w[0] < w[1]) && q.nodes[0] > 2.0);
    assert!(q.weights.iter().all(|&w| w > 0.0));
    let q = build_quadrature(1.0, 80, MapKind::Rational, 2.0).unwrap();
    assert!((q.integrate(|x| (-x).exp()) - (-1f64).exp()).abs() < 1e-10);
    let q = build_quadrature(1.0, 160, MapKind::TanhSinh, 2.0).unwrap();
    assert!((q.integrate(|x| x.powf(-1.5)) - 2.0).abs() < 1e-8);
    assert!(q.nodes.windows(2).all(|w| w[0] < w[1]) && q.nodes[0] > 1.0);
    let q = build_quadrature(2.0, 80, MapKind::TanhSinh, 3.0).unwrap();
    assert!((q.integrate(|x| x.powi(-2)) - 0.5).abs() < 1e-10);
    assert!(build_quadrature(0.0, 80, MapKind::Rational, 1.0).unwrap_err().is_domain());
    assert!(build_quadrature(1.0, 4, MapKind::Rational, 1.0).is_err());
}

#[test]
fn zero_kernel_is_one() {
    let g = gap_nystrom(&ZeroKernel, 1.0, 32).unwrap();
    assert_eq!(g.value, 1.0);
}

// K(x,y) = c e^{-x-y} is rank one: det(I - K) on (t,∞) = 1 - c e^{-2t}/2.
struct RankOne(f64);

impl IntegralKernel for RankOne {
    fn kernel(&self, x: f64, y: f64) -> gcye::Result<f64> {
        Ok(self.0 * (-x - y).exp())
    }
}

#[test]
fn rank_one_kernel_closed_form() {
    let k = RankOne(3.0);
    for t in [0.5f64, 1.0, 3.0] {
        let want = 1.0 - 1.5 * (-2.0 * t).exp();
        let g = gap_nystrom(&k, t, 32).unwrap();
        assert!((g.value - want).abs() < 1e-10);
        let g = gap_series(&k, t, 3).unwrap();
        assert!((g.value - want).abs() < 1e-10);
    }
}

#[test]
fn cauchy_anchor() {
    let cfg = EnsembleConfig::new(s(0.0, 0.0), 1).unwrap();
    let v = cdf_largest(KernelKind::FiniteScaled(cfg), 1.0).unwrap();
    assert!((v - 0.75).abs() < 1e-8);
    for x in [0.3, 2.0, 7.0] {
        let v = cdf_largest(KernelKind::FiniteScaled(cfg), x).unwrap();
        assert!((v - (0.5 + x.atan() / PI)).abs() < 1e-10);
    }
    assert!(cdf_largest(KernelKind::Limit(s(0.0, 0.0)), 0.0).unwrap_err().is_domain());
}

#[test]
fn first_series_term_closed_form() {
    let kh = KernelHandle::limit(s(0.0, 0.0));
    match gap_series(&kh, 10.0, 1) {
        Err(Error::Truncation { value, .. }) => {
            assert!((value - (1.0 - 1.0 / (10.0 * PI))).abs() < 1e-12)
        }
        other => panic!("expected truncation warning, got {other:?}"),
    }
    let far = gap_series(&kh, 1e3, 2).unwrap();
    assert!((far.value - 1.0).abs() < 1e-3);
}

#[test]
fn nystrom_agrees_with_series() {
    let kh = KernelHandle::limit(s(0.0, 0.0));
    let a = gap_nystrom(&kh, 5.0, 32).unwrap();
    let b = gap_series(&kh, 5.0, 6).unwrap();
    assert!((a.value - b.value).abs() < 1e-8);
    let kh = KernelHandle::limit(s(1.0, 0.0));
    let a = gap_nystrom(&kh, 4.0, 32).unwrap();
    let b = gap_series(&kh, 4.0, 6).unwrap();
    assert!((a.value - b.value).abs() < 1e-7);
    for (re, im) in [(0.0, 0.0), (1.0, 0.0), (0.3, 0.4)] {
        let kh = KernelHandle::limit(s(re, im));
        for t in [4.0, 7.0] {
            let a = gap_nystrom(&kh, t, 32).unwrap();
            let b = gap_series(&kh, t, 8).unwrap();
            let tol = 10.0 * (a.error_estimate + b.error_estimate);
            assert!((a.value - b.value).abs() <= tol, "s={re}+{im}i t={t} {a:?} {b:?}");
        }
    }
}

#[test]
fn order_robustness() {
    let kh = KernelHandle::finite(EnsembleConfig::new(s(1.0, 0.0), 20).unwrap());
    let a = gap_nystrom_with(&kh, 1.5, &NystromOptions::fixed(64)).unwrap();
    let b = gap_nystrom_with(&kh, 1.5, &NystromOptions::fixed(128)).unwrap();
    assert!((a.value - b.value).abs() < 1e-9);
}

#[test]
fn monotone_and_bounded() {
    for kind in [
        KernelKind::Limit(s(0.3, 0.4)),
        KernelKind::FiniteScaled(EnsembleConfig::new(s(-0.25, 0.0), 10).unwrap()),
    ] {
        let mut prev = 0.0;
        for k in 0..25 {
            let x = 0.2 * 1.25f64.powi(k);
            let v = cdf_largest(kind, x).unwrap();
            assert!(v > 0.0 && v <= 1.0);
            assert!(v >= prev - 1e-9);
            prev = v;
        }
    }
}

#[test]
fn derivative_interpolant_against_series_and_resolvent() {
    let kh = KernelHandle::limit(s(0.0, 0.0));
    let interp = gap_derivatives(&kh, [1.0, 5.0], 16).unwrap();
    for k in 0..=40 {
        let t = 1.0 + 0.1 * k as f64;
        assert!(interp.bundle(t).unwrap().f1 >= -1e-9);
        assert!(interp.log_derivs(t).unwrap()[1] > 0.0);
    }
    let b = interp.bundle(5.0).unwrap();
    let series = gap_series_derivative(&kh, 5.0, 6).unwrap();
    assert!((b.f1 - series.value).abs() < 1e-6, "{} {}", b.f1, series.value);
    let (r, _) = log_derivative(&kh, 3.0, &NystromOptions::default()).unwrap();
    let l = interp.log_derivs(3.0).unwrap()[1];
    assert!((r - l).abs() < 1e-8 * r, "{r} {l}");
    assert!(interp.bundle(0.5).unwrap_err().is_domain());
}

#[test]
fn finite_log_derivative_positive() {
    let kh = KernelHandle::finite(EnsembleConfig::new(s(0.3, 0.4), 12).unwrap());
    let interp = gap_derivatives(&kh, [0.5, 2.0], 16).unwrap();
    for k in 0..=15 {
        assert!(interp.log_derivs(0.5 + 0.1 * k as f64).unwrap()[1] > 0.0);
    }
}
