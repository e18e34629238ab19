use gcye::kernels::{EnsembleConfig, SParam};
use gcye::unitary::*;
use gcye::ComplexVal;
use proptest::prelude::*;
use std::f64::consts::PI;

fn sp(re: f64, im: f64) -> SParam {
    SParam::new(re, im).unwrap()
}

fn cfg(re: f64, im: f64, n: usize) -> EnsembleConfig {
    EnsembleConfig::new(sp(re, im), n).unwrap()
}

#[test]
fn cayley_examples() {
    assert!((cayley_angle(1.0).unwrap().theta() - PI / 2.0).abs() < 1e-15);
    assert!((cayley_angle(0.0).unwrap().theta() - PI).abs() < 1e-15);
    assert!(cayley_angle(f64::INFINITY).unwrap().theta().abs() < 1e-15);
    let back = cot_half(cayley_angle(3.7).unwrap()).unwrap();
    assert!((back - 3.7).abs() < 1e-12);
    assert!(cot_half(AngleVal::new(0.0).unwrap()).unwrap_err().is_domain());
    assert!(AngleVal::new(-0.1).unwrap_err().is_domain());
    assert!(AngleVal::new(7.0).unwrap_err().is_domain());
}

proptest! {
    #[test]
    fn cayley_roundtrip(a in -1e3f64..1e3) {
        let b = cot_half(cayley_angle(a).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a * a));
    }

    #[test]
    fn finite_unitary_kernel_hermitian(a in -3.0f64..3.0, b in -3.0f64..3.0, re in -0.4f64..1.5, im in -1.0f64..1.0) {
        prop_assume!(a.abs() > 1e-3 && b.abs() > 1e-3 && (a - b).abs() > 1e-3);
        let c = cfg(re, im, 6);
        let k1 = kernel_u_finite(a, b, c).unwrap();
        let k2 = kernel_u_finite(b, a, c).unwrap();
        prop_assert!((k1 - k2.conj()).norm() < 1e-10 * (1.0 + k1.norm()));
    }

    #[test]
    fn limit_unitary_kernel_hermitian(a in -8.0f64..8.0, b in -8.0f64..8.0, re in -0.4f64..1.5, im in -1.0f64..1.0) {
        prop_assume!(a.abs() > 1e-2 && b.abs() > 1e-2 && (a - b).abs() > 1e-2);
        let s = sp(re, im);
        let k1 = kernel_u_limit(a, b, s).unwrap();
        let k2 = kernel_u_limit(b, a, s).unwrap();
        prop_assert!((k1 - k2.conj()).norm() < 1e-10 * (1.0 + k1.norm()));
    }

    #[test]
    fn weight_matches_expanded_form(t in -3.1f64..3.1, re in -0.4f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(t.abs() > 1e-6);
        let s = sp(re, im);
        let w = weight_u(t, s).unwrap();
        let e = (2.0 * (0.5 * t).sin()).abs().powf(2.0 * re) * (-im * (PI * t.signum() - t)).exp();
        prop_assert!((w - e).abs() < 1e-12 * e);
    }
}

#[test]
fn cue_reduction() {
    let (a, b) = (0.3, 1.1);
    let k = kernel_u_finite(a, b, cfg(0.0, 0.0, 2)).unwrap();
    let d: f64 = a - b;
    let want = (2.0 * d / 2.0).sin() / (d / 2.0).sin() / (2.0 * PI);
    assert!((k - ComplexVal::new(want, 0.0)).norm() < 1e-14);
}

#[test]
fn limit_sine_reduction() {
    for (a, b) in [(0.5, 2.0), (-1.5, 3.0), (4.0, -0.2)] {
        let k = kernel_u_limit(a, b, sp(0.0, 0.0)).unwrap();
        let want = ((a - b) / 2.0).sin() / (PI * (a - b));
        assert!((k - ComplexVal::new(want, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn q_finite_small_cases() {
    let s = ComplexVal::new(0.3, 0.4);
    let x = ComplexVal::new(0.2, -0.7);
    // N = 1: 1 + s·(−1)/(−1 − s̄)·x
    let want = 1.0 + s * x / (1.0 + s.conj());
    assert!((q_finite(1, s, x).unwrap() - want).norm() < 1e-15);
    assert_eq!(q_finite(5, ComplexVal::new(0.0, 0.0), x).unwrap(), ComplexVal::new(1.0, 0.0));
}

#[test]
fn rescaled_kernel_converges() {
    let s = sp(1.0, 0.0);
    let err = |n: usize| {
        let c = EnsembleConfig::new(s, n).unwrap();
        let nf = n as f64;
        (kernel_u_finite(1.0 / nf, 2.0 / nf, c).unwrap() / nf - kernel_u_limit(1.0, 2.0, s).unwrap()).norm()
    };
    let e: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| err(n)).collect();
    for w in e.windows(2) {
        assert!(w[1] * 1.5 <= w[0], "{e:?}");
    }
}

#[test]
fn unitary_domain_errors() {
    let c = cfg(0.0, 0.0, 4);
    assert!(kernel_u_finite(0.0, 1.0, c).unwrap_err().is_domain());
    assert!(kernel_u_finite(PI, 1.0, c).unwrap_err().is_domain());
    assert!(kernel_u_finite(0.5, 0.5, c).unwrap_err().is_domain());
    assert!(kernel_u_limit(0.0, 1.0, c.s).unwrap_err().is_domain());
    assert!(weight_u(0.0, c.s).unwrap_err().is_domain());
    assert!(correspondence_ratio(1.0, 1.0, c.s).unwrap_err().is_domain());
    assert!(correspondence_ratio(-1.0, 1.0, c.s).unwrap_err().is_domain());
}

fn grid() -> Vec<f64> {
    (0..10).map(|k| 0.5 * 10f64.powf(k as f64 / 9.0)).collect()
}

#[test]
fn correspondence_constant_for_real_s() {
    for re in [0.0, 1.0] {
        let c = correspondence_check(sp(re, 0.0), &grid(), 1e-8).unwrap();
        assert_eq!(c.orientation, Orientation::Stated);
        assert!(c.jacobian);
        assert!(c.variation < 1e-8);
        assert!((c.constant - 1.0).norm() < 1e-8);
    }
}

#[test]
fn correspondence_complex_s_uses_reflection() {
    let c = correspondence_check(sp(0.3, 0.4), &grid(), 1e-8).unwrap();
    assert_eq!(c.orientation, Orientation::Reflected);
    assert!(c.jacobian && c.variation < 1e-8);
}

#[test]
fn correspondence_symmetric_in_arguments() {
    let s = sp(1.0, 0.0);
    for (x, y) in [(0.7, 2.0), (1.3, 4.1)] {
        let a = correspondence_ratio(x, y, s).unwrap();
        let b = correspondence_ratio(y, x, s).unwrap();
        assert!((a.r_jacobian - b.r_jacobian).norm() < 1e-8);
    }
}

#[test]
fn survival_routes_agree() {
    for (n, ymax) in [(5usize, 2.5), (20, 1.2)] {
        for re in [0.0, 1.0] {
            let c = cfg(re, 0.0, n);
            let mut prev = 1.0;
            for k in 0..6 {
                let y = AngleVal::new(0.3 + (ymax - 0.3) * k as f64 / 5.0).unwrap();
                let a = smallest_angle_survival(y, c, None).unwrap();
                let b = survival_via_cdf(y, c).unwrap();
                assert!((a - b).abs() < 1e-5, "N={n} s={re} y={}: {a} vs {b}", y.theta());
                assert!(a <= prev && a > 0.0);
                prev = a;
            }
        }
    }
}

#[test]
fn survival_at_quarter_turn_n10() {
    let c = cfg(0.0, 0.0, 10);
    let y = AngleVal::new(PI / 2.0).unwrap();
    let a = smallest_angle_survival(y, c, None).unwrap();
    let b = survival_via_cdf(y, c).unwrap();
    assert!((a - b).abs() < 1e-5);
}

#[test]
fn survival_tends_to_one() {
    let c = cfg(0.0, 0.0, 5);
    let v = smallest_angle_survival(AngleVal::new(1e-4).unwrap(), c, None).unwrap();
    assert!(v > 0.999 && v <= 1.0);
    let sigma = resolvent_sigma(c);
    let custom = smallest_angle_survival(AngleVal::new(1e-4).unwrap(), c, Some(&sigma)).unwrap();
    assert_eq!(v, custom);
    assert!(smallest_angle_survival(AngleVal::new(4.0).unwrap(), c, None).unwrap_err().is_domain());
}

#[test]
fn sigma_tail_for_s0() {
    // σ(t) → N/π as t → ∞ for s = 0
    let c = cfg(0.0, 0.0, 5);
    let v = resolvent_sigma(c)(1e4).unwrap();
    assert!((v - 5.0 / PI).abs() < 1e-3, "{v}");
}
