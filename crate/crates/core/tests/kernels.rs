use gcye::kernels::*;
use gcye::ComplexVal;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cfg(re: f64, im: f64, n: usize) -> EnsembleConfig {
    EnsembleConfig::new(SParam::new(re, im).unwrap(), n).unwrap()
}

fn close(a: ComplexVal, b: ComplexVal, rel: f64) -> bool {
    (a - b).norm() <= rel * b.norm().max(1e-300)
}

#[test]
fn frozen_polynomials() {
    let v = p_monic(3, 0.7, &cfg(1.0, 0.0, 5)).unwrap();
    assert!(close(v, ComplexVal::new(0.043, 0.0), 1e-13), "{v}");
    let v = p_tilde(1.5, &cfg(0.3, 0.4, 4));
    let want = ComplexVal::new(-4.804_649_758_454_106, -1.314_915_458_937_198);
    assert!(close(v, want, 1e-13), "{v}");
}

#[test]
fn frozen_scaled_pair() {
    let pq = eval_pq_scaled(1.2, &cfg(0.3, 0.4, 8)).unwrap();
    let p = ComplexVal::new(0.976_351_302_929_594_6, -0.789_571_862_538_533_0);
    let dp = ComplexVal::new(0.895_910_578_863_196_4, 0.502_591_000_802_163_6);
    let q = ComplexVal::new(2.526_629_960_123_305_5, 0.0);
    let dq = ComplexVal::new(-1.608_291_202_566_923_6, 0.0);
    assert!(close(pq.p_val, p, 1e-12));
    assert!(close(pq.p_deriv, dp, 1e-12));
    assert!(close(pq.q_val, q, 1e-12));
    assert!(close(pq.q_deriv, dq, 1e-12));
}

#[test]
fn frozen_limit_pair() {
    let pq = eval_pq_limit(2.0, SParam::real(1.0).unwrap(), 1e-15).unwrap();
    let p = ComplexVal::new(0.958_851_077_208_406_0, -0.162_537_030_636_066_6);
    let dp = ComplexVal::new(-0.438_791_280_945_186_4, 0.158_444_253_984_068_2);
    let q = ComplexVal::new(0.975_222_183_816_399_4, 0.0);
    let dq = ComplexVal::new(-0.950_665_523_904_409_3, 0.0);
    assert!(close(pq.p_val, p, 1e-13));
    assert!(close(pq.p_deriv, dp, 1e-13));
    assert!(close(pq.q_val, q, 1e-13));
    assert!(close(pq.q_deriv, dq, 1e-13));
}

#[test]
fn frozen_scaled_kernel() {
    let kh = KernelHandle::finite(cfg(0.3, 0.4, 8));
    let v = kh.eval(1.2, 2.0).unwrap();
    assert!((v - 0.185_446_027_890_733_03).abs() < 1e-13, "{v}");
}

#[test]
fn s0_limit_modulus_and_large_x() {
    let s = SParam::real(0.0).unwrap();
    for x in [0.3, 1.0, 7.0] {
        let pq = eval_pq_limit(x, s, 1e-14).unwrap();
        assert!((pq.p_val.norm() - 1.0).abs() < 1e-14);
    }
    let c = cfg(0.0, 0.0, 6);
    let dp = {
        let n = 6.0f64;
        (0.5 * (gcye::specfun::ln_gamma(n + 1.0) - n.ln() - gcye::specfun::ln_gamma(n))).exp()
    };
    let pq = eval_pq_scaled(1e6, &c).unwrap();
    assert!((pq.p_val.norm() / dp - 1.0).abs() < 1e-6);
}

#[test]
fn scaled_bound_uniform_in_n() {
    let mut sups = vec![];
    for n in [5, 50, 500] {
        let c = cfg(1.0, 0.0, n);
        let mut sup: f64 = 0.0;
        for k in 0..60 {
            let x = 0.5 * 100f64.powf(k as f64 / 59.0);
            sup = sup.max(x * eval_pq_scaled(x, &c).unwrap().p_val.norm());
        }
        sups.push(sup);
    }
    let (lo, hi) = sups.iter().fold((f64::MAX, 0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 2.0, "{sups:?}");
}

#[test]
fn scaled_tends_to_limit() {
    let s = SParam::real(0.3).unwrap();
    let lim = eval_pq_limit(1.0, s, 1e-15).unwrap();
    let mut errs = vec![];
    for n in [50, 100, 200, 400] {
        let pq = eval_pq_scaled(1.0, &EnsembleConfig::new(s, n).unwrap()).unwrap();
        errs.push((pq.p_val - lim.p_val).norm() + (pq.q_val - lim.q_val).norm());
    }
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!(r > 1.8 && r < 2.2, "{errs:?}");
    }
}

#[test]
fn scaled_kernel_matches_raw_assembly() {
    for &(re, im) in &[(0.0, 0.0), (1.0, 0.0), (0.3, 0.4), (-0.25, 0.2)] {
        for n in [1, 3, 8, 20] {
            let c = cfg(re, im, n);
            let kh = KernelHandle::finite(c);
            let nf = n as f64;
            for &(x, y) in &[(0.5, 1.7), (1.2, 2.0), (3.0, 0.9)] {
                let raw = nf * raw_kernel(nf * x, nf * y, &c).unwrap();
                let v = kh.eval(x, y).unwrap();
                assert!((v - raw).abs() <= 1e-9 * raw.abs(), "s={re}+{im}i N={n} {v} {raw}");
            }
        }
    }
}

#[test]
fn diagonal_band_continuity() {
    for kh in [
        KernelHandle::limit(SParam::new(0.3, 0.4).unwrap()),
        KernelHandle::finite(cfg(1.0, 0.0, 10)),
    ] {
        let m = 1.3;
        let pair = |d: f64| kh.eval(m * (1.0 - 0.5 * d), m * (1.0 + 0.5 * d)).unwrap();
        let inside = pair(0.9999e-4);
        let outside = pair(1.0001e-4);
        assert!((inside - outside).abs() < 1e-11 * inside.abs(), "{inside} {outside}");
    }
}

#[test]
fn recurrences() {
    for &(s, n, x) in &[(1.0, 4, 0.8), (2.0, 2, -1.3), (1.0, 1, 3.0)] {
        let r = phi_psi_recurrence_residual(x, &cfg(s, 0.0, n)).unwrap();
        assert!(r < 1e-8, "{r}");
    }
    for &(re, im, x) in &[(1.0, 0.0, 2.0), (0.3, 0.4, 1.0), (1.0, 0.0, -2.0)] {
        let r = limit_pq_recurrence_residual(x, SParam::new(re, im).unwrap()).unwrap();
        assert!(r < 1e-8, "{r}");
    }
}

#[test]
fn correlation_matrix_examples() {
    let kh = KernelHandle::limit(SParam::real(1.0).unwrap());
    let m = correlation_matrix(&kh, &[1.5]).unwrap();
    assert!(m[(0, 0)] > 0.0);
    let m = correlation_matrix(&kh, &[1.5, 1.5]).unwrap();
    let tr = m.trace();
    assert!(m.determinant().abs() < 1e-10 * tr * tr);
    let pts = [0.7, 1.9, 3.3, 4.6];
    let m = correlation_matrix(&kh, &pts).unwrap();
    let diag: f64 = (0..4).map(|i| m[(i, i)]).product();
    assert!(m.determinant() >= -1e-12 * diag);
}

#[test]
fn sine_form_limit_kernel() {
    let kh = KernelHandle::limit(SParam::real(0.0).unwrap());
    for i in 0..7 {
        for j in 0..7 {
            let x = 0.5 + 0.7 * i as f64;
            let y = 0.6 + 0.65 * j as f64;
            let want = if x == y {
                1.0 / (PI * x * x)
            } else {
                (1.0 / y - 1.0 / x).sin() / (PI * (x - y))
            };
            assert!((kh.eval(x, y).unwrap() - want).abs() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_and_real(x in 0.2f64..20.0, y in 0.2f64..20.0, re in -0.45f64..2.0, im in -1.0f64..1.0, n in 1usize..60) {
        let s = SParam::new(re, im).unwrap();
        for kh in [KernelHandle::limit(s), KernelHandle::finite(EnsembleConfig::new(s, n).unwrap())] {
            let a = kh.eval(x, y).unwrap();
            let b = kh.eval(y, x).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.is_finite());
        }
    }

    #[test]
    fn psd_and_hadamard(pts in proptest::collection::vec(0.3f64..30.0, 1..12), re in -0.45f64..2.0, im in -1.0f64..1.0, n in 1usize..40) {
        let s = SParam::new(re, im).unwrap();
        for kh in [KernelHandle::limit(s), KernelHandle::finite(EnsembleConfig::new(s, n).unwrap())] {
            let m = correlation_matrix(&kh, &pts).unwrap();
            let tr = m.trace();
            let eig = m.clone().symmetric_eigenvalues();
            prop_assert!(eig.min() >= -1e-10 * tr);
            let diag: f64 = (0..pts.len()).map(|i| m[(i, i)]).product();
            prop_assert!(m.determinant().abs() <= diag * (1.0 + 1e-9) + 1e-300);
        }
    }

    #[test]
    fn decay_bound(x in 0.5f64..100.0, y in 0.5f64..100.0, n in 1usize..200) {
        let s = SParam::real(1.0).unwrap();
        let kh = KernelHandle::finite(EnsembleConfig::new(s, n).unwrap());
        let v = kh.eval(x, y).unwrap().abs() * (x * y).powf(2.0);
        prop_assert!(v < 10.0, "{}", v);
    }
}
