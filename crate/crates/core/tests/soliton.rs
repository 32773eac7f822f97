use std::f64::consts::PI;

use cme_core::cme::CmeSystem;
use cme_core::soliton::{envelope_pair, gap_soliton, linspace, verify_soliton, SolitonParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn sys() -> CmeSystem {
    CmeSystem {
        c_g: -0.33409,
        kappa: 0.38258,
        kappa_s: 0.0,
        alpha: 0.25089,
        beta: Complex64::new(0.0, 0.0),
        gamma: Complex64::new(0.0, 0.0),
    }
}

#[test]
fn degenerate_detuning_is_zero() {
    for d in [0.0, PI] {
        let p = SolitonParams::new(0.4, d, sys()).unwrap();
        assert!(p.is_degenerate());
        let (a, b) = gap_soliton(&p, &linspace(-5.0, 5.0, 11), 0.3);
        assert!(a.iter().chain(&b).all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(verify_soliton(&p, 40, 10.0, 0.0).is_err());
    }
}

#[test]
fn invalid_parameters() {
    assert!(SolitonParams::new(-1.0, 1.0, sys()).is_err());
    assert!(SolitonParams::new(0.2, -0.1, sys()).is_err());
    let mut s = sys();
    s.kappa = 0.0;
    assert!(SolitonParams::new(0.2, 1.0, s).is_err());
    let mut s = sys();
    s.c_g = 0.0;
    assert!(SolitonParams::new(0.2, 1.0, s).is_err());
    let mut s = sys();
    s.gamma = Complex64::new(0.0, 1e-6);
    assert!(SolitonParams::new(0.2, 1.0, s).is_err());
}

#[test]
fn stationary_soliton() {
    let p = SolitonParams::new(0.0, PI / 2.0, sys()).unwrap();
    let x = linspace(-30.0, 30.0, 601);
    let (a, b) = gap_soliton(&p, &x, 0.0);
    for (u, w) in a.iter().zip(&b) {
        assert!((u.norm() - w.norm()).abs() < 1e-14);
    }
    // peak amplitude a·sqrt(|κ|/2|α|)·sin δ with a = sqrt(2/3), sech(iπ/4) = √2
    let s = sys();
    let peak = (2.0f64 / 3.0).sqrt() * (s.kappa / (2.0 * s.alpha)).sqrt() * 2f64.sqrt();
    let m = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!((m - peak).abs() < 1e-12, "{m} vs {peak}");
}

#[test]
fn moving_peak_ratio() {
    let p = SolitonParams::new(0.5, PI / 2.0, sys()).unwrap();
    let x = linspace(-40.0, 40.0, 8001);
    let (a, b) = gap_soliton(&p, &x, 0.0);
    let pa = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pb = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!((pa / pb - 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn exact_solutions() {
    for (v, d) in [(0.5, PI / 2.0), (0.0, PI / 2.0), (0.9, 0.3)] {
        let p = SolitonParams::new(v, d, sys()).unwrap();
        let chk = verify_soliton(&p, 40, 15.0, 0.0).unwrap();
        assert!(chk.finest() < 1e-6, "{:?}", chk.levels);
        assert!(chk.levels[0].1 < 1e-6, "{:?}", chk.levels);
        assert!(chk.min_order() > 2.0, "{:?}", chk.orders);
    }
}

#[test]
fn travelling_soliton_moves_with_envelope_speed() {
    let p = SolitonParams::new(0.5, PI / 2.0, sys()).unwrap();
    let t = 7.0;
    let x = linspace(-60.0, 60.0, 24001);
    let centre = |tt: f64| {
        let (a, _) = gap_soliton(&p, &x, tt);
        let i = (0..x.len()).max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm())).unwrap();
        x[i]
    };
    let shift = centre(t) - centre(0.0);
    assert!((shift - p.speed() * t).abs() < 0.02, "{shift} vs {}", p.speed() * t);
}

#[test]
fn tails_decay_at_predicted_rate() {
    for (v, d) in [(0.5, PI / 2.0), (-0.3, 1.0), (0.0, 2.5)] {
        let p = SolitonParams::new(v, d, sys()).unwrap();
        let lam = p.decay_rate();
        let x1 = 10.0 / lam;
        let x2 = 15.0 / lam;
        let (a, _) = gap_soliton(&p, &[x1, x2, -x1, -x2], 0.0);
        let right = (a[0].norm() / a[1].norm()).ln() / (x2 - x1);
        let left = (a[2].norm() / a[3].norm()).ln() / (x2 - x1);
        assert!((right / lam - 1.0).abs() < 0.02 && (left / lam - 1.0).abs() < 0.02, "{right} {left} {lam}");
    }
}

#[test]
fn default_window_holds_the_tails() {
    let p = SolitonParams::new(0.5, PI / 2.0, sys()).unwrap();
    let h = p.default_half_width();
    let env = envelope_pair(&p, &[-h, 0.0, h], &[0.0]);
    let m = env.max_abs();
    for f in [&env.a_plus[0], &env.a_minus[0]] {
        assert!(f[0].norm() < 1e-8 * m && f[2].norm() < 1e-8 * m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn velocity_reflection(v in -0.95f64..0.95, d in 0.05f64..3.1, x in -30.0f64..30.0) {
        let p = SolitonParams::new(v, d, sys()).unwrap();
        let q = SolitonParams::new(-v, d, sys()).unwrap();
        let (a, _) = gap_soliton(&p, &[x], 0.0);
        let (_, b) = gap_soliton(&q, &[-x], 0.0);
        prop_assert!((a[0].norm() - b[0].norm()).abs() < 1e-10);
    }

    #[test]
    fn finite_everywhere(v in -0.99f64..0.99, d in 0.0f64..PI, x in -1e4f64..1e4, t in -1e3f64..1e3) {
        let p = SolitonParams::new(v, d, sys()).unwrap();
        let (a, b) = gap_soliton(&p, &[x], t);
        prop_assert!(a[0].is_finite() && b[0].is_finite());
    }
}
