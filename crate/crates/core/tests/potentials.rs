use std::f64::consts::PI;

use cme_core::potentials::{
    complete_k, fourier_coefficients_from_samples, jacobi_sn, jacobi_sn_cn_dn, parse_rational, EllipticParams,
    PeriodicFunction, Rational, Wavenumber,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn evaluation_examples() {
    let cos = PeriodicFunction::cosines(1.0, Wavenumber::Exact(Rational::from_integer(1)), &[(1, 1.0)]).unwrap();
    assert!((cos.value_at(0.0) - c(1.0)).norm() < 1e-15);
    let v = PeriodicFunction::cos_shifted(2.0, 1.0);
    assert!(v.value_at(PI).norm() < 1e-15);
    let w = PeriodicFunction::cosines(
        1.0,
        Wavenumber::Exact(Rational::new(2, 5)),
        &[(1, 1.0), (2, 0.5), (5, 1.0 / 3.0)],
    )
    .unwrap();
    assert!((w.value_at(0.0).re - 11.0 / 6.0).abs() < 1e-15);
}

#[test]
fn rationals_are_reduced() {
    assert_eq!(parse_rational("1/5").unwrap(), Rational::new(1, 5));
    assert_eq!(parse_rational(" 4/20 ").unwrap(), Rational::new(1, 5));
    assert_eq!(parse_rational("-3").unwrap(), Rational::from_integer(-3));
    for bad in ["1/0", "1/x", "", "0.2", "1//5"] {
        assert!(parse_rational(bad).is_err(), "{bad}");
    }
}

#[test]
fn sn_special_values() {
    let p = EllipticParams::new(0.5).unwrap();
    assert_eq!(jacobi_sn(0.0, p), 0.0);
    assert!((jacobi_sn(p.quarter_period(), p) - 1.0).abs() < 1e-13);
    assert!((2.0 * complete_k(0.5) - 3.7081).abs() < 1e-3);
    // K(1/2) = Γ(1/4)² / (4√π)
    assert!((complete_k(0.5) - 1.854_074_677_301_372).abs() < 1e-13);
    assert!(EllipticParams::new(1.0).is_err());
    assert!(EllipticParams::new(-0.1).is_err());
}

#[test]
fn sn_solves_its_ode() {
    // spectral derivative of sn on its period 4K
    let p = EllipticParams::new(0.5).unwrap();
    let period = 4.0 * p.quarter_period();
    let n = 256;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 * period / n as f64).collect();
    let samples: Vec<Complex64> = xs.iter().map(|&x| c(jacobi_sn(x, p))).collect();
    let f = fourier_coefficients_from_samples(&samples, period, 100).unwrap();
    let kb = f.wavenumber(1);
    for &x in xs.iter().step_by(7) {
        let d: Complex64 = f
            .coefficients()
            .iter()
            .map(|(&m, &a)| a * Complex64::i() * (m as f64 * kb) * Complex64::from_polar(1.0, m as f64 * kb * x))
            .sum();
        let s = jacobi_sn(x, p);
        let lhs = d.re * d.re;
        let rhs = (1.0 - s * s) * (1.0 - 0.5 * s * s);
        assert!((lhs - rhs).abs() < 1e-8, "x = {x}: {lhs} vs {rhs}");
        let (s2, cn, dn) = jacobi_sn_cn_dn(x, p);
        assert!((s2 - s).abs() < 1e-15);
        assert!((d.re - cn * dn).abs() < 1e-8);
    }
}

#[test]
fn fourier_examples() {
    let n = 16;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 * 2.0 * PI / n as f64).collect();
    let cos: Vec<Complex64> = xs.iter().map(|&x| c(x.cos())).collect();
    let f = fourier_coefficients_from_samples(&cos, 2.0 * PI, 2).unwrap();
    for m in -2i64..=2 {
        let want = if m.abs() == 1 { 0.5 } else { 0.0 };
        assert!((f.coefficient(m) - c(want)).norm() < 1e-12);
    }
    let one = fourier_coefficients_from_samples(&vec![c(1.0); n], 2.0 * PI, 3).unwrap();
    assert!((one.coefficient(0) - c(1.0)).norm() < 1e-15);
    assert!(one.coefficients().iter().filter(|(&m, _)| m != 0).all(|(_, a)| a.norm() < 1e-15));
    assert!(fourier_coefficients_from_samples(&cos, 2.0 * PI, 8).is_err());
}

#[test]
fn sn_squared_round_trip() {
    let p = EllipticParams::new(0.5).unwrap();
    let v = PeriodicFunction::sn_squared(p, 32).unwrap();
    assert!((v.period() - 2.0 * p.quarter_period()).abs() < 1e-14);
    let xs: Vec<f64> = (0..97).map(|j| j as f64 * v.period() / 97.0).collect();
    for (&x, z) in xs.iter().zip(v.evaluate(&xs)) {
        let s = jacobi_sn(x, p);
        assert!((z.re - s * s).abs() < 1e-10 && z.im.abs() < 1e-14, "x = {x}");
    }
}

fn real_function(amps: Vec<(f64, f64)>) -> PeriodicFunction {
    let mut h = vec![(0, c(amps[0].0))];
    for (j, &(re, im)) in amps.iter().enumerate().skip(1) {
        let a = Complex64::new(re, im);
        h.push((j as i64, a));
        h.push((-(j as i64), a.conj()));
    }
    PeriodicFunction::new(1.0, Wavenumber::Exact(Rational::from_integer(1)), h, true).unwrap()
}

proptest! {
    #[test]
    fn real_functions_evaluate_real(amps in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8),
                                    x in -50.0f64..50.0) {
        let f = real_function(amps);
        let z = f.value_at(x);
        prop_assert!(z.im.abs() < 1e-12 * f.abs_sum().max(1.0));
    }

    #[test]
    fn sampling_round_trip(amps in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8)) {
        let f = real_function(amps);
        let n = 32;
        let xs: Vec<f64> = (0..n).map(|j| j as f64 * 2.0 * PI / n as f64).collect();
        let g = fourier_coefficients_from_samples(&f.evaluate(&xs), 2.0 * PI, 10).unwrap();
        for m in -10..=10 {
            prop_assert!((g.coefficient(m) - f.coefficient(m)).norm() < 1e-13);
        }
    }

    #[test]
    fn sn_is_bounded_and_odd(x in -20.0f64..20.0, m in 0.0f64..0.95) {
        let p = EllipticParams::new(m).unwrap();
        let s = jacobi_sn(x, p);
        prop_assert!(s.abs() <= 1.0 + 1e-14);
        prop_assert!((jacobi_sn(-x, p) + s).abs() < 1e-12);
    }
}
