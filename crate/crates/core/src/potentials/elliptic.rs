//! Jacobi elliptic functions by the descending Landen (arithmetic-geometric
//! mean) scheme. Everything is written in terms of the *parameter* `m = k²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const AGM_TOL: f64 = 1e-16;
const AGM_MAX_ITER: usize = 64;

/// Jacobi parameter `m` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticParams {
    m: f64,
}

impl EllipticParams {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&m) || !m.is_finite() {
            return Err(Error::EllipticParameter(m));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Complete elliptic integral of the first kind, `K(m)`.
    pub fn quarter_period(&self) -> f64 {
        complete_k(self.m)
    }
}

/// `K(m) = π / (2 agm(1, √(1-m)))`.
pub fn complete_k(m: f64) -> f64 {
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    PI / (2.0 * a)
}

/// Jacobi amplitude `am(u | m)`.
fn amplitude(u: f64, m: f64) -> f64 {
    if m == 0.0 {
        return u;
    }
    let mut a = vec![1.0_f64];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while c.len() < AGM_MAX_ITER {
        let (ap, bp) = (*a.last().unwrap(), b);
        let an = 0.5 * (ap + bp);
        let cn = 0.5 * (ap - bp);
        b = (ap * bp).sqrt();
        a.push(an);
        c.push(cn);
        if cn.abs() <= AGM_TOL * an {
            break;
        }
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    phi
}

/// Jacobi elliptic sine `sn(x | m)`; period `4K(m)`.
pub fn jacobi_sn(x: f64, params: EllipticParams) -> f64 {
    let period = 4.0 * params.quarter_period();
    let r = x.rem_euclid(period);
    amplitude(r, params.m).sin()
}

/// `(sn, cn, dn)` at `x`.
pub fn jacobi_sn_cn_dn(x: f64, params: EllipticParams) -> (f64, f64, f64) {
    let period = 4.0 * params.quarter_period();
    let phi = amplitude(x.rem_euclid(period), params.m);
    let (s, c) = phi.sin_cos();
    (s, c, (1.0 - params.m * s * s).sqrt())
}
