//! Dedekind eta and Jacobi theta-3 on the imaginary axis, `tau = i t`.
//!
//! For `t < 1` both are evaluated through the modular transformation
//! `f(i t) = f(i / t) / sqrt(t)`, which keeps the nome below `e^-pi`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

// Terms are dropped once they fall below this fraction of the leading term.
const TAIL: f64 = 1e-18;

fn check(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("need a finite t > 0, got {t}")))
    }
}

/// `log eta(i t)` from the q-product with at most `max_terms` factors.
fn log_eta_product(t: f64, max_terms: usize) -> f64 {
    let q = (-2.0 * PI * t).exp();
    let mut sum = -PI * t / 12.0;
    let mut qm = 1.0;
    for _ in 0..max_terms {
        qm *= q;
        if qm < TAIL {
            break;
        }
        sum += (-qm).ln_1p();
    }
    sum
}

fn d_log_eta_product(t: f64) -> f64 {
    let q = (-2.0 * PI * t).exp();
    let mut sum = -PI / 12.0;
    let mut qm = 1.0;
    let mut m = 0.0;
    loop {
        qm *= q;
        m += 1.0;
        if qm < TAIL {
            break;
        }
        sum += 2.0 * PI * m * qm / (1.0 - qm);
    }
    sum
}

fn theta3_series(t: f64, max_terms: usize) -> f64 {
    let mut sum = 1.0;
    for m in 1..=max_terms {
        let term = (-PI * (m * m) as f64 * t).exp();
        if term < TAIL {
            break;
        }
        sum += 2.0 * term;
    }
    sum
}

fn d_theta3_series(t: f64) -> f64 {
    let mut sum = 0.0;
    let mut m = 1usize;
    loop {
        let m2 = (m * m) as f64;
        let term = (-PI * m2 * t).exp();
        if term < TAIL {
            break;
        }
        sum -= 2.0 * PI * m2 * term;
        m += 1;
    }
    sum
}

/// `log eta(i t)` straight from the product, without the modular transform.
/// Slow for small `t`; `max_terms` bounds the number of factors.
pub fn log_eta_series(t: f64, max_terms: usize) -> Result<f64> {
    check(t)?;
    Ok(log_eta_product(t, max_terms))
}

/// `log theta_3(i t)` straight from the series; see [`log_eta_series`].
pub fn log_theta3_series(t: f64, max_terms: usize) -> Result<f64> {
    check(t)?;
    Ok(theta3_series(t, max_terms).ln())
}

pub fn log_dedekind_eta(t: f64) -> Result<f64> {
    check(t)?;
    Ok(if t >= 1.0 {
        log_eta_product(t, usize::MAX)
    } else {
        log_eta_product(1.0 / t, usize::MAX) - 0.5 * t.ln()
    })
}

/// `eta(i t) = q^(1/24) prod (1 - q^m)`, `q = exp(-2 pi t)`.
pub fn dedekind_eta(t: f64) -> Result<f64> {
    log_dedekind_eta(t).map(f64::exp)
}

/// `d/dt log eta(i t)`.
pub fn d_log_dedekind_eta(t: f64) -> Result<f64> {
    check(t)?;
    Ok(if t >= 1.0 {
        d_log_eta_product(t)
    } else {
        -d_log_eta_product(1.0 / t) / (t * t) - 0.5 / t
    })
}

pub fn log_jacobi_theta3(t: f64) -> Result<f64> {
    check(t)?;
    Ok(if t >= 1.0 {
        theta3_series(t, usize::MAX).ln()
    } else {
        theta3_series(1.0 / t, usize::MAX).ln() - 0.5 * t.ln()
    })
}

/// `theta_3(0 | i t) = 1 + 2 sum q^(m^2)`, `q = exp(-pi t)`.
pub fn jacobi_theta3(t: f64) -> Result<f64> {
    log_jacobi_theta3(t).map(f64::exp)
}

/// `d/dt log theta_3(i t)`.
pub fn d_log_jacobi_theta3(t: f64) -> Result<f64> {
    check(t)?;
    let direct = |s: f64| d_theta3_series(s) / theta3_series(s, usize::MAX);
    Ok(if t >= 1.0 {
        direct(t)
    } else {
        -direct(1.0 / t) / (t * t) - 0.5 / t
    })
}
