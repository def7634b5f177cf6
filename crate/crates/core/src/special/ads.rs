//! Holographic slab entropy on a torus.
//!
//! With `P(chi, y) = 1 - chi y^3 - (1 - chi) y^4` the turning point `chi`
//! fixes the slab width through
//! `x(chi) = 3/(2 pi) chi^(1/3) (1 - chi)^(1/2) J(chi)` and the finite part of
//! the area through `chi^(-1/3) (I(chi) - 1)`, where
//!
//! ```text
//! I = int_0^1 dy (P^(-1/2) - 1) / y^2
//! J = int_0^1 dy y^2 / ((1 - chi y^3) sqrt P)
//! ```
//!
//! `P` vanishes like `(4 - chi)(1 - y)` at `y = 1`. Substituting `y = 1 - u^2`
//! and writing `P = u^2 Q(u^2)` makes every integrand below smooth on `[0, 1]`.

use std::f64::consts::PI;

use super::quad::integrate;
use crate::error::{Error, Result};

const ABS_TOL: f64 = 1e-13;
const REL_TOL: f64 = 1e-13;

/// `P / (1 - y)` as a polynomial in `s = 1 - y`.
fn q_of_s(chi: f64, s: f64) -> f64 {
    chi * (3.0 - 3.0 * s + s * s) + (1.0 - chi) * (4.0 - 6.0 * s + 4.0 * s * s - s * s * s)
}

/// `1 - chi y^3` without cancellation near `chi = y = 1`.
fn one_minus_chi_y3(chi: f64, s: f64) -> f64 {
    (1.0 - chi) + chi * s * (3.0 - 3.0 * s + s * s)
}

fn p_of(chi: f64, y: f64) -> f64 {
    1.0 - chi * y.powi(3) - (1.0 - chi) * y.powi(4)
}

/// `(1/y^2)(1/sqrt P - 1)` in a form that stays accurate as `y -> 0`.
pub fn area_integrand(chi: f64, y: f64) -> f64 {
    let p = p_of(chi, y);
    let sp = p.sqrt();
    // 1 - P = chi y^3 + (1 - chi) y^4, divided by y^2
    (chi * y + (1.0 - chi) * y * y) / (sp * (1.0 + sp))
}

fn check_chi(chi: f64, allow_one: bool) -> Result<()> {
    let ok = chi > 0.0 && (chi < 1.0 || (allow_one && chi == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("turning-point parameter must lie in (0, 1), got {chi}")))
    }
}

// Each integral over u in [0, 1] with y = 1 - u^2, s = u^2, dy = 2u du.

fn integral_i(chi: f64) -> Result<f64> {
    integrate(
        |u| {
            let s = u * u;
            let y = 1.0 - s;
            let q = q_of_s(chi, s).sqrt();
            // (1 - P) / y^2
            let reduced = chi * y + (1.0 - chi) * y * y;
            2.0 * reduced / (q * (1.0 + u * q))
        },
        0.0,
        1.0,
        ABS_TOL,
        REL_TOL,
    )
}

fn integral_di(chi: f64) -> Result<f64> {
    integrate(
        |u| {
            let s = u * u;
            (1.0 - s) / q_of_s(chi, s).powf(1.5)
        },
        0.0,
        1.0,
        ABS_TOL,
        REL_TOL,
    )
}

fn integral_j(chi: f64) -> Result<f64> {
    integrate(
        |u| {
            let s = u * u;
            let y = 1.0 - s;
            2.0 * y * y / (one_minus_chi_y3(chi, s) * q_of_s(chi, s).sqrt())
        },
        0.0,
        1.0,
        ABS_TOL,
        REL_TOL,
    )
}

fn integral_dj(chi: f64) -> Result<f64> {
    integrate(
        |u| {
            let s = u * u;
            let y = 1.0 - s;
            let y5 = y.powi(5);
            let w = one_minus_chi_y3(chi, s);
            let q = q_of_s(chi, s);
            2.0 * y5 / (w * w * q.sqrt()) + y5 / (w * q.powf(1.5))
        },
        0.0,
        1.0,
        ABS_TOL,
        REL_TOL,
    )
}

/// Slab width as a function of the turning point.
pub fn ads_x_of_chi(chi: f64) -> Result<f64> {
    check_chi(chi, false)?;
    Ok(1.5 / PI * chi.cbrt() * (1.0 - chi).sqrt() * integral_j(chi)?)
}

fn dx_dchi(chi: f64) -> Result<f64> {
    let j = integral_j(chi)?;
    let dj = integral_dj(chi)?;
    let a = chi.cbrt();
    let b = (1.0 - chi).sqrt();
    Ok(1.5 / PI * (j * b / (3.0 * a * a) - 0.5 * a * j / b + a * b * dj))
}

/// Inverse of [`ads_x_of_chi`] on `(0, 1/2]`; `x = 1/2` maps to `chi = 1`.
pub fn ads_chi_of_x(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 0.5) {
        return Err(Error::Domain(format!(
            "slab width {x} outside the attainable range (0, 1/2]"
        )));
    }
    if x == 0.5 {
        return Ok(1.0);
    }
    // bisect in w = chi^(1/3), in which x is close to linear near 0
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ads_x_of_chi(mid.powi(3))? < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = 0.5 * (lo + hi);
    Ok(w.powi(3).min(1.0))
}

/// `chi^(-1/3) (I - 1)`: the holographic entropy with unit prefactor and
/// no constant, evaluated at `min(x, 1 - x)`.
pub fn ads_entropy(x: f64) -> Result<f64> {
    check_x(x)?;
    let chi = ads_chi_of_x(x.min(1.0 - x))?;
    Ok((integral_i(chi)? - 1.0) / chi.cbrt())
}

/// `d/dx` of [`ads_entropy`], by the chain rule through `chi(x)`.
pub fn ads_entropy_derivative(x: f64) -> Result<f64> {
    check_x(x)?;
    let (xr, sign) = if x <= 0.5 { (x, 1.0) } else { (1.0 - x, -1.0) };
    if xr == 0.5 {
        return Ok(0.0);
    }
    let chi = ads_chi_of_x(xr)?;
    check_chi(chi, false)?;
    let i = integral_i(chi)?;
    let di = integral_di(chi)?;
    let a = chi.cbrt();
    let dg = -(i - 1.0) / (3.0 * a * chi) + di / a;
    Ok(sign * dg / dx_dchi(chi)?)
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must lie in (0, 1), got {x}")))
    }
}
