//! Model curves for Rényi entropies and entropic c-functions.
//!
//! Entropy models `G*` take `(c, k)`; c-function models take a single
//! amplitude, except the corrected two-dimensional curve, whose amplitude is
//! fixed and whose free parameter is the correction coefficient `k`.
//! Every model is linear in its parameters.

pub mod ads;
pub mod modular;
pub mod quad;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ads::{ads_chi_of_x, ads_entropy, ads_entropy_derivative, ads_x_of_chi};
pub use modular::{
    d_log_dedekind_eta, d_log_jacobi_theta3, dedekind_eta, jacobi_theta3, log_dedekind_eta,
    log_jacobi_theta3,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    /// `C = c/12 (1 + 1/n)`.
    #[serde(rename = "CFT2D_plane")]
    Cft2dPlane,
    /// `C = c/12 (1 + 1/n) cos(pi x)`.
    #[serde(rename = "CFT2D_cylinder")]
    Cft2dCylinder,
    /// `C = cos(pi x)/16 + k/(2L) cot(pi x)`.
    #[serde(rename = "Fit2D_corrected")]
    Fit2dCorrected,
    /// `S = c log sin(pi x) + k`.
    #[serde(rename = "G2D")]
    G2d,
    #[serde(rename = "GRVB")]
    GRvb,
    #[serde(rename = "GADS")]
    GAds,
    /// `C = c/(2 pi) sin(pi x) cos(pi x)`.
    #[serde(rename = "F2D")]
    F2d,
    #[serde(rename = "FRVB")]
    FRvb,
    #[serde(rename = "FADS")]
    FAds,
}

impl ModelId {
    pub const ALL: [ModelId; 9] = [
        ModelId::Cft2dPlane,
        ModelId::Cft2dCylinder,
        ModelId::Fit2dCorrected,
        ModelId::G2d,
        ModelId::GRvb,
        ModelId::GAds,
        ModelId::F2d,
        ModelId::FRvb,
        ModelId::FAds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Cft2dPlane => "CFT2D_plane",
            ModelId::Cft2dCylinder => "CFT2D_cylinder",
            ModelId::Fit2dCorrected => "Fit2D_corrected",
            ModelId::G2d => "G2D",
            ModelId::GRvb => "GRVB",
            ModelId::GAds => "GADS",
            ModelId::F2d => "F2D",
            ModelId::FRvb => "FRVB",
            ModelId::FAds => "FADS",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            ModelId::G2d | ModelId::GRvb | ModelId::GAds => 2,
            _ => 1,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelId::G2d | ModelId::GRvb | ModelId::GAds => &["c", "k"],
            ModelId::Fit2dCorrected => &["k"],
            _ => &["c"],
        }
    }

    /// True for models of the entropy itself rather than of the c-function.
    pub fn is_entropy(self) -> bool {
        matches!(self, ModelId::G2d | ModelId::GRvb | ModelId::GAds)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Invalid(format!("unknown model '{s}'")))
    }
}

/// Lattice data some models depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelContext {
    pub extent: usize,
    pub replicas: usize,
}

impl ModelContext {
    pub fn new(extent: usize, replicas: usize) -> Self {
        Self { extent, replicas }
    }
}

/// `value = offset + sum_i params[i] * shapes[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub offset: f64,
    pub shapes: [f64; 2],
    pub arity: usize,
}

impl Basis {
    fn one(offset: f64, shape: f64) -> Self {
        Self {
            offset,
            shapes: [shape, 0.0],
            arity: 1,
        }
    }

    fn two(shape: f64) -> Self {
        Self {
            offset: 0.0,
            shapes: [shape, 1.0],
            arity: 2,
        }
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        self.offset + self.shapes[..self.arity].iter().zip(params).map(|(s, p)| s * p).sum::<f64>()
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must lie in (0, 1), got {x}")))
    }
}

fn replica_factor(ctx: &ModelContext) -> f64 {
    (1.0 + 1.0 / ctx.replicas as f64) / 12.0
}

const TAU_RVB: f64 = 1.0;

fn rvb_a(t: f64) -> Result<f64> {
    Ok(log_jacobi_theta3(t)? - log_dedekind_eta(t)?)
}

fn rvb_da(t: f64) -> Result<f64> {
    Ok(d_log_jacobi_theta3(t)? - d_log_dedekind_eta(t)?)
}

/// RVB torus entropy with `c = 1`, `k = 0` at `tau = i`:
/// `-2 log[eta^2(tau) / (theta3(2 tau) theta3(tau/2))
///   * theta3(2x tau) theta3(2(1-x) tau) / (eta(2x tau) eta(2(1-x) tau))]`.
pub fn rvb_entropy(x: f64) -> Result<f64> {
    check_x(x)?;
    let t = TAU_RVB;
    let constant = 2.0 * log_dedekind_eta(t)? - log_jacobi_theta3(2.0 * t)? - log_jacobi_theta3(0.5 * t)?;
    Ok(-2.0 * (constant + rvb_a(2.0 * x * t)? + rvb_a(2.0 * (1.0 - x) * t)?))
}

/// `d/dx` of [`rvb_entropy`] from the term-wise differentiated series.
pub fn rvb_entropy_derivative(x: f64) -> Result<f64> {
    check_x(x)?;
    let t = TAU_RVB;
    Ok(-4.0 * t * (rvb_da(2.0 * x * t)? - rvb_da(2.0 * (1.0 - x) * t)?))
}

/// Shape functions of a model at `x`.
pub fn model_basis(id: ModelId, x: f64, ctx: &ModelContext) -> Result<Basis> {
    check_x(x)?;
    let (s, c) = (PI * x).sin_cos();
    Ok(match id {
        ModelId::Cft2dPlane => Basis::one(0.0, replica_factor(ctx)),
        ModelId::Cft2dCylinder => Basis::one(0.0, replica_factor(ctx) * c),
        ModelId::Fit2dCorrected => {
            if ctx.extent == 0 {
                return Err(Error::Invalid("corrected fit needs the lattice extent".into()));
            }
            Basis::one(c / 16.0, c / s / (2.0 * ctx.extent as f64))
        }
        ModelId::G2d => Basis::two(s.ln()),
        ModelId::GRvb => Basis::two(rvb_entropy(x)?),
        ModelId::GAds => Basis::two(ads_entropy(x)?),
        ModelId::F2d => Basis::one(0.0, s * c / (2.0 * PI)),
        ModelId::FRvb => Basis::one(0.0, s * s / (2.0 * PI * PI) * rvb_entropy_derivative(x)?),
        ModelId::FAds => Basis::one(0.0, s * s / (2.0 * PI * PI) * ads_entropy_derivative(x)?),
    })
}

fn check_arity(id: ModelId, params: &[f64]) -> Result<()> {
    if params.len() != id.arity() {
        return Err(Error::Arity {
            model: id.name().to_string(),
            expected: id.arity(),
            got: params.len(),
        });
    }
    Ok(())
}

pub fn model_eval(id: ModelId, x: f64, params: &[f64], ctx: &ModelContext) -> Result<f64> {
    check_arity(id, params)?;
    Ok(model_basis(id, x, ctx)?.eval(params))
}

/// Second central difference of an analytic first derivative.
fn third_from_first<F: Fn(f64) -> Result<f64>>(d1: F, x: f64) -> Result<f64> {
    let h = 1e-3 * x.min(1.0 - x);
    Ok((d1(x + h)? - 2.0 * d1(x)? + d1(x - h)?) / (h * h))
}

/// `d^3/dx^3 log sin(pi x)`.
fn log_sin_third(x: f64) -> f64 {
    let (s, c) = (PI * x).sin_cos();
    2.0 * PI.powi(3) * c / (s * s * s)
}

/// `d^3/dx^3 csc(pi x)`.
fn csc_third(x: f64) -> f64 {
    let (s, c) = (PI * x).sin_cos();
    let csc = 1.0 / s;
    let cot = c / s;
    -PI.powi(3) * (csc * cot.powi(3) + 5.0 * csc.powi(3) * cot)
}

/// Third derivative in `x` of the entropy form behind a model.
///
/// For c-function models this is the entropy whose derivative reproduces the
/// curve through the symmetrised c-function definition; the additive constant
/// of the entropy plays no role.
pub fn entropy_third_derivative(id: ModelId, x: f64, params: &[f64], ctx: &ModelContext) -> Result<f64> {
    check_arity(id, params)?;
    check_x(x)?;
    let c = params[0];
    Ok(match id {
        ModelId::Cft2dPlane => {
            let a = 2.0 * replica_factor(ctx) * c;
            2.0 * a / x.powi(3)
        }
        ModelId::Cft2dCylinder => 2.0 * replica_factor(ctx) * c * log_sin_third(x),
        ModelId::Fit2dCorrected => {
            // entropy (1/8) log sin(pi x) - (k/L) csc(pi x)
            let k = params[0];
            log_sin_third(x) / 8.0 - k / ctx.extent as f64 * csc_third(x)
        }
        ModelId::G2d | ModelId::F2d => c * log_sin_third(x),
        ModelId::GRvb | ModelId::FRvb => c * third_from_first(rvb_entropy_derivative, x)?,
        ModelId::GAds | ModelId::FAds => c * third_from_first(ads_entropy_derivative, x)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CTX: ModelContext = ModelContext {
        extent: 16,
        replicas: 2,
    };

    #[test]
    fn names_round_trip() {
        for m in ModelId::ALL {
            assert_eq!(m.name().parse::<ModelId>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("G3D".parse::<ModelId>().is_err());
    }

    #[test]
    fn trivial_values_at_half() {
        let e = |m, p: &[f64]| model_eval(m, 0.5, p, &CTX).unwrap();
        assert!(e(ModelId::F2d, &[0.7]).abs() < 1e-16);
        assert!((e(ModelId::G2d, &[0.3, 1.25]) - 1.25).abs() < 1e-16);
        assert!(e(ModelId::Fit2dCorrected, &[0.15]).abs() < 1e-16);
        assert!(e(ModelId::FRvb, &[1.0]).abs() < 1e-14);
        assert!(e(ModelId::FAds, &[1.0]).abs() < 1e-14);
    }

    #[test]
    fn cft_values() {
        let v = model_eval(ModelId::Cft2dPlane, 0.2, &[0.5], &CTX).unwrap();
        assert!((v - 0.0625).abs() < 1e-16);
        let v = model_eval(ModelId::Cft2dCylinder, 1.0 / 3.0, &[0.5], &CTX).unwrap();
        assert!((v - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn arity_and_domain_errors() {
        assert!(matches!(
            model_eval(ModelId::G2d, 0.3, &[1.0], &CTX),
            Err(Error::Arity { expected: 2, got: 1, .. })
        ));
        assert!(model_eval(ModelId::F2d, 0.0, &[1.0], &CTX).is_err());
        assert!(model_eval(ModelId::F2d, 1.2, &[1.0], &CTX).is_err());
    }

    #[test]
    fn closed_form_third_derivatives_match_differences() {
        let h = 1e-3;
        for x in [0.1, 0.27, 0.5, 0.8] {
            let f = |y: f64| (PI * y).sin().ln();
            let fd = (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h.powi(3));
            assert!((fd - log_sin_third(x)).abs() < 1e-3 * (1.0 + fd.abs()), "x = {x}");
            let f = |y: f64| 1.0 / (PI * y).sin();
            let fd = (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h.powi(3));
            assert!((fd - csc_third(x)).abs() < 1e-3 * (1.0 + fd.abs()), "x = {x}");
        }
    }

    #[test]
    fn rvb_is_symmetric() {
        for x in [0.05, 0.2, 0.45] {
            let a = rvb_entropy(x).unwrap();
            let b = rvb_entropy(1.0 - x).unwrap();
            assert!((a - b).abs() < 1e-12);
            let da = rvb_entropy_derivative(x).unwrap();
            let db = rvb_entropy_derivative(1.0 - x).unwrap();
            assert!((da + db).abs() < 1e-10 * da.abs());
        }
    }
}
