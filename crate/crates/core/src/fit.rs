//! Weighted linear least squares against the model curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{model_basis, Basis, ModelContext, ModelId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl FitPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelId,
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    /// Row-major parameter covariance.
    pub covariance: Vec<f64>,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub ndof: usize,
    pub points_used: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<(f64, f64)> {
        let idx = self.model.param_names().iter().position(|&n| n == name)?;
        Some((self.params[idx], self.errors[idx]))
    }
}

/// Solution of a weighted linear least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub params: Vec<f64>,
    pub covariance: Vec<f64>,
    pub chi2: f64,
}

/// Minimises `sum ((y - offset - sum_j p_j shape_j) / sigma)^2` for rows
/// `(basis, y, sigma)`.
pub fn linear_least_squares(rows: &[(Basis, f64, f64)]) -> Result<LinearSolution> {
    let Some(first) = rows.first() else {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    };
    let p = first.0.arity;
    if rows.len() < p {
        return Err(Error::InsufficientSamples {
            needed: p,
            got: rows.len(),
        });
    }
    let mut a = [[0.0f64; 2]; 2];
    let mut b = [0.0f64; 2];
    for (basis, y, sigma) in rows {
        if !(*sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Invalid(format!("point error must be positive, got {sigma}")));
        }
        let w = 1.0 / (sigma * sigma);
        let r = y - basis.offset;
        for i in 0..p {
            b[i] += w * basis.shapes[i] * r;
            for j in 0..p {
                a[i][j] += w * basis.shapes[i] * basis.shapes[j];
            }
        }
    }
    let (params, covariance) = if p == 1 {
        if !(a[0][0] > 0.0) {
            return Err(Error::Singular("shape function vanishes at every point".into()));
        }
        (vec![b[0] / a[0][0]], vec![1.0 / a[0][0]])
    } else {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(det > 1e-12 * a[0][0] * a[1][1]) {
            return Err(Error::Singular(
                "normal matrix is singular; the shape functions are degenerate on these points".into(),
            ));
        }
        let inv = [
            a[1][1] / det,
            -a[0][1] / det,
            -a[1][0] / det,
            a[0][0] / det,
        ];
        (
            vec![inv[0] * b[0] + inv[1] * b[1], inv[2] * b[0] + inv[3] * b[1]],
            inv.to_vec(),
        )
    };
    let chi2 = rows
        .iter()
        .map(|(basis, y, sigma)| ((y - basis.eval(&params)) / sigma).powi(2))
        .sum();
    Ok(LinearSolution {
        params,
        covariance,
        chi2,
    })
}

fn selected<'a>(points: &'a [FitPoint], include: Option<&'a [bool]>) -> Result<Vec<&'a FitPoint>> {
    if let Some(mask) = include {
        if mask.len() != points.len() {
            return Err(Error::SizeMismatch {
                expected: points.len(),
                found: mask.len(),
            });
        }
    }
    Ok(points
        .iter()
        .enumerate()
        .filter(|(i, _)| include.is_none_or(|m| m[*i]))
        .map(|(_, p)| p)
        .collect())
}

/// Fits `model` to every point.
pub fn weighted_fit(points: &[FitPoint], model: ModelId, ctx: &ModelContext) -> Result<FitResult> {
    weighted_fit_masked(points, model, ctx, None)
}

/// Fits `model` to the points whose mask entry is `true`.
pub fn weighted_fit_masked(
    points: &[FitPoint],
    model: ModelId,
    ctx: &ModelContext,
    include: Option<&[bool]>,
) -> Result<FitResult> {
    let used = selected(points, include)?;
    let arity = model.arity();
    if used.len() <= arity {
        return Err(Error::InsufficientSamples {
            needed: arity + 1,
            got: used.len(),
        });
    }
    let rows = used
        .iter()
        .map(|p| Ok((model_basis(model, p.x, ctx)?, p.y, p.sigma)))
        .collect::<Result<Vec<_>>>()?;
    let sol = linear_least_squares(&rows)?;
    let ndof = used.len() - arity;
    let errors = (0..arity).map(|i| sol.covariance[i * arity + i].sqrt()).collect();
    Ok(FitResult {
        model,
        params: sol.params,
        errors,
        covariance: sol.covariance,
        chi2: sol.chi2,
        chi2_reduced: sol.chi2 / ndof as f64,
        ndof,
        points_used: used.len(),
    })
}

/// `(chi2, chi2 / ndof)` for externally supplied parameters. With no free
/// parameters fitted, `ndof` is the number of points used.
pub fn chi2(
    points: &[FitPoint],
    model: ModelId,
    params: &[f64],
    ctx: &ModelContext,
    include: Option<&[bool]>,
) -> Result<(f64, f64)> {
    let used = selected(points, include)?;
    if used.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    for p in &used {
        let v = crate::special::model_eval(model, p.x, params, ctx)?;
        total += ((p.y - v) / p.sigma).powi(2);
    }
    Ok((total, total / used.len() as f64))
}

/// Mask dropping the first and last `k` points.
pub fn exclude_ends(len: usize, k: usize) -> Vec<bool> {
    (0..len).map(|i| i >= k && i + k < len).collect()
}
