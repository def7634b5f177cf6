//! Rényi-entropy increments, symmetrised entropic c-functions and the checks
//! run on them.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{weighted_fit_masked, FitPoint, FitResult};
use crate::jarzynski::JarzynskiEstimate;
use crate::lattice::LatticeSpec;
use crate::schedule::Direction;
use crate::special::{entropy_third_derivative, ModelContext, ModelId};

/// Which ramp(s) a value was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    Direct,
    Reverse,
    /// Inverse-variance mean of direct and reverse.
    Combined,
}

impl PointSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointSource::Direct => "direct",
            PointSource::Reverse => "reverse",
            PointSource::Combined => "combined",
        }
    }
}

impl From<Direction> for PointSource {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Direct => PointSource::Direct,
            Direction::Reverse => PointSource::Reverse,
        }
    }
}

impl fmt::Display for PointSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `S_n(l) - S_n(l - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRenyi {
    /// Upper end of the step `l - 1 -> l`.
    pub l: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFunctionPoint {
    /// `(l - 1/2) / L`.
    pub x: f64,
    pub l: usize,
    pub extent: usize,
    pub dim: usize,
    pub replicas: usize,
    pub beta: f64,
    pub delta_s: f64,
    pub c_value: f64,
    pub stat_err: f64,
    pub sys_err: f64,
    pub source: PointSource,
}

impl CFunctionPoint {
    /// Statistical and systematic errors in quadrature.
    pub fn total_err(&self) -> f64 {
        self.stat_err.hypot(self.sys_err)
    }
}

fn check_replicas(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Geometry(format!("need at least 2 replicas, got {n}")));
    }
    Ok(())
}

/// `Delta S_n = -log(Z_n(l+1) / Z_n(l)) / (n - 1)` from a log ratio of the
/// grown over the smaller cut.
pub fn delta_renyi_from_log_ratio(l: usize, log_ratio: f64, error: f64, n: usize) -> Result<DeltaRenyi> {
    check_replicas(n)?;
    let scale = 1.0 / (n - 1) as f64;
    Ok(DeltaRenyi {
        l,
        value: -log_ratio * scale,
        error: error * scale,
    })
}

/// Entropy increment for the step `l - 1 -> l` from one Jarzynski estimate.
pub fn delta_renyi(est: &JarzynskiEstimate, l: usize, n: usize) -> Result<DeltaRenyi> {
    delta_renyi_from_log_ratio(l, est.grow_log_ratio(), est.stat_err, n)
}

/// `[L sin(pi x) / pi]^(D-1) / (2 L^(D-2))`, the factor turning `Delta S` into `C`.
pub fn cfunction_prefactor(x: f64, extent: usize, dim: usize) -> f64 {
    let l = extent as f64;
    (l * (PI * x).sin() / PI).powi(dim as i32 - 1) / (2.0 * l.powi(dim as i32 - 2))
}

pub fn entropic_cfunction(delta: &DeltaRenyi, spec: &LatticeSpec, source: PointSource) -> Result<CFunctionPoint> {
    if delta.l < 1 || delta.l > spec.extent {
        return Err(Error::Geometry(format!(
            "step l = {} outside 1..={}",
            delta.l, spec.extent
        )));
    }
    let x = (delta.l as f64 - 0.5) / spec.extent as f64;
    let pref = cfunction_prefactor(x, spec.extent, spec.dim);
    Ok(CFunctionPoint {
        x,
        l: delta.l,
        extent: spec.extent,
        dim: spec.dim,
        replicas: spec.replicas,
        beta: spec.beta,
        delta_s: delta.value,
        c_value: pref * delta.value,
        stat_err: pref * delta.error.abs(),
        sys_err: 0.0,
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub l: usize,
    pub s: f64,
    pub err: f64,
}

/// `S_n(l) - S_n(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub points: Vec<EntropyPoint>,
}

/// Cumulative sum of increments for `l = 1, 2, ...`, starting from `S(0) = 0`.
pub fn reconstruct_entropy(deltas: &[DeltaRenyi]) -> Result<EntropyCurve> {
    let mut points = vec![EntropyPoint { l: 0, s: 0.0, err: 0.0 }];
    let (mut s, mut var) = (0.0, 0.0);
    for (i, d) in deltas.iter().enumerate() {
        if d.l != i + 1 {
            return Err(Error::Gap {
                expected: i + 1,
                found: d.l,
            });
        }
        s += d.value;
        var += d.error * d.error;
        points.push(EntropyPoint {
            l: d.l,
            s,
            err: var.sqrt(),
        });
    }
    Ok(EntropyCurve { points })
}

impl EntropyCurve {
    /// Successive differences; inverts [`reconstruct_entropy`] for the values.
    pub fn increments(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].s - w[0].s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntisymmetryPair {
    pub l: usize,
    pub l_mirror: usize,
    pub x: f64,
    pub sum: f64,
    pub error: f64,
    pub pull: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTemperatureReport {
    pub pairs: Vec<AntisymmetryPair>,
    pub max_pull: f64,
    /// True when some pair deviates by more than three standard deviations.
    pub flagged: bool,
}

fn pull(value: f64, error: f64) -> f64 {
    if error > 0.0 {
        value.abs() / error
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Tests `C(x) = -C(1 - x)` on every mirror pair present in `points`,
/// using statistical errors.
pub fn zero_temperature_check(points: &[CFunctionPoint]) -> ZeroTemperatureReport {
    let mut pairs = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i..] {
            if (a.x + b.x - 1.0).abs() > 1e-9 {
                continue;
            }
            // a point at x = 1/2 is its own mirror; its error enters twice
            let error = if std::ptr::eq(a, b) {
                2.0 * a.stat_err
            } else {
                a.stat_err.hypot(b.stat_err)
            };
            let sum = a.c_value + b.c_value;
            pairs.push(AntisymmetryPair {
                l: a.l,
                l_mirror: b.l,
                x: a.x.min(b.x),
                sum,
                error,
                pull: pull(sum, error),
            });
        }
    }
    let max_pull = pairs.iter().map(|p| p.pull).fold(0.0, f64::max);
    ZeroTemperatureReport {
        flagged: max_pull > 3.0,
        pairs,
        max_pull,
    }
}

/// Leading discretisation error of the midpoint difference:
/// `(1 / (48 L^2)) (sin(pi x) / pi)^(D-1) |g'''(x)|`.
pub fn discretisation_error(x: f64, extent: usize, dim: usize, third_derivative: f64) -> f64 {
    let l = extent as f64;
    ((PI * x).sin() / PI).powi(dim as i32 - 1) * third_derivative.abs() / (48.0 * l * l)
}

/// Fills `sys_err` from the third derivative of an entropy form.
pub fn systematic_error<F>(points: &[CFunctionPoint], third_derivative: F) -> Result<Vec<CFunctionPoint>>
where
    F: Fn(f64) -> Result<f64>,
{
    points
        .iter()
        .map(|p| {
            let g3 = third_derivative(p.x)?;
            Ok(CFunctionPoint {
                sys_err: discretisation_error(p.x, p.extent, p.dim, g3),
                ..*p
            })
        })
        .collect()
}

/// [`systematic_error`] with the entropy form of a fitted model.
pub fn systematic_error_model(
    points: &[CFunctionPoint],
    model: ModelId,
    params: &[f64],
    ctx: &ModelContext,
) -> Result<Vec<CFunctionPoint>> {
    systematic_error(points, |x| entropy_third_derivative(model, x, params, ctx))
}

pub const MAX_SYSTEMATIC_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystematicFit {
    pub points: Vec<CFunctionPoint>,
    pub fit: FitResult,
    /// Number of fits performed.
    pub iterations: usize,
}

pub fn fit_points(points: &[CFunctionPoint]) -> Vec<FitPoint> {
    points
        .iter()
        .map(|p| FitPoint::new(p.x, p.c_value, p.total_err()))
        .collect()
}

/// Alternates fit and systematic-error estimate until no systematic error
/// moves by more than 1% between iterations.
pub fn iterate_systematics(
    points: &[CFunctionPoint],
    model: ModelId,
    ctx: &ModelContext,
    include: Option<&[bool]>,
) -> Result<SystematicFit> {
    if model.is_entropy() {
        return Err(Error::Invalid(format!(
            "{model} describes the entropy, not the c-function"
        )));
    }
    let mut current: Vec<CFunctionPoint> = points.iter().map(|p| CFunctionPoint { sys_err: 0.0, ..*p }).collect();
    for iteration in 1..=MAX_SYSTEMATIC_ITERATIONS {
        let fit = weighted_fit_masked(&fit_points(&current), model, ctx, include)?;
        let next = systematic_error_model(&current, model, &fit.params, ctx)?;
        let settled = iteration > 1
            && current
                .iter()
                .zip(&next)
                .all(|(a, b)| (a.sys_err - b.sys_err).abs() <= 0.01 * a.sys_err.max(b.sys_err));
        current = next;
        if settled {
            return Ok(SystematicFit {
                points: current,
                fit,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "systematic-error iteration".into(),
        iterations: MAX_SYSTEMATIC_ITERATIONS,
    })
}

/// Model-independent cross-check of the discretisation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderPoint {
    pub l: usize,
    pub x: f64,
    /// c-function from the `O(a^4)` accurate derivative.
    pub c_value: f64,
    /// Naive minus improved c-function.
    pub shift: f64,
}

/// Uses `f'(x_j) ~ D_j - (D_(j+1) - 2 D_j + D_(j-1)) / 24` on interior
/// points of a contiguous, `l`-ordered set.
pub fn higher_order_check(points: &[CFunctionPoint]) -> Result<Vec<HigherOrderPoint>> {
    for w in points.windows(2) {
        if w[1].l != w[0].l + 1 {
            return Err(Error::Gap {
                expected: w[0].l + 1,
                found: w[1].l,
            });
        }
    }
    Ok(points
        .windows(3)
        .map(|w| {
            let d2 = w[2].delta_s - 2.0 * w[1].delta_s + w[0].delta_s;
            let improved = w[1].delta_s - d2 / 24.0;
            let pref = cfunction_prefactor(w[1].x, w[1].extent, w[1].dim);
            HigherOrderPoint {
                l: w[1].l,
                x: w[1].x,
                c_value: pref * improved,
                shift: w[1].c_value - pref * improved,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Direction;

    fn est(log_ratio: f64, err: f64, direction: Direction) -> JarzynskiEstimate {
        JarzynskiEstimate {
            log_ratio,
            stat_err: err,
            n_traj: 10,
            steps: 10,
            direction,
            mean_work: 0.0,
            work_variance: 0.0,
        }
    }

    #[test]
    fn increment_sign_and_scale() {
        let d = delta_renyi(&est(-0.05, 0.01, Direction::Direct), 1, 2).unwrap();
        assert!((d.value - 0.05).abs() < 1e-15 && (d.error - 0.01).abs() < 1e-15);
        let d = delta_renyi(&est(-0.06, 0.01, Direction::Direct), 1, 3).unwrap();
        assert!((d.value - 0.03).abs() < 1e-15);
        // a reverse ramp measures the inverse ratio
        let d = delta_renyi(&est(0.05, 0.01, Direction::Reverse), 1, 2).unwrap();
        assert!((d.value - 0.05).abs() < 1e-15);
        assert!(delta_renyi(&est(0.1, 0.0, Direction::Direct), 1, 1).is_err());
    }

    #[test]
    fn prefactor_arithmetic() {
        let spec = LatticeSpec::new(3, 24, 96, 2, 0.22);
        let d = DeltaRenyi { l: 12, value: 0.01, error: 0.0 };
        // x = 11.5 / 24, not exactly 1/2
        let p = entropic_cfunction(&d, &spec, PointSource::Direct).unwrap();
        let expected = (24.0 * (PI * p.x).sin() / PI).powi(2) / 48.0 * 0.01;
        assert!((p.c_value - expected).abs() < 1e-15);
        assert!((cfunction_prefactor(0.5, 24, 3) * 0.01 - 0.012_158).abs() < 1e-6);
        assert!((cfunction_prefactor(0.5, 16, 2) - 8.0 / PI).abs() < 1e-14);

        let zero = DeltaRenyi { l: 3, value: 0.0, error: 0.0 };
        assert_eq!(entropic_cfunction(&zero, &spec, PointSource::Direct).unwrap().c_value, 0.0);
        let bad = DeltaRenyi { l: 0, value: 0.0, error: 0.0 };
        assert!(entropic_cfunction(&bad, &spec, PointSource::Direct).is_err());
    }

    #[test]
    fn exact_cylinder_derivative_gives_cosine() {
        // S = (c/6)(1 + 1/n) log sin(pi l / L): dS/dl = (c/6)(1 + 1/n)(pi/L) cot
        let (c, n, l) = (0.5, 2.0, 32.0);
        for x in [0.1, 0.33, 0.5, 0.9] {
            let ds = c / 6.0 * (1.0 + 1.0 / n) * PI / l / (PI * x).tan();
            let v = cfunction_prefactor(x, 32, 2) * ds;
            let expected = c / 12.0 * (1.0 + 1.0 / n) * (PI * x).cos();
            assert!((v - expected).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn reconstruction_and_gaps() {
        let d = [
            DeltaRenyi { l: 1, value: 0.1, error: 0.03 },
            DeltaRenyi { l: 2, value: 0.2, error: 0.04 },
        ];
        let curve = reconstruct_entropy(&d).unwrap();
        let s: Vec<f64> = curve.points.iter().map(|p| p.s).collect();
        assert_eq!(s.len(), 3);
        assert!((s[1] - 0.1).abs() < 1e-15 && (s[2] - 0.3).abs() < 1e-15);
        assert!((curve.points[2].err - 0.05).abs() < 1e-15);
        let inc = curve.increments();
        assert_eq!(inc[0], 0.1);
        assert!((inc[1] - 0.2).abs() < 1e-15);

        let gap = [DeltaRenyi { l: 1, value: 0.1, error: 0.0 }, DeltaRenyi { l: 3, value: 0.1, error: 0.0 }];
        assert!(matches!(reconstruct_entropy(&gap), Err(Error::Gap { expected: 2, found: 3 })));
    }

    fn point(l: usize, extent: usize, c: f64, err: f64) -> CFunctionPoint {
        CFunctionPoint {
            x: (l as f64 - 0.5) / extent as f64,
            l,
            extent,
            dim: 2,
            replicas: 2,
            beta: 0.44,
            delta_s: c / cfunction_prefactor((l as f64 - 0.5) / extent as f64, extent, 2),
            c_value: c,
            stat_err: err,
            sys_err: 0.0,
            source: PointSource::Combined,
        }
    }

    #[test]
    fn antisymmetry_pulls() {
        let pts = [point(1, 4, 0.010, 0.001), point(4, 4, -0.007, 0.001)];
        let r = zero_temperature_check(&pts);
        assert_eq!(r.pairs.len(), 1);
        assert!((r.pairs[0].pull - 2.121_320_343_6).abs() < 1e-9);
        assert!(!r.flagged);

        let exact: Vec<_> = (1..=5)
            .map(|l| point(l, 5, (PI * (l as f64 - 0.5) / 5.0).cos() / 16.0, 0.001))
            .collect();
        let r = zero_temperature_check(&exact);
        assert_eq!(r.pairs.len(), 3);
        assert!(r.max_pull < 1e-9);
    }

    #[test]
    fn cosine_entropy_systematic_at_half() {
        let p = point(16, 32, 0.0, 0.001);
        let p = CFunctionPoint { x: 0.5, ..p };
        // pure cosine entropy cos(pi x)/16 has g''' = (pi^3/16) sin(pi x)
        let out = systematic_error(&[p], |x| Ok(PI.powi(3) / 16.0 * (PI * x).sin())).unwrap();
        let expected = PI * PI / (768.0 * 32.0 * 32.0);
        assert!((out[0].sys_err - expected).abs() < 1e-12);
        assert!((expected - 1.255e-5).abs() < 1e-8);

        // log sin(pi x) has g''' = 0 at x = 1/2
        let ctx = ModelContext::new(32, 2);
        let out = systematic_error_model(&[p], ModelId::Fit2dCorrected, &[0.15], &ctx).unwrap();
        assert!(out[0].sys_err.abs() < 1e-15);
    }

    #[test]
    fn systematics_iteration_on_model_data() {
        let ctx = ModelContext::new(16, 2);
        let pts: Vec<_> = (1..=16)
            .map(|l| {
                let x = (l as f64 - 0.5) / 16.0;
                let c = crate::special::model_eval(ModelId::Fit2dCorrected, x, &[0.15], &ctx).unwrap();
                point(l, 16, c, 0.002)
            })
            .collect();
        let out = iterate_systematics(&pts, ModelId::Fit2dCorrected, &ctx, None).unwrap();
        assert!(out.iterations <= 5);
        assert!((out.fit.params[0] - 0.15).abs() < 1e-10);
        // errors largest at the ends, symmetric in x
        assert!(out.points[0].sys_err > out.points[7].sys_err);
        assert!((out.points[0].sys_err - out.points[15].sys_err).abs() < 1e-12);
        assert!(iterate_systematics(&pts, ModelId::G2d, &ctx, None).is_err());
    }

    #[test]
    fn higher_order_derivative_is_exact_for_cubics() {
        // Delta S_j = F(l_j) - F(l_j - 1) for cubic F; the improved midpoint
        // derivative is exact.
        let f = |l: f64| 0.01 * l * l * l - 0.2 * l * l + l;
        let df = |l: f64| 0.03 * l * l - 0.4 * l + 1.0;
        let pts: Vec<_> = (1..=6)
            .map(|l| {
                let mut p = point(l, 8, 0.0, 0.001);
                p.delta_s = f(l as f64) - f(l as f64 - 1.0);
                p.c_value = p.delta_s * cfunction_prefactor(p.x, 8, 2);
                p
            })
            .collect();
        let out = higher_order_check(&pts).unwrap();
        assert_eq!(out.len(), 4);
        for h in out {
            let exact = df(h.l as f64 - 0.5) * cfunction_prefactor(h.x, 8, 2);
            assert!((h.c_value - exact).abs() < 1e-12);
        }
    }
}
