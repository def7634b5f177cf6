//! Identities of the model curves and their building blocks.

use std::f64::consts::PI;

use entropic::special::modular::{log_eta_series, log_theta3_series};
use entropic::special::*;

// Gamma(1/4) and Gamma(3/4)
const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;
const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_177_6;

#[test]
fn eta_and_theta_at_i_match_closed_forms() {
    let eta = GAMMA_QUARTER / (2.0 * PI.powf(0.75));
    let theta = PI.powf(0.25) / GAMMA_THREE_QUARTERS;
    assert!((dedekind_eta(1.0).unwrap() - eta).abs() < 1e-14);
    assert!((jacobi_theta3(1.0).unwrap() - theta).abs() < 1e-14);
}

#[test]
fn modular_symmetry_from_the_raw_series() {
    let t: f64 = 2.0;
    let lhs = log_eta_series(1.0 / t, 1000).unwrap();
    let rhs = 0.5 * t.ln() + log_eta_series(t, 1000).unwrap();
    assert!((lhs - rhs).abs() < 1e-13);
    let lhs = log_theta3_series(1.0 / t, 1000).unwrap();
    let rhs = 0.5 * t.ln() + log_theta3_series(t, 1000).unwrap();
    assert!((lhs - rhs).abs() < 1e-13);
}

#[test]
fn truncation_is_converged() {
    for t in [0.3f64, 1.0, 2.0] {
        let a = log_eta_series(t, 40).unwrap();
        let b = log_eta_series(t, 80).unwrap();
        assert!((a - b).abs() < 1e-13);
        let a = log_theta3_series(t, 10).unwrap();
        let b = log_theta3_series(t, 20).unwrap();
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn eta_decays_like_its_leading_term() {
    let t = 12.0;
    let ratio = dedekind_eta(t).unwrap() / (-PI * t / 12.0).exp();
    assert!((ratio - 1.0).abs() < 1e-15);
    assert!((jacobi_theta3(t).unwrap() - 1.0).abs() < 1e-15);
}

fn interior_points() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 21.0).collect()
}

fn check_derivative_consistency(g: ModelId, f: ModelId) {
    let ctx = ModelContext::new(16, 2);
    for x in interior_points() {
        let h = 1e-5;
        let dg = (model_eval(g, x + h, &[1.0, 0.0], &ctx).unwrap() - model_eval(g, x - h, &[1.0, 0.0], &ctx).unwrap()) / (2.0 * h);
        let from_g = (PI * x).sin().powi(2) / (2.0 * PI * PI) * dg;
        let direct = model_eval(f, x, &[1.0], &ctx).unwrap();
        let scale = direct.abs().max(1e-3);
        assert!((from_g - direct).abs() < 1e-6 * scale, "{f} at x = {x}: {from_g} vs {direct}");
    }
}

#[test]
fn f_models_are_derivatives_of_g_models() {
    check_derivative_consistency(ModelId::G2d, ModelId::F2d);
    check_derivative_consistency(ModelId::GRvb, ModelId::FRvb);
    check_derivative_consistency(ModelId::GAds, ModelId::FAds);
}

#[test]
fn f_models_are_antisymmetric() {
    let ctx = ModelContext::new(16, 2);
    for f in [ModelId::F2d, ModelId::FRvb, ModelId::FAds, ModelId::Cft2dCylinder, ModelId::Fit2dCorrected] {
        let p: &[f64] = if f == ModelId::Fit2dCorrected { &[0.0] } else { &[1.0] };
        for x in [0.03, 0.2, 0.41] {
            let a = model_eval(f, x, p, &ctx).unwrap();
            let b = model_eval(f, 1.0 - x, p, &ctx).unwrap();
            assert!((a + b).abs() < 1e-9 * a.abs().max(1e-3), "{f} at {x}");
        }
    }
}

#[test]
fn ads_inversion_round_trips() {
    let chi = ads_chi_of_x(ads_x_of_chi(0.5).unwrap()).unwrap();
    assert!((chi - 0.5).abs() < 1e-8);
    let x = ads_x_of_chi(ads_chi_of_x(0.25).unwrap()).unwrap();
    assert!((x - 0.25).abs() < 1e-8);
    assert!(ads_x_of_chi(0.3).unwrap() < ads_x_of_chi(0.6).unwrap());
    assert!(ads_x_of_chi(1e-9).unwrap() < 1e-3);
    assert!(ads_chi_of_x(1e-4).unwrap() < 1e-8);
}

#[test]
fn small_x_behaviour_of_the_torus_models() {
    // both diverge like -1/x, so C tends to a constant
    let ctx = ModelContext::new(16, 2);
    for f in [ModelId::FRvb, ModelId::FAds] {
        let a = model_eval(f, 1e-3, &[1.0], &ctx).unwrap();
        let b = model_eval(f, 2e-3, &[1.0], &ctx).unwrap();
        assert!(a > 0.0 && (a - b).abs() < 1e-2 * a, "{f}: {a} {b}");
    }
    // f_2D vanishes instead
    assert!(model_eval(ModelId::F2d, 1e-4, &[1.0], &ctx).unwrap() < 1e-4);
}

#[test]
fn third_derivatives_grow_toward_the_edges() {
    let ctx = ModelContext::new(16, 2);
    for m in [ModelId::FRvb, ModelId::FAds, ModelId::Fit2dCorrected] {
        let p: &[f64] = if m == ModelId::Fit2dCorrected { &[0.15] } else { &[1.0] };
        let near = entropy_third_derivative(m, 0.05, p, &ctx).unwrap().abs();
        let mid = entropy_third_derivative(m, 0.3, p, &ctx).unwrap().abs();
        assert!(near > 10.0 * mid, "{m}: {near} vs {mid}");
    }
}
