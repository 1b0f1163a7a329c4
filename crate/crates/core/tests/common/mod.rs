#![allow(dead_code)]

use gsrisk::fluid_map::ModelParams;
use gsrisk::{HeavyTail, PhaseType, RiskModel};

pub fn params(c: f64, claim_rate: f64, gain_rate: f64, eps: f64, q: f64) -> ModelParams {
    ModelParams {
        premium_rate: c,
        claim_rate,
        gain_rate,
        eps,
        q,
    }
}

/// c = 1, λ_- = 1, exp(1) claims, λ_+ = 0.5, exp(2) gains, Pareto(2, 1), q = 0.1.
pub fn model_a(eps: f64) -> RiskModel {
    RiskModel::new(
        params(1.0, 1.0, 0.5, eps, 0.1),
        Some(PhaseType::exponential(2.0)),
        PhaseType::exponential(1.0),
        HeavyTail::pareto(2.0, 1.0).unwrap(),
    )
    .unwrap()
}

/// Model A with the heavy tail replaced by exp(mean 2), so that the
/// perturbed model is itself phase-type.
pub fn model_a_ph(eps: f64) -> RiskModel<PhaseType> {
    RiskModel::new(
        params(1.0, 1.0, 0.5, eps, 0.1),
        Some(PhaseType::exponential(2.0)),
        PhaseType::exponential(1.0),
        PhaseType::exponential(0.5),
    )
    .unwrap()
}

/// The ε-mixture of [`model_a_ph`] written as a base model with a
/// hyperexponential claim law.
pub fn model_a_ph_exact(eps: f64) -> RiskModel<PhaseType> {
    let claims = PhaseType::from_rows(&[1.0 - eps, eps], &[vec![-1.0, 0.0], vec![0.0, -0.5]]).unwrap();
    RiskModel::new(
        params(1.0, 1.0, 0.5, 0.0, 0.1),
        Some(PhaseType::exponential(2.0)),
        claims,
        PhaseType::exponential(0.5),
    )
    .unwrap()
}

/// Cramér–Lundberg: c = 1, λ = 0.8, exp(1) claims.
pub fn cl_exp(eps: f64, q: f64) -> RiskModel {
    RiskModel::new(
        params(1.0, 0.8, 0.0, eps, q),
        None,
        PhaseType::exponential(1.0),
        HeavyTail::pareto(2.0, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}
