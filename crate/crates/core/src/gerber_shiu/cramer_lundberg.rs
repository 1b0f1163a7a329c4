//! Ruin probability of the Cramér–Lundberg model (`λ_+ = 0`, `q = 0`) and
//! its first-order correction, through the Pollaczek–Khinchine
//! representation `Ψ(u) = P(M > u)` with `M` a geometric sum of
//! equilibrium ladder heights.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::distributions::ClaimLaw;
use crate::error::{Error, Result};
use crate::fluid_map::RiskModel;
use crate::numerics::Quadrature;

/// Defective phase-type law: `P(X > x) = α e^{Sx} 1`, atom `1 - α1` at 0.
#[derive(Debug, Clone)]
struct DefectivePh {
    alpha: DVector<f64>,
    s: DMatrix<f64>,
}

impl DefectivePh {
    fn tail(&self, x: f64) -> f64 {
        let e = (&self.s * x).exp();
        (e.transpose() * &self.alpha).sum()
    }
}

/// The three laws entering the closed form, built from the equilibrium
/// representation `(π, T)` of the light claims and `ρ = λ μ_p / c`.
struct Ladder {
    m: DefectivePh,
    m2: DefectivePh,
    m2_fe: DefectivePh,
}

fn ladder<H: ClaimLaw>(model: &RiskModel<H>) -> Ladder {
    let eq = model.claim_equilibrium();
    let (pi, t, exit) = (eq.alpha().clone(), eq.subintensity().clone(), eq.exit().clone());
    let n = pi.len();
    let rho = model.lambda_minus * model.mu_p() / model.c;
    // M: ladder heights restart with probability ρ
    let s = &t + &exit * pi.transpose() * rho;
    let out = &exit * (1.0 - rho);
    let m = DefectivePh {
        alpha: &pi * rho,
        s: s.clone(),
    };

    let block = |k: usize| {
        let mut a = DVector::zeros(k * n);
        let mut g = DMatrix::zeros(k * n, k * n);
        for b in 0..k {
            g.view_mut((b * n, b * n), (n, n))
                .copy_from(if b < 2 { &s } else { &t });
        }
        a.rows_mut(0, n).copy_from(&(&pi * rho));
        a.rows_mut(n, n).copy_from(&(&pi * ((1.0 - rho) * rho)));
        g.view_mut((0, n), (n, n)).copy_from(&(&out * pi.transpose() * rho));
        (a, g)
    };
    let (a2, g2) = block(2);
    let (mut a3, mut g3) = block(3);
    a3.rows_mut(2 * n, n).copy_from(&(&pi * (1.0 - rho).powi(2)));
    g3.view_mut((0, 2 * n), (n, n))
        .copy_from(&(&out * pi.transpose() * (1.0 - rho)));
    g3.view_mut((n, 2 * n), (n, n)).copy_from(&(&out * pi.transpose()));
    Ladder {
        m,
        m2: DefectivePh { alpha: a2, s: g2 },
        m2_fe: DefectivePh { alpha: a3, s: g3 },
    }
}

fn check_cl<H: ClaimLaw>(model: &RiskModel<H>) -> Result<()> {
    if model.lambda_plus != 0.0 || model.gains.is_some() {
        return Err(Error::PreconditionViolated("Cramér-Lundberg path needs λ_+ = 0".into()));
    }
    if model.q != 0.0 {
        return Err(Error::PreconditionViolated("Cramér-Lundberg path needs q = 0".into()));
    }
    if !(model.base_loading_margin() > 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "λ μ_p = {} must be below c = {}",
            model.lambda_minus * model.mu_p(),
            model.c
        )));
    }
    Ok(())
}

/// Ruin probability of the base model and its first-order coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClRuin {
    pub u: f64,
    pub psi: f64,
    pub correction: f64,
}

impl ClRuin {
    pub fn corrected(&self, eps: f64) -> f64 {
        self.psi + eps * self.correction
    }
}

/// `P(M <= u)` through the phase-type representation of `M`.
pub fn pk_cdf<H: ClaimLaw>(model: &RiskModel<H>, u: f64) -> Result<f64> {
    check_cl(model)?;
    Ok(1.0 - ladder(model).m.tail(u))
}

/// `Ψ(u)` and the coefficient of `ε` in
/// `Ψ_ε(u) = Ψ(u) + ε λ/(c - λμ_p) [μ_h (P(M+M*+H_e > u) - P(M > u))
/// - μ_p (P(M+M*+F_e > u) - P(M > u))] + O(ε²)`.
pub fn cl_ruin_expansion<H: ClaimLaw>(model: &RiskModel<H>, u: f64) -> Result<ClRuin> {
    check_cl(model)?;
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::InvalidParameter(format!("surplus u = {u} must be >= 0")));
    }
    let l = ladder(model);
    let psi = l.m.tail(u);
    let heavy = &model.claims.heavy;
    let conv = if u > 0.0 {
        Quadrature::with_tol(1e-11, 1e-15).integrate(|x: f64| heavy.equilibrium_pdf(x) * l.m2.tail(u - x), 0.0, u)?
    } else {
        0.0
    };
    let with_heavy = heavy.equilibrium_tail(u) + conv;
    let with_light = l.m2_fe.tail(u);
    let margin = model.c - model.lambda_minus * model.mu_p();
    let lam = model.lambda_minus;
    let correction = lam / margin * (model.mu_h() * (with_heavy - psi) - model.mu_p() * (with_light - psi));
    Ok(ClRuin { u, psi, correction })
}

/// `Ψ(u) + ε h(u)`.
pub fn cl_ruin_corrected<H: ClaimLaw>(model: &RiskModel<H>, u: f64, eps: f64) -> Result<f64> {
    if !(0.0..=super::EPS_MAX).contains(&eps) {
        return Err(Error::PreconditionViolated(format!(
            "eps = {eps} outside [0, {}]",
            super::EPS_MAX
        )));
    }
    Ok(cl_ruin_expansion(model, u)?.corrected(eps))
}
