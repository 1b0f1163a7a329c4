//! Gerber–Shiu function of the base model and its first-order correction
//! in the heavy-tail weight, the Cramér–Lundberg specialization, and the
//! heavy-tail asymptotic bound.
//!
//! Everything is assembled from the split `W = G + W⁻` of the scale
//! matrix into growing modes and a bounded rest. With it the resolvent
//! density reads, for the first row,
//!
//! `U(u, z) = W⁻(u) e^{-Rz} - W⁻(u - z) 1{z <= u} + G(u - z) 1{z > u}`,
//!
//! which never subtracts exponentially large numbers.

mod asymptotics;
mod cramer_lundberg;
mod penalty;

pub use asymptotics::{asymptotic_bound, kappa_partial_integral};
pub use cramer_lundberg::{cl_ruin_corrected, cl_ruin_expansion, pk_cdf, ClRuin};
pub use penalty::{Penalty, PenaltyTable};

use serde::Serialize;

use crate::distributions::{ClaimLaw, HeavyTail};
use crate::error::{Error, Result};
use crate::fluid_map::{DetPolynomial, RiskModel};
use crate::numerics::Quadrature;
use crate::scale::{base_scale_matrix, scale_row_correction, GridSpec, ScaleMatrix, ScaleRowCorrection};
use crate::spectral::SpectralData;
use crate::{CMatrix, Complex};

/// Mixing weights above this are accepted with a warning flag.
pub const EPS_WARN: f64 = 0.2;
pub const EPS_MAX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GsDiagnostics {
    pub grid_step: f64,
    pub cond_lambda: f64,
    pub positive_roots: usize,
    /// `ε > 0.2`: outside the range where the first-order term is reliable.
    pub eps_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GsResult {
    pub u: f64,
    pub eps: f64,
    pub base: f64,
    pub correction: f64,
    pub corrected: f64,
    pub diagnostics: GsDiagnostics,
}

fn quad() -> Quadrature<f64> {
    Quadrature::with_tol(1e-11, 1e-15)
}

/// First row of the discounted resolvent density `U(u, z)` of the base model.
pub fn resolvent_first_row(spectral: &SpectralData, scale: &ScaleMatrix, u: f64, z: f64) -> Vec<f64> {
    let n = scale.dim();
    let rest = scale.rest_row(u);
    let e = spectral.exp_r_complex(z);
    let mut out: Vec<Complex> = (0..n).map(|j| (0..n).map(|k| rest[k] * e[(k, j)]).sum()).collect();
    if z <= u {
        for (o, w) in out.iter_mut().zip(scale.rest_row(u - z)) {
            *o -= w;
        }
    } else {
        for (o, g) in out.iter_mut().zip(scale.growing_row(u - z)) {
            *o += g;
        }
    }
    out.into_iter().map(|c| c.re).collect()
}

/// First-order coefficient `v(u, z)` of the `(1,1)` resolvent density.
pub fn correction_v(spectral: &SpectralData, scale: &ScaleMatrix, corr: &ScaleRowCorrection, u: f64, z: f64) -> f64 {
    let n = scale.dim();
    let e = spectral.exp_r(z);
    let e1 = spectral.exp_r_first_order(z);
    let rest = scale.rest_row(u);
    let mut v = 0.0;
    for k in 0..n {
        v += corr.rest_at(k, u) * e[(k, 0)] + rest[k].re * e1[(k, 0)];
    }
    if z <= u {
        v - corr.rest_at(0, u - z)
    } else {
        v + corr.growing_at(0, u - z)
    }
}

/// Precomputed base-model data for evaluating the GS function and its
/// correction at many surplus levels.
#[derive(Debug, Clone)]
pub struct GsSolver<H = HeavyTail> {
    model: RiskModel<H>,
    penalty: Penalty,
    pub det: DetPolynomial,
    pub spectral: SpectralData,
    pub scale: ScaleMatrix,
    pub row_correction: ScaleRowCorrection,
    grid: GridSpec,
    /// `∫ (e^{-Rz})_{•1} Ω_F(z) dz`.
    j_light: Vec<Complex>,
    /// Same with `Ω_H - Ω_F`.
    j_diff: Vec<Complex>,
    /// `∫ E⁽¹⁾(z)_{•1} Ω_F(z) dz`.
    k_light: Vec<Complex>,
    /// `Ω_F` on the correction grid.
    omega_light_grid: Vec<f64>,
}

impl<H: ClaimLaw + Clone> GsSolver<H> {
    pub fn new(model: &RiskModel<H>, penalty: Penalty, grid: GridSpec) -> Result<Self> {
        penalty.validate()?;
        if !(model.q > 0.0) {
            return Err(Error::PreconditionViolated(
                "the general Gerber-Shiu pipeline needs q > 0; q = 0 is served by the Cramér-Lundberg path".into(),
            ));
        }
        let det = model.det_polynomial()?;
        let spectral = SpectralData::new(model, &det)?;
        let scale = base_scale_matrix(model, &det)?;
        let row_correction = scale_row_correction(model, &det, &spectral, &scale, grid)?;
        let mut solver = Self {
            model: model.clone(),
            penalty,
            det,
            spectral,
            scale,
            row_correction,
            grid,
            j_light: Vec::new(),
            j_diff: Vec::new(),
            k_light: Vec::new(),
            omega_light_grid: Vec::new(),
        };
        solver.precompute()?;
        Ok(solver)
    }
}

impl<H: ClaimLaw> GsSolver<H> {
    pub fn model(&self) -> &RiskModel<H> {
        &self.model
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn omega_light(&self, z: f64) -> Result<f64> {
        self.penalty.omega(&self.model.claims.ph, z)
    }

    fn omega_diff(&self, z: f64) -> Result<f64> {
        Ok(self.penalty.omega(&self.model.claims.heavy, z)? - self.omega_light(z)?)
    }

    fn precompute(&mut self) -> Result<()> {
        let roots = self.spectral.roots.clone();
        let q = quad();
        let mut l_light = Vec::new();
        let mut l_diff = Vec::new();
        let mut m_light = Vec::new();
        for &rho in &roots {
            l_light.push(q.integrate(
                |z: f64| (-rho * z).exp() * fallible(self.omega_light(z)),
                0.0,
                f64::INFINITY,
            )?);
            l_diff.push(q.integrate(
                |z: f64| (-rho * z).exp() * fallible(self.omega_diff(z)),
                0.0,
                f64::INFINITY,
            )?);
            m_light.push(q.integrate(
                |z: f64| (-rho * z).exp() * (z * fallible(self.omega_light(z))),
                0.0,
                f64::INFINITY,
            )?);
        }
        check_finite(&l_light)?;
        check_finite(&l_diff)?;
        check_finite(&m_light)?;
        let sp = &self.spectral;
        let diag = |v: &[Complex]| CMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()));
        let col0 = |m: CMatrix| (0..m.nrows()).map(|i| m[(i, 0)]).collect::<Vec<_>>();
        self.j_light = col0(&sp.lambda_inv * diag(&l_light) * &sp.lambda);
        self.j_diff = col0(&sp.lambda_inv * diag(&l_diff) * &sp.lambda);
        let fo = &sp.first_order;
        let rho1_m: Vec<Complex> = fo.rho1.iter().zip(&m_light).map(|(a, b)| a * b).collect();
        let k = &sp.lambda_inv * diag(&l_light) * &fo.lambda1
            - &sp.lambda_inv * diag(&rho1_m) * &sp.lambda
            - &sp.lambda_inv * &fo.lambda1 * &sp.lambda_inv * diag(&l_light) * &sp.lambda;
        self.k_light = col0(k);
        let h = self.row_correction.h;
        self.omega_light_grid = (0..self.row_correction.len())
            .map(|i| self.omega_light(i as f64 * h))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// `∫_0^∞ U_{(1,1)}(u, z) Ω(z) dz` given the precomputed `J` column.
    fn resolvent_integral(&self, u: f64, j_col: &[Complex], omega: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
        let q = quad();
        let rest = self.scale.rest_row(u);
        let i1: Complex = rest.iter().zip(j_col).map(|(a, b)| a * b).sum();
        let mut i2 = Complex::new(0.0, 0.0);
        if u > 0.0 {
            for t in &self.scale.rest {
                let zeta = t.zeta;
                let v: Complex = q.integrate(|z: f64| (zeta * (u - z)).exp() * fallible(omega(z)), 0.0, u)?;
                i2 += t.residue[(0, 0)] * v;
            }
        }
        let mut i3 = Complex::new(0.0, 0.0);
        for t in &self.scale.growing {
            let rho = t.zeta;
            let v: Complex = q.integrate(|s: f64| (-rho * s).exp() * fallible(omega(u + s)), 0.0, f64::INFINITY)?;
            i3 += t.residue[(0, 0)] * v;
        }
        let total = i1 - i2 + i3;
        if !total.re.is_finite() {
            return Err(Error::NonConvergence(format!("resolvent integral at u = {u}")));
        }
        Ok(total.re)
    }

    fn check_u(&self, u: f64) -> Result<()> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::InvalidParameter(format!("surplus u = {u} must be >= 0")));
        }
        if u > self.grid.u_max * (1.0 + 1e-12) {
            return Err(Error::PreconditionViolated(format!(
                "u = {u} exceeds the grid range u_max = {}",
                self.grid.u_max
            )));
        }
        Ok(())
    }

    /// `φ_0(u) = λ_- ∫ U_{(1,1)}(u, z) Ω_F(z) dz`.
    pub fn base(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        let v = self.resolvent_integral(u, &self.j_light, &|z| self.omega_light(z))?;
        Ok(self.model.lambda_minus * v)
    }

    /// First-order coefficient `h(u)`.
    pub fn correction(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        let lam = self.model.lambda_minus;
        let heavy_part = self.resolvent_integral(u, &self.j_diff, &|z| self.omega_diff(z))?;

        let corr = &self.row_correction;
        let n = self.scale.dim();
        let rest = self.scale.rest_row(u);
        let a1: f64 = (0..n).map(|k| corr.rest_at(k, u) * self.j_light[k].re).sum();
        let a2: f64 = (0..n).map(|k| (rest[k] * self.k_light[k]).re).sum();

        let a3 = if u > 0.0 {
            let steps = (u / corr.h).ceil().max(1.0) as usize;
            let hs = u / steps as f64;
            let grid_omega = crate::numerics::GridFunction::new(
                corr.h,
                self.omega_light_grid.clone(),
                crate::numerics::GridKind::Pointwise,
            );
            let vals: Vec<f64> = (0..=steps)
                .map(|k| {
                    let z = k as f64 * hs;
                    corr.rest_at(0, u - z) * grid_omega.at(z)
                })
                .collect();
            crate::numerics::trapezoid(&vals, hs)
        } else {
            0.0
        };

        let q = quad();
        let mut a4 = Complex::new(0.0, 0.0);
        for m in &corr.modes {
            let (a, b, rho) = (m.a[0], m.b[0], m.rho);
            a4 += q.integrate(
                |s: f64| (a - b * s) * (-rho * s).exp() * fallible(self.omega_light(u + s)),
                0.0,
                f64::INFINITY,
            )?;
        }
        let h = lam * (heavy_part + a1 + a2 - a3 + a4.re);
        if !h.is_finite() {
            return Err(Error::NonConvergence(format!("correction at u = {u}")));
        }
        Ok(h)
    }

    /// Base value, correction and `φ_0 + ε h` at the model's own `ε`.
    pub fn evaluate(&self, u: f64) -> Result<GsResult> {
        self.evaluate_at(u, self.model.eps())
    }

    pub fn evaluate_at(&self, u: f64, eps: f64) -> Result<GsResult> {
        if !(0.0..=EPS_MAX).contains(&eps) {
            return Err(Error::PreconditionViolated(format!(
                "eps = {eps} outside [0, {EPS_MAX}]"
            )));
        }
        let base = self.base(u)?;
        let correction = self.correction(u)?;
        Ok(GsResult {
            u,
            eps,
            base,
            correction,
            corrected: base + eps * correction,
            diagnostics: GsDiagnostics {
                grid_step: self.row_correction.h,
                cond_lambda: self.spectral.cond_lambda,
                positive_roots: self.spectral.dim(),
                eps_warning: eps > EPS_WARN,
            },
        })
    }
}

/// Integrands cannot propagate errors through the quadrature; a failed
/// penalty evaluation turns into NaN, which the quadrature reports.
fn fallible(v: Result<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn check_finite(v: &[Complex]) -> Result<()> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonConvergence("penalty transform is not finite".into()))
    }
}

/// `φ_0(u)` for a single surplus level.
pub fn gs_base<H: ClaimLaw + Clone>(model: &RiskModel<H>, penalty: &Penalty, u: f64) -> Result<f64> {
    let grid = GridSpec::for_model(model, u.max(1.0));
    GsSolver::new(model, penalty.clone(), grid)?.base(u)
}

/// Corrected phase-type approximation `φ_0(u) + ε h(u)`.
pub fn gs_corrected<H: ClaimLaw + Clone>(
    model: &RiskModel<H>,
    penalty: &Penalty,
    u: f64,
    eps: f64,
) -> Result<GsResult> {
    let grid = GridSpec::for_model(model, u.max(1.0));
    GsSolver::new(model, penalty.clone(), grid)?.evaluate_at(u, eps)
}
