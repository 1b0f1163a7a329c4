//! Upper bound on `lim φ_ε(u) / H̄_e(u)` for bounded penalties.

use crate::distributions::ClaimLaw;
use crate::error::{Error, Result};
use crate::fluid_map::RiskModel;
use crate::numerics::Quadrature;
use crate::scale::ScaleMatrix;
use crate::spectral::SpectralData;
use crate::{CMatrix, Complex};

use super::Penalty;

/// Mass on `[0, x]` of `(W(dy))_{(1,1)} * (W(dy))_{(1,j)}`, atoms included:
/// `(W_{11} * W(dy)_{1j})(x)` from the exponential sums.
fn conv_mass(scale: &ScaleMatrix, j: usize, x: f64) -> Complex {
    let terms: Vec<_> = scale.terms().collect();
    let mut acc = scale.eval(x)[(0, 0)] * scale.w0[(0, j)];
    let mut sum = Complex::new(0.0, 0.0);
    for (ti, t) in terms.iter().enumerate() {
        let alpha = t.residue[(0, 0)];
        for (si, s) in terms.iter().enumerate() {
            let beta = s.residue[(0, j)] * s.zeta;
            if beta.norm() == 0.0 {
                continue;
            }
            let phi = if ti == si {
                (t.zeta * x).exp() * x
            } else {
                ((s.zeta * x).exp() - (t.zeta * x).exp()) / (s.zeta - t.zeta)
            };
            sum += alpha * beta * phi;
        }
    }
    acc += sum.re;
    Complex::new(acc, 0.0)
}

/// `∫_0^X κ(x) dx`. The middle term of `κ` is the convolution of
/// `(W(dx))^{*2}_{11}` with `Ω_F`; atoms of `W(dx)` enter the convolutions,
/// while the last term excludes the atom (the `a μ_h W(0+)` term carries it).
pub fn kappa_partial_integral<H: ClaimLaw>(
    model: &RiskModel<H>,
    spectral: &SpectralData,
    scale: &ScaleMatrix,
    penalty: &Penalty,
    x_end: f64,
) -> Result<f64> {
    let lam = model.lambda_minus;
    let mu_h = model.mu_h();
    let a = penalty.bound();
    let ph = &model.claims.ph;
    let quad = Quadrature::with_tol(1e-10, 1e-15);
    let omega = |z: f64| penalty.omega(ph, z).unwrap_or(f64::NAN);

    // J = ∫ (e^{-Rz})_{•1} Ω_F(z) dz
    let mut l = Vec::with_capacity(spectral.dim());
    for &rho in &spectral.roots {
        l.push(quad.integrate(|z: f64| (-rho * z).exp() * omega(z), 0.0, f64::INFINITY)?);
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(l));
    let j_mat = &spectral.lambda_inv * d * &spectral.lambda;

    let n = scale.dim();
    let first: f64 = (0..n).map(|j| (conv_mass(scale, j, x_end) * j_mat[(j, 0)]).re).sum();
    // mass on [0, X] of the convolution of (W(dx))^{*2}_{11} with Ω_F
    let second: f64 = quad.integrate(|z: f64| conv_mass(scale, 0, x_end - z).re * omega(z), 0.0, x_end)?;
    let third = scale.eval(x_end)[(0, 0)] - scale.w0[(0, 0)];
    Ok(-lam * mu_h * first + lam * mu_h * second + a * mu_h * third)
}

/// `ε λ_- (a μ_h W(0+)_{(1,1)} + ∫_0^∞ κ)`, with the constant `C = 1` used
/// throughout the pipeline.
///
/// The masses of `W(dx)` are finite only when `W` stays bounded, i.e. for
/// the Cramér–Lundberg model at `q = 0`; a growing `W` is reported as
/// [`Error::NonIntegrableKappa`].
pub fn asymptotic_bound<H: ClaimLaw>(
    model: &RiskModel<H>,
    spectral: &SpectralData,
    scale: &ScaleMatrix,
    penalty: &Penalty,
) -> Result<f64> {
    penalty.validate()?;
    let slowest = scale
        .terms()
        .filter(|t| t.zeta.norm() > 0.0)
        .fold(f64::INFINITY, |m, t| m.min(t.zeta.re.abs()));
    let mut x = 10.0 * model.mu_p().max(if slowest.is_finite() { 1.0 / slowest } else { 1.0 });
    let mut prev = kappa_partial_integral(model, spectral, scale, penalty, x)?;
    for _ in 0..12 {
        x *= 2.0;
        let next = kappa_partial_integral(model, spectral, scale, penalty, x)?;
        if !next.is_finite() {
            return Err(Error::NonIntegrableKappa(format!(
                "partial integral overflows by X = {x}"
            )));
        }
        if (next - prev).abs() <= 1e-9 * next.abs().max(1.0) {
            let a = penalty.bound();
            let total = a * model.mu_h() * scale.w0[(0, 0)] + next;
            return Ok(model.eps() * model.lambda_minus * total);
        }
        prev = next;
    }
    Err(Error::NonIntegrableKappa(format!(
        "partial integrals still moving at X = {x} (last {prev:e}); W(dx) has infinite mass"
    )))
}
