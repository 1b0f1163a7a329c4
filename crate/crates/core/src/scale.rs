//! The q-scale matrix `W(x)` of the base model in exponential-sum form and
//! the first-order correction of its first row.
//!
//! `W(x) = Σ_j C_j e^{ζ_j x}` over all genuine roots. The terms with
//! `Re ζ > 0` grow; they are kept apart from the bounded rest so that the
//! resolvent and its correction can be assembled without cancelling
//! exponentially large numbers.

use nalgebra::DVector;

use crate::distributions::ClaimLaw;
use crate::error::{Error, Result};
use crate::fluid_map::{adjugate, DetPolynomial, RiskModel};
use crate::numerics::{exp_convolve, exp_tail, Quadrature};
use crate::spectral::SpectralData;
use crate::{CMatrix, Complex, Matrix};

/// One partial-fraction term `C e^{ζ x}`.
#[derive(Debug, Clone)]
pub struct ScaleTerm {
    pub zeta: Complex,
    pub residue: CMatrix,
}

#[derive(Debug, Clone)]
pub struct ScaleMatrix {
    /// Terms with `Re ζ > 0`; their roots are the eigenvalues of `R`.
    pub growing: Vec<ScaleTerm>,
    /// Remaining terms (negative real part, and the zero root when `q = 0`).
    pub rest: Vec<ScaleTerm>,
    /// `W(0+) = diag(1/c, I)`.
    pub w0: Matrix,
    /// Largest real part among the roots.
    pub eta: f64,
}

fn czero() -> Complex {
    Complex::new(0.0, 0.0)
}

/// Partial-fraction inversion of `F_q(s)^{-1}` for the base model.
pub fn base_scale_matrix<H: ClaimLaw>(model: &RiskModel<H>, det: &DetPolynomial) -> Result<ScaleMatrix> {
    let roots = det.genuine_roots()?;
    let scale = roots.iter().fold(1e-300f64, |m, r| m.max(r.norm()));
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() <= 1e-6 * scale {
                return Err(Error::NonSimpleRoots(format!("{} and {}", roots[i], roots[j])));
            }
        }
    }
    let (pos, neg) = crate::spectral::split_roots(&roots, model.q);
    let n = model.dim();
    let mut growing = Vec::new();
    let mut rest = Vec::new();
    for zeta in pos.into_iter().chain(neg) {
        let f = model.matrix_exponent(zeta, 0.0)?;
        let d = det.derivative_at_root(zeta);
        if !(d.norm() > 0.0) {
            return Err(Error::ZeroDerivative(zeta.to_string()));
        }
        let residue = adjugate(&f) / d;
        let term = ScaleTerm { zeta, residue };
        if zeta.re > 1e-11 * scale {
            growing.push(term);
        } else {
            rest.push(term);
        }
    }
    let mut w0 = Matrix::identity(n, n);
    w0[(0, 0)] = 1.0 / model.c;
    let sum = growing
        .iter()
        .chain(&rest)
        .fold(CMatrix::zeros(n, n), |acc, t| acc + &t.residue);
    let imbalance = (sum - w0.map(|v| Complex::new(v, 0.0)))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    if imbalance > 1e-7 * (1.0 + 1.0 / model.c) {
        return Err(Error::ResidueImbalance(format!("|Σ C_j - W(0+)| = {imbalance:e}")));
    }
    let eta = roots.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.re));
    Ok(ScaleMatrix { growing, rest, w0, eta })
}

impl ScaleMatrix {
    pub fn dim(&self) -> usize {
        self.w0.nrows()
    }

    pub fn terms(&self) -> impl Iterator<Item = &ScaleTerm> {
        self.growing.iter().chain(&self.rest)
    }

    /// `W(x)`, zero for `x < 0`.
    pub fn eval(&self, x: f64) -> Matrix {
        let n = self.dim();
        if x < 0.0 {
            return Matrix::zeros(n, n);
        }
        self.terms()
            .fold(CMatrix::zeros(n, n), |acc, t| acc + &t.residue * (t.zeta * x).exp())
            .map(|z| z.re)
    }

    /// Density `W'(x)` of the measure `W(dx)` away from the atom at zero.
    pub fn density(&self, x: f64) -> Matrix {
        let n = self.dim();
        if x < 0.0 {
            return Matrix::zeros(n, n);
        }
        self.terms()
            .fold(CMatrix::zeros(n, n), |acc, t| {
                acc + &t.residue * (t.zeta * (t.zeta * x).exp())
            })
            .map(|z| z.re)
    }

    fn row_sum(terms: &[ScaleTerm], x: f64) -> Vec<Complex> {
        let n = terms.first().map_or(0, |t| t.residue.ncols());
        let mut out = vec![czero(); n];
        for t in terms {
            let e = (t.zeta * x).exp();
            for (j, o) in out.iter_mut().enumerate() {
                *o += t.residue[(0, j)] * e;
            }
        }
        out
    }

    /// First row of the bounded part at `x >= 0`.
    pub fn rest_row(&self, x: f64) -> Vec<Complex> {
        let mut r = Self::row_sum(&self.rest, x);
        r.resize(self.dim(), czero());
        r
    }

    /// First row of the growing part; defined for any real `w`.
    pub fn growing_row(&self, w: f64) -> Vec<Complex> {
        let mut r = Self::row_sum(&self.growing, w);
        r.resize(self.dim(), czero());
        r
    }

    /// `∫_0^∞ e^{-sx} W(x) dx = Σ_j C_j / (s - ζ_j)` (for `s > η`).
    pub fn laplace(&self, s: Complex) -> CMatrix {
        let n = self.dim();
        self.terms()
            .fold(CMatrix::zeros(n, n), |acc, t| acc + &t.residue / (s - t.zeta))
    }
}

/// Grid layout used for the first-order scale correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub h: f64,
    /// Largest surplus at which corrections are evaluated.
    pub u_max: f64,
}

impl GridSpec {
    /// `h = 0.01 μ_p`.
    pub fn for_model<H: ClaimLaw>(model: &RiskModel<H>, u_max: f64) -> Self {
        Self {
            h: 0.01 * model.mu_p(),
            u_max,
        }
    }
}

/// `G⁽¹⁾(x) = Σ_i (a_i + b_i x) e^{ρ_i x}`: the first-order coefficient of
/// the growing part of the first row of `W_ε`.
#[derive(Debug, Clone)]
pub struct GrowingMode {
    pub rho: Complex,
    pub a: Vec<Complex>,
    pub b: Vec<Complex>,
}

/// First-order coefficient of the first row of `W_ε`, split into a
/// bounded grid part and analytic growing modes.
#[derive(Debug, Clone)]
pub struct ScaleRowCorrection {
    pub h: f64,
    /// `rest[j][k]`: bounded part of entry `(1, j)` at `x_k = k h`.
    pub rest: Vec<Vec<f64>>,
    pub modes: Vec<GrowingMode>,
}

impl ScaleRowCorrection {
    pub fn len(&self) -> usize {
        self.rest.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn upper(&self) -> f64 {
        self.h * (self.len().saturating_sub(1)) as f64
    }

    /// Bounded part of entry `(1, j)` at `x >= 0`.
    pub fn rest_at(&self, j: usize, x: f64) -> f64 {
        crate::numerics::GridFunction::new(self.h, self.rest[j].clone(), crate::numerics::GridKind::Pointwise).at(x)
    }

    /// Growing part of entry `(1, j)`; defined for any real `w`.
    pub fn growing_at(&self, j: usize, w: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| (m.a[j] + m.b[j] * w) * (m.rho * w).exp())
            .sum::<Complex>()
            .re
    }

    /// Entry `(1, j)` of the correction at `x >= 0`.
    pub fn value(&self, j: usize, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.rest_at(j, x) + self.growing_at(j, x)
    }

    /// Laplace transform of entry `(1, j)` (grid part by trapezoid).
    pub fn laplace(&self, j: usize, s: f64) -> f64 {
        let r = &self.rest[j];
        let n = r.len();
        let mut acc = 0.0;
        for (k, v) in r.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * v * (-s * self.h * k as f64).exp();
        }
        let grow: Complex = self
            .modes
            .iter()
            .map(|m| {
                let d = Complex::new(s, 0.0) - m.rho;
                m.a[j] / d + m.b[j] / (d * d)
            })
            .sum();
        acc * self.h + grow.re
    }
}

/// `f(x) = λ_- (μ_h H_e(x) - μ_p F_e^p(x))` on the grid.
fn perturbation_density<H: ClaimLaw>(model: &RiskModel<H>, h: f64, len: usize) -> Vec<Complex> {
    let eq = model.claim_equilibrium();
    let step = (eq.subintensity() * h).exp();
    let mut state: DVector<f64> = eq.alpha().clone();
    let (mu_p, mu_h, lam) = (model.mu_p(), model.mu_h(), model.lambda_minus);
    let heavy = &model.claims.heavy;
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let fe = 1.0 - state.sum().clamp(0.0, 1.0);
        let he = heavy.equilibrium_cdf(k as f64 * h);
        out.push(Complex::new(lam * (mu_h * he - mu_p * fe), 0.0));
        state = step.transpose() * state;
    }
    out
}

/// Default extent of the correction grid: `3 u_max`, extended so that the
/// slowest growing root damps the far end by `e^{-30}`.
pub fn grid_extent(spectral_min_re: f64, u_max: f64) -> f64 {
    let tail = if spectral_min_re > 0.0 {
        30.0 / spectral_min_re
    } else {
        0.0
    };
    (3.0 * u_max).max(u_max + tail).max(u_max + 10.0)
}

/// First-order coefficient of `(W_ε(x))_{(1,j)}`:
/// `λ_-(μ_h H_e - μ_p F_e^p) * (W(dx))_{(1,1)} * (W(dx))_{(1,j)}`.
pub fn scale_row_correction<H: ClaimLaw>(
    model: &RiskModel<H>,
    det: &DetPolynomial,
    spectral: &SpectralData,
    scale: &ScaleMatrix,
    grid: GridSpec,
) -> Result<ScaleRowCorrection> {
    let coarse = row_correction_on_grid(model, det, spectral, scale, grid.h, grid.u_max)?;
    let fine = row_correction_on_grid(model, det, spectral, scale, grid.h / 2.0, grid.u_max)?;
    let k = (grid.u_max / grid.h).round() as usize;
    let mut worst = 0.0f64;
    let mut size = 0.0f64;
    for j in 0..coarse.rest.len() {
        let a = coarse.rest[j][k.min(coarse.len() - 1)];
        let b = fine.rest[j][(2 * k).min(fine.len() - 1)];
        worst = worst.max((a - b).abs());
        size = size.max(coarse.rest[j].iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if worst > 0.01 * size.max(1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "halving h moves the correction at u_max by {worst:e} (scale {size:e})"
        )));
    }
    Ok(coarse)
}

/// Same as [`scale_row_correction`] without the step-halving check.
pub fn row_correction_on_grid<H: ClaimLaw>(
    model: &RiskModel<H>,
    det: &DetPolynomial,
    spectral: &SpectralData,
    scale: &ScaleMatrix,
    h: f64,
    u_max: f64,
) -> Result<ScaleRowCorrection> {
    if !(h > 0.0 && u_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("grid h = {h}, u_max = {u_max}")));
    }
    let n = scale.dim();
    let min_re = scale.growing.iter().fold(f64::INFINITY, |m, t| m.min(t.zeta.re));
    let extent = grid_extent(if min_re.is_finite() { min_re } else { 0.0 }, u_max);
    let len = (extent / h).ceil() as usize + 1;
    let x_end = (len - 1) as f64 * h;
    let c = model.c;

    let f = perturbation_density(model, h, len);
    let heavy = &model.claims.heavy;
    let eq = model.claim_equilibrium();
    let f_at = |x: f64| model.lambda_minus * (model.mu_h() * heavy.equilibrium_cdf(x) - model.mu_p() * eq.cdf(x));
    let quad = Quadrature::default();

    // g = f * W(dx)_{11} = g⁺ + g⁰ with g⁺ = Σ_i γ_i e^{ρ_i x}
    let mut g0: Vec<Complex> = f.iter().map(|v| v / c).collect();
    let mut gamma = Vec::with_capacity(scale.growing.len());
    for t in &scale.growing {
        let rho = t.zeta;
        let terminal = quad.integrate(|y: f64| (-rho * y).exp() * f_at(x_end + y), 0.0, f64::INFINITY)?;
        let tail = exp_tail(&f, h, rho, terminal);
        let w = t.residue[(0, 0)] * rho;
        for (g, v) in g0.iter_mut().zip(&tail) {
            *g -= w * v;
        }
        gamma.push(t.residue[(0, 0)] * model.k_perturbation(rho)?);
    }
    for t in &scale.rest {
        let w = t.residue[(0, 0)] * t.zeta;
        if w.norm() == 0.0 {
            continue;
        }
        let conv = exp_convolve(&f, h, t.zeta);
        for (g, v) in g0.iter_mut().zip(&conv) {
            *g += w * v;
        }
    }

    let tails: Vec<Vec<Complex>> = scale
        .growing
        .iter()
        .map(|t| exp_tail(&g0, h, t.zeta, g0[len - 1] / t.zeta))
        .collect();
    let convs: Vec<Option<Vec<Complex>>> = scale
        .rest
        .iter()
        .map(|t| (t.zeta.norm() > 0.0).then(|| exp_convolve(&g0, h, t.zeta)))
        .collect();

    let mut rest = Vec::with_capacity(n);
    for j in 0..n {
        let mut col: Vec<Complex> = if j == 0 {
            g0.iter().map(|v| v / c).collect()
        } else {
            vec![czero(); len]
        };
        for (t, tail) in scale.growing.iter().zip(&tails) {
            let w = t.residue[(0, j)] * t.zeta;
            for (o, v) in col.iter_mut().zip(tail) {
                *o -= w * v;
            }
        }
        for (t, conv) in scale.rest.iter().zip(&convs) {
            let Some(conv) = conv else { continue };
            let w = t.residue[(0, j)] * t.zeta;
            for (o, v) in col.iter_mut().zip(conv) {
                *o += w * v;
            }
            // bounded remainder of g⁺ * W(dx)_{1j}
            let coeff: Complex = scale
                .growing
                .iter()
                .zip(&gamma)
                .map(|(g, &gm)| gm / (g.zeta - t.zeta))
                .sum::<Complex>()
                * w;
            let step = (t.zeta * h).exp();
            let mut e = Complex::new(1.0, 0.0);
            for o in col.iter_mut() {
                *o -= coeff * e;
                e *= step;
            }
        }
        let scale_j = col.iter().fold(1e-300f64, |m, z| m.max(z.norm()));
        let worst = col.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if worst > 1e-8 * scale_j.max(1.0) {
            return Err(Error::ImaginaryResidue(worst / scale_j.max(1.0)));
        }
        rest.push(col.into_iter().map(|z| z.re).collect());
    }

    let modes = growing_modes(model, det, spectral, scale)?;
    Ok(ScaleRowCorrection { h, rest, modes })
}

/// `∂_ε` of `row(ρ_ε) e^{ρ_ε x} / Δ_ε'(ρ_ε)` at `ε = 0`, per growing root.
fn growing_modes<H: ClaimLaw>(
    model: &RiskModel<H>,
    det: &DetPolynomial,
    spectral: &SpectralData,
    scale: &ScaleMatrix,
) -> Result<Vec<GrowingMode>> {
    let mut out = Vec::with_capacity(scale.growing.len());
    for t in &scale.growing {
        let rho = t.zeta;
        let idx = spectral
            .roots
            .iter()
            .position(|r| (r - rho).norm() <= 1e-9 * (1.0 + rho.norm()))
            .ok_or_else(|| Error::RootCountMismatch {
                expected: spectral.dim(),
                found: scale.growing.len(),
            })?;
        let rho1 = spectral.first_order.rho1[idx];
        let d1 = det.derivative_at_root(rho);
        let d2 = det.second_derivative_at_root(rho);
        let k = model.k_perturbation(rho)?;
        let dk = model.k_derivative(rho)?;
        let db = det.det_b.eval_complex(rho);
        let ddb = det.det_b.derivative().eval_complex(rho);
        let kappa1 = (k + rho * dk) * db + rho * k * ddb;
        let row = det.row_at(rho);
        let drow = det.row_derivative_at(rho);
        let a = row
            .iter()
            .zip(&drow)
            .map(|(&r, &dr)| rho1 * (dr / d1 - r * d2 / (d1 * d1)) + r * kappa1 / (d1 * d1))
            .collect();
        let b = row.iter().map(|&r| r / d1 * rho1).collect();
        out.push(GrowingMode { rho, a, b });
    }
    Ok(out)
}
