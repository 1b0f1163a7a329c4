//! Roots of `det F_q(s) = 0` with positive real part, the left eigen-rows
//! `Λ`, the matrix `R = Λ^{-1} Γ Λ`, and their first-order corrections in
//! the mixing weight.

use crate::distributions::ClaimLaw;
use crate::error::{Error, Result};
use crate::fluid_map::{DetPolynomial, RiskModel};
use crate::{CMatrix, Complex, Matrix};

/// First-order coefficients `ρ⁽¹⁾` (diagonal of `Γ⁽¹⁾`) and `Λ⁽¹⁾`.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    pub rho1: Vec<Complex>,
    pub lambda1: CMatrix,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Roots ordered by real part.
    pub roots: Vec<Complex>,
    pub lambda: CMatrix,
    pub lambda_inv: CMatrix,
    pub r: Matrix,
    /// 2-norm condition number of `Λ`.
    pub cond_lambda: f64,
    pub first_order: FirstOrder,
}

const IMAG_TOL: f64 = 1e-9;

fn symmetrize(mut roots: Vec<Complex>) -> Vec<Complex> {
    let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if roots[i].im.abs() <= 1e-10 * scale {
            roots[i].im = 0.0;
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        if let Some(j) = partner {
            if (roots[j] - target).norm() < 1e-7 * scale {
                let mid = 0.5 * (roots[i] + roots[j].conj());
                roots[i] = mid;
                roots[j] = mid.conj();
                used[j] = true;
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Split genuine roots into (non-negative real part, negative real part).
/// The zero root of an undiscounted model goes to the first group.
pub fn split_roots(genuine: &[Complex], q: f64) -> (Vec<Complex>, Vec<Complex>) {
    let scale = genuine.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    let tol = 1e-11 * scale;
    let (pos, neg): (Vec<Complex>, Vec<Complex>) = genuine.iter().partition(|r| {
        if q == 0.0 {
            r.re > tol || r.norm() == 0.0
        } else {
            r.re > tol
        }
    });
    (symmetrize(pos), symmetrize(neg))
}

fn check_simple(roots: &[Complex]) -> Result<()> {
    let scale = roots.iter().fold(1e-300f64, |m, r| m.max(r.norm()));
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() <= 1e-6 * scale {
                return Err(Error::NonSimpleRoots(format!("{} and {}", roots[i], roots[j])));
            }
        }
    }
    Ok(())
}

/// The `N_+ + 1` roots of `det F_q(s) = 0` with positive real part (for
/// `q = 0`: the zero root and `N_+` strictly positive ones).
pub fn positive_roots<H: ClaimLaw>(model: &RiskModel<H>, det: &DetPolynomial) -> Result<Vec<Complex>> {
    let genuine = det.genuine_roots()?;
    let (pos, _) = split_roots(&genuine, model.q);
    if pos.len() != model.dim() {
        return Err(Error::RootCountMismatch {
            expected: model.dim(),
            found: pos.len(),
        });
    }
    check_simple(&pos)?;
    Ok(pos)
}

/// Rows `(det(B_+ + ρI), -λ_+ β_+ adj(B_+ + ρI))` at each root.
pub fn lambda_matrix(det: &DetPolynomial, roots: &[Complex]) -> Result<CMatrix> {
    let n = roots.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &r) in roots.iter().enumerate() {
        let row = det.row_at(r);
        let norm = row.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if !(norm > 1e-300) {
            return Err(Error::ZeroRow(r.to_string()));
        }
        for (j, z) in row.into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

/// `ρ⁽¹⁾ = ρ k(ρ) det(B_+ + ρI) / (d/ds det F_q)(ρ)`.
pub fn rho_first_order<H: ClaimLaw>(model: &RiskModel<H>, det: &DetPolynomial, rho: Complex) -> Result<Complex> {
    if rho.norm() == 0.0 {
        return Ok(rho);
    }
    let d = det.derivative_at_root(rho);
    if !(d.norm() > 1e-14 * (1.0 + rho.norm())) {
        return Err(Error::ZeroDerivative(rho.to_string()));
    }
    Ok(rho * model.k_perturbation(rho)? * det.det_b.eval_complex(rho) / d)
}

fn real_part_checked(m: &CMatrix) -> Result<Matrix> {
    let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let worst = m.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if worst > IMAG_TOL * scale {
        return Err(Error::ImaginaryResidue(worst / scale));
    }
    Ok(m.map(|z| z.re))
}

fn diag(v: impl Iterator<Item = Complex>) -> CMatrix {
    let v: Vec<Complex> = v.collect();
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(v))
}

impl SpectralData {
    pub fn new<H: ClaimLaw>(model: &RiskModel<H>, det: &DetPolynomial) -> Result<Self> {
        let roots = positive_roots(model, det)?;
        let lambda = lambda_matrix(det, &roots)?;
        let lambda_inv = lambda
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularLambda("Λ not invertible".into()))?;
        let sv = lambda.clone().svd(false, false).singular_values;
        let cond_lambda = sv.max() / sv.min();
        if !cond_lambda.is_finite() {
            return Err(Error::SingularLambda(format!("condition number {cond_lambda}")));
        }
        let r = real_part_checked(&(&lambda_inv * diag(roots.iter().copied()) * &lambda))?;
        let rho1 = roots
            .iter()
            .map(|&r| rho_first_order(model, det, r))
            .collect::<Result<Vec<_>>>()?;
        let n = roots.len();
        let mut lambda1 = CMatrix::zeros(n, n);
        for i in 0..n {
            for (j, z) in det.row_derivative_at(roots[i]).into_iter().enumerate() {
                lambda1[(i, j)] = z * rho1[i];
            }
        }
        Ok(Self {
            roots,
            lambda,
            lambda_inv,
            r,
            cond_lambda,
            first_order: FirstOrder { rho1, lambda1 },
        })
    }

    pub fn dim(&self) -> usize {
        self.roots.len()
    }

    /// Smallest real part among the roots.
    pub fn min_re(&self) -> f64 {
        self.roots.iter().fold(f64::INFINITY, |m, r| m.min(r.re))
    }

    /// `e^{-R z}` kept complex (exact similarity form).
    pub fn exp_r_complex(&self, z: f64) -> CMatrix {
        &self.lambda_inv * diag(self.roots.iter().map(|r| (-r * z).exp())) * &self.lambda
    }

    /// `e^{-R z} = Λ^{-1} diag(e^{-ρ_i z}) Λ`.
    pub fn exp_r(&self, z: f64) -> Matrix {
        self.exp_r_complex(z).map(|c| c.re)
    }

    /// First-order coefficient of `e^{-R_ε z}`:
    /// `Λ^{-1} e^{-Γz} Λ⁽¹⁾ - z Λ^{-1} e^{-Γz} Γ⁽¹⁾ Λ - Λ^{-1} Λ⁽¹⁾ e^{-Rz}`.
    pub fn exp_r_first_order(&self, z: f64) -> Matrix {
        self.exp_r_first_order_complex(z).map(|c| c.re)
    }

    pub fn exp_r_first_order_complex(&self, z: f64) -> CMatrix {
        let fo = &self.first_order;
        let eg = diag(self.roots.iter().map(|r| (-r * z).exp()));
        let g1 = diag(fo.rho1.iter().copied());
        let a = &self.lambda_inv * &eg * &fo.lambda1;
        let b = &self.lambda_inv * &eg * g1 * &self.lambda * Complex::new(z, 0.0);
        let c = &self.lambda_inv * &fo.lambda1 * self.exp_r_complex(z);
        a - b - c
    }
}
