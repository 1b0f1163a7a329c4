//! Risk model, fluid embedding of the phase-type gains, and the matrix
//! exponent of the resulting spectrally negative Markov-additive process.
//!
//! State 1 carries the original process (drift `c`, claims); states
//! `2..=N_+ + 1` are the phases of a gain, traversed at unit upward slope.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{ClaimLaw, HeavyTail, MixtureClaim, PhaseType};
use crate::error::{Error, Result};
use crate::numerics::{poly_roots, Poly};
use crate::{CMatrix, Complex, Matrix, Polynomial};

/// Scalar parameters of the risk process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Premium rate `c`.
    pub premium_rate: f64,
    /// Claim arrival rate `λ_-`.
    pub claim_rate: f64,
    /// Gain arrival rate `λ_+`.
    pub gain_rate: f64,
    /// Heavy-tail mixing weight.
    pub eps: f64,
    /// Discount rate.
    pub q: f64,
}

/// `X(t) = u + c t + (gains) - (claims)`, claims drawn from
/// `(1 - eps) F_p + eps H`.
#[derive(Debug, Clone)]
pub struct RiskModel<H = HeavyTail> {
    pub c: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Gain law; `None` (or `λ_+ = 0`) drops the embedded states.
    pub gains: Option<PhaseType>,
    pub claims: MixtureClaim<H>,
    pub q: f64,
    claim_eq: PhaseType,
}

impl<H: ClaimLaw + Clone> RiskModel<H> {
    pub fn new(params: ModelParams, gains: Option<PhaseType>, claim_ph: PhaseType, heavy: H) -> Result<Self> {
        let ModelParams {
            premium_rate: c,
            claim_rate,
            gain_rate,
            eps,
            q,
        } = params;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidComponent(format!("premium rate {c} must be positive")));
        }
        for (name, v) in [("claim rate", claim_rate), ("gain rate", gain_rate), ("q", q)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidComponent(format!("{name} {v} must be >= 0")));
            }
        }
        if gain_rate > 0.0 && gains.is_none() {
            return Err(Error::InvalidComponent("positive gain rate without a gain law".into()));
        }
        let heavy_mean = heavy.mean();
        if !(heavy_mean > 0.0 && heavy_mean.is_finite()) {
            return Err(Error::InfiniteMean(format!("heavy-tail mean {heavy_mean}")));
        }
        let claims = MixtureClaim::new(claim_ph, heavy, eps)?;
        let claim_eq = claims.ph.equilibrium();
        let model = Self {
            c,
            lambda_minus: claim_rate,
            lambda_plus: if gains.is_some() { gain_rate } else { 0.0 },
            gains: if gain_rate > 0.0 { gains } else { None },
            claims,
            q,
            claim_eq,
        };
        let margin = model.loading_margin().min(model.base_loading_margin());
        if !(margin > 0.0) {
            return Err(Error::SafetyLoadingViolated { margin });
        }
        Ok(model)
    }

    /// Same model with another mixing weight.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut m = self.clone();
        m.claims = MixtureClaim::new(m.claims.ph.clone(), m.claims.heavy.clone(), eps)?;
        Ok(m)
    }

    /// Same model with another discount rate.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::InvalidComponent(format!("q {q} must be >= 0")));
        }
        let mut m = self.clone();
        m.q = q;
        Ok(m)
    }
}

impl<H: ClaimLaw> RiskModel<H> {
    pub fn eps(&self) -> f64 {
        self.claims.eps
    }

    pub fn mu_p(&self) -> f64 {
        self.claims.ph.mean()
    }

    pub fn mu_h(&self) -> f64 {
        self.claims.heavy.mean()
    }

    pub fn mean_gain(&self) -> f64 {
        self.gains.as_ref().map_or(0.0, |g| g.mean())
    }

    /// Number of embedded gain phases `N_+`.
    pub fn n_plus(&self) -> usize {
        self.gains.as_ref().map_or(0, |g| g.phases())
    }

    /// Number of claim phases `N_-`.
    pub fn n_minus(&self) -> usize {
        self.claims.ph.phases()
    }

    /// Dimension `N_+ + 1` of the embedded process.
    pub fn dim(&self) -> usize {
        self.n_plus() + 1
    }

    /// Equilibrium law of the claim phase-type component.
    pub fn claim_equilibrium(&self) -> &PhaseType {
        &self.claim_eq
    }

    /// Drift `c + λ_+ E[gain] - λ_- E[claim]` at the model's weight.
    pub fn loading_margin(&self) -> f64 {
        self.c + self.lambda_plus * self.mean_gain() - self.lambda_minus * self.claims.mean()
    }

    /// Drift of the base model (`eps = 0`).
    pub fn base_loading_margin(&self) -> f64 {
        self.c + self.lambda_plus * self.mean_gain() - self.lambda_minus * self.mu_p()
    }

    /// `ψ_ε(s) = c s - λ_- s ((1-ε) μ_p F̂_e^p(s) + ε μ_h Ĥ_e(s))`.
    pub fn psi(&self, s: Complex, eps: f64) -> Result<Complex> {
        if s == Complex::new(0.0, 0.0) {
            return Ok(s);
        }
        let light = self.claim_eq.lst(s)? * self.mu_p();
        let mixed = if eps == 0.0 {
            light * 1.0
        } else {
            light * (1.0 - eps) + self.claims.heavy.equilibrium_lst(s)? * (eps * self.mu_h())
        };
        Ok(s * self.c - s * mixed * self.lambda_minus)
    }

    /// `k(s) = λ_- (μ_h Ĥ_e(s) - μ_p F̂_e^p(s))`.
    pub fn k_perturbation(&self, s: Complex) -> Result<Complex> {
        let h = self.claims.heavy.equilibrium_lst(s)? * self.mu_h();
        let p = self.claim_eq.lst(s)? * self.mu_p();
        Ok((h - p) * self.lambda_minus)
    }

    /// Derivative of [`RiskModel::k_perturbation`].
    pub fn k_derivative(&self, s: Complex) -> Result<Complex> {
        let h = self.claims.heavy.equilibrium_lst_derivative(s)? * self.mu_h();
        let p = self.claim_eq.lst_derivative(s)? * self.mu_p();
        Ok((h - p) * self.lambda_minus)
    }

    /// `F_{ε,q}(s)`: `(1,1)` entry `ψ_ε(s) - λ_+ - q`, first row tail
    /// `λ_+ β_+`, first column tail `t_+`, lower block `B_+ + sI`.
    pub fn matrix_exponent(&self, s: Complex, eps: f64) -> Result<CMatrix> {
        let n = self.dim();
        let mut f = CMatrix::zeros(n, n);
        f[(0, 0)] = self.psi(s, eps)? - self.lambda_plus - self.q;
        if let Some(g) = &self.gains {
            let (beta, b, exit) = (g.alpha(), g.subintensity(), g.exit());
            for j in 1..n {
                f[(0, j)] = Complex::new(self.lambda_plus * beta[j - 1], 0.0);
                f[(j, 0)] = Complex::new(exit[j - 1], 0.0);
                for k in 1..n {
                    f[(j, k)] = Complex::new(b[(j - 1, k - 1)], 0.0);
                }
                f[(j, j)] += s;
            }
        }
        Ok(f)
    }

    /// `F(0)` of the undiscounted process: the generator of the phase.
    pub fn phase_generator(&self) -> Matrix {
        self.matrix_exponent(Complex::new(0.0, 0.0), 0.0)
            .expect("psi(0) = 0")
            .map(|z| z.re)
            + {
                let mut d = Matrix::zeros(self.dim(), self.dim());
                d[(0, 0)] = self.q;
                d
            }
    }

    /// `C = [q (qI - F(0))^{-1}_{(1,1)}]^{-1}`.
    pub fn constant_c(&self) -> Result<f64> {
        if !(self.q > 0.0) {
            return Err(Error::PreconditionViolated("constant C needs q > 0".into()));
        }
        let n = self.dim();
        let m = Matrix::identity(n, n) * self.q - self.phase_generator();
        let mut e1 = DVector::zeros(n);
        e1[0] = 1.0;
        let x = m
            .lu()
            .solve(&e1)
            .ok_or_else(|| Error::SingularMatrix("qI - F(0)".into()))?;
        Ok(1.0 / (self.q * x[0]))
    }

    /// Cleared determinant polynomial of the base model.
    pub fn det_polynomial(&self) -> Result<DetPolynomial> {
        DetPolynomial::build(self)
    }
}

/// `det(sI - A)` and the coefficient matrices of `adj(sI - A)`
/// (`adj = Σ_j s^j M[j]`) by the Faddeev–LeVerrier recursion.
fn faddeev_leverrier(a: &Matrix) -> (Polynomial, Vec<Matrix>) {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = Matrix::zeros(n, n);
    let mut adj = vec![Matrix::zeros(n, n); n];
    for k in 1..=n {
        m = a * &m + Matrix::identity(n, n) * c[n + 1 - k];
        adj[n - k] = m.clone();
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    (Poly::new(c), adj)
}

/// Row vector times a matrix polynomial, as one polynomial per column.
fn row_times(row: &DVector<f64>, mats: &[Matrix]) -> Vec<Polynomial> {
    let n = row.len();
    (0..n)
        .map(|j| Poly::new(mats.iter().map(|m| (row.transpose() * m.column(j))[0]).collect()))
        .collect()
}

fn dot_poly(row: &[Polynomial], v: &DVector<f64>) -> Polynomial {
    row.iter()
        .zip(v.iter())
        .fold(Poly::constant(0.0), |acc, (p, &x)| acc.add(&p.scale(x)))
}

/// `det F_q(s) · det(sI - T_p)` for the base model, with the polynomial
/// pieces needed downstream.
#[derive(Debug, Clone)]
pub struct DetPolynomial {
    /// Cleared numerator `P(s)`.
    pub numerator: Polynomial,
    /// `d_p(s) = det(sI - T_p)`.
    pub denominator: Polynomial,
    /// Eigenvalues of `T_p`, candidates for spurious roots of `P`.
    pub spurious: Vec<Complex>,
    /// `det(B_+ + sI)`.
    pub det_b: Polynomial,
    /// First row of `adj F_q(s)`:
    /// `(det(B_+ + sI), -λ_+ β_+ adj(B_+ + sI))`.
    pub row: Vec<Polynomial>,
    q_is_zero: bool,
}

impl DetPolynomial {
    fn build<H: ClaimLaw>(model: &RiskModel<H>) -> Result<Self> {
        let ph = &model.claims.ph;
        let (dp, adj_p) = faddeev_leverrier(ph.subintensity());
        let np = dot_poly(&row_times(ph.alpha(), &adj_p), ph.exit());
        let (det_b, row_tail, e_plus) = match &model.gains {
            Some(g) => {
                let (db, adj_b) = faddeev_leverrier(&(-g.subintensity()));
                let br = row_times(g.alpha(), &adj_b);
                let e = dot_poly(&br, g.exit());
                let tail: Vec<Polynomial> = br.iter().map(|p| p.scale(-model.lambda_plus)).collect();
                (db, tail, e)
            }
            None => (Poly::constant(1.0), Vec::new(), Poly::constant(0.0)),
        };
        let lin = Poly::new(vec![-model.lambda_plus - model.q, model.c]);
        let first = lin.mul(&dp).sub(&dp.sub(&np).scale(model.lambda_minus)).mul(&det_b);
        let mut numerator = first.sub(&e_plus.mul(&dp).scale(model.lambda_plus));
        let q_is_zero = model.q == 0.0;
        if q_is_zero {
            // s = 0 is an exact root; clear the rounding residue
            let mut c = numerator.coeffs().to_vec();
            c[0] = 0.0;
            numerator = Poly::new(c);
        }
        let spurious = ph.subintensity().complex_eigenvalues().iter().copied().collect();
        let mut row = vec![det_b.clone()];
        row.extend(row_tail);
        Ok(Self {
            numerator,
            denominator: dp,
            spurious,
            det_b,
            row,
            q_is_zero,
        })
    }

    pub fn degree(&self) -> usize {
        self.numerator.degree()
    }

    /// `det F_q(s)` as the rational function.
    pub fn eval(&self, s: Complex) -> Complex {
        self.numerator.eval_complex(s) / self.denominator.eval_complex(s)
    }

    /// `d/ds det F_q` at a root of the numerator.
    pub fn derivative_at_root(&self, s: Complex) -> Complex {
        self.numerator.derivative().eval_complex(s) / self.denominator.eval_complex(s)
    }

    /// `d²/ds² det F_q` at a root of the numerator.
    pub fn second_derivative_at_root(&self, s: Complex) -> Complex {
        let d = self.denominator.eval_complex(s);
        let dd = self.denominator.derivative().eval_complex(s);
        let p1 = self.numerator.derivative().eval_complex(s);
        let p2 = self.numerator.derivative().derivative().eval_complex(s);
        p2 / d - p1 * dd * 2.0 / (d * d)
    }

    /// First row of `adj F_q(s)`.
    pub fn row_at(&self, s: Complex) -> Vec<Complex> {
        self.row.iter().map(|p| p.eval_complex(s)).collect()
    }

    /// Derivative of [`DetPolynomial::row_at`].
    pub fn row_derivative_at(&self, s: Complex) -> Vec<Complex> {
        self.row.iter().map(|p| p.derivative().eval_complex(s)).collect()
    }

    /// Roots of `det F_q`, i.e. roots of the numerator with spurious ones
    /// (common factors with `d_p`) removed. Sorted by real part.
    pub fn genuine_roots(&self) -> Result<Vec<Complex>> {
        let mut roots = if self.q_is_zero {
            let mut r = poly_roots(&self.numerator.coeffs()[1..])?;
            r.push(Complex::new(0.0, 0.0));
            r
        } else {
            poly_roots(self.numerator.coeffs())?
        };
        for mu in &self.spurious {
            let tol = 1e-7 * mu.norm().max(1.0);
            let hits: Vec<usize> = (0..roots.len()).filter(|&i| (roots[i] - mu).norm() < tol).collect();
            match hits.len() {
                0 => {}
                1 => {
                    roots.remove(hits[0]);
                }
                _ => return Err(Error::DegenerateCancellation(mu.to_string())),
            }
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }
}

/// Direct complex determinant, used to cross-check the polynomial form.
pub fn det_direct(m: &CMatrix) -> Complex {
    m.clone().lu().determinant()
}

/// Adjugate of a small complex matrix by cofactors; valid at singular points.
pub fn adjugate(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    if n == 1 {
        return CMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
    }
    CMatrix::from_fn(n, n, |i, j| {
        // (i, j) entry is the (j, i) cofactor
        let minor = DMatrix::from_fn(n - 1, n - 1, |r, c| {
            let rr = if r < j { r } else { r + 1 };
            let cc = if c < i { c } else { c + 1 };
            m[(rr, cc)]
        });
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        det_direct(&minor) * sign
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_a(eps: f64) -> RiskModel {
        RiskModel::new(
            ModelParams {
                premium_rate: 1.0,
                claim_rate: 1.0,
                gain_rate: 0.5,
                eps,
                q: 0.1,
            },
            Some(PhaseType::exponential(2.0)),
            PhaseType::exponential(1.0),
            HeavyTail::pareto(2.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn faddeev_leverrier_reproduces_adjugate() {
        let a = Matrix::from_row_slice(3, 3, &[-3.0, 1.0, 0.5, 0.2, -1.5, 0.3, 0.0, 0.4, -0.9]);
        let (p, adj) = faddeev_leverrier(&a);
        let s = 0.7;
        let m = Matrix::identity(3, 3) * s - &a;
        assert!((p.eval(s) - m.determinant()).abs() < 1e-12);
        let adj_s = adj
            .iter()
            .enumerate()
            .fold(Matrix::zeros(3, 3), |acc, (k, mk)| acc + mk * s.powi(k as i32));
        let want = m.clone().try_inverse().unwrap() * m.determinant();
        assert!((adj_s - want).amax() < 1e-12);
    }

    #[test]
    fn loading_and_validation() {
        let m = model_a(0.05);
        assert!((m.loading_margin() - 0.25).abs() < 1e-14);
        let r = RiskModel::new(
            ModelParams {
                premium_rate: 0.5,
                claim_rate: 1.0,
                gain_rate: 0.0,
                eps: 0.0,
                q: 0.0,
            },
            None,
            PhaseType::exponential(1.0),
            HeavyTail::pareto(2.0, 1.0).unwrap(),
        );
        assert!(matches!(r, Err(Error::SafetyLoadingViolated { .. })));
    }

    #[test]
    fn adjugate_at_singular_point() {
        let m = CMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0].map(|x| Complex::new(x, 0.0)));
        let a = adjugate(&m);
        let want = [4.0, -2.0, -2.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((a[(k / 2, k % 2)] - w).norm() < 1e-14);
        }
    }
}
