use nalgebra::DMatrix;
use num_complex::Complex;

use super::{cst, Scalar};
use crate::error::{Error, Result};

/// Polynomial with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s`.
    pub fn identity() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[T]) -> Self {
        roots
            .iter()
            .fold(Self::constant(T::one()), |p, &r| p.mul(&Self::new(vec![-r, T::one()])))
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn eval(&self, x: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(T::zero());
        }
        let d = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * cst::<T>(k as f64))
            .collect();
        Self::new(d)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or_else(T::zero);
                let b = other.coeffs.get(k).copied().unwrap_or_else(T::zero);
                a + b
            })
            .collect();
        Self::new(c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut c = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] = c[i + j] + a * b;
            }
        }
        Self::new(c)
    }

    /// Quotient of synthetic division by `(s - r)`; the remainder is dropped.
    pub fn deflate(&self, r: T) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::constant(T::zero());
        }
        let mut q = vec![T::zero(); n];
        let mut acc = T::zero();
        for k in (1..=n).rev() {
            acc = acc * r + self.coeffs[k];
            q[k - 1] = acc;
        }
        Self::new(q)
    }
}

/// All complex roots of the polynomial with ascending real coefficients.
///
/// Roots are eigenvalues of the companion matrix, then polished with three
/// Newton steps on the original coefficients.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let p = Poly::new(coeffs.to_vec());
    let n = p.degree();
    if n == 0 {
        return Err(Error::InvalidParameter("polynomial of degree 0 has no roots".into()));
    }
    let lead = p.coeffs()[n];
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::InvalidParameter("leading coefficient is zero".into()));
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        companion[(0, k)] = -p.coeffs()[n - 1 - k] / lead;
    }
    for k in 1..n {
        companion[(k, k - 1)] = 1.0;
    }
    let eig = companion.complex_eigenvalues();
    let dp = p.derivative();
    let scale = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots = Vec::with_capacity(n);
    for &z0 in eig.iter() {
        let mut z = z0;
        for _ in 0..3 {
            let d = dp.eval_complex(z);
            if d.norm() == 0.0 {
                break;
            }
            let step = p.eval_complex(z) / d;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            z -= step;
        }
        let d = dp.eval_complex(z).norm();
        let resid = if d > 0.0 {
            p.eval_complex(z).norm() / d
        } else {
            p.eval_complex(z).norm() / scale.max(f64::MIN_POSITIVE)
        };
        if !(resid < 1e-9 * z.norm().max(1.0)) {
            return Err(Error::IllConditioned(format!(
                "root {z} keeps Newton residual {resid:e}"
            )));
        }
        roots.push(z);
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}
