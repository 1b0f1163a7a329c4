use num_complex::Complex;

use super::{cst, Scalar};
use crate::error::{Error, Result};

/// How the sampled values of a [`GridFunction`] are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Values of a function at the grid points.
    Pointwise,
    /// Density of a measure; `atom` carries any point mass at `x = 0`.
    Density,
}

/// Samples at `x_k = k h`, `k = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    pub h: T,
    pub values: Vec<T>,
    pub kind: GridKind,
    /// Point mass at the origin (densities only).
    pub atom: T,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(h: T, values: Vec<T>, kind: GridKind) -> Self {
        assert!(h > T::zero(), "grid step must be positive");
        Self {
            h,
            values,
            kind,
            atom: T::zero(),
        }
    }

    pub fn from_fn(h: T, len: usize, kind: GridKind, f: impl Fn(T) -> T) -> Self {
        let values = (0..len).map(|k| f(h * cst::<T>(k as f64))).collect();
        Self::new(h, values, kind)
    }

    pub fn with_atom(mut self, atom: T) -> Self {
        self.atom = atom;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, k: usize) -> T {
        self.h * cst::<T>(k as f64)
    }

    /// Right end of the grid.
    pub fn upper(&self) -> T {
        self.x(self.len().saturating_sub(1))
    }

    /// Linear interpolation, clamped to the end values outside the grid.
    pub fn at(&self, x: T) -> T {
        interpolate(&self.values, self.h, x)
    }
}

pub(crate) fn interpolate<T: Scalar, V>(values: &[V], h: T, x: T) -> V
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Mul<T, Output = V>,
{
    let n = values.len();
    if x <= T::zero() {
        return values[0];
    }
    let pos = x / h;
    let k = pos.floor().to_usize().unwrap_or(usize::MAX);
    if k + 1 >= n {
        return values[n - 1];
    }
    let w = pos - cst::<T>(k as f64);
    values[k] * (T::one() - w) + values[k + 1] * w
}

/// Trapezoidal integral of grid samples.
pub fn trapezoid<T: Scalar>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner = values[1..n - 1].iter().fold(T::zero(), |a, &v| a + v);
            h * (inner + (values[0] + values[n - 1]) / cst::<T>(2.0))
        }
    }
}

/// Trapezoidal convolution `(f * dg)(x) = ∫_[0,x] f(x - t) dg(t)`, where
/// `dg` is a density on the grid plus its atom at zero.
pub fn grid_convolve<T: Scalar>(f: &GridFunction<T>, dg: &GridFunction<T>) -> Result<GridFunction<T>> {
    let (hf, hg) = (f.h.to_f64().unwrap_or(f64::NAN), dg.h.to_f64().unwrap_or(f64::NAN));
    if (hf - hg).abs() > 1e-12 * hf.abs().max(hg.abs()) {
        return Err(Error::StepMismatch(hf, hg));
    }
    let n = f.len().min(dg.len());
    let half = cst::<T>(0.5);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = T::zero();
        if i > 0 {
            acc = half * (f.values[i] * dg.values[0] + f.values[0] * dg.values[i]);
            for k in 1..i {
                acc = acc + f.values[i - k] * dg.values[k];
            }
            acc = acc * f.h;
        }
        out.push(acc + dg.atom * f.values[i]);
    }
    Ok(GridFunction::new(f.h, out, GridKind::Pointwise))
}

/// Weights `(∫_0^h e^{z(h-τ)} dτ, ∫_0^h (τ/h) e^{z(h-τ)} dτ)`.
fn forward_weights<T: Scalar>(z: Complex<T>, h: T) -> (Complex<T>, Complex<T>) {
    let zh = z * h;
    let one = Complex::new(T::one(), T::zero());
    if zh.norm() < cst(1e-3) {
        let c = |x: f64| Complex::new(cst::<T>(x), T::zero());
        let w0 = one + zh * (c(0.5) + zh * (c(1.0 / 6.0) + zh * c(1.0 / 24.0)));
        let w1 = c(0.5) + zh * (c(1.0 / 6.0) + zh * (c(1.0 / 24.0) + zh * c(1.0 / 120.0)));
        return (w0 * h, w1 * h);
    }
    let e = zh.exp();
    ((e - one) / z, (e - one - zh) / (z * zh))
}

/// `I(x_n) = ∫_0^{x_n} r(t) e^{ζ (x_n - t)} dt` with `r` linear between
/// grid points; exact in the exponential factor.
pub fn exp_convolve<T: Scalar>(r: &[Complex<T>], h: T, zeta: Complex<T>) -> Vec<Complex<T>> {
    let (w0, w1) = forward_weights(zeta, h);
    let decay = (zeta * h).exp();
    let mut out = Vec::with_capacity(r.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    if !r.is_empty() {
        out.push(acc);
    }
    for k in 1..r.len() {
        acc = acc * decay + r[k - 1] * (w0 - w1) + r[k] * w1;
        out.push(acc);
    }
    out
}

/// `T(x_n) = ∫_0^∞ r(x_n + y) e^{-ρ y} dy` with `r` linear between grid
/// points; `terminal` is the value at the last grid point.
pub fn exp_tail<T: Scalar>(r: &[Complex<T>], h: T, rho: Complex<T>, terminal: Complex<T>) -> Vec<Complex<T>> {
    let n = r.len();
    let mut out = vec![Complex::new(T::zero(), T::zero()); n];
    if n == 0 {
        return out;
    }
    let rh = rho * h;
    let (v0, v1) = if rh.norm() < cst(1e-3) {
        let c = |x: f64| Complex::new(cst::<T>(x), T::zero());
        let v0 = c(1.0) - rh * (c(0.5) - rh * (c(1.0 / 6.0) - rh * c(1.0 / 24.0)));
        let v1 = c(0.5) - rh * (c(1.0 / 3.0) - rh * (c(1.0 / 8.0) - rh * c(1.0 / 30.0)));
        (v0 * h, v1 * h)
    } else {
        let one = Complex::new(T::one(), T::zero());
        let e = (-rh).exp();
        ((one - e) / rho, (one - e * (one + rh)) / (rho * rh))
    };
    let decay = (-rh).exp();
    out[n - 1] = terminal;
    for k in (0..n - 1).rev() {
        out[k] = r[k] * (v0 - v1) + r[k + 1] * v1 + out[k + 1] * decay;
    }
    out
}
