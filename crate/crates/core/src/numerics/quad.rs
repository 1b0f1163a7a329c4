use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use super::{cst, Scalar};
use crate::error::{Error, Result};

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue<T>: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Scalar> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Scalar> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Adaptive Gauss–Kronrod (7/15) integration with global subdivision.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

impl<T: Scalar> Default for Quadrature<T> {
    fn default() -> Self {
        Self {
            rel_tol: cst(1e-10),
            abs_tol: cst(1e-14),
            max_intervals: 4000,
        }
    }
}

struct Panel<T, V> {
    a: T,
    b: T,
    value: V,
    err: T,
}

impl<T: PartialOrd, V> PartialEq for Panel<T, V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: PartialOrd, V> Eq for Panel<T, V> {}
impl<T: PartialOrd, V> PartialOrd for Panel<T, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: PartialOrd, V> Ord for Panel<T, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

impl<T: Scalar> Quadrature<T> {
    pub fn with_tol(rel_tol: T, abs_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    /// Integral of `f` over `[a, b]`; `b` may be `+inf`.
    pub fn integrate<V, F>(&self, mut f: F, a: T, b: T) -> Result<V>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        if a == b {
            return Ok(V::zero());
        }
        if b.is_infinite() {
            // x = a + t / (1 - t) maps [0, 1) onto [a, inf)
            let one = T::one();
            let g = |t: T| {
                let s = one - t;
                f(a + t / s) * (one / (s * s))
            };
            return self.adaptive(g, T::zero(), one);
        }
        self.adaptive(f, a, b)
    }

    fn adaptive<V, F>(&self, mut f: F, a: T, b: T) -> Result<V>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        let first = gk15(&mut f, a, b);
        let mut total = first.value;
        let mut total_err = first.err;
        let mut heap = BinaryHeap::new();
        heap.push(first);
        let two = cst::<T>(2.0);
        while total_err > self.abs_tol.max(self.rel_tol * total.magnitude()) {
            if heap.len() >= self.max_intervals {
                return Err(Error::NonConvergence(format!(
                    "{} panels, error estimate {:e}",
                    heap.len(),
                    total_err.to_f64().unwrap_or(f64::NAN)
                )));
            }
            let worst = heap.pop().expect("heap holds at least one panel");
            let mid = (worst.a + worst.b) / two;
            let left = gk15(&mut f, worst.a, mid);
            let right = gk15(&mut f, mid, worst.b);
            total = total - worst.value + left.value + right.value;
            total_err = total_err - worst.err + left.err + right.err;
            if !total_err.is_finite() || !total.magnitude().is_finite() {
                return Err(Error::NonConvergence("non-finite integrand".into()));
            }
            heap.push(left);
            heap.push(right);
        }
        // re-sum to shed accumulated cancellation in the running total
        Ok(heap.iter().fold(V::zero(), |acc, p| acc + p.value))
    }
}

fn gk15<T: Scalar, V: QuadValue<T>, F: FnMut(T) -> V>(f: &mut F, a: T, b: T) -> Panel<T, V> {
    let two = cst::<T>(2.0);
    let center = (a + b) / two;
    let half = (b - a) / two;
    let fc = f(center);
    let mut kronrod = fc * cst::<T>(WGK[7]);
    let mut gauss = fc * cst::<T>(WG[3]);
    for j in 0..7 {
        let dx = half * cst::<T>(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * cst::<T>(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * cst::<T>(WG[j / 2]);
        }
    }
    let value = kronrod * half;
    let err = (kronrod - gauss).magnitude() * half.abs();
    Panel { a, b, value, err }
}
