//! Shared numerical kernels: polynomials and their roots, adaptive
//! quadrature, and grid functions with convolution.

mod grid;
mod poly;
mod quad;

pub use grid::{exp_convolve, exp_tail, grid_convolve, trapezoid, GridFunction, GridKind};
pub use poly::{poly_roots, Poly};
pub use quad::{QuadValue, Quadrature};

use num_traits::{Float, FromPrimitive};

/// Scalar bound shared by the generic kernels.
pub trait Scalar: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + std::fmt::Debug + Send + Sync + 'static {}

pub(crate) fn cst<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}
