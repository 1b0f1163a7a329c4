//! Gerber–Shiu expected discounted penalty functions for a risk process with
//! phase-type gains and claims drawn from a phase-type law with probability
//! `1 - eps` and a heavy-tailed law with probability `eps`.
//!
//! The base model (`eps = 0`) is solved exactly through a fluid embedding
//! into a spectrally negative Markov-additive process. The heavy-tail
//! contamination enters through an explicit first-order correction, so
//! `corrected = base + eps * correction` carries an `O(eps^2)` error.
//! A Monte Carlo simulator of the original two-sided process serves as an
//! independent oracle.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod error;
pub mod fluid_map;
pub mod gerber_shiu;
pub mod montecarlo;
pub mod numerics;
pub mod scale;
pub mod spectral;

pub use error::{Error, Result};

/// Scalar type used by the model pipeline.
pub type Real = f64;
/// Complex scalar used for transforms and spectral data.
pub type Complex = num_complex::Complex64;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<Real>;
/// Dense real vector.
pub type Vector = nalgebra::DVector<Real>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<Complex>;
/// Grid function over the pipeline scalar.
pub type Grid = numerics::GridFunction<Real>;
/// Real polynomial with ascending coefficients.
pub type Polynomial = numerics::Poly<Real>;

pub use distributions::{ClaimLaw, HeavyTail, MixtureClaim, PhaseType};
pub use fluid_map::{ModelParams, RiskModel};
pub use gerber_shiu::{GsResult, GsSolver, Penalty};
