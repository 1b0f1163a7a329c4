//! Phase-type and heavy-tailed claim laws: evaluation, moments, transforms
//! of the equilibrium (stationary-excess) law, and sampling.

mod heavy_tail;
mod phase_type;

pub use heavy_tail::HeavyTail;
pub use phase_type::PhaseType;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::Quadrature;
use crate::Complex;

/// A claim-size law with finite mean on `(0, inf)`.
///
/// The model pipeline only touches the heavy component through this trait,
/// so a phase-type law can stand in for it when an exactly solvable
/// perturbation is wanted.
pub trait ClaimLaw: std::fmt::Debug + Send + Sync {
    fn mean(&self) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;

    fn tail(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Tail of the equilibrium law, `∫_x^∞ (1 - F(y)) dy / mean`.
    fn equilibrium_tail(&self, x: f64) -> f64;

    fn equilibrium_cdf(&self, x: f64) -> f64 {
        1.0 - self.equilibrium_tail(x)
    }

    fn equilibrium_pdf(&self, x: f64) -> f64 {
        self.tail(x) / self.mean()
    }

    /// Laplace–Stieltjes transform of the equilibrium law.
    fn equilibrium_lst(&self, s: Complex) -> Result<Complex> {
        if s == Complex::new(0.0, 0.0) {
            return Ok(Complex::new(1.0, 0.0));
        }
        if s.re <= 0.0 {
            return Err(Error::TransformDivergence(s.to_string()));
        }
        Quadrature::default().integrate(|x: f64| (-s * x).exp() * self.equilibrium_pdf(x), 0.0, f64::INFINITY)
    }

    /// Derivative in `s` of [`ClaimLaw::equilibrium_lst`].
    fn equilibrium_lst_derivative(&self, s: Complex) -> Result<Complex> {
        if s.re <= 0.0 {
            return Err(Error::TransformDivergence(s.to_string()));
        }
        Quadrature::default().integrate(
            |x: f64| -(-s * x).exp() * (x * self.equilibrium_pdf(x)),
            0.0,
            f64::INFINITY,
        )
    }

    /// `∫_0^∞ e^{-s y} f(z + y) dy`, with `f` the density.
    fn tilted_density_integral(&self, s: f64, z: f64) -> Result<f64> {
        Quadrature::default().integrate(|y: f64| (-s * y).exp() * self.pdf(z + y), 0.0, f64::INFINITY)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64
    where
        Self: Sized;

    /// Draw from the equilibrium law (inversion of its tail by bisection
    /// unless a kind provides something faster).
    fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64
    where
        Self: Sized,
    {
        let u: f64 = rng.random();
        invert_tail(|x| self.equilibrium_tail(x), u, self.mean())
    }
}

/// Smallest `x` with `tail(x) <= u`, by bracketing then bisection.
pub(crate) fn invert_tail(tail: impl Fn(f64) -> f64, u: f64, scale: f64) -> f64 {
    if u >= 1.0 {
        return 0.0;
    }
    let mut hi = scale.max(1e-12);
    while tail(hi) > u {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::MAX;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Claim law `(1 - eps) F_p + eps H`.
#[derive(Debug, Clone)]
pub struct MixtureClaim<H = HeavyTail> {
    pub ph: PhaseType,
    pub heavy: H,
    pub eps: f64,
}

impl<H: ClaimLaw> MixtureClaim<H> {
    pub fn new(ph: PhaseType, heavy: H, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1]")));
        }
        Ok(Self { ph, heavy, eps })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (1.0 - self.eps) * self.ph.cdf(x) + self.eps * self.heavy.cdf(x)
    }

    pub fn tail(&self, x: f64) -> f64 {
        (1.0 - self.eps) * self.ph.tail(x) + self.eps * self.heavy.tail(x)
    }

    pub fn mean(&self) -> f64 {
        (1.0 - self.eps) * self.ph.mean() + self.eps * self.heavy.mean()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.eps {
            self.heavy.sample(rng)
        } else {
            self.ph.sample(rng)
        }
    }
}
