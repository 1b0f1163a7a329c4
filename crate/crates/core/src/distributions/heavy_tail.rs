use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::{erf::erfc, gamma};

use super::ClaimLaw;
use crate::error::{Error, Result};

/// Heavy-tailed claim law with finite mean.
#[derive(Debug, Clone, PartialEq)]
pub enum HeavyTail {
    /// Lomax form, tail `(1 + x / scale)^(-shape)`.
    Pareto { shape: f64, scale: f64 },
    /// Tail `exp(-(x / scale)^shape)`.
    Weibull { shape: f64, scale: f64 },
    /// `exp(mu + sigma Z)` with `Z` standard normal.
    LogNormal { mu: f64, sigma: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl HeavyTail {
    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        positive("pareto scale", scale)?;
        if !(shape > 1.0) {
            return Err(Error::InfiniteMean(format!("pareto shape {shape} <= 1")));
        }
        Ok(Self::Pareto { shape, scale })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self::Weibull {
            shape: positive("weibull shape", shape)?,
            scale: positive("weibull scale", scale)?,
        })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("lognormal mu must be finite".into()));
        }
        Ok(Self::LogNormal {
            mu,
            sigma: positive("lognormal sigma", sigma)?,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Pareto { .. } => "pareto",
            Self::Weibull { .. } => "weibull",
            Self::LogNormal { .. } => "lognormal",
        }
    }
}

impl ClaimLaw for HeavyTail {
    fn mean(&self) -> f64 {
        match *self {
            Self::Pareto { shape, scale } => scale / (shape - 1.0),
            Self::Weibull { shape, scale } => scale * gamma::gamma(1.0 + 1.0 / shape),
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x)
    }

    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Pareto { shape, scale } => (1.0 + x / scale).powf(-shape),
            Self::Weibull { shape, scale } => (-(x / scale).powf(shape)).exp(),
            Self::LogNormal { mu, sigma } => normal_cdf((mu - x.ln()) / sigma),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return match *self {
                Self::Pareto { shape, scale } => shape / scale,
                _ => 0.0,
            };
        }
        match *self {
            Self::Pareto { shape, scale } => shape / scale * (1.0 + x / scale).powf(-shape - 1.0),
            Self::Weibull { shape, scale } => {
                let r = x / scale;
                shape / scale * r.powf(shape - 1.0) * (-r.powf(shape)).exp()
            }
            Self::LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    fn equilibrium_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Pareto { shape, scale } => (1.0 + x / scale).powf(1.0 - shape),
            Self::Weibull { shape, scale } => gamma::gamma_ur(1.0 / shape, (x / scale).powf(shape)),
            Self::LogNormal { mu, sigma } => {
                // E[(X - x)^+] / E[X]
                let l = x.ln();
                let m = self.mean();
                let excess = m * normal_cdf((mu + sigma * sigma - l) / sigma) - x * normal_cdf((mu - l) / sigma);
                (excess / m).clamp(0.0, 1.0)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            Self::Pareto { shape, scale } => scale * ((1.0 - u).powf(-1.0 / shape) - 1.0),
            Self::Weibull { shape, scale } => scale * (-(1.0 - u).ln()).powf(1.0 / shape),
            Self::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
        }
    }

    fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Pareto { shape, scale } => {
                let u: f64 = rng.random();
                scale * ((1.0 - u).powf(-1.0 / (shape - 1.0)) - 1.0)
            }
            _ => {
                let u: f64 = rng.random();
                super::invert_tail(|x| self.equilibrium_tail(x), u, self.mean())
            }
        }
    }
}
