//! Bounded penalty functions `ω(y, z)` of the deficit `y` and the surplus
//! prior to ruin `z`, and their integrals against a claim law.

use serde::{Deserialize, Serialize};

use crate::distributions::ClaimLaw;
use crate::error::{Error, Result};
use crate::numerics::Quadrature;

/// Penalty tabulated on a rectangular `(y, z)` grid, bilinear in between
/// and constant beyond the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTable {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Row-major by `z`: `values[iz][iy]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    /// `ω ≡ a`.
    Constant {
        a: f64,
    },
    /// `ω = a 1{y > y0}`.
    DeficitIndicator {
        y0: f64,
        #[serde(default = "unit")]
        a: f64,
    },
    /// `ω = a e^{-s1 y - s2 z}`.
    BilateralExponential {
        s1: f64,
        s2: f64,
        #[serde(default = "unit")]
        a: f64,
    },
    Table(PenaltyTable),
}

fn unit() -> f64 {
    1.0
}

fn bracket(nodes: &[f64], x: f64) -> (usize, f64) {
    if x <= nodes[0] || nodes.len() == 1 {
        return (0, 0.0);
    }
    let last = nodes.len() - 1;
    if x >= nodes[last] {
        return (last - 1, 1.0);
    }
    let i = nodes.partition_point(|&v| v <= x) - 1;
    (i, (x - nodes[i]) / (nodes[i + 1] - nodes[i]))
}

impl PenaltyTable {
    pub fn validate(&self) -> Result<()> {
        let increasing = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]) && v[0] >= 0.0;
        if !increasing(&self.y) || !increasing(&self.z) {
            return Err(Error::InvalidParameter(
                "penalty table axes must be nonnegative and increasing".into(),
            ));
        }
        if self.values.len() != self.z.len() || self.values.iter().any(|r| r.len() != self.y.len()) {
            return Err(Error::DimensionMismatch(format!(
                "penalty table is not {} x {}",
                self.z.len(),
                self.y.len()
            )));
        }
        if self.values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "penalty table values must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let (iz, tz) = bracket(&self.z, z);
        let (iy, ty) = bracket(&self.y, y);
        let at = |a: usize, b: usize| {
            let a = a.min(self.z.len() - 1);
            let b = b.min(self.y.len() - 1);
            self.values[a][b]
        };
        let lo = at(iz, iy) * (1.0 - ty) + at(iz, iy + 1) * ty;
        let hi = at(iz + 1, iy) * (1.0 - ty) + at(iz + 1, iy + 1) * ty;
        lo * (1.0 - tz) + hi * tz
    }
}

impl Penalty {
    pub fn validate(&self) -> Result<()> {
        if let Penalty::DeficitIndicator { a, .. } | Penalty::BilateralExponential { a, .. } = self {
            if !(a.is_finite() && *a >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "penalty amplitude {a} must be finite and >= 0"
                )));
            }
        }
        match self {
            Penalty::Constant { a } if !(a.is_finite() && *a >= 0.0) => Err(Error::InvalidParameter(format!(
                "constant penalty {a} must be finite and >= 0"
            ))),
            Penalty::DeficitIndicator { y0, .. } if !(y0.is_finite() && *y0 >= 0.0) => {
                Err(Error::InvalidParameter(format!("deficit threshold {y0} must be >= 0")))
            }
            Penalty::BilateralExponential { s1, s2, .. }
                if !(*s1 >= 0.0 && *s2 >= 0.0 && s1.is_finite() && s2.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "exponential penalty rates ({s1}, {s2}) must be >= 0"
                )))
            }
            Penalty::Table(t) => t.validate(),
            _ => Ok(()),
        }
    }

    /// `a = sup ω`.
    pub fn bound(&self) -> f64 {
        match self {
            Penalty::Constant { a } | Penalty::DeficitIndicator { a, .. } | Penalty::BilateralExponential { a, .. } => {
                *a
            }
            Penalty::Table(t) => t.values.iter().flatten().fold(0.0, |m, &v| m.max(v)),
        }
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        match self {
            Penalty::Constant { a } => *a,
            Penalty::DeficitIndicator { y0, a } => a * f64::from(y > *y0),
            Penalty::BilateralExponential { s1, s2, a } => a * (-s1 * y - s2 * z).exp(),
            Penalty::Table(t) => t.eval(y, z),
        }
    }

    /// `t ω`.
    pub fn scaled(&self, t: f64) -> Penalty {
        match self.clone() {
            Penalty::Constant { a } => Penalty::Constant { a: a * t },
            Penalty::DeficitIndicator { y0, a } => Penalty::DeficitIndicator { y0, a: a * t },
            Penalty::BilateralExponential { s1, s2, a } => Penalty::BilateralExponential { s1, s2, a: a * t },
            Penalty::Table(tab) => Penalty::Table(PenaltyTable {
                values: tab.values.iter().map(|r| r.iter().map(|v| v * t).collect()).collect(),
                ..tab
            }),
        }
    }

    /// `Ω_G(z) = ∫_0^∞ ω(y, z) G(z + dy)`.
    pub fn omega<L: ClaimLaw + ?Sized>(&self, law: &L, z: f64) -> Result<f64> {
        match self {
            Penalty::Constant { a } => Ok(a * law.tail(z)),
            Penalty::DeficitIndicator { y0, a } => Ok(a * law.tail(z + y0)),
            Penalty::BilateralExponential { s1, s2, a } => {
                Ok(a * (-s2 * z).exp() * law.tilted_density_integral(*s1, z)?)
            }
            Penalty::Table(t) => {
                let y_end = *t.y.last().unwrap();
                let body: f64 = if y_end > 0.0 {
                    Quadrature::with_tol(1e-9, 1e-14).integrate(|y: f64| t.eval(y, z) * law.pdf(z + y), 0.0, y_end)?
                } else {
                    0.0
                };
                Ok(body + t.eval(y_end, z) * law.tail(z + y_end))
            }
        }
    }
}
