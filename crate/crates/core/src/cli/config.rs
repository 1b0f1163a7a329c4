//! JSON model configuration. Field names and units are documented in
//! `config.schema.json` at the repository root.

use serde::Deserialize;
use serde_json::Value;

use crate::distributions::{HeavyTail, PhaseType};
use crate::error::Error;
use crate::fluid_map::{ModelParams, RiskModel};
use crate::gerber_shiu::{Penalty, PenaltyTable};
use crate::montecarlo::{default_barrier, default_horizon, McConfig, Stop};
use crate::scale::GridSpec;

/// Failure while turning a file into a model.
#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Schema(String),
    Model(Error),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "IoError: {m}"),
            ConfigError::Parse(m) => write!(f, "ParseError: {m}"),
            ConfigError::Schema(m) => write!(f, "SchemaError: {m}"),
            ConfigError::Model(e) => write!(f, "{}: {e}", error_name(e)),
        }
    }
}

/// Variant name used as the error tag on the command line.
pub fn error_name(e: &Error) -> &'static str {
    match e {
        Error::NonStochasticAlpha { .. } => "NonStochasticAlpha",
        Error::InvalidSubintensity(_) => "InvalidSubintensity",
        Error::DimensionMismatch(_) => "DimensionMismatch",
        Error::SingularResolvent(_) => "SingularResolvent",
        Error::InfiniteMean(_) => "InfiniteMean",
        Error::InvalidParameter(_) => "InvalidParameter",
        Error::InvalidComponent(_) => "InvalidComponent",
        Error::SafetyLoadingViolated { .. } => "SafetyLoadingViolated",
        Error::TransformDivergence(_) => "TransformDivergence",
        Error::DegenerateCancellation(_) => "DegenerateCancellation",
        Error::SingularMatrix(_) => "SingularMatrix",
        Error::IllConditioned(_) => "IllConditioned",
        Error::NonConvergence(_) => "NonConvergence",
        Error::StepMismatch(..) => "StepMismatch",
        Error::RootCountMismatch { .. } => "RootCountMismatch",
        Error::NonSimpleRoots(_) => "NonSimpleRoots",
        Error::ZeroRow(_) => "ZeroRow",
        Error::SingularLambda(_) => "SingularLambda",
        Error::ImaginaryResidue(_) => "ImaginaryResidue",
        Error::ZeroDerivative(_) => "ZeroDerivative",
        Error::ResidueImbalance(_) => "ResidueImbalance",
        Error::GridTooCoarse(_) => "GridTooCoarse",
        Error::NonIntegrableKappa(_) => "NonIntegrableKappa",
        Error::PreconditionViolated(_) => "PreconditionViolated",
        Error::InsufficientPaths { .. } => "InsufficientPaths",
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhConfig {
    pub alpha: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindConfig {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: Option<f64>,
    pub u_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub paths: u64,
    pub seed: u64,
    pub horizon: Option<f64>,
    pub barrier: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub continuation: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub premium_rate: f64,
    pub claim_rate: f64,
    #[serde(default)]
    pub gain_rate: f64,
    pub gain_ph: Option<PhConfig>,
    pub claim_ph: PhConfig,
    pub heavy_tail: KindConfig,
    #[serde(default)]
    pub epsilon: f64,
    pub q: f64,
    pub penalty: Option<KindConfig>,
    pub grid: Option<GridConfig>,
    pub mc: Option<MonteCarloConfig>,
}

fn num(params: &Value, kind: &str, key: &str) -> Result<f64, ConfigError> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| ConfigError::Schema(format!("{kind}: params.{key} must be a number")))
}

fn only_keys(params: &Value, kind: &str, keys: &[&str]) -> Result<(), ConfigError> {
    match params {
        Value::Null => Ok(()),
        Value::Object(map) => match map.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::Schema(format!("{kind}: unknown parameter `{k}`"))),
            None => Ok(()),
        },
        _ => Err(ConfigError::Schema(format!("{kind}: params must be an object"))),
    }
}

impl PhConfig {
    fn build(&self, what: &str) -> Result<PhaseType, ConfigError> {
        PhaseType::from_rows(&self.alpha, &self.t).map_err(|e| match e {
            Error::DimensionMismatch(m) => ConfigError::Schema(format!("{what}: {m}")),
            other => ConfigError::Model(other),
        })
    }
}

impl KindConfig {
    fn heavy(&self) -> Result<HeavyTail, ConfigError> {
        let p = &self.params;
        let k = self.kind.as_str();
        let built = match k {
            "pareto" => {
                only_keys(p, k, &["shape", "scale"])?;
                HeavyTail::pareto(num(p, k, "shape")?, num(p, k, "scale")?)
            }
            "weibull" => {
                only_keys(p, k, &["shape", "scale"])?;
                HeavyTail::weibull(num(p, k, "shape")?, num(p, k, "scale")?)
            }
            "lognormal" => {
                only_keys(p, k, &["mu", "sigma"])?;
                HeavyTail::lognormal(num(p, k, "mu")?, num(p, k, "sigma")?)
            }
            other => {
                return Err(ConfigError::Schema(format!(
                    "heavy_tail.kind `{other}` is not one of pareto, weibull, lognormal"
                )))
            }
        };
        built.map_err(ConfigError::Model)
    }

    fn penalty(&self) -> Result<Penalty, ConfigError> {
        let p = &self.params;
        let k = self.kind.as_str();
        let amp = |p: &Value| p.get("a").map_or(Ok(1.0), |_| num(p, k, "a"));
        let pen = match k {
            "constant" => {
                only_keys(p, k, &["a"])?;
                Penalty::Constant { a: amp(p)? }
            }
            "deficit_indicator" => {
                only_keys(p, k, &["y0", "a"])?;
                Penalty::DeficitIndicator {
                    y0: num(p, k, "y0")?,
                    a: amp(p)?,
                }
            }
            "bilateral_exponential" => {
                only_keys(p, k, &["s1", "s2", "a"])?;
                Penalty::BilateralExponential {
                    s1: num(p, k, "s1")?,
                    s2: num(p, k, "s2")?,
                    a: amp(p)?,
                }
            }
            "table" => {
                only_keys(p, k, &["y", "z", "values"])?;
                let table: PenaltyTable = serde_json::from_value(p.clone())
                    .map_err(|e| ConfigError::Schema(format!("table penalty: {e}")))?;
                Penalty::Table(table)
            }
            other => {
                return Err(ConfigError::Schema(format!(
                    "penalty.kind `{other}` is not one of constant, deficit_indicator, bilateral_exponential, table"
                )))
            }
        };
        pen.validate().map_err(ConfigError::Model)?;
        Ok(pen)
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub raw: ModelConfig,
    pub model: RiskModel,
    pub penalty: Penalty,
}

impl Loaded {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let raw: ModelConfig = serde_json::from_value(value).map_err(|e| ConfigError::Schema(e.to_string()))?;
        let gains = match (&raw.gain_ph, raw.gain_rate > 0.0) {
            (Some(g), _) => Some(g.build("gain_ph")?),
            (None, true) => return Err(ConfigError::Schema("gain_rate > 0 requires gain_ph".into())),
            (None, false) => None,
        };
        let claim_ph = raw.claim_ph.build("claim_ph")?;
        let heavy = raw.heavy_tail.heavy()?;
        let penalty = match &raw.penalty {
            Some(p) => p.penalty()?,
            None => Penalty::Constant { a: 1.0 },
        };
        if let Some(g) = &raw.grid {
            if !(g.u_max >= 0.0 && g.h.is_none_or(|h| h > 0.0)) {
                return Err(ConfigError::Schema("grid: need u_max >= 0 and h > 0".into()));
            }
        }
        if let Some(mc) = &raw.mc {
            if mc.horizon.is_some() && mc.barrier.is_some() {
                return Err(ConfigError::Schema(
                    "mc: give either horizon or barrier, not both".into(),
                ));
            }
        }
        let model = RiskModel::new(
            ModelParams {
                premium_rate: raw.premium_rate,
                claim_rate: raw.claim_rate,
                gain_rate: raw.gain_rate,
                eps: raw.epsilon,
                q: raw.q,
            },
            gains,
            claim_ph,
            heavy,
        )
        .map_err(ConfigError::Model)?;
        Ok(Self { raw, model, penalty })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn u_max(&self) -> f64 {
        self.raw.grid.as_ref().map_or(10.0 * self.model.mu_p(), |g| g.u_max)
    }

    /// Grid covering at least `u_needed`.
    pub fn grid(&self, u_needed: f64) -> GridSpec {
        let mut g = GridSpec::for_model(&self.model, self.u_max().max(u_needed));
        if let Some(h) = self.raw.grid.as_ref().and_then(|g| g.h) {
            g.h = h;
        }
        g
    }

    /// Simulation settings for surplus `u`; `paths` overrides the file.
    pub fn mc(&self, u: f64, paths: Option<u64>) -> Result<McConfig, ConfigError> {
        let mc = self
            .raw
            .mc
            .as_ref()
            .ok_or_else(|| ConfigError::Schema("this command needs an `mc` section".into()))?;
        let stop = match (mc.horizon, mc.barrier) {
            (Some(t), _) => Stop::Horizon(t),
            (None, Some(b)) => Stop::Barrier(b),
            (None, None) if self.model.q > 0.0 => {
                Stop::Horizon(default_horizon(self.model.q, self.penalty.bound(), 1e-5))
            }
            (None, None) => Stop::Barrier(default_barrier(&self.model, u)),
        };
        Ok(McConfig {
            n_paths: paths.unwrap_or(mc.paths),
            seed: mc.seed,
            stop,
            tolerance: mc.tolerance,
            continuation: mc.continuation,
        })
    }
}
