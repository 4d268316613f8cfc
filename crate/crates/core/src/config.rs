//! JSON run configurations: algebra, level, marked points, the slot at infinity and
//! truncation parameters, validated into a [`MarkedConfiguration`].

use crate::coinvariants::{CoinvariantError, InfinitySpec, MarkedConfiguration};
use crate::lie_core::{AlgebraSpec, LieAlgebra};
use crate::rational::{parse_q, Ratio, Q};
use crate::singular_module::{ModuleError, SingularCharacter, Theta};
use num::complex::Complex64;
use num::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("critical level κ = −h∨ = {0}")]
    CriticalLevel(String),
    #[error("marked points {0} and {1} share a time")]
    CoincidentTimes(usize, usize),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Schema(e.to_string())
    }
}

/// Spellings of the critical level accepted in place of a rational.
const CRITICAL_SENTINELS: [&str; 5] = ["-h∨", "−h∨", "-h^v", "-hv", "critical"];

/// A level: a rational or the critical sentinel, which resolves to `−h∨` and is then rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Level(pub String);

impl Level {
    pub fn resolve(&self, alg: &LieAlgebra) -> Result<Q, ConfigError> {
        let text = self.0.trim();
        let kappa = if CRITICAL_SENTINELS.contains(&text) {
            -alg.dual_coxeter.clone()
        } else {
            parse_q(text).map_err(|e| ConfigError::Schema(e.to_string()))?
        };
        if (&kappa + &alg.dual_coxeter).is_zero() {
            return Err(ConfigError::CriticalLevel(format!("{}", Ratio(kappa))));
        }
        Ok(kappa)
    }
}

/// A time: a rational string or an `[re, im]` float pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeValue {
    Exact(Ratio),
    Complex([f64; 2]),
}

impl TimeValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            TimeValue::Exact(r) => Complex64::new(r.0.to_f64().unwrap_or(f64::NAN), 0.0),
            TimeValue::Complex([re, im]) => Complex64::new(*re, *im),
        }
    }

    /// The exact real value; floats convert losslessly.
    pub fn to_exact(&self) -> Option<Q> {
        match self {
            TimeValue::Exact(r) => Some(r.0.clone()),
            TimeValue::Complex([re, im]) if *im == 0.0 => Q::from_float(*re),
            TimeValue::Complex(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub t: TimeValue,
    #[serde(default = "one")]
    pub depth: usize,
    pub lambda: Vec<Ratio>,
    #[serde(default)]
    pub q: Vec<Vec<Ratio>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfinityMode {
    Tame,
    Singular,
    Dual,
    Contragredient,
    Dynamical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfinityConfig {
    pub mode: InfinityMode,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub lambda: Option<Vec<Ratio>>,
    #[serde(default)]
    pub q: Vec<Vec<Ratio>>,
    #[serde(default)]
    pub mu: Option<Vec<Ratio>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "one")]
    pub negative_degree: usize,
}

fn default_height() -> usize {
    4
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { height: default_height(), negative_degree: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: AlgebraSpec,
    pub kappa: Level,
    #[serde(default)]
    pub points: Vec<PointConfig>,
    #[serde(default)]
    pub infinity: Option<InfinityConfig>,
    #[serde(default)]
    pub restricted: bool,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    8
}

/// The single-character form `{"p", "lambda", "q", "kappa"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterConfig {
    #[serde(default)]
    pub algebra: Option<AlgebraSpec>,
    pub p: usize,
    pub lambda: Vec<Ratio>,
    #[serde(default)]
    pub q: Vec<Vec<Ratio>>,
    pub kappa: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModuleConfig {
    Character(CharacterConfig),
    Run(RunConfig),
}

fn ratios(v: &[Ratio]) -> Vec<Q> {
    v.iter().map(|r| r.0.clone()).collect()
}

pub fn build_algebra(spec: AlgebraSpec) -> Result<Arc<LieAlgebra>, ConfigError> {
    if spec.rank == 0 {
        return Err(ConfigError::Schema("algebra rank must be positive".into()));
    }
    LieAlgebra::from_spec(spec).map(Arc::new).map_err(|e| ConfigError::Schema(e.to_string()))
}

fn character(
    alg: &LieAlgebra,
    depth: usize,
    lambda: &[Ratio],
    wild: &[Vec<Ratio>],
    kappa: &Q,
    what: &str,
) -> Result<SingularCharacter, ConfigError> {
    if lambda.len() != alg.rank() {
        return Err(ConfigError::Schema(format!("{what}: lambda has {} entries, rank is {}", lambda.len(), alg.rank())));
    }
    SingularCharacter::new(depth, ratios(lambda), wild.iter().map(|a| ratios(a)).collect(), kappa.clone())
        .map_err(|e: ModuleError| ConfigError::Schema(format!("{what}: {e}")))
}

impl CharacterConfig {
    pub fn build(&self) -> Result<(Arc<LieAlgebra>, SingularCharacter), ConfigError> {
        let spec = self.algebra.unwrap_or(AlgebraSpec { kind: crate::lie_core::AlgebraType::A, rank: self.lambda.len() });
        let alg = build_algebra(spec)?;
        let kappa = self.kappa.resolve(&alg)?;
        let chi = character(&alg, self.p, &self.lambda, &self.q, &kappa, "character")?;
        Ok((alg, chi))
    }
}

impl ModuleConfig {
    /// The character of marked point `index` (ignored for the single-character form).
    pub fn character(&self, index: usize) -> Result<(Arc<LieAlgebra>, SingularCharacter), ConfigError> {
        match self {
            ModuleConfig::Character(c) => c.build(),
            ModuleConfig::Run(run) => {
                let alg = build_algebra(run.algebra)?;
                let kappa = run.kappa.resolve(&alg)?;
                let point = run
                    .points
                    .get(index)
                    .ok_or_else(|| ConfigError::Schema(format!("no marked point with index {index}")))?;
                let chi = character(&alg, point.depth, &point.lambda, &point.q, &kappa, &format!("point {index}"))?;
                Ok((alg, chi))
            }
        }
    }
}

/// A validated configuration together with the complex times used for transport.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub marked: MarkedConfiguration,
    pub complex_times: Vec<Complex64>,
    /// False when some time is non-real; `marked.times` are then placeholders.
    pub exact_times: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let alg = build_algebra(self.algebra)?;
        let kappa = self.kappa.resolve(&alg)?;
        if self.points.is_empty() {
            return Err(ConfigError::Schema("at least one marked point is required".into()));
        }
        let complex_times: Vec<Complex64> = self.points.iter().map(|p| p.t.to_complex()).collect();
        for (i, a) in complex_times.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(ConfigError::Schema(format!("point {i}: time is not finite")));
            }
            for (j, b) in complex_times.iter().enumerate().skip(i + 1) {
                if a == b {
                    return Err(ConfigError::CoincidentTimes(i, j));
                }
            }
        }
        let exact: Option<Vec<Q>> = self.points.iter().map(|p| p.t.to_exact()).collect();
        let exact_times = exact.is_some();
        let times = exact.unwrap_or_else(|| (0..self.points.len()).map(|i| Q::from_integer((i as i64).into())).collect());
        let characters = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| character(&alg, p.depth, &p.lambda, &p.q, &kappa, &format!("point {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let infinity = self.infinity_spec(&alg, &kappa)?;
        let marked = MarkedConfiguration::new(alg, kappa, times, characters, infinity, self.restricted).map_err(|e| match e {
            CoinvariantError::CoincidentTimes(i, j) => ConfigError::CoincidentTimes(i, j),
            other => ConfigError::Schema(other.to_string()),
        })?;
        Ok(Resolved { marked, complex_times, exact_times })
    }

    fn infinity_spec(&self, alg: &LieAlgebra, kappa: &Q) -> Result<InfinitySpec, ConfigError> {
        let Some(inf) = &self.infinity else {
            return Ok(InfinitySpec::Dynamical { mu: vec![Q::zero(); alg.rank()] });
        };
        let module_character = || {
            let lambda = inf.lambda.as_ref().ok_or_else(|| ConfigError::Schema("infinity: lambda is required".into()))?;
            let depth = inf.depth.unwrap_or(inf.q.len() + 1);
            if inf.mode == InfinityMode::Tame && depth != 1 {
                return Err(ConfigError::Schema("infinity: tame mode has depth 1".into()));
            }
            character(alg, depth, lambda, &inf.q, kappa, "infinity")
        };
        Ok(match inf.mode {
            InfinityMode::Tame | InfinityMode::Singular => InfinitySpec::Singular(module_character()?),
            InfinityMode::Dual => InfinitySpec::Dual { character: module_character()?, theta: Theta::Dual },
            InfinityMode::Contragredient => InfinitySpec::Dual { character: module_character()?, theta: Theta::Contragredient },
            InfinityMode::Dynamical => {
                let mu = inf.mu.as_ref().ok_or_else(|| ConfigError::Schema("infinity: dynamical mode needs mu".into()))?;
                if mu.len() != alg.rank() {
                    return Err(ConfigError::Schema("infinity: mu must have the algebra rank".into()));
                }
                InfinitySpec::Dynamical { mu: ratios(mu) }
            }
        })
    }
}
