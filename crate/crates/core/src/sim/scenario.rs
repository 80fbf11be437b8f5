use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::TsvcConfig;
use crate::data::{ColumnKind, ColumnMeta, Dataset};
use crate::error::{Result, TsvcError};
use crate::glm::Family;
use crate::rng::{stream, Domain};

/// Data-generating processes of the coverage study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    /// `mu = 0.25 x1` with a noise covariate `x2`.
    Linear,
    /// `mu = 0.5 I(x2 <= 0.5, x3 = 1) x1 - I(x2 > 0.5) x1`.
    Varying,
    /// Same mean as `Varying`, with only `x2` and `x3` allowed as modifiers.
    VaryingKnownModifiers,
}

impl ScenarioId {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Linear => "linear",
            ScenarioId::Varying => "varying",
            ScenarioId::VaryingKnownModifiers => "varying_known_modifiers",
        }
    }

    pub fn p(self) -> usize {
        match self {
            ScenarioId::Linear => 2,
            ScenarioId::Varying | ScenarioId::VaryingKnownModifiers => 3,
        }
    }

    /// True conditional mean at a covariate row.
    pub fn mean(self, row: &[f64]) -> f64 {
        match self {
            ScenarioId::Linear => 0.25 * row[0],
            ScenarioId::Varying | ScenarioId::VaryingKnownModifiers => {
                let (x1, x2, x3) = (row[0], row[1], row[2]);
                if x2 > 0.5 {
                    -x1
                } else if x3 == 1.0 {
                    0.5 * x1
                } else {
                    0.0
                }
            }
        }
    }

    /// Fitting configuration: all covariates varying, up to five splits.
    pub fn config(self) -> TsvcConfig {
        let mut config = TsvcConfig::new(self.p(), Family::GaussianIdentity);
        if self == ScenarioId::VaryingKnownModifiers {
            config.modifier_sets = vec![vec![1, 2], vec![2], vec![1]];
        }
        config
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = TsvcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "1" => Ok(ScenarioId::Linear),
            "varying" | "2" => Ok(ScenarioId::Varying),
            "varying_known_modifiers" | "known_modifiers" | "3" => {
                Ok(ScenarioId::VaryingKnownModifiers)
            }
            other => Err(TsvcError::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: ScenarioId,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// One simulated dataset with its true mean and fitting configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dataset: Dataset,
    pub true_mean: Vec<f64>,
    pub config: TsvcConfig,
}

/// Draws `x1, x2 ~ N(0, 1)` and `x3 ~ Bernoulli(0.5)` (when present), then
/// `y = mu(x) + N(0, sigma^2)`. Row `i` uses its own random stream.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    if !(spec.sigma.is_finite() && spec.sigma > 0.0) {
        return Err(TsvcError::Config(format!(
            "sigma must be positive, got {}",
            spec.sigma
        )));
    }
    let p = spec.scenario.p();
    if spec.n < 2 {
        return Err(TsvcError::Config(format!("need n >= 2, got {}", spec.n)));
    }
    let mut x = DMatrix::zeros(spec.n, p);
    let mut true_mean = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    let mut row = vec![0.0; p];
    for i in 0..spec.n {
        let mut rng = stream(spec.seed, Domain::ScenarioData, i as u64, 0);
        row[0] = rng.sample(StandardNormal);
        row[1] = rng.sample(StandardNormal);
        if p == 3 {
            row[2] = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        }
        let eps: f64 = rng.sample(StandardNormal);
        let mu = spec.scenario.mean(&row);
        for (k, v) in row.iter().enumerate() {
            x[(i, k)] = *v;
        }
        true_mean.push(mu);
        y.push(mu + spec.sigma * eps);
    }
    let columns = (0..p)
        .map(|k| {
            let kind = if k == 2 {
                ColumnKind::Binary
            } else {
                ColumnKind::Continuous
            };
            ColumnMeta::new(format!("x{}", k + 1), kind)
        })
        .collect();
    Ok(Scenario {
        dataset: Dataset::new("y", y, x, columns)?,
        true_mean,
        config: spec.scenario.config(),
    })
}
