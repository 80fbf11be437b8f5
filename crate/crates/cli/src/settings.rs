//! Flat TOML configuration files and their merge with command-line flags.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;
use tsvc::io::{expand_discrete_hazard, load_table, SurvivalSchema};
use tsvc::{Dataset, Family, SplitSearch, TsvcConfig};

use crate::args::ModelArgs;

/// Every key is optional; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub outcome: Option<String>,
    pub family: Option<String>,
    pub max_splits: Option<usize>,
    pub min_node_size: Option<usize>,
    pub vary: Option<Vec<String>>,
    pub fixed: Option<Vec<String>>,
    pub modifier_only: Option<Vec<String>>,
    pub modifiers: Option<Vec<String>>,
    pub split_search: Option<String>,
    pub survival_time: Option<String>,
    pub event: Option<String>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub levels: Option<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[serde(rename = "R")]
    pub r: Option<usize>,
    pub scenario: Option<Vec<String>>,
    pub n: Option<Vec<usize>>,
    pub sigma: Option<Vec<f64>>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

pub fn parse_family(s: &str) -> anyhow::Result<Family> {
    match s {
        "gaussian" | "gaussian_identity" => Ok(Family::GaussianIdentity),
        "binomial" | "binomial_logit" | "logistic" => Ok(Family::BinomialLogit),
        other => bail!("unknown family {other:?} (expected gaussian or binomial)"),
    }
}

fn parse_split_search(s: &str) -> anyhow::Result<SplitSearch> {
    match s {
        "auto" => Ok(SplitSearch::Auto),
        "refit" => Ok(SplitSearch::Refit),
        other => bail!("unknown split search {other:?} (expected auto or refit)"),
    }
}

/// Flags merged over file values.
#[derive(Debug)]
pub struct ModelSettings {
    pub outcome: Option<String>,
    pub family: Option<Family>,
    pub max_splits: Option<usize>,
    pub min_node_size: Option<usize>,
    pub vary: Option<Vec<String>>,
    pub fixed: Option<Vec<String>>,
    pub modifier_only: Option<Vec<String>>,
    pub modifiers: Option<Vec<String>>,
    pub split_search: Option<SplitSearch>,
    pub survival: Option<SurvivalSchema>,
}

impl ModelSettings {
    pub fn merge(args: &ModelArgs, file: &FileConfig) -> anyhow::Result<Self> {
        let family = args
            .family
            .as_ref()
            .or(file.family.as_ref())
            .map(|s| parse_family(s))
            .transpose()?;
        let split_search = args
            .split_search
            .as_ref()
            .or(file.split_search.as_ref())
            .map(|s| parse_split_search(s))
            .transpose()?;
        let time = args
            .survival_time
            .clone()
            .or_else(|| file.survival_time.clone());
        let event = args.event.clone().or_else(|| file.event.clone());
        let survival = match (time, event) {
            (Some(time_column), Some(event_column)) => {
                if family == Some(Family::GaussianIdentity) {
                    bail!("survival data needs the binomial family");
                }
                Some(SurvivalSchema {
                    time_column,
                    event_column,
                })
            }
            (None, None) => None,
            _ => bail!("--survival-time and --event must be given together"),
        };
        Ok(Self {
            outcome: args.outcome.clone().or_else(|| file.outcome.clone()),
            family,
            max_splits: args.max_splits.or(file.max_splits),
            min_node_size: args.min_node_size.or(file.min_node_size),
            vary: args.vary.clone().or_else(|| file.vary.clone()),
            fixed: args.fixed.clone().or_else(|| file.fixed.clone()),
            modifier_only: args
                .modifier_only
                .clone()
                .or_else(|| file.modifier_only.clone()),
            modifiers: args.modifiers.clone().or_else(|| file.modifiers.clone()),
            split_search,
            survival,
        })
    }

    /// Loads the data (expanding survival data) and builds the fitting
    /// configuration. Errors here are usage errors when they concern names
    /// or settings, so the caller classifies them.
    pub fn load(&self, path: &Path) -> anyhow::Result<(Dataset, Option<TsvcConfig>)> {
        let table = load_table(path).with_context(|| format!("cannot read {}", path.display()))?;
        match &self.survival {
            Some(schema) => {
                let expansion = expand_discrete_hazard(&table, schema)?;
                let config = expansion.config();
                Ok((expansion.dataset, Some(config)))
            }
            None => Ok((table.to_dataset(self.outcome.as_deref())?, None)),
        }
    }

    /// Applies role and tuning settings to `base` (or to the all-varying
    /// default when there is no base).
    pub fn config(
        &self,
        dataset: &Dataset,
        base: Option<TsvcConfig>,
    ) -> anyhow::Result<TsvcConfig> {
        let p = dataset.p();
        let family = self.family.unwrap_or(if base.is_some() {
            Family::BinomialLogit
        } else {
            Family::GaussianIdentity
        });
        let mut config = base.unwrap_or_else(|| TsvcConfig::new(p, family));
        config.family = family;
        if let Some(s) = self.max_splits {
            config.max_splits = s;
        }
        if let Some(m) = self.min_node_size {
            config.min_node_size = m;
        }
        if let Some(s) = self.split_search {
            config.split_search = s;
        }

        let index = |name: &String| {
            dataset
                .column_index(name)
                .ok_or_else(|| anyhow!("unknown covariate {name:?}"))
        };
        let indices = |names: &Option<Vec<String>>| -> anyhow::Result<Option<Vec<usize>>> {
            names
                .as_ref()
                .map(|v| v.iter().map(index).collect::<anyhow::Result<Vec<_>>>())
                .transpose()
        };
        let vary = indices(&self.vary)?;
        let fixed = indices(&self.fixed)?;
        let modifier_only = indices(&self.modifier_only)?;
        if vary.is_some() || fixed.is_some() || modifier_only.is_some() {
            let fixed = fixed.unwrap_or_default();
            let modifier_only = modifier_only.unwrap_or_default();
            let vary = match vary {
                Some(v) => v,
                None => (0..p)
                    .filter(|j| !fixed.contains(j) && !modifier_only.contains(j))
                    .collect(),
            };
            // Covariates named nowhere keep a fixed effect.
            let all_fixed: Vec<usize> = (0..p)
                .filter(|j| fixed.contains(j) || (!vary.contains(j) && !modifier_only.contains(j)))
                .collect();
            config.vary_set = vary;
            config.fixed_effects = all_fixed;
            config.modifier_only = modifier_only;
        }
        if let Some(specs) = &self.modifiers {
            for spec in specs {
                let (target, mods) = spec
                    .split_once('=')
                    .ok_or_else(|| anyhow!("modifier spec {spec:?} must look like x1=x2+x3"))?;
                let j = index(&target.trim().to_string())?;
                config.modifier_sets[j] = mods
                    .split('+')
                    .map(|m| index(&m.trim().to_string()))
                    .collect::<anyhow::Result<Vec<_>>>()?;
            }
        }
        config.validate(p)?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsvc::Dataset;

    fn dataset() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, (i * i) as f64, (i % 2) as f64])
            .collect();
        Dataset::from_rows((0..10).map(f64::from).collect(), &rows).unwrap()
    }

    fn settings(args: ModelArgs) -> ModelSettings {
        ModelSettings::merge(&args, &FileConfig::default()).unwrap()
    }

    #[test]
    fn defaults_vary_everything() {
        let c = settings(ModelArgs::default())
            .config(&dataset(), None)
            .unwrap();
        assert_eq!(c.vary_set, vec![0, 1, 2]);
        assert_eq!(c.family, Family::GaussianIdentity);
    }

    #[test]
    fn unnamed_covariates_become_fixed() {
        let args = ModelArgs {
            vary: Some(vec!["x1".into()]),
            modifier_only: Some(vec!["x3".into()]),
            ..Default::default()
        };
        let c = settings(args).config(&dataset(), None).unwrap();
        assert_eq!(c.vary_set, vec![0]);
        assert_eq!(c.fixed_effects, vec![1]);
        assert_eq!(c.modifier_only, vec![2]);
    }

    #[test]
    fn modifier_specs() {
        let args = ModelArgs {
            modifiers: Some(vec!["x1=x2+x3".into(), "x2 = x3".into()]),
            ..Default::default()
        };
        let c = settings(args).config(&dataset(), None).unwrap();
        assert_eq!(c.modifier_sets[0], vec![1, 2]);
        assert_eq!(c.modifier_sets[1], vec![2]);
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("max_splits = 2\nfamily = \"binomial\"\n").unwrap();
        let args = ModelArgs {
            max_splits: Some(4),
            ..Default::default()
        };
        let s = ModelSettings::merge(&args, &file).unwrap();
        assert_eq!(s.max_splits, Some(4));
        assert_eq!(s.family, Some(Family::BinomialLogit));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("max_split = 2\n").is_err());
    }

    #[test]
    fn unknown_names_rejected() {
        let args = ModelArgs {
            fixed: Some(vec!["age".into()]),
            ..Default::default()
        };
        assert!(settings(args).config(&dataset(), None).is_err());
    }
}
