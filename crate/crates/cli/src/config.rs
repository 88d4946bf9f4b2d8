//! Run configuration: one TOML file with a section per stage.

use std::path::{Path, PathBuf};

use physlayout::diffusion::SamplerConfig;
use physlayout::guidance::GuidanceConfig;
use physlayout::metrics::MetricsConfig;
use physlayout::nn::TrainConfig;
use physlayout::synth::GenSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub count: usize,
    /// Fraction of scenes that go to the training split.
    pub split_ratio: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self { count: 200, split_ratio: 0.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed for every stage; per-section seeds are not accepted.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Per-coordinate variance of the Gaussian target used by `sample --analytic`.
    pub analytic_variance: f64,
    pub dataset: DatasetSection,
    pub gen: GenSpec,
    pub train: TrainConfig,
    pub sampler: SamplerConfig,
    pub guidance: GuidanceConfig,
    pub metrics: MetricsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            analytic_variance: 1e-4,
            dataset: DatasetSection::default(),
            gen: GenSpec::default(),
            train: TrainConfig::default(),
            sampler: SamplerConfig::default(),
            guidance: GuidanceConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

const SEEDED_SECTIONS: [&str; 3] = ["train", "sampler", "metrics"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for section in SEEDED_SECTIONS {
            if value.get(section).and_then(|s| s.get("seed")).is_some() {
                return Err(CliError::Config(format!("`{section}.seed` is not allowed; set the top-level `seed`")));
            }
        }
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.apply_seed();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => {
                let mut cfg = RunConfig::default();
                cfg.apply_seed();
                Ok(cfg)
            }
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Copies the global seed and the guidance section into the stage configs.
    pub fn apply_seed(&mut self) {
        self.train.seed = self.seed;
        self.sampler.seed = self.seed;
        self.metrics.seed = self.seed;
        self.sampler.guidance = self.guidance.clone();
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dataset.count < 2 || !(0.0..=1.0).contains(&self.dataset.split_ratio) {
            return Err(CliError::Config("dataset: count must be ≥ 2 and split_ratio in [0, 1]".into()));
        }
        if !(self.analytic_variance >= 0.0) || !self.analytic_variance.is_finite() {
            return Err(CliError::Config("analytic_variance must be finite and non-negative".into()));
        }
        self.gen.validate()?;
        self.train.validate()?;
        self.sampler.validate()?;
        self.metrics.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.train.lr, 1e-4);
        assert_eq!(c.sampler.steps, 1000);
        assert_eq!(c.guidance.lambda_c, 7.5e-3);
        assert_eq!(c.metrics.samples, 2000);
    }

    #[test]
    fn sections_override_and_seed_propagates() {
        let c = RunConfig::parse("seed = 9\n[train]\nsteps = 12\n[guidance]\nlambda_c = 0.5\n").unwrap();
        assert_eq!(c.train.steps, 12);
        assert_eq!((c.train.seed, c.sampler.seed, c.metrics.seed), (9, 9, 9));
        assert_eq!(c.sampler.guidance.lambda_c, 0.5);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let e = RunConfig::parse("[train]\nlearning_rate = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("learning_rate"), "{e}");
        assert!(RunConfig::parse("[sampler]\nseed = 3\n").is_err());
        assert!(RunConfig::parse("[train]\nlr = -1.0\n").is_err());
        assert!(RunConfig::parse("bogus = 1\n").is_err());
    }
}
