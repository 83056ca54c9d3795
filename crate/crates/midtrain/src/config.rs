//! Layered tool configuration.
//!
//! A TOML file supplies defaults for every subcommand; command-line flags
//! override individual values. Unknown keys are rejected everywhere so a
//! typo cannot silently fall back to a default. Every section is optional
//! and carries the documented defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::DedupConfig;
use crate::error::Error;
use crate::sampling::{
    schedule_preset, MixturePolicy, PasConfig, PresetKind, DEFAULT_LAMBDA, DEFAULT_TARGET_WEIGHTS,
};
use crate::schedule::WsdSchedule;
use crate::sim::{SimOptions, SyntheticTask};
use crate::Result;

/// Environment variable consulted when no `--config` flag is given.
pub const CONFIG_ENV_VAR: &str = "MIDTRAIN_CONFIG";

/// Mixture policy settings: a preset name, or the adaptive sampler with
/// its two knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// One of the preset kinds, or `pas` for the adaptive sampler.
    pub mode: PresetKind,
    /// Anchor boost strength (`pas` mode only).
    pub lambda: f64,
    /// Target mixture the sampler relaxes to at full plasticity.
    pub target_weights: Vec<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mode: PresetKind::Pas,
            lambda: DEFAULT_LAMBDA,
            target_weights: DEFAULT_TARGET_WEIGHTS.to_vec(),
        }
    }
}

impl SamplerConfig {
    /// Builds the mixture policy this section describes. Presets need the
    /// total step count to place their phase boundaries.
    pub fn policy(&self, total_steps: u64) -> Result<MixturePolicy> {
        match self.mode {
            PresetKind::Pas => {
                let cfg = PasConfig {
                    lambda: self.lambda,
                    target_weights: self.target_weights.clone(),
                }
                .validated()?;
                Ok(MixturePolicy::Pas(cfg))
            }
            kind => Ok(MixturePolicy::Preset(schedule_preset(kind, total_steps)?)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == PresetKind::Pas {
            PasConfig {
                lambda: self.lambda,
                target_weights: self.target_weights.clone(),
            }
            .validated()?;
        }
        Ok(())
    }
}

/// Corpus-pipeline thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Minimum record length in characters after markup stripping.
    pub min_length: usize,
    /// Maximum non-CJK letter fraction tolerated in synthetic records.
    pub max_foreign_ratio: f64,
    /// Records with perplexity strictly above this are dropped.
    pub max_ppl: f64,
    /// Minimum `quality_score` for the quality gate.
    pub quality_min: f64,
    /// Minimum for every judge score in the judge gate.
    pub judge_min: f64,
    /// Ascending perplexity boundaries; k boundaries make k+1 buckets.
    pub bucket_boundaries: Vec<f64>,
    pub dedup: DedupConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_length: 200,
            max_foreign_ratio: 0.3,
            max_ppl: 30.0,
            quality_min: 3.0,
            judge_min: 7.0,
            bucket_boundaries: vec![5.0, 15.0],
            dedup: DedupConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.max_foreign_ratio) {
            return Err(Error::config(
                "pipeline.max_foreign_ratio",
                "must lie in [0, 1]",
            ));
        }
        if !(self.max_ppl.is_finite() && self.max_ppl > 0.0) {
            return Err(Error::config("pipeline.max_ppl", "must be finite and > 0"));
        }
        if !(0.0..=5.0).contains(&self.quality_min) {
            return Err(Error::config("pipeline.quality_min", "must lie in [0, 5]"));
        }
        if !(1.0..=10.0).contains(&self.judge_min) {
            return Err(Error::config("pipeline.judge_min", "must lie in [1, 10]"));
        }
        if self.bucket_boundaries.is_empty() {
            return Err(Error::config(
                "pipeline.bucket_boundaries",
                "need at least one boundary",
            ));
        }
        if self.bucket_boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("pipeline.bucket_boundaries", "must be finite"));
        }
        if self.bucket_boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "pipeline.bucket_boundaries",
                "must be strictly ascending",
            ));
        }
        self.dedup.validate().map_err(|e| match e {
            Error::Config { key, reason } => Error::Config {
                key: format!("pipeline.dedup.{key}"),
                reason,
            },
            other => other,
        })
    }
}

/// Simulator run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub steps: u64,
    pub eval_every: u64,
    pub options: SimOptions,
    pub task: SyntheticTask,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            steps: 5_000,
            eval_every: 100,
            options: SimOptions::default(),
            task: SyntheticTask::default(),
        }
    }
}

/// Seed and path defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    /// Default seed; the `--seed` flag overrides it.
    pub seed: Option<u64>,
}

/// The full configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolConfig {
    pub schedule: WsdSchedule,
    pub sampler: SamplerConfig,
    pub pipeline: PipelineConfig,
    pub sim: SimConfig,
    pub io: IoConfig,
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.sampler.validate()?;
        self.pipeline.validate()?;
        self.sim.options.validate()?;
        self.sim.task.validate()?;
        Ok(())
    }
}

/// Parses a TOML config file. Parse errors surface the offending key path
/// as reported by the TOML parser.
pub fn load_config(path: &Path) -> Result<ToolConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: ToolConfig = toml::from_str(&text)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string().trim().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves the config: an explicit path, else the `MIDTRAIN_CONFIG`
/// environment variable, else built-in defaults.
pub fn resolve_config(explicit: Option<&Path>) -> Result<ToolConfig> {
    if let Some(p) = explicit {
        return load_config(p);
    }
    if let Ok(p) = std::env::var(CONFIG_ENV_VAR) {
        if !p.is_empty() {
            return load_config(Path::new(&p));
        }
    }
    Ok(ToolConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ToolConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_preserves_the_config() {
        let cfg = ToolConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ToolConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_files_keep_defaults_elsewhere() {
        let text = r#"
            [schedule]
            warmup_steps = 500
            stable_steps = 4000
            decay_steps = 500

            [sampler]
            mode = "descending"

            [io]
            seed = 42
        "#;
        let cfg: ToolConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.schedule.warmup_steps, 500);
        assert_eq!(cfg.schedule.peak_lr, 3e-4);
        assert_eq!(cfg.sampler.mode, PresetKind::Descending);
        assert_eq!(cfg.io.seed, Some(42));
        assert_eq!(cfg.pipeline.min_length, 200);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let text = "[pipeline]\nmin_lenght = 100\n";
        let err = toml::from_str::<ToolConfig>(text).unwrap_err().to_string();
        assert!(err.contains("min_lenght"), "{err}");
    }

    #[test]
    fn out_of_range_thresholds_fail_validation() {
        let mut cfg = ToolConfig::default();
        cfg.pipeline.quality_min = 9.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ToolConfig::default();
        cfg.pipeline.bucket_boundaries = vec![15.0, 5.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ToolConfig::default();
        cfg.pipeline.dedup.num_hashes = 4;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("pipeline.dedup"), "{msg}");
    }

    #[test]
    fn sampler_builds_both_policy_kinds() {
        let pas = SamplerConfig::default().policy(1_000).unwrap();
        assert!(matches!(pas, MixturePolicy::Pas(_)));
        let preset = SamplerConfig {
            mode: PresetKind::Ascending,
            ..SamplerConfig::default()
        }
        .policy(1_000)
        .unwrap();
        assert!(matches!(preset, MixturePolicy::Preset(_)));
    }

    #[test]
    fn resolve_prefers_explicit_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "[io]\nseed = 7\n").unwrap();
        let cfg = resolve_config(Some(&path)).unwrap();
        assert_eq!(cfg.io.seed, Some(7));
        assert!(load_config(Path::new("/definitely/absent.toml")).is_err());
    }
}
