//! Run configuration documents and reproducibility manifests.
//!
//! One TOML document per run with optional sections `[arrivals]`,
//! `[durations]`, `[planner]` and `[scenario]`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::{reference_dataset, split_seed, synth_dataset, ScenarioConfig};
use crate::phasefit::{empht_fit, DurationSamples, EmOptions, PhaseTypeDist, PhaseTypeDoc, PhaseTypeFit};
use crate::planner::PlannerConfig;
use crate::queue::ArrivalProfile;

pub const DEFAULT_MASTER_SEED: u64 = 2024;

/// Where stay durations come from. Exactly one source must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationsConfig {
    /// One duration per line, minutes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    /// Reference data set number (1..=8) to synthesise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<usize>,
    /// An already fitted law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<PhaseTypeDoc>,
    /// JSON written by `fit-ph`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution_file: Option<PathBuf>,
    #[serde(default = "default_phases")]
    pub phases: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ll_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_seed: Option<u64>,
}

fn default_phases() -> usize {
    4
}

impl Default for DurationsConfig {
    fn default() -> Self {
        DurationsConfig {
            samples_file: None,
            samples: None,
            dataset: None,
            distribution: None,
            distribution_file: None,
            phases: default_phases(),
            max_iters: None,
            ll_tol: None,
            fit_seed: None,
        }
    }
}

impl DurationsConfig {
    pub fn em_options(&self) -> EmOptions {
        let d = EmOptions::default();
        EmOptions {
            phases: self.phases,
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            ll_tol: self.ll_tol.unwrap_or(d.ll_tol),
            seed: self.fit_seed.unwrap_or(d.seed),
        }
    }
}

/// Fitted output of `fit-ph`: the law's keys plus fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    #[serde(flatten)]
    pub distribution: PhaseTypeDoc,
    pub ph_mean: f64,
    pub log_likelihood_trace: Vec<f64>,
    pub status: crate::phasefit::FitStatus,
    pub warnings: Vec<crate::phasefit::FitWarning>,
}

impl From<&PhaseTypeFit> for FitDocument {
    fn from(fit: &PhaseTypeFit) -> Self {
        FitDocument {
            distribution: fit.distribution.to_doc(),
            ph_mean: fit.distribution.mean(),
            log_likelihood_trace: fit.log_likelihood_trace.clone(),
            status: fit.status,
            warnings: fit.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<ArrivalProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<DurationsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    /// Directory that relative paths are resolved against (not serialized).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error("<document>", e.to_string().trim()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(path, e.into_inner().to_string().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(path.display().to_string(), format!("cannot read config: {e}")))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.planner {
            p.validate().map_err(|e| config_error("planner", e.to_string()))?;
        }
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        if let Some(d) = &self.durations {
            let sources = [
                d.samples_file.is_some(),
                d.samples.is_some(),
                d.dataset.is_some(),
                d.distribution.is_some(),
                d.distribution_file.is_some(),
            ];
            let n = sources.iter().filter(|&&b| b).count();
            if n != 1 {
                return Err(config_error(
                    "durations",
                    format!(
                        "give exactly one of samples_file, samples, dataset, distribution, distribution_file (found {n})"
                    ),
                ));
            }
            if d.phases == 0 {
                return Err(config_error("durations.phases", "must be at least 1"));
            }
            if let Some(k) = d.dataset {
                reference_dataset(k).map_err(|e| config_error("durations.dataset", e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Seed precedence: explicit override, then the document, then the default.
    pub fn master_seed(&self, override_seed: Option<u64>) -> u64 {
        override_seed.or(self.seed).unwrap_or(DEFAULT_MASTER_SEED)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Stay-time law and, when a fit was run, its diagnostics. Also returns
    /// the arrival profile of a synthesised reference data set.
    pub fn service(&self, seed: u64) -> Result<(PhaseTypeDist, Option<PhaseTypeFit>, Option<ArrivalProfile>)> {
        let d = self.durations.as_ref().ok_or_else(|| config_error("durations", "section is required"))?;
        let fit = |samples: &DurationSamples| -> Result<(PhaseTypeDist, Option<PhaseTypeFit>, Option<ArrivalProfile>)> {
            let f = empht_fit(samples, &d.em_options())?;
            Ok((f.distribution.clone(), Some(f), None))
        };
        if let Some(doc) = &d.distribution {
            let dist = PhaseTypeDist::try_from(doc.clone()).map_err(|e| config_error("durations.distribution", e.to_string()))?;
            return Ok((dist, None, None));
        }
        if let Some(path) = &d.distribution_file {
            let text = std::fs::read_to_string(self.resolve(path))?;
            let doc: FitDocument = serde_json::from_str(&text)?;
            return Ok((PhaseTypeDist::try_from(doc.distribution)?, None, None));
        }
        if let Some(path) = &d.samples_file {
            return fit(&DurationSamples::read(self.resolve(path))?);
        }
        if let Some(values) = &d.samples {
            let samples = DurationSamples::new(values.clone()).map_err(|e| config_error("durations.samples", e.to_string()))?;
            return fit(&samples);
        }
        if let Some(k) = d.dataset {
            let attrs = reference_dataset(k)?;
            let (samples, profile) = synth_dataset(&attrs, split_seed(seed, k as u64 - 1))?;
            let (dist, f, _) = fit(&samples)?;
            return Ok((dist, f, Some(profile)));
        }
        Err(config_error("durations", "no duration source"))
    }

    /// `[arrivals]`, falling back to the profile of a synthesised data set.
    pub fn arrivals(&self, from_dataset: Option<ArrivalProfile>) -> Result<ArrivalProfile> {
        self.arrivals
            .clone()
            .or(from_dataset)
            .ok_or_else(|| config_error("arrivals", "section is required"))
    }

    /// SHA-256 over the canonical JSON form (keys sorted).
    pub fn digest(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let canonical = serde_json::to_string(&value)?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: Option<String>,
    pub master_seed: u64,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Solver failures above the 5% threshold.
    #[serde(default)]
    pub failure_warning: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config_digest: None,
            master_seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            warnings: Vec::new(),
            failure_warning: false,
            config: None,
        }
    }

    pub fn with_config(mut self, cfg: &RunConfig) -> Result<Self> {
        self.config_digest = Some(cfg.digest()?);
        self.config = Some(serde_json::to_value(cfg)?);
        Ok(self)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
