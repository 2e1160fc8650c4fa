//! Run configuration: a TOML file with one table per concern, overridden by
//! command-line flags and validated before any audio is read.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phaseloss::{LossWeights, MetricParams, MultiResConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Phase loss only.
    Pl,
    /// Phase loss plus phase-continuity loss.
    #[default]
    PlPcl,
}

impl Preset {
    pub fn weights(self) -> LossWeights {
        match self {
            Preset::Pl => LossWeights::PL,
            Preset::PlPcl => LossWeights::PL_PCL,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Pl => "pl",
            Preset::PlPcl => "pl-pcl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    /// One JSON object per line.
    Jsonl,
}

/// Which phase the enhanced phase is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseReference {
    /// Clean phase directly.
    #[default]
    Clean,
    /// Phase differences relative to the noisy input.
    Noisy,
}

/// When the SDR-improvement column is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdriMode {
    /// Whenever noisy inputs are given.
    #[default]
    Auto,
    /// Always; a run without noisy inputs is a configuration error.
    Require,
    Off,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Directory of `*.wav` files or a single file.
    pub clean: Option<PathBuf>,
    pub enhanced: Option<PathBuf>,
    pub noisy: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub preset: Preset,
    /// Individual overrides applied on top of the preset.
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda_p: Option<f64>,
    pub lambda_pc: Option<f64>,
    pub phase_reference: PhaseReference,
}

impl LossSection {
    pub fn weights(&self) -> LossWeights {
        let base = self.preset.weights();
        LossWeights {
            lambda0: self.lambda0.unwrap_or(base.lambda0),
            lambda1: self.lambda1.unwrap_or(base.lambda1),
            lambda2: self.lambda2.unwrap_or(base.lambda2),
            lambda_p: self.lambda_p.unwrap_or(base.lambda_p),
            lambda_pc: self.lambda_pc.unwrap_or(base.lambda_pc),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftSection {
    pub resolutions: MultiResConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Report destination; standard output when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
    pub sdri: SdriMode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsSection,
    pub loss: LossSection,
    pub stft: StftSection,
    pub metrics: MetricParams,
    pub output: OutputSection,
    pub run: RunSection,
}

/// Flags that override configuration keys. `None` leaves the key alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub clean: Option<PathBuf>,
    pub enhanced: Option<PathBuf>,
    pub noisy: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub preset: Option<Preset>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Reads `path` if given, otherwise starts from defaults, then applies
    /// the flag overrides.
    pub fn resolve(path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if o.clean.is_some() {
            self.paths.clean = o.clean;
        }
        if o.enhanced.is_some() {
            self.paths.enhanced = o.enhanced;
        }
        if o.noisy.is_some() {
            self.paths.noisy = o.noisy;
        }
        if o.out.is_some() {
            self.output.path = o.out;
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(p) = o.preset {
            self.loss.preset = p;
        }
        if let Some(j) = o.jobs {
            self.run.jobs = j;
        }
    }

    fn require_paths(&self) -> Result<(&Path, &Path)> {
        match (&self.paths.clean, &self.paths.enhanced) {
            (Some(c), Some(e)) => Ok((c, e)),
            _ => bail!("both clean and enhanced inputs are required"),
        }
    }

    pub fn validate_loss(&self) -> Result<()> {
        self.require_paths()?;
        self.loss.weights().validate()?;
        if self.loss.phase_reference == PhaseReference::Noisy && self.paths.noisy.is_none() {
            bail!("loss.phase_reference = \"noisy\" needs noisy inputs");
        }
        Ok(())
    }

    pub fn validate_metrics(&self) -> Result<()> {
        self.require_paths()?;
        self.metrics.validate()?;
        if self.output.sdri == SdriMode::Require && self.paths.noisy.is_none() {
            bail!("output.sdri = \"require\" needs noisy inputs");
        }
        Ok(())
    }

    /// Whether the metrics report carries the `sdri` column.
    pub fn reports_sdri(&self) -> bool {
        self.output.sdri != SdriMode::Off && self.paths.noisy.is_some()
    }

    /// The configuration as echoed into report headers: every setting that
    /// affects report contents, with the loss preset resolved into weights.
    /// Parallelism is omitted so reports do not depend on it.
    pub fn effective(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("configuration serializes");
        let obj = v.as_object_mut().expect("configuration is a table");
        obj.remove("run");
        let loss = obj
            .get_mut("loss")
            .and_then(|l| l.as_object_mut())
            .expect("loss table");
        for key in ["lambda0", "lambda1", "lambda2", "lambda_p", "lambda_pc"] {
            loss.remove(key);
        }
        loss.insert(
            "weights".into(),
            serde_json::to_value(self.loss.weights()).expect("weights serialize"),
        );
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.loss.weights(), LossWeights::PL_PCL);
        assert_eq!(cfg.stft.resolutions, MultiResConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[loss]\nlambda9 = 1.0\n").is_err());
        assert!(RunConfig::from_toml("[nonsense]\n").is_err());
        assert!(RunConfig::from_toml("[metrics.voicing]\nthreshold = 1\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
[paths]
clean = "c"
enhanced = "e"

[loss]
preset = "pl"
lambda2 = 0.5

[[stft.resolutions]]
fft_size = 256
hop = 64
win_length = 256
window = "hann"

[metrics]
snr_frame = 160

[output]
format = "jsonl"

[run]
jobs = 3
"#,
        )
        .unwrap();
        assert_eq!(cfg.loss.weights().lambda2, 0.5);
        assert_eq!(cfg.loss.weights().lambda0, 0.02);
        assert_eq!(cfg.stft.resolutions.len(), 1);
        assert_eq!(cfg.metrics.snr_frame, 160);
        assert_eq!(cfg.metrics.snr_hop, 320);
        assert_eq!(cfg.output.format, Format::Jsonl);
        assert_eq!(cfg.run.jobs, 3);
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::from_toml("[loss]\npreset = \"pl\"\n[run]\njobs = 2\n").unwrap();
        cfg.apply(Overrides {
            preset: Some(Preset::PlPcl),
            jobs: Some(5),
            ..Overrides::default()
        });
        assert_eq!(cfg.loss.preset, Preset::PlPcl);
        assert_eq!(cfg.run.jobs, 5);
    }

    #[test]
    fn effective_config_omits_jobs_and_resolves_weights() {
        let mut a = RunConfig::default();
        a.run.jobs = 1;
        let mut b = a.clone();
        b.run.jobs = 8;
        assert_eq!(a.effective(), b.effective());
        let w = &a.effective()["loss"]["weights"];
        assert_eq!(w["lambda2"], 0.1);
        assert_eq!(w["lambda_pc"], 0.5);
        assert_eq!(a.effective()["loss"]["preset"], "pl-pcl");
    }

    #[test]
    fn requirements_checked_up_front() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate_loss().is_err());
        cfg.paths.clean = Some("c".into());
        cfg.paths.enhanced = Some("e".into());
        cfg.validate_loss().unwrap();
        cfg.loss.phase_reference = PhaseReference::Noisy;
        assert!(cfg.validate_loss().is_err());
        cfg.output.sdri = SdriMode::Require;
        assert!(cfg.validate_metrics().is_err());
        cfg.paths.noisy = Some("n".into());
        cfg.validate_metrics().unwrap();
        assert!(cfg.reports_sdri());
    }
}
