//! Run configuration: one TOML file (or the matching CLI flags) drives the
//! whole pipeline. Every stochastic stage reads its seed from here; nothing
//! is seeded from the wall clock.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tickdata::{CleanConfig, FormatConfig};

/// Which pipeline stages to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Stages {
    pub waitfit: bool,
    pub moments: bool,
    pub scaling: bool,
    pub seasonality: bool,
    pub ncpp: bool,
    pub converge: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            waitfit: true,
            moments: true,
            scaling: true,
            seasonality: true,
            ncpp: true,
            converge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaitfitConfig {
    /// Points in the survival-curve output grid.
    pub grid_points: usize,
    /// Reference shape for the scaling collapse.
    pub beta_star: f64,
}

impl Default for WaitfitConfig {
    fn default() -> Self {
        WaitfitConfig {
            grid_points: 200,
            beta_star: 0.78,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    /// Sampling intervals in seconds.
    pub dt: Vec<f64>,
    pub bin_width: f64,
    /// Central ECDF fraction for the P0 estimate.
    pub p0_fraction: f64,
    pub p0_min_points: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            dt: vec![3.0, 5.0, 10.0, 30.0, 300.0],
            bin_width: 1e-5,
            p0_fraction: 0.02,
            p0_min_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeasonalityConfig {
    /// Day-grid widths in seconds.
    pub delta_t: Vec<f64>,
    /// Grid spacing for leverage sampling.
    pub leverage_grid: f64,
    /// Leverage lags in seconds (multiples of `leverage_grid`).
    pub lags: Vec<f64>,
}

impl Default for SeasonalityConfig {
    fn default() -> Self {
        SeasonalityConfig {
            delta_t: vec![300.0],
            leverage_grid: 3.0,
            lags: vec![3.0, 6.0, 15.0, 30.0, 60.0, 150.0, 300.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NcppConfig {
    /// Interval widths to fit and simulate, in seconds.
    pub w: Vec<f64>,
    /// Days to simulate per width; 0 matches the input day count.
    pub sim_days: usize,
}

impl Default for NcppConfig {
    fn default() -> Self {
        NcppConfig {
            w: vec![3.0, 5.0, 10.0, 30.0, 300.0],
            sim_days: 0,
        }
    }
}

/// Complete pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Input tick CSV files; each file is one instrument-session named
    /// `INSTRUMENT_DAY.csv` (a bare stem is a single-session instrument).
    pub inputs: Vec<PathBuf>,
    /// Optional instrument whitelist.
    pub instruments: Vec<String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub format: FormatConfig,
    pub clean: CleanFileConfig,
    pub stages: Stages,
    pub waitfit: WaitfitConfig,
    pub scaling: ScalingConfig,
    pub seasonality: SeasonalityConfig,
    pub ncpp: NcppConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            instruments: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: 42,
            format: FormatConfig::default(),
            clean: CleanFileConfig::default(),
            stages: Stages::default(),
            waitfit: WaitfitConfig::default(),
            scaling: ScalingConfig::default(),
            seasonality: SeasonalityConfig::default(),
            ncpp: NcppConfig::default(),
        }
    }
}

/// Serializable mirror of [`CleanConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanFileConfig {
    pub max_wait: f64,
    pub volume_weighted: bool,
    pub jump_threshold: Option<f64>,
}

impl Default for CleanFileConfig {
    fn default() -> Self {
        let c = CleanConfig::default();
        CleanFileConfig {
            max_wait: c.max_wait,
            volume_weighted: c.volume_weighted,
            jump_threshold: c.jump_threshold,
        }
    }
}

impl From<&CleanFileConfig> for CleanConfig {
    fn from(c: &CleanFileConfig) -> Self {
        CleanConfig {
            max_wait: c.max_wait,
            volume_weighted: c.volume_weighted,
            jump_threshold: c.jump_threshold,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.format.validate()?;
        if !(self.clean.max_wait > 0.0) {
            return Err(Error::Config("clean.max_wait must be positive".into()));
        }
        if self.stages.scaling && self.scaling.dt.is_empty() {
            return Err(Error::Config("scaling stage requested with empty dt list".into()));
        }
        if self.stages.seasonality && self.seasonality.delta_t.is_empty() {
            return Err(Error::Config(
                "seasonality stage requested with empty delta_t list".into(),
            ));
        }
        if self.stages.seasonality && self.seasonality.lags.is_empty() {
            return Err(Error::Config(
                "seasonality stage requested with empty lag list".into(),
            ));
        }
        if (self.stages.ncpp || self.stages.converge) && self.ncpp.w.is_empty() {
            return Err(Error::Config("ncpp stage requested with empty w list".into()));
        }
        Ok(())
    }

    /// Stable hash of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// Instrument and day labels derived from a file stem
    /// (`A2A_2011-02-03.csv` -> ("A2A", "2011-02-03")).
    pub fn labels_for(path: &Path) -> (String, String) {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "unknown".into());
        match stem.split_once('_') {
            Some((inst, day)) => (inst.to_string(), day.to_string()),
            None => (stem.clone(), "session".into()),
        }
    }
}
