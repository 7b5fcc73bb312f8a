//! Machine-readable run report: one JSON document collecting every stage's
//! summary numbers with provenance, versioned and validated before emission.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncpp::ConvergenceRow;
use crate::stats::Moments;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Where the numbers came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub library_version: String,
}

/// One instrument's waiting-time fit row (mean, std, alpha, beta, AD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub instrument: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// Absent when the moment fit failed (degenerate or out-of-bracket CV).
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub ad: Option<f64>,
    pub reject: Option<bool>,
    pub error: Option<String>,
}

/// One instrument's trade-by-trade return moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsRow {
    pub instrument: String,
    #[serde(flatten)]
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyBlock {
    pub instrument: String,
    pub alpha_l: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub in_stable_range: bool,
    /// (dt, P0) regression points.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalityBlock {
    pub instrument: String,
    /// Per grid width: (delta_t, gamma-activity Pearson correlation).
    pub gamma_activity: Vec<(f64, Option<f64>)>,
    /// Largest |L(lag)| / stderr over the requested lags.
    pub leverage_max_abs_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBlock {
    pub instrument: String,
    pub rows: Vec<ConvergenceRow>,
}

/// The full run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub waitfit: Option<Vec<FitRow>>,
    pub moments: Option<Vec<MomentsRow>>,
    pub levy: Option<Vec<LevyBlock>>,
    pub seasonality: Option<Vec<SeasonalityBlock>>,
    pub ncpp_convergence: Option<Vec<ConvergenceBlock>>,
    /// Stages skipped per instrument, with the reason.
    pub skipped: Vec<String>,
}

impl Report {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            provenance: Provenance {
                config_hash,
                seed,
                library_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            waitfit: None,
            moments: None,
            levy: None,
            seasonality: None,
            ncpp_convergence: None,
            skipped: Vec::new(),
        }
    }

    /// Schema and finiteness checks, run before emission.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "report schema version {} != {}",
                self.schema_version, REPORT_SCHEMA_VERSION
            )));
        }
        if self.provenance.config_hash.len() != 64 {
            return Err(Error::invalid("report: config hash is not a sha256 hex digest"));
        }
        let finite = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("report: non-finite {what}")))
            }
        };
        if let Some(rows) = &self.waitfit {
            for r in rows {
                finite(r.mean, "waitfit mean")?;
                finite(r.std, "waitfit std")?;
                if let (Some(a), Some(b)) = (r.alpha, r.beta) {
                    finite(a, "alpha")?;
                    finite(b, "beta")?;
                }
            }
        }
        if let Some(rows) = &self.moments {
            for r in rows {
                finite(r.moments.mean, "moments mean")?;
                finite(r.moments.variance, "moments variance")?;
            }
        }
        if let Some(blocks) = &self.levy {
            for b in blocks {
                finite(b.alpha_l, "alpha_l")?;
                finite(b.slope, "levy slope")?;
            }
        }
        if let Some(blocks) = &self.ncpp_convergence {
            for b in blocks {
                for row in &b.rows {
                    finite(row.ks, "convergence ks")?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }
}
