//! Raw trade records, the misprint-cleaning rules, and the derived
//! waiting-time and return series.
//!
//! Epochs are seconds since the session open. Cleaning collapses multiple
//! prices at one epoch into a single averaged trade and drops any tick
//! whose waiting time from the last surviving tick exceeds the cap, so the
//! cleaned stream is strictly increasing in epoch and every intertrade
//! duration respects the cap.

mod ingest;

pub use ingest::{
    parse_ticks, write_ticks_csv, ColumnSel, EpochFormat, FormatConfig, ParseOutcome,
};

use crate::error::{Error, Result};

/// A single executed trade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawTick {
    /// Seconds since the session open.
    pub epoch: f64,
    pub price: f64,
    /// Share count; absent for index data.
    pub volume: Option<u64>,
}

/// Session window in the same coordinate system as tick epochs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SessionBounds {
    pub open: f64,
    pub close: f64,
}

impl SessionBounds {
    pub fn new(open: f64, close: f64) -> Result<Self> {
        if !(open.is_finite() && close.is_finite() && close > open) {
            return Err(Error::invalid(format!(
                "session bounds must satisfy open < close, got ({open}, {close})"
            )));
        }
        Ok(SessionBounds { open, close })
    }

    pub fn len(&self) -> f64 {
        self.close - self.open
    }

    pub fn contains(&self, epoch: f64) -> bool {
        epoch >= self.open && epoch <= self.close
    }
}

/// One instrument-session of trades, ordered by epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub instrument: String,
    pub day: String,
    pub bounds: SessionBounds,
    pub ticks: Vec<RawTick>,
}

impl TickSeries {
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// Checks ordering (non-decreasing), positivity and bounds.
    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for t in &self.ticks {
            if !(t.price > 0.0 && t.price.is_finite()) {
                return Err(Error::invalid(format!("non-positive price {}", t.price)));
            }
            if !t.epoch.is_finite() || t.epoch < prev {
                return Err(Error::invalid(format!("epochs out of order at {}", t.epoch)));
            }
            if !self.bounds.contains(t.epoch) {
                return Err(Error::invalid(format!(
                    "epoch {} outside session bounds ({}, {})",
                    t.epoch, self.bounds.open, self.bounds.close
                )));
            }
            prev = t.epoch;
        }
        Ok(())
    }

    fn source_label(&self) -> String {
        format!("{}/{}", self.instrument, self.day)
    }
}

/// Intertrade durations for one instrument-session.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTimeSample {
    /// tau_i = t_{i+1} - t_i, strictly positive.
    pub durations: Vec<f64>,
    /// Instrument/day provenance.
    pub source: String,
    /// Cap that durations respect, when the cleaning cap was applied.
    pub capped_at: Option<f64>,
}

/// Whether returns are trade-by-trade or sampled on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReturnMode {
    TradeByTrade,
    Sampled { dt: f64 },
}

/// Log-returns with the epoch each return materializes at.
///
/// Trade-by-trade: one return per adjacent tick pair, stamped with the
/// later trade's epoch. Sampled: one return per grid interval anchored at
/// the session open, stamped with the interval's right endpoint, with
/// prices taken by previous-tick interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSample {
    pub returns: Vec<f64>,
    pub epochs: Vec<f64>,
    pub mode: ReturnMode,
    pub source: String,
}

impl ReturnSample {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn dt(&self) -> Option<f64> {
        match self.mode {
            ReturnMode::Sampled { dt } => Some(dt),
            ReturnMode::TradeByTrade => None,
        }
    }
}

/// Cleaning rules applied by [`clean_ticks_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    /// Drop a tick when its waiting time from the last kept tick exceeds
    /// this many seconds.
    pub max_wait: f64,
    /// Collapse same-epoch prices by volume-weighted mean instead of the
    /// unweighted mean.
    pub volume_weighted: bool,
    /// Optional misprint filter: drop a tick whose |log return| from the
    /// last kept tick exceeds the threshold.
    pub jump_threshold: Option<f64>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            max_wait: 200.0,
            volume_weighted: false,
            jump_threshold: None,
        }
    }
}

/// Applies the duration cap with the default collapse rules.
pub fn clean_ticks(series: &TickSeries, max_wait: f64) -> Result<TickSeries> {
    clean_ticks_with(
        series,
        &CleanConfig {
            max_wait,
            ..CleanConfig::default()
        },
    )
}

/// Collapses same-epoch trades, then drops ticks violating the waiting-time
/// cap (and the optional jump filter) against the last surviving tick.
///
/// The output is strictly increasing in epoch and idempotent under
/// re-cleaning.
pub fn clean_ticks_with(series: &TickSeries, cfg: &CleanConfig) -> Result<TickSeries> {
    if series.is_empty() {
        return Err(Error::EmptyInput("clean_ticks: no ticks"));
    }
    if !(cfg.max_wait > 0.0) {
        return Err(Error::invalid(format!(
            "max_wait must be positive, got {}",
            cfg.max_wait
        )));
    }
    if let Some(j) = cfg.jump_threshold {
        if !(j > 0.0) {
            return Err(Error::invalid("jump_threshold must be positive"));
        }
    }
    series.validate()?;

    // collapse ticks sharing one epoch
    let mut collapsed: Vec<RawTick> = Vec::with_capacity(series.len());
    let mut i = 0;
    while i < series.ticks.len() {
        let epoch = series.ticks[i].epoch;
        let mut j = i;
        while j + 1 < series.ticks.len() && series.ticks[j + 1].epoch == epoch {
            j += 1;
        }
        let group = &series.ticks[i..=j];
        collapsed.push(collapse_group(group, cfg.volume_weighted));
        i = j + 1;
    }

    // keep a tick only if its gap (and optional jump) from the last kept
    // tick passes; the first tick is always kept
    let mut kept: Vec<RawTick> = Vec::with_capacity(collapsed.len());
    for tick in collapsed {
        match kept.last() {
            None => kept.push(tick),
            Some(last) => {
                let gap_ok = tick.epoch - last.epoch <= cfg.max_wait;
                let jump_ok = match cfg.jump_threshold {
                    Some(thr) => (tick.price.ln() - last.price.ln()).abs() <= thr,
                    None => true,
                };
                if gap_ok && jump_ok {
                    kept.push(tick);
                }
            }
        }
    }

    Ok(TickSeries {
        instrument: series.instrument.clone(),
        day: series.day.clone(),
        bounds: series.bounds,
        ticks: kept,
    })
}

fn collapse_group(group: &[RawTick], volume_weighted: bool) -> RawTick {
    if group.len() == 1 {
        return group[0];
    }
    let total_volume: Option<u64> = group.iter().try_fold(0u64, |acc, t| t.volume.map(|v| acc + v));
    let weighted = volume_weighted && total_volume.is_some_and(|v| v > 0);
    let price = if weighted {
        let tv = total_volume.unwrap() as f64;
        group
            .iter()
            .map(|t| t.price * t.volume.unwrap() as f64)
            .sum::<f64>()
            / tv
    } else {
        group.iter().map(|t| t.price).sum::<f64>() / group.len() as f64
    };
    RawTick {
        epoch: group[0].epoch,
        price,
        volume: total_volume,
    }
}

/// Intertrade durations of a cleaned series.
pub fn waiting_times(series: &TickSeries) -> Result<WaitingTimeSample> {
    waiting_times_capped(series, None)
}

pub(crate) fn waiting_times_capped(
    series: &TickSeries,
    capped_at: Option<f64>,
) -> Result<WaitingTimeSample> {
    if series.len() < 2 {
        return Err(Error::NotEnoughData(format!(
            "waiting times need at least 2 ticks, got {}",
            series.len()
        )));
    }
    let mut durations = Vec::with_capacity(series.len() - 1);
    for w in series.ticks.windows(2) {
        let tau = w[1].epoch - w[0].epoch;
        if tau <= 0.0 {
            return Err(Error::invalid(format!(
                "non-positive waiting time {tau} (series not cleaned?)"
            )));
        }
        durations.push(tau);
    }
    Ok(WaitingTimeSample {
        durations,
        source: series.source_label(),
        capped_at,
    })
}

/// Pools per-day durations; never spans a session boundary.
pub fn pool_waiting_times(days: &[TickSeries], capped_at: Option<f64>) -> Result<WaitingTimeSample> {
    if days.is_empty() {
        return Err(Error::EmptyInput("pool_waiting_times: no sessions"));
    }
    let mut durations = Vec::new();
    for day in days {
        durations.extend(waiting_times_capped(day, capped_at)?.durations);
    }
    Ok(WaitingTimeSample {
        durations,
        source: days[0].instrument.clone(),
        capped_at,
    })
}

/// Trade-by-trade log-returns r_i = log p(t_{i+1}) / p(t_i).
pub fn log_returns(series: &TickSeries) -> Result<ReturnSample> {
    if series.len() < 2 {
        return Err(Error::NotEnoughData(format!(
            "log returns need at least 2 ticks, got {}",
            series.len()
        )));
    }
    let mut returns = Vec::with_capacity(series.len() - 1);
    let mut epochs = Vec::with_capacity(series.len() - 1);
    for w in series.ticks.windows(2) {
        returns.push(w[1].price.ln() - w[0].price.ln());
        epochs.push(w[1].epoch);
    }
    Ok(ReturnSample {
        returns,
        epochs,
        mode: ReturnMode::TradeByTrade,
        source: series.source_label(),
    })
}

/// Returns sampled on equally spaced, non-overlapping intervals of width
/// `dt`, anchored at the session open, using previous-tick interpolation.
///
/// Grid intervals that start before the first trade are skipped (the
/// previous-tick price is undefined there).
pub fn sampled_returns(series: &TickSeries, dt: f64) -> Result<ReturnSample> {
    if series.is_empty() {
        return Err(Error::EmptyInput("sampled_returns: no ticks"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let len = series.bounds.len();
    if 2.0 * dt > len {
        return Err(Error::invalid(format!(
            "dt = {dt} too large for session of length {len} (need at least 2 intervals)"
        )));
    }
    let n_intervals = (len / dt).floor() as usize;
    let mut returns = Vec::with_capacity(n_intervals);
    let mut epochs = Vec::with_capacity(n_intervals);
    let ticks = &series.ticks;
    let mut cursor = 0usize; // index of last tick with epoch <= grid point
    let mut prev_log: Option<f64> = None;
    for k in 0..=n_intervals {
        let g = series.bounds.open + k as f64 * dt;
        while cursor + 1 < ticks.len() && ticks[cursor + 1].epoch <= g {
            cursor += 1;
        }
        let cur_log = if ticks[cursor].epoch <= g {
            Some(ticks[cursor].price.ln())
        } else {
            None // grid point precedes the first trade
        };
        if k > 0 {
            if let (Some(a), Some(b)) = (prev_log, cur_log) {
                returns.push(b - a);
                epochs.push(g);
            }
        }
        prev_log = cur_log;
    }
    Ok(ReturnSample {
        returns,
        epochs,
        mode: ReturnMode::Sampled { dt },
        source: series.source_label(),
    })
}

/// Concatenates same-mode return samples from several sessions.
pub fn pool_returns(days: &[ReturnSample]) -> Result<ReturnSample> {
    if days.is_empty() {
        return Err(Error::EmptyInput("pool_returns: no samples"));
    }
    let mode = days[0].mode;
    for d in days {
        if d.mode != mode {
            return Err(Error::invalid("pool_returns: mixed return modes"));
        }
    }
    let mut returns = Vec::new();
    let mut epochs = Vec::new();
    for d in days {
        returns.extend_from_slice(&d.returns);
        epochs.extend_from_slice(&d.epochs);
    }
    Ok(ReturnSample {
        returns,
        epochs,
        mode,
        source: days[0].source.clone(),
    })
}
