//! CSV ingestion for trade records.
//!
//! Accepts an optional header row, columns addressed by name or index, and
//! epochs given either as fractional seconds since the session open or as
//! HH:MM:SS(.fff) wall-clock times anchored to the session open.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tickdata::{RawTick, SessionBounds, TickSeries};

/// Column addressed by zero-based index or by header name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnSel {
    Index(usize),
    Name(String),
}

impl ColumnSel {
    fn resolve(&self, header: Option<&csv::StringRecord>) -> Result<usize> {
        match self {
            ColumnSel::Index(i) => Ok(*i),
            ColumnSel::Name(name) => {
                let header = header.ok_or_else(|| {
                    Error::Config(format!("column '{name}' addressed by name but no header row"))
                })?;
                header
                    .iter()
                    .position(|h| h.trim().eq_ignore_ascii_case(name))
                    .ok_or_else(|| Error::Config(format!("column '{name}' not found in header")))
            }
        }
    }
}

/// How tick timestamps are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpochFormat {
    /// Fractional seconds since the session open.
    Seconds,
    /// HH:MM:SS or HH:MM:SS.fff local wall-clock time.
    Clock,
}

/// Input layout and session geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormatConfig {
    pub epoch_col: ColumnSel,
    pub price_col: ColumnSel,
    pub volume_col: Option<ColumnSel>,
    /// `None` auto-detects: a first row whose price cell does not parse is
    /// taken as a header.
    pub has_header: Option<bool>,
    pub epoch_format: EpochFormat,
    /// Session open as seconds-of-day, or "HH:MM:SS" in config files
    /// (only used to anchor `Clock` epochs).
    #[serde(deserialize_with = "de_time_of_day")]
    pub session_open: f64,
    /// Session close as seconds-of-day or "HH:MM:SS".
    #[serde(deserialize_with = "de_time_of_day")]
    pub session_close: f64,
    /// Reject the whole file on out-of-session timestamps instead of
    /// skipping the offending rows.
    pub strict_bounds: bool,
}

/// Accepts either a number of seconds-of-day or an "HH:MM:SS(.fff)" string.
fn de_time_of_day<'de, D>(deserializer: D) -> std::result::Result<f64, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error as _;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Seconds(f64),
        Clock(String),
    }
    match Raw::deserialize(deserializer)? {
        Raw::Seconds(s) => Ok(s),
        Raw::Clock(text) => parse_clock(&text).map_err(D::Error::custom),
    }
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig {
            epoch_col: ColumnSel::Index(0),
            price_col: ColumnSel::Index(1),
            volume_col: None,
            has_header: None,
            epoch_format: EpochFormat::Seconds,
            // 09:01 and 17:31
            session_open: 9.0 * 3600.0 + 60.0,
            session_close: 17.0 * 3600.0 + 31.0 * 60.0,
            strict_bounds: false,
        }
    }
}

impl FormatConfig {
    pub fn session_len(&self) -> f64 {
        self.session_close - self.session_open
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.session_close > self.session_open) {
            return Err(Error::Config(format!(
                "session_close ({}) must exceed session_open ({})",
                self.session_close, self.session_open
            )));
        }
        Ok(())
    }
}

/// Parsed series plus a tally of rejected rows.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub series: TickSeries,
    pub rejected: usize,
    /// First few rejection reasons, for diagnostics.
    pub reasons: Vec<String>,
}

const MAX_REASONS: usize = 20;

/// Parses trade records from a byte stream.
///
/// Rows are sorted by epoch on output; malformed rows are counted and, in
/// strict mode, out-of-session timestamps fail the parse.
pub fn parse_ticks<R: Read>(
    reader: R,
    cfg: &FormatConfig,
    instrument: &str,
    day: &str,
) -> Result<ParseOutcome> {
    cfg.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => Some(r.map_err(|e| Error::Parse(format!("unreadable stream: {e}")))?),
        None => None,
    };

    // header detection: explicit flag wins, otherwise probe the price cell
    let price_probe = |rec: &csv::StringRecord| -> bool {
        match &cfg.price_col {
            ColumnSel::Index(i) => rec
                .get(*i)
                .is_some_and(|c| c.parse::<f64>().is_ok()),
            ColumnSel::Name(_) => false, // named columns imply a header
        }
    };
    let has_header = match (cfg.has_header, &first) {
        (Some(flag), _) => flag,
        (None, Some(rec)) => !price_probe(rec),
        (None, None) => false,
    };
    let header = if has_header { first.clone() } else { None };

    let epoch_idx = cfg.epoch_col.resolve(header.as_ref())?;
    let price_idx = cfg.price_col.resolve(header.as_ref())?;
    let volume_idx = match &cfg.volume_col {
        Some(sel) => Some(sel.resolve(header.as_ref())?),
        None => None,
    };

    let session_len = cfg.session_len();
    let bounds = SessionBounds::new(0.0, session_len)?;
    let mut ticks: Vec<RawTick> = Vec::new();
    let mut rejected = 0usize;
    let mut reasons: Vec<String> = Vec::new();
    let reject = |row: usize, why: String, reasons: &mut Vec<String>, rejected: &mut usize| {
        *rejected += 1;
        if reasons.len() < MAX_REASONS {
            reasons.push(format!("row {row}: {why}"));
        }
    };

    let data_rows: Box<dyn Iterator<Item = csv::Result<csv::StringRecord>>> = if has_header {
        Box::new(records)
    } else {
        Box::new(first.map(Ok).into_iter().chain(records))
    };

    for (i, rec) in data_rows.enumerate() {
        let row = i + 1 + usize::from(has_header);
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                reject(row, format!("malformed record: {e}"), &mut reasons, &mut rejected);
                continue;
            }
        };
        let epoch_cell = rec.get(epoch_idx);
        let price_cell = rec.get(price_idx);
        let (epoch_cell, price_cell) = match (epoch_cell, price_cell) {
            (Some(e), Some(p)) => (e, p),
            _ => {
                reject(row, "missing epoch or price column".into(), &mut reasons, &mut rejected);
                continue;
            }
        };
        let epoch = match parse_epoch(epoch_cell, cfg) {
            Ok(e) => e,
            Err(why) => {
                reject(row, why, &mut reasons, &mut rejected);
                continue;
            }
        };
        let price: f64 = match price_cell.parse() {
            Ok(p) => p,
            Err(_) => {
                reject(row, format!("non-numeric price '{price_cell}'"), &mut reasons, &mut rejected);
                continue;
            }
        };
        if !(price > 0.0 && price.is_finite()) {
            reject(row, format!("non-positive price {price}"), &mut reasons, &mut rejected);
            continue;
        }
        if !bounds.contains(epoch) {
            if cfg.strict_bounds {
                return Err(Error::Parse(format!(
                    "row {row}: epoch {epoch} outside session [0, {session_len}] in strict mode"
                )));
            }
            reject(row, format!("epoch {epoch} outside session"), &mut reasons, &mut rejected);
            continue;
        }
        let volume = match volume_idx {
            Some(vi) => match rec.get(vi) {
                Some("") | None => None,
                Some(cell) => match cell.parse::<u64>() {
                    Ok(v) => Some(v),
                    Err(_) => {
                        reject(row, format!("non-integer volume '{cell}'"), &mut reasons, &mut rejected);
                        continue;
                    }
                },
            },
            None => None,
        };
        ticks.push(RawTick { epoch, price, volume });
    }

    if ticks.is_empty() {
        return Err(Error::Parse(format!(
            "no valid rows ({rejected} rejected)"
        )));
    }
    ticks.sort_by(|a, b| a.epoch.partial_cmp(&b.epoch).expect("finite epochs"));

    Ok(ParseOutcome {
        series: TickSeries {
            instrument: instrument.to_string(),
            day: day.to_string(),
            bounds,
            ticks,
        },
        rejected,
        reasons,
    })
}

fn parse_epoch(cell: &str, cfg: &FormatConfig) -> std::result::Result<f64, String> {
    match cfg.epoch_format {
        EpochFormat::Seconds => cell
            .parse::<f64>()
            .map_err(|_| format!("non-numeric epoch '{cell}'"))
            .and_then(|e| {
                if e.is_finite() && e >= 0.0 {
                    Ok(e)
                } else {
                    Err(format!("negative or non-finite epoch {e}"))
                }
            }),
        EpochFormat::Clock => {
            let secs = parse_clock(cell)?;
            Ok(secs - cfg.session_open)
        }
    }
}

/// Parses HH:MM:SS or HH:MM:SS.fff into seconds-of-day.
fn parse_clock(cell: &str) -> std::result::Result<f64, String> {
    let parts: Vec<&str> = cell.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("clock time '{cell}' not HH:MM:SS(.fff)"));
    }
    let h: u32 = parts[0].parse().map_err(|_| format!("bad hour in '{cell}'"))?;
    let m: u32 = parts[1].parse().map_err(|_| format!("bad minute in '{cell}'"))?;
    let s: f64 = parts[2].parse().map_err(|_| format!("bad second in '{cell}'"))?;
    if h > 23 || m > 59 || !(0.0..60.0).contains(&s) {
        return Err(format!("clock time '{cell}' out of range"));
    }
    Ok(h as f64 * 3600.0 + m as f64 * 60.0 + s)
}

/// Re-emits ticks as `epoch,price,volume` CSV (volume blank when absent).
pub fn write_ticks_csv<W: Write>(series: &TickSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epoch", "price", "volume"])
        .map_err(|e| Error::Parse(e.to_string()))?;
    for t in &series.ticks {
        let vol = t.volume.map_or(String::new(), |v| v.to_string());
        w.write_record([t.epoch.to_string(), t.price.to_string(), vol])
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
