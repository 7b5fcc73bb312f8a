//! Batch orchestration: ingest, clean, analyze, fit, simulate, compare —
//! emitting plot-ready CSV artifacts and a JSON report.
//!
//! Stages are isolated: each one derives its own seed from the config seed
//! and a stage tag, failures are recorded per instrument without aborting
//! independent work, and reruns with an identical config reproduce
//! byte-identical numeric artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ncpp::{self, SeasonalProfile};
use crate::report::{
    ConvergenceBlock, FitRow, LevyBlock, MomentsRow, Report, SeasonalityBlock,
};
use crate::rng::derive_seed;
use crate::scaling::{self, WindowSpec};
use crate::seasonality;
use crate::stats;
use crate::tickdata::{
    self, clean_ticks_with, parse_ticks, sampled_returns, CleanConfig, TickSeries,
};
use crate::waitstats::{self, GridSpec};

/// Overall outcome of a batch run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Partial,
    Fatal,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Partial => 1,
            ExitStatus::Fatal => 2,
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub report: Report,
    pub report_path: PathBuf,
    pub failures: Vec<String>,
    pub status: ExitStatus,
}

/// Runs every requested stage over the configured inputs.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    if config.inputs.is_empty() {
        return Err(Error::Config("no input files configured".into()));
    }
    fs::create_dir_all(&config.output_dir)?;

    // group sessions by instrument, in sorted order for stable output
    let mut by_instrument: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for path in &config.inputs {
        let (inst, _) = RunConfig::labels_for(path);
        if !config.instruments.is_empty() && !config.instruments.contains(&inst) {
            continue;
        }
        by_instrument.entry(inst).or_default().push(path.clone());
    }
    if by_instrument.is_empty() {
        return Err(Error::Config("no inputs left after instrument filter".into()));
    }

    let mut report = Report::new(config.hash(), config.seed);
    let mut failures: Vec<String> = Vec::new();
    let mut waitfit_rows = Vec::new();
    let mut moments_rows = Vec::new();
    let mut levy_blocks = Vec::new();
    let mut seasonality_blocks = Vec::new();
    let mut convergence_blocks = Vec::new();

    let clean_cfg: CleanConfig = (&config.clean).into();

    for (instrument, files) in &by_instrument {
        let inst_dir = config.output_dir.join(instrument);
        fs::create_dir_all(&inst_dir)?;

        // ingest + clean every session of this instrument
        let mut days: Vec<TickSeries> = Vec::new();
        let mut ingest_failed = false;
        let mut sorted_files = files.clone();
        sorted_files.sort();
        for path in &sorted_files {
            let (inst, day) = RunConfig::labels_for(path);
            let outcome = fs::File::open(path)
                .map_err(Error::from)
                .and_then(|f| parse_ticks(f, &config.format, &inst, &day))
                .and_then(|o| clean_ticks_with(&o.series, &clean_cfg));
            match outcome {
                Ok(series) => days.push(series),
                Err(e) => {
                    failures.push(format!("{instrument}/{day}: ingest: {e}"));
                    ingest_failed = true;
                }
            }
        }
        if days.is_empty() {
            report
                .skipped
                .push(format!("{instrument}: all stages (no usable sessions)"));
            continue;
        }
        if ingest_failed {
            report
                .skipped
                .push(format!("{instrument}: some sessions dropped at ingest"));
        }

        if config.stages.waitfit {
            match stage_waitfit(instrument, &days, config, &inst_dir) {
                Ok(row) => waitfit_rows.push(row),
                Err(e) => {
                    failures.push(format!("{instrument}: waitfit: {e}"));
                    report.skipped.push(format!("{instrument}: waitfit ({e})"));
                }
            }
        }
        if config.stages.moments {
            match stage_moments(instrument, &days) {
                Ok(row) => moments_rows.push(row),
                Err(e) => {
                    failures.push(format!("{instrument}: moments: {e}"));
                    report.skipped.push(format!("{instrument}: moments ({e})"));
                }
            }
        }
        if config.stages.scaling {
            match stage_scaling(instrument, &days, config, &inst_dir) {
                Ok(block) => levy_blocks.push(block),
                Err(e) => {
                    failures.push(format!("{instrument}: scaling: {e}"));
                    report.skipped.push(format!("{instrument}: scaling ({e})"));
                }
            }
        }
        if config.stages.seasonality {
            match stage_seasonality(instrument, &days, config, &inst_dir) {
                Ok(block) => seasonality_blocks.push(block),
                Err(e) => {
                    failures.push(format!("{instrument}: seasonality: {e}"));
                    report.skipped.push(format!("{instrument}: seasonality ({e})"));
                }
            }
        }
        let mut fits: Vec<SeasonalProfile> = Vec::new();
        if config.stages.ncpp {
            match stage_ncpp_fit(instrument, &days, config, &inst_dir) {
                Ok(f) => fits = f,
                Err(e) => {
                    failures.push(format!("{instrument}: ncpp-fit: {e}"));
                    report.skipped.push(format!("{instrument}: ncpp-fit ({e})"));
                }
            }
        }
        if config.stages.converge {
            if fits.is_empty() {
                report.skipped.push(format!(
                    "{instrument}: converge (dependency ncpp-fit unavailable)"
                ));
            } else {
                match stage_converge(instrument, &days, &fits, config, &inst_dir) {
                    Ok(block) => convergence_blocks.push(block),
                    Err(e) => {
                        failures.push(format!("{instrument}: converge: {e}"));
                        report.skipped.push(format!("{instrument}: converge ({e})"));
                    }
                }
            }
        }
    }

    // combined tables across instruments at the output root
    if config.stages.waitfit && !waitfit_rows.is_empty() {
        write_csv(
            &config.output_dir.join("waitfit_table.csv"),
            &["instrument", "n", "mean", "std", "alpha", "beta", "AD", "reject"],
            waitfit_rows.iter().map(|r| {
                vec![
                    r.instrument.clone(),
                    r.n.to_string(),
                    fmt(r.mean),
                    fmt(r.std),
                    r.alpha.map(fmt).unwrap_or_default(),
                    r.beta.map(fmt).unwrap_or_default(),
                    r.ad.map(fmt).unwrap_or_default(),
                    r.reject.map(|x| x.to_string()).unwrap_or_default(),
                ]
            }),
        )?;
    }
    if config.stages.moments && !moments_rows.is_empty() {
        write_csv(
            &config.output_dir.join("moments_table.csv"),
            &["instrument", "n", "mean", "variance", "skewness", "kurtosis"],
            moments_rows.iter().map(|r| {
                vec![
                    r.instrument.clone(),
                    r.moments.n.to_string(),
                    fmt(r.moments.mean),
                    fmt(r.moments.variance),
                    fmt(r.moments.skewness),
                    fmt(r.moments.kurtosis),
                ]
            }),
        )?;
    }

    if config.stages.waitfit {
        report.waitfit = Some(waitfit_rows);
    }
    if config.stages.moments {
        report.moments = Some(moments_rows);
    }
    if config.stages.scaling {
        report.levy = Some(levy_blocks);
    }
    if config.stages.seasonality {
        report.seasonality = Some(seasonality_blocks);
    }
    if config.stages.converge {
        report.ncpp_convergence = Some(convergence_blocks);
    }

    let report_path = config.output_dir.join("report.json");
    let json = report.to_json_pretty()?;
    fs::write(&report_path, json)?;

    let status = if failures.is_empty() {
        ExitStatus::Success
    } else {
        ExitStatus::Partial
    };
    Ok(PipelineOutcome {
        report,
        report_path,
        failures,
        status,
    })
}

fn stage_waitfit(
    instrument: &str,
    days: &[TickSeries],
    config: &RunConfig,
    dir: &Path,
) -> Result<FitRow> {
    let sample = tickdata::pool_waiting_times(days, Some(config.clean.max_wait))?;
    let n = sample.durations.len();
    let mean = stats::mean(&sample.durations);
    let std = if n >= 2 {
        stats::variance(&sample.durations).sqrt()
    } else {
        0.0
    };

    let grid = GridSpec::Log {
        points: config.waitfit.grid_points,
    };
    let survival = waitstats::empirical_survival(&sample, &grid)?;
    write_csv(
        &dir.join("waitfit_survival.csv"),
        &["tau", "survival"],
        survival
            .grid
            .iter()
            .zip(&survival.survival)
            .map(|(&g, &s)| vec![fmt(g), fmt(s)]),
    )?;

    let collapse = waitstats::rescale_survival(&sample, config.waitfit.beta_star)?;
    write_csv(
        &dir.join("waitfit_collapse.csv"),
        &["x", "empirical", "reference"],
        collapse
            .grid
            .iter()
            .zip(collapse.empirical.iter().zip(&collapse.reference))
            .map(|(&x, (&e, &r))| vec![fmt(x), fmt(e), fmt(r)]),
    )?;

    let row = match waitstats::fit_weibull_moments(&sample) {
        Ok(fit) => {
            let ad = waitstats::ad_exponentiality(&sample, &fit)?;
            FitRow {
                instrument: instrument.into(),
                n,
                mean,
                std,
                alpha: Some(fit.alpha),
                beta: Some(fit.beta),
                ad: Some(ad.statistic),
                reject: Some(ad.reject),
                error: None,
            }
        }
        Err(e) => FitRow {
            instrument: instrument.into(),
            n,
            mean,
            std,
            alpha: None,
            beta: None,
            ad: None,
            reject: None,
            error: Some(e.to_string()),
        },
    };

    write_csv(
        &dir.join("waitfit_table.csv"),
        &["instrument", "n", "mean", "std", "alpha", "beta", "AD", "reject"],
        std::iter::once(vec![
            row.instrument.clone(),
            row.n.to_string(),
            fmt(row.mean),
            fmt(row.std),
            row.alpha.map(fmt).unwrap_or_default(),
            row.beta.map(fmt).unwrap_or_default(),
            row.ad.map(fmt).unwrap_or_default(),
            row.reject.map(|r| r.to_string()).unwrap_or_default(),
        ]),
    )?;
    Ok(row)
}

fn stage_moments(instrument: &str, days: &[TickSeries]) -> Result<MomentsRow> {
    let mut all = Vec::new();
    for day in days {
        if day.len() >= 2 {
            all.extend(tickdata::log_returns(day)?.returns);
        }
    }
    let moments = stats::descriptive_moments(&all)?;
    Ok(MomentsRow {
        instrument: instrument.into(),
        moments,
    })
}

fn stage_scaling(
    instrument: &str,
    days: &[TickSeries],
    config: &RunConfig,
    dir: &Path,
) -> Result<LevyBlock> {
    let window = WindowSpec {
        central_fraction: config.scaling.p0_fraction,
        min_points: config.scaling.p0_min_points,
    };
    let mut samples = Vec::new();
    for &dt in &config.scaling.dt {
        let mut per_day = Vec::new();
        for day in days {
            per_day.push(sampled_returns(day, dt)?);
        }
        samples.push(tickdata::pool_returns(&per_day)?);
    }

    // per-dt histograms, raw and entering the collapse
    for s in &samples {
        let dt = s.dt().expect("sampled mode");
        let hist = scaling::return_histogram(s, config.scaling.bin_width)?;
        write_csv(
            &dir.join(format!("scaling_hist_dt{}.csv", fmt(dt))),
            &["center", "density"],
            hist.centers()
                .iter()
                .zip(&hist.densities)
                .map(|(&c, &d)| vec![fmt(c), fmt(d)]),
        )?;
    }

    let mut p0_rows = Vec::with_capacity(samples.len());
    for s in &samples {
        let dt = s.dt().expect("sampled mode");
        let p0 = scaling::density_at_zero(s, &window)?;
        p0_rows.push(vec![fmt(dt), fmt(p0.density), fmt(p0.stderr)]);
    }
    write_csv(&dir.join("scaling_p0.csv"), &["dt", "p0", "stderr"], p0_rows.into_iter())?;

    let est = scaling::levy_index(&samples, &window)?;
    for s in &samples {
        let dt = s.dt().expect("sampled mode");
        let hist = scaling::return_histogram(s, config.scaling.bin_width)?;
        let rescaled = scaling::rescale_distribution(&hist, est.alpha_l)?;
        write_csv(
            &dir.join(format!("scaling_rescaled_dt{}.csv", fmt(dt))),
            &["center", "density"],
            rescaled
                .centers()
                .iter()
                .zip(&rescaled.densities)
                .map(|(&c, &d)| vec![fmt(c), fmt(d)]),
        )?;
    }

    Ok(LevyBlock {
        instrument: instrument.into(),
        alpha_l: est.alpha_l,
        slope: est.slope,
        slope_stderr: est.slope_stderr,
        intercept: est.intercept,
        in_stable_range: est.in_stable_range,
        points: est.points,
    })
}

fn stage_seasonality(
    instrument: &str,
    days: &[TickSeries],
    config: &RunConfig,
    dir: &Path,
) -> Result<SeasonalityBlock> {
    let mut gamma_activity = Vec::new();
    for &dt in &config.seasonality.delta_t {
        let profile = seasonality::intraday_profile(days, dt)?;
        write_csv(
            &dir.join(format!("seasonality_profile_dt{}.csv", fmt(dt))),
            &["k", "start", "gamma", "activity"],
            (0..profile.k).map(|k| {
                vec![
                    k.to_string(),
                    fmt(k as f64 * profile.dt),
                    profile.gamma[k].map(fmt).unwrap_or_default(),
                    fmt(profile.activity[k]),
                ]
            }),
        )?;
        let corr = seasonality::volatility_activity_scatter(&profile)
            .map(|s| s.correlation)
            .unwrap_or(None);
        gamma_activity.push((dt, corr));
    }

    let grid = config.seasonality.leverage_grid;
    let mut per_day = Vec::new();
    for day in days {
        per_day.push(sampled_returns(day, grid)?);
    }
    let leverage = seasonality::leverage(&per_day, &config.seasonality.lags)?;
    write_csv(
        &dir.join("seasonality_leverage.csv"),
        &["lag", "L", "stderr", "pairs"],
        leverage.lags.iter().enumerate().map(|(i, &lag)| {
            vec![
                fmt(lag),
                fmt(leverage.values[i]),
                fmt(leverage.stderr[i]),
                leverage.counts[i].to_string(),
            ]
        }),
    )?;
    let max_abs_z = leverage
        .values
        .iter()
        .zip(&leverage.stderr)
        .map(|(&v, &s)| if s > 0.0 { (v / s).abs() } else { f64::INFINITY })
        .fold(None, |acc: Option<f64>, z| {
            Some(acc.map_or(z, |a| a.max(z)))
        });

    Ok(SeasonalityBlock {
        instrument: instrument.into(),
        gamma_activity,
        leverage_max_abs_z: max_abs_z,
    })
}

fn stage_ncpp_fit(
    _instrument: &str,
    days: &[TickSeries],
    config: &RunConfig,
    dir: &Path,
) -> Result<Vec<SeasonalProfile>> {
    let mut fits = Vec::new();
    for &w in &config.ncpp.w {
        let profile = ncpp::fit_profile(days, w)?;
        let path = dir.join(format!("ncpp_profile_w{}.json", fmt(w)));
        fs::write(&path, serde_json::to_string_pretty(&profile)?)?;
        fits.push(profile);
    }
    Ok(fits)
}

fn stage_converge(
    instrument: &str,
    days: &[TickSeries],
    fits: &[SeasonalProfile],
    config: &RunConfig,
    dir: &Path,
) -> Result<ConvergenceBlock> {
    let mut per_day = Vec::new();
    for day in days {
        if day.len() >= 2 {
            per_day.push(tickdata::log_returns(day)?);
        }
    }
    let empirical = tickdata::pool_returns(&per_day)?;
    let n_days = if config.ncpp.sim_days == 0 {
        days.len()
    } else {
        config.ncpp.sim_days
    };
    let seed = derive_seed(config.seed, "converge", 0);
    let rows = ncpp::convergence_diagnostic(&empirical, fits, seed, n_days)?;
    write_csv(
        &dir.join("ncpp_convergence.csv"),
        &["w", "ks", "simulated_returns"],
        rows.iter()
            .map(|r| vec![fmt(r.w), fmt(r.ks), r.simulated_returns.to_string()]),
    )?;
    Ok(ConvergenceBlock {
        instrument: instrument.into(),
        rows,
    })
}

/// Shortest-round-trip float formatting; deterministic for equal values.
fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: Iterator<Item = Vec<String>>,
{
    let mut file = fs::File::create(path)?;
    writeln!(file, "{}", header.join(","))?;
    for row in rows {
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// synthetic dataset generation
// ---------------------------------------------------------------------------

/// Intensity shape over the trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileShape {
    Flat {
        lambda: f64,
    },
    /// Quadratic open/close peaks around a midday trough.
    UShape {
        lambda_open: f64,
        lambda_mid: f64,
        lambda_close: f64,
    },
}

/// Per-interval jump volatility rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SigmaRule {
    Direct { sigma: f64 },
    /// sigma_i = c * lambda_i, tying volatility to activity.
    Proportional { c: f64 },
}

/// Optional fast multiplicative modulation of intensity and volatility,
/// for targets with structure below the coarsest fitting width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ripple {
    pub amplitude: f64,
    pub period: f64,
}

/// Ground-truth generator specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub shape: ProfileShape,
    pub mu: f64,
    pub sigma: SigmaRule,
    pub ripple: Option<Ripple>,
    /// Interval width of the ground-truth profile.
    pub w: f64,
    pub session_len: f64,
    pub days: usize,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0) || !(self.session_len > 0.0) || self.w > self.session_len {
            return Err(Error::invalid("synthetic spec: bad w/session_len"));
        }
        if self.days == 0 {
            return Err(Error::invalid("synthetic spec: days must be at least 1"));
        }
        let ok = match self.shape {
            ProfileShape::Flat { lambda } => lambda > 0.0,
            ProfileShape::UShape {
                lambda_open,
                lambda_mid,
                lambda_close,
            } => lambda_open > 0.0 && lambda_mid > 0.0 && lambda_close > 0.0,
        };
        if !ok {
            return Err(Error::invalid("synthetic spec: intensities must be positive"));
        }
        let sig_ok = match self.sigma {
            SigmaRule::Direct { sigma } => sigma >= 0.0,
            SigmaRule::Proportional { c } => c >= 0.0,
        };
        if !sig_ok {
            return Err(Error::invalid("synthetic spec: negative volatility"));
        }
        if let Some(r) = self.ripple {
            if !(r.period > 0.0) || r.amplitude.abs() >= 1.0 {
                return Err(Error::invalid(
                    "synthetic spec: ripple needs period > 0 and |amplitude| < 1",
                ));
            }
        }
        Ok(())
    }

    fn lambda_at(&self, x: f64) -> f64 {
        match self.shape {
            ProfileShape::Flat { lambda } => lambda,
            ProfileShape::UShape {
                lambda_open,
                lambda_mid,
                lambda_close,
            } => {
                let u = 2.0 * x - 1.0; // -1 at open, +1 at close
                let base = lambda_mid;
                let open_arm = (lambda_open - lambda_mid) * (0.5 * (u * u - u)).max(0.0);
                let close_arm = (lambda_close - lambda_mid) * (0.5 * (u * u + u)).max(0.0);
                base + open_arm + close_arm
            }
        }
    }

    /// The exact ground-truth profile the generator draws from.
    pub fn build_profile(&self) -> Result<SeasonalProfile> {
        self.validate()?;
        let t = (self.session_len / self.w).ceil() as usize;
        let mut lambdas = Vec::with_capacity(t);
        let mut mus = Vec::with_capacity(t);
        let mut sigma2s = Vec::with_capacity(t);
        for i in 0..t {
            let start = i as f64 * self.w;
            let width = (self.session_len - start).min(self.w);
            let mid = start + 0.5 * width;
            let x = mid / self.session_len;
            let mut lambda = self.lambda_at(x);
            let mut sigma = match self.sigma {
                SigmaRule::Direct { sigma } => sigma,
                SigmaRule::Proportional { c } => c * lambda,
            };
            if let Some(r) = self.ripple {
                let factor = 1.0 + r.amplitude * (2.0 * std::f64::consts::PI * mid / r.period).sin();
                lambda *= factor;
                sigma *= factor;
            }
            lambdas.push(lambda);
            mus.push(self.mu);
            sigma2s.push(sigma * sigma);
        }
        ncpp::profile_from_rates(self.w, self.session_len, &lambdas, &mus, &sigma2s)
    }
}

/// Files written by [`make_synthetic_dataset`].
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub files: Vec<PathBuf>,
    pub truth_path: PathBuf,
    pub profile: SeasonalProfile,
}

/// Simulates the generator and writes per-day tick CSVs in the ingestion format
/// plus a ground-truth JSON documenting the generator parameters.
pub fn make_synthetic_dataset(
    spec: &SyntheticSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<SyntheticDataset> {
    let profile = spec.build_profile()?;
    let sim = ncpp::simulate(&profile, seed, spec.days)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::with_capacity(sim.days.len());
    for day in &sim.days {
        let path = out_dir.join(format!("synth_{}.csv", day.day));
        let file = fs::File::create(&path)?;
        tickdata::write_ticks_csv(day, file)?;
        files.push(path);
    }
    #[derive(Serialize)]
    struct Truth<'a> {
        spec: &'a SyntheticSpec,
        seed: u64,
        profile: &'a SeasonalProfile,
    }
    let truth_path = out_dir.join("ground_truth.json");
    fs::write(
        &truth_path,
        serde_json::to_string_pretty(&Truth {
            spec,
            seed,
            profile: &profile,
        })?,
    )?;
    Ok(SyntheticDataset {
        files,
        truth_path,
        profile,
    })
}
