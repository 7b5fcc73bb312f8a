//! Command-line front end for the tick-data pipeline.
//!
//! Exit codes: 0 success, 1 partial (some stages failed, completed work is
//! kept), 2 fatal (bad config, unreadable inputs).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ticklab::config::{RunConfig, Stages};
use ticklab::ncpp::{self, SeasonalProfile};
use ticklab::pipeline::{self, make_synthetic_dataset, ExitStatus, SyntheticSpec};
use ticklab::tickdata::{clean_ticks_with, parse_ticks, write_ticks_csv};
use ticklab::Error;

#[derive(Parser)]
#[command(
    name = "ticklab",
    version,
    about = "Tick-by-tick diagnostics and NCPP simulation for intraday trade data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input tick CSVs, one instrument-session per file named
    /// INSTRUMENT_DAY.csv (overrides the config list).
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Base seed for every stochastic stage (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn build(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs.clone();
        }
        if let Some(dir) = &self.out_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw tick CSVs, apply the cleaning rules, re-emit cleaned CSVs.
    Clean(RunArgs),
    /// Weibull waiting-time fits, AD statistics and survival curves.
    Waitfit(RunArgs),
    /// Return histograms, zero-return probabilities and the Lévy index.
    Scaling(RunArgs),
    /// Intraday volatility/activity profiles and the leverage curve.
    Seasonality(RunArgs),
    /// Fit seasonal NCPP profiles on the configured w grid.
    NcppFit(RunArgs),
    /// Simulate a fitted profile into tick CSVs.
    NcppSim {
        /// Profile JSON produced by ncpp-fit (or synth ground truth).
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        days: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Fit profiles across w and compare simulated vs empirical returns.
    Converge(RunArgs),
    /// Run every configured stage and write the JSON report.
    Report(RunArgs),
    /// Generate a synthetic dataset with documented ground truth.
    Synth {
        /// TOML file deserializing into a synthetic spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("fatal: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitStatus, Error> {
    match cli.command {
        Command::Clean(args) => {
            let cfg = args.build()?;
            run_clean(&cfg)
        }
        Command::Waitfit(args) => run_stages(&args, |s| {
            s.waitfit = true;
            s.moments = true;
        }),
        Command::Scaling(args) => run_stages(&args, |s| s.scaling = true),
        Command::Seasonality(args) => run_stages(&args, |s| s.seasonality = true),
        Command::NcppFit(args) => run_stages(&args, |s| s.ncpp = true),
        Command::Converge(args) => run_stages(&args, |s| {
            s.ncpp = true;
            s.converge = true;
        }),
        Command::Report(args) => {
            let cfg = args.build()?;
            finish(pipeline::run_pipeline(&cfg)?)
        }
        Command::NcppSim {
            profile,
            seed,
            days,
            out_dir,
        } => run_sim(&profile, seed, days, &out_dir),
        Command::Synth { spec, seed, out_dir } => run_synth(&spec, seed, &out_dir),
    }
}

fn run_stages(args: &RunArgs, enable: impl Fn(&mut Stages)) -> Result<ExitStatus, Error> {
    let mut cfg = args.build()?;
    cfg.stages = Stages {
        waitfit: false,
        moments: false,
        scaling: false,
        seasonality: false,
        ncpp: false,
        converge: false,
    };
    enable(&mut cfg.stages);
    finish(pipeline::run_pipeline(&cfg)?)
}

fn finish(outcome: pipeline::PipelineOutcome) -> Result<ExitStatus, Error> {
    for f in &outcome.failures {
        eprintln!("stage failure: {f}");
    }
    println!("report written to {}", outcome.report_path.display());
    Ok(outcome.status)
}

fn run_clean(cfg: &RunConfig) -> Result<ExitStatus, Error> {
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no input files configured".into()));
    }
    fs::create_dir_all(&cfg.output_dir)?;
    let clean_cfg = (&cfg.clean).into();
    let mut failures = 0usize;
    for path in &cfg.inputs {
        let (inst, day) = RunConfig::labels_for(path);
        let result = fs::File::open(path)
            .map_err(Error::from)
            .and_then(|f| parse_ticks(f, &cfg.format, &inst, &day))
            .and_then(|o| {
                if o.rejected > 0 {
                    eprintln!("{}: {} rows rejected", path.display(), o.rejected);
                    for r in &o.reasons {
                        eprintln!("  {r}");
                    }
                }
                clean_ticks_with(&o.series, &clean_cfg)
            })
            .and_then(|series| {
                let out = cfg.output_dir.join(format!("cleaned_{inst}_{day}.csv"));
                let file = fs::File::create(&out)?;
                write_ticks_csv(&series, file)?;
                println!("{} -> {} ({} ticks)", path.display(), out.display(), series.len());
                Ok(())
            });
        if let Err(e) = result {
            eprintln!("{}: {e}", path.display());
            failures += 1;
        }
    }
    Ok(if failures == 0 {
        ExitStatus::Success
    } else if failures < cfg.inputs.len() {
        ExitStatus::Partial
    } else {
        ExitStatus::Fatal
    })
}

fn run_sim(profile_path: &Path, seed: u64, days: usize, out_dir: &Path) -> Result<ExitStatus, Error> {
    let text = fs::read_to_string(profile_path)?;
    // accept either a bare profile or a synth ground-truth wrapper
    let profile: SeasonalProfile = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(_) => {
            #[derive(serde::Deserialize)]
            struct Truth {
                profile: SeasonalProfile,
            }
            serde_json::from_str::<Truth>(&text)?.profile
        }
    };
    profile.validate()?;
    let sim = ncpp::simulate(&profile, seed, days)?;
    fs::create_dir_all(out_dir)?;
    for day in &sim.days {
        let path = out_dir.join(format!("sim_{}.csv", day.day));
        let file = fs::File::create(&path)?;
        write_ticks_csv(day, file)?;
    }
    println!(
        "simulated {} days, {} ticks, seed {} -> {}",
        sim.days.len(),
        sim.total_ticks(),
        seed,
        out_dir.display()
    );
    Ok(ExitStatus::Success)
}

fn run_synth(spec_path: &Path, seed: u64, out_dir: &Path) -> Result<ExitStatus, Error> {
    let text = fs::read_to_string(spec_path)?;
    let spec: SyntheticSpec =
        toml::from_str(&text).map_err(|e| Error::Config(format!("bad spec: {e}")))?;
    let ds = make_synthetic_dataset(&spec, seed, out_dir)?;
    println!(
        "wrote {} day files and {} to {}",
        ds.files.len(),
        ds.truth_path.display(),
        out_dir.display()
    );
    Ok(ExitStatus::Success)
}
