//! The non-homogeneous normal compound Poisson process: piecewise-constant
//! trade intensity over the day with normal per-trade log-return jumps.
//!
//! A homogeneous block has log-price X(t) = sum of N(t) normal jumps with
//! N(t) Poisson(lambda t); its CDF is the Poisson-weighted series of
//! n-fold normal convolutions with an explicit point mass at zero for the
//! no-jump term. Splitting the day into T width-w intervals of constant
//! activity makes the unconditional waiting time a mixture of exponentials
//! weighted by per-interval trade shares.

use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::rng::rng_stream;
use crate::stats;
use crate::tickdata::{log_returns, RawTick, ReturnMode, ReturnSample, SessionBounds, TickSeries};

/// Homogeneous block parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcppParams {
    /// Poisson intensity, trades per second.
    pub lambda: f64,
    /// Per-jump mean log-return.
    pub mu: f64,
    /// Per-jump log-return variance.
    pub sigma2: f64,
}

impl NcppParams {
    pub fn new(lambda: f64, mu: f64, sigma2: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be non-negative, got {sigma2}")));
        }
        if !mu.is_finite() {
            return Err(Error::invalid("mu must be finite"));
        }
        Ok(NcppParams { lambda, mu, sigma2 })
    }
}

/// Per-interval estimates over a trading-day grid of width `w`.
///
/// Intervals with no assigned returns carry lambda = 0 and are skipped by
/// the simulator; single-return intervals get a degenerate jump at the
/// observed return. Weights are trade-count shares and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalProfile {
    /// Interval width in seconds.
    pub w: f64,
    /// Number of intervals per day.
    pub intervals: usize,
    pub session_len: f64,
    pub lambdas: Vec<f64>,
    pub mus: Vec<Option<f64>>,
    pub sigma2s: Vec<Option<f64>>,
    /// Pooled return counts per interval.
    pub counts: Vec<u64>,
    /// Mixture weights a_i = N_i / sum N_i.
    pub weights: Vec<f64>,
    pub days_fitted: usize,
}

impl SeasonalProfile {
    /// Width of interval `i` (the last interval may be partial).
    pub fn interval_width(&self, i: usize) -> f64 {
        let start = i as f64 * self.w;
        (self.session_len - start).min(self.w)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.intervals;
        if t == 0 || !(self.w > 0.0) || !(self.session_len > 0.0) {
            return Err(Error::invalid("profile: empty grid"));
        }
        if (t as f64 - 1.0) * self.w >= self.session_len || (t as f64) * self.w < self.session_len - 1e-9 {
            return Err(Error::invalid("profile: T*w does not cover the session"));
        }
        if [self.lambdas.len(), self.mus.len(), self.sigma2s.len(), self.counts.len(), self.weights.len()]
            .iter()
            .any(|&l| l != t)
        {
            return Err(Error::invalid("profile: array lengths disagree with T"));
        }
        let mut wsum = 0.0;
        for i in 0..t {
            if !(self.lambdas[i] >= 0.0) || !(self.weights[i] >= 0.0) {
                return Err(Error::invalid("profile: negative lambda or weight"));
            }
            if self.lambdas[i] > 0.0 && self.mus[i].is_none() {
                return Err(Error::invalid(format!(
                    "profile: interval {i} has positive lambda but no mu"
                )));
            }
            wsum += self.weights[i];
        }
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("profile: weights sum to {wsum}")));
        }
        Ok(())
    }

    /// Unconditional waiting-time CDF: sum a_i (1 - exp(-lambda_i u)).
    pub fn mixture_wt_cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.weights
            .iter()
            .zip(&self.lambdas)
            .map(|(&a, &l)| a * (-(-l * u).exp_m1()))
            .sum()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Free-function form of [`SeasonalProfile::mixture_wt_cdf`].
pub fn mixture_wt_cdf(profile: &SeasonalProfile, u: f64) -> f64 {
    profile.mixture_wt_cdf(u)
}

/// Estimates (lambda_i, mu_i, sigma2_i) on the width-`w` grid from one or
/// more sessions: lambda_i = N_i / w per day (pooled over days), mu_i and
/// sigma2_i the sample mean and unbiased variance of the interval's
/// trade-by-trade returns.
pub fn fit_profile(days: &[TickSeries], w: f64) -> Result<SeasonalProfile> {
    if days.is_empty() {
        return Err(Error::EmptyInput("fit_profile: no sessions"));
    }
    let bounds = days[0].bounds;
    let session_len = bounds.len();
    if !(w > 0.0) {
        return Err(Error::invalid(format!("w must be positive, got {w}")));
    }
    if w > session_len {
        return Err(Error::invalid(format!(
            "w = {w} exceeds session length {session_len}"
        )));
    }
    for d in days {
        if d.bounds != bounds {
            return Err(Error::invalid("fit_profile: sessions have mismatched bounds"));
        }
    }
    let t = (session_len / w).ceil() as usize;
    let interval_of = |epoch: f64| -> usize {
        (((epoch - bounds.open) / w).floor() as usize).min(t - 1)
    };

    let mut counts = vec![0u64; t];
    let mut sums = vec![0.0f64; t];
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); t];
    for day in days {
        if day.len() < 2 {
            continue;
        }
        let rets = log_returns(day)?;
        for (&r, &e) in rets.returns.iter().zip(&rets.epochs) {
            let i = interval_of(e);
            counts[i] += 1;
            sums[i] += r;
            buckets[i].push(r);
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NotEnoughData("fit_profile: no returns in any session".into()));
    }

    let n_days = days.len() as f64;
    let mut lambdas = vec![0.0f64; t];
    let mut mus: Vec<Option<f64>> = vec![None; t];
    let mut sigma2s: Vec<Option<f64>> = vec![None; t];
    for i in 0..t {
        let n = counts[i];
        let width = (session_len - i as f64 * w).min(w);
        lambdas[i] = n as f64 / (n_days * width);
        if n >= 1 {
            mus[i] = Some(sums[i] / n as f64);
        }
        if n >= 2 {
            sigma2s[i] = Some(stats::variance(&buckets[i]));
        }
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();

    Ok(SeasonalProfile {
        w,
        intervals: t,
        session_len,
        lambdas,
        mus,
        sigma2s,
        counts,
        weights,
        days_fitted: days.len(),
    })
}

/// Truncated-series evaluation of the homogeneous NCPP CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcppCdf {
    pub value: f64,
    /// Poisson mass beyond the truncation; bounded by 1e-12 by choice of
    /// `n_max` (or verified when the caller fixes it).
    pub tail_bound: f64,
    pub n_terms: usize,
}

const CDF_TAIL_TARGET: f64 = 1e-12;

/// F_X(t)(u) = exp(-lambda t) sum_n (lambda t)^n / n! F*n(u), where the
/// n = 0 term is the point mass 1[u >= 0] and F*n is normal with mean
/// n mu and variance n sigma2.
///
/// When `n_max` is `None` the truncation is chosen from the Poisson
/// Chernoff tail bound so the neglected mass stays below 1e-12; a
/// caller-supplied `n_max` is validated against the same target.
pub fn ncpp_cdf(params: &NcppParams, t: f64, u: f64, n_max: Option<usize>) -> Result<NcppCdf> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    NcppParams::new(params.lambda, params.mu, params.sigma2)?;
    let m = params.lambda * t;

    let n_max = match n_max {
        Some(n) => {
            if poisson_tail_mass(m, n) > CDF_TAIL_TARGET {
                return Err(Error::invalid(format!(
                    "n_max = {n} leaves Poisson tail mass above {CDF_TAIL_TARGET:.0e} for lambda t = {m}"
                )));
            }
            n
        }
        None => chernoff_n_max(m),
    };

    // iterate Poisson weights; n = 0 contributes the atom at zero
    let mut weight = (-m).exp();
    let mut acc = if u >= 0.0 { weight } else { 0.0 };
    let mut mass = weight;
    for n in 1..=n_max {
        weight *= m / n as f64;
        mass += weight;
        let conv = if params.sigma2 > 0.0 {
            let nf = n as f64;
            normal_cdf(u, nf * params.mu, nf * params.sigma2)
        } else {
            // degenerate jumps: n-fold sum is a point at n mu
            if u >= n as f64 * params.mu {
                1.0
            } else {
                0.0
            }
        };
        acc += weight * conv;
    }
    Ok(NcppCdf {
        value: acc,
        tail_bound: (1.0 - mass).max(0.0),
        n_terms: n_max + 1,
    })
}

fn normal_cdf(x: f64, mean: f64, var: f64) -> f64 {
    0.5 * (1.0 + erf((x - mean) / (2.0 * var).sqrt()))
}

/// Exact Poisson upper-tail mass P(N > n) via the complementary partial sum.
fn poisson_tail_mass(m: f64, n: usize) -> f64 {
    let mut weight = (-m).exp();
    let mut mass = weight;
    for k in 1..=n {
        weight *= m / k as f64;
        mass += weight;
    }
    (1.0 - mass).max(0.0)
}

/// Smallest n with the Chernoff bound exp(-m) (e m / n)^n below target,
/// searched geometrically above the mean.
fn chernoff_n_max(m: f64) -> usize {
    let mut n = (m.ceil() as usize).max(8);
    loop {
        let nf = n as f64;
        // log bound: -m + n (1 + ln m - ln n)
        let log_bound = -m + nf * (1.0 + m.ln() - nf.ln());
        if log_bound < (CDF_TAIL_TARGET * 0.1).ln() {
            return n;
        }
        n = n * 3 / 2 + 8;
    }
}

/// Synthetic tick stream generated from a profile with a recorded seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NcppSimulation {
    /// One synthetic session per simulated day.
    pub days: Vec<TickSeries>,
    pub seed: u64,
    pub w: f64,
    pub profile: SeasonalProfile,
}

impl NcppSimulation {
    pub fn total_ticks(&self) -> usize {
        self.days.iter().map(|d| d.len()).sum()
    }

    /// Trade-by-trade returns pooled over all simulated days.
    pub fn pooled_returns(&self) -> Result<ReturnSample> {
        let mut returns = Vec::new();
        let mut epochs = Vec::new();
        for day in &self.days {
            if day.len() < 2 {
                continue;
            }
            let r = log_returns(day)?;
            returns.extend(r.returns);
            epochs.extend(r.epochs);
        }
        if returns.is_empty() {
            return Err(Error::NotEnoughData("simulation produced no returns".into()));
        }
        Ok(ReturnSample {
            returns,
            epochs,
            mode: ReturnMode::TradeByTrade,
            source: "simulation".into(),
        })
    }

    /// Intertrade durations pooled over all simulated days.
    pub fn pooled_waiting_times(&self) -> Result<Vec<f64>> {
        let mut durations = Vec::new();
        for day in &self.days {
            for w in day.ticks.windows(2) {
                durations.push(w[1].epoch - w[0].epoch);
            }
        }
        if durations.is_empty() {
            return Err(Error::NotEnoughData("simulation produced no waiting times".into()));
        }
        Ok(durations)
    }
}

/// Simulates `n_days` trading days from a seasonal profile.
///
/// Each (day, interval) pair draws from its own deterministic ChaCha
/// sub-stream, so output is bit-identical for a given (profile, seed,
/// n_days) regardless of thread count. Arrivals are exponential
/// inter-arrival times clipped at interval boundaries (no carry-over);
/// each arrival adds a normal(mu_i, sigma2_i) jump to the log-price, and
/// prices are exp of the running sum continuing across days.
pub fn simulate(profile: &SeasonalProfile, seed: u64, n_days: usize) -> Result<NcppSimulation> {
    profile.validate()?;
    if n_days == 0 {
        return Err(Error::invalid("n_days must be at least 1"));
    }
    if profile.lambdas.iter().all(|&l| l <= 0.0) {
        return Err(Error::invalid("profile has all-zero intensities"));
    }
    let t = profile.intervals;

    // jumps are generated per (day, interval) stream in parallel, then the
    // price path is accumulated in fixed day order
    let per_day: Vec<Vec<(f64, f64)>> = (0..n_days)
        .into_par_iter()
        .map(|d| {
            let mut events: Vec<(f64, f64)> = Vec::new();
            for i in 0..t {
                let lambda = profile.lambdas[i];
                if lambda <= 0.0 {
                    continue;
                }
                let start = i as f64 * profile.w;
                let end = start + profile.interval_width(i);
                let mu = profile.mus[i].expect("validated: lambda > 0 implies mu");
                let sigma = profile.sigma2s[i].unwrap_or(0.0).max(0.0).sqrt();
                let mut rng = rng_stream(seed, (d as u64) * t as u64 + i as u64);
                let exp = Exp::new(lambda).expect("lambda > 0");
                let normal = if sigma > 0.0 {
                    Some(Normal::new(mu, sigma).expect("finite params"))
                } else {
                    None
                };
                let mut tau = start;
                loop {
                    let step = exp.sample(&mut rng);
                    if step <= 0.0 {
                        continue; // zero-width step cannot advance the clock
                    }
                    tau += step;
                    if tau >= end {
                        break;
                    }
                    let jump = match &normal {
                        Some(n) => n.sample(&mut rng),
                        None => mu,
                    };
                    events.push((tau, jump));
                }
            }
            events
        })
        .collect();

    let mut days = Vec::with_capacity(n_days);
    let mut log_price = 100.0f64.ln();
    let bounds = SessionBounds::new(0.0, profile.session_len)?;
    for (d, events) in per_day.into_iter().enumerate() {
        let mut ticks = Vec::with_capacity(events.len());
        for (epoch, jump) in events {
            log_price += jump;
            ticks.push(RawTick {
                epoch,
                price: log_price.exp(),
                volume: None,
            });
        }
        days.push(TickSeries {
            instrument: "sim".into(),
            day: format!("day{:04}", d + 1),
            bounds,
            ticks,
        });
    }

    Ok(NcppSimulation {
        days,
        seed,
        w: profile.w,
        profile: profile.clone(),
    })
}

/// One row of the w-convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub w: f64,
    /// Two-sample KS distance between empirical and simulated
    /// trade-by-trade returns.
    pub ks: f64,
    pub simulated_returns: usize,
}

/// Compares empirical trade-by-trade returns against simulations from
/// profiles fitted at several interval widths, one seeded simulation per
/// width with matched day count; rows come back sorted by `w`.
pub fn convergence_diagnostic(
    empirical: &ReturnSample,
    fits: &[SeasonalProfile],
    seed: u64,
    n_days: usize,
) -> Result<Vec<ConvergenceRow>> {
    if empirical.is_empty() {
        return Err(Error::EmptyInput("convergence_diagnostic: empty empirical sample"));
    }
    if fits.is_empty() {
        return Err(Error::EmptyInput("convergence_diagnostic: no fitted profiles"));
    }
    let mut rows = Vec::with_capacity(fits.len());
    for (k, profile) in fits.iter().enumerate() {
        let sim = simulate(profile, crate::rng::derive_seed(seed, "converge", k as u64), n_days)?;
        let sim_returns = sim.pooled_returns()?;
        let ks = stats::ks_two_sample(&empirical.returns, &sim_returns.returns)?;
        rows.push(ConvergenceRow {
            w: profile.w,
            ks,
            simulated_returns: sim_returns.len(),
        });
    }
    rows.sort_by(|a, b| a.w.partial_cmp(&b.w).unwrap());
    Ok(rows)
}

/// Descriptive through-origin fit of sigma_i on lambda_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityActivityLink {
    /// Slope of sigma = c lambda through the origin.
    pub c: f64,
    /// (lambda_i, sigma_i, residual) triples over usable intervals.
    pub residuals: Vec<(f64, f64, f64)>,
}

/// Fits sigma_i = c lambda_i by least squares through the origin, purely
/// descriptively (the simulator always uses the per-interval sigma_i).
pub fn volatility_activity_link(profile: &SeasonalProfile) -> Result<VolatilityActivityLink> {
    let mut lambdas = Vec::new();
    let mut sigmas = Vec::new();
    for i in 0..profile.intervals {
        if let Some(s2) = profile.sigma2s[i] {
            lambdas.push(profile.lambdas[i]);
            sigmas.push(s2.max(0.0).sqrt());
        }
    }
    if lambdas.len() < 3 {
        return Err(Error::NotEnoughData(format!(
            "volatility_activity_link: only {} intervals with a sigma estimate",
            lambdas.len()
        )));
    }
    let c = stats::ols_through_origin(&lambdas, &sigmas)?;
    let residuals = lambdas
        .iter()
        .zip(&sigmas)
        .map(|(&l, &s)| (l, s, s - c * l))
        .collect();
    Ok(VolatilityActivityLink { c, residuals })
}

/// Convenience constructor for hand-built profiles (tests, synthetic
/// specs): counts are taken as expected arrivals and weights derived.
pub fn profile_from_rates(
    w: f64,
    session_len: f64,
    lambdas: &[f64],
    mus: &[f64],
    sigma2s: &[f64],
) -> Result<SeasonalProfile> {
    let t = lambdas.len();
    if t == 0 || mus.len() != t || sigma2s.len() != t {
        return Err(Error::invalid("profile_from_rates: array lengths disagree"));
    }
    let expected = (session_len / w).ceil() as usize;
    if expected != t {
        return Err(Error::invalid(format!(
            "profile_from_rates: {t} intervals but session/w needs {expected}"
        )));
    }
    let mut counts = vec![0u64; t];
    let mut weights = vec![0.0f64; t];
    let mut total = 0.0;
    for i in 0..t {
        let width = (session_len - i as f64 * w).min(w);
        let mass = lambdas[i] * width;
        counts[i] = mass.round() as u64;
        weights[i] = mass;
        total += mass;
    }
    if total <= 0.0 {
        return Err(Error::invalid("profile_from_rates: all intensities zero"));
    }
    for v in weights.iter_mut() {
        *v /= total;
    }
    let profile = SeasonalProfile {
        w,
        intervals: t,
        session_len,
        lambdas: lambdas.to_vec(),
        mus: lambdas
            .iter()
            .zip(mus)
            .map(|(&l, &m)| if l > 0.0 { Some(m) } else { None })
            .collect(),
        sigma2s: lambdas
            .iter()
            .zip(sigma2s)
            .map(|(&l, &s)| if l > 0.0 { Some(s) } else { None })
            .collect(),
        counts,
        weights,
        days_fitted: 0,
    };
    profile.validate()?;
    Ok(profile)
}
