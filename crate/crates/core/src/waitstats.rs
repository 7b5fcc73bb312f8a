//! Weibull survival fits for intertrade durations, exponentiality testing
//! of the transformed variable, and survival-curve scaling collapse.
//!
//! The survival law is P(tau > t) = exp(-alpha t^beta). The fit matches
//! the sample coefficient of variation to the Weibull identity
//! std/mean = sqrt(Gamma(1+2/beta)/Gamma(1+1/beta)^2 - 1), which is
//! strictly decreasing in beta, then sets the scale from the mean.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::stats;
use crate::tickdata::WaitingTimeSample;

/// 5% critical value for the Anderson-Darling statistic of the transformed
/// durations against the unit exponential.
pub const AD_CRITICAL_005: f64 = 1.34;

/// Solver bracket for the shape parameter.
pub const BETA_BRACKET: (f64, f64) = (0.05, 20.0);

const BETA_REL_TOL: f64 = 1e-10;

/// Weibull survival-law parameters fitted by the method of moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    /// Scale parameter of exp(-alpha t^beta), units s^-beta.
    pub alpha: f64,
    /// Shape parameter.
    pub beta: f64,
    pub mean_tau: f64,
    pub std_tau: f64,
}

impl WeibullFit {
    /// Characteristic time s = alpha^(-1/beta).
    pub fn scale(&self) -> f64 {
        self.alpha.powf(-1.0 / self.beta)
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.alpha * t.powf(self.beta)).exp()
    }

    /// Mean implied by (alpha, beta); equals `mean_tau` to solver tolerance.
    pub fn implied_mean(&self) -> f64 {
        self.scale() * (ln_gamma(1.0 + 1.0 / self.beta)).exp()
    }
}

/// Anderson-Darling outcome for z = alpha tau^beta against exp(1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdResult {
    pub statistic: f64,
    pub n: usize,
    pub critical_005: f64,
    pub reject: bool,
    /// Order statistics whose CDF value hit the floating-point clamp.
    pub clamped: usize,
}

/// Evaluation grid for empirical survival curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    Linear { points: usize },
    Log { points: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Log { points: 200 }
    }
}

/// P(tau > t) evaluated on a grid; non-increasing by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub grid: Vec<f64>,
    pub survival: Vec<f64>,
}

/// Empirical survival on the dimensionless abscissa t/<tau>, paired with
/// the reference curve exp(-x^beta*) on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCollapse {
    pub beta_star: f64,
    pub grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Exact step-function values of P(tau > t) on the requested grid.
pub fn empirical_survival(sample: &WaitingTimeSample, grid_spec: &GridSpec) -> Result<SurvivalCurve> {
    if sample.durations.is_empty() {
        return Err(Error::EmptyInput("empirical_survival: no durations"));
    }
    let mut sorted = sample.durations.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
    let lo = sorted[0];
    let hi = *sorted.last().unwrap();
    let grid = build_grid(lo, hi, grid_spec)?;
    let survival = survival_on_grid(&sorted, &grid);
    Ok(SurvivalCurve { grid, survival })
}

fn build_grid(lo: f64, hi: f64, spec: &GridSpec) -> Result<Vec<f64>> {
    let (points, log) = match *spec {
        GridSpec::Linear { points } => (points, false),
        GridSpec::Log { points } => (points, true),
    };
    if points < 2 {
        return Err(Error::invalid("grid needs at least 2 points"));
    }
    if log && !(lo > 0.0) {
        return Err(Error::invalid("log grid requires positive minimum"));
    }
    let n = points as f64;
    let grid = (0..points)
        .map(|i| {
            let f = i as f64 / (n - 1.0);
            if log {
                (lo.ln() + f * (hi.ln() - lo.ln())).exp()
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect();
    Ok(grid)
}

fn survival_on_grid(sorted: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&t| {
            let idx = sorted.partition_point(|&d| d <= t);
            (sorted.len() - idx) as f64 / n
        })
        .collect()
}

/// Fits (alpha, beta) by matching the sample mean and standard deviation.
pub fn fit_weibull_moments(sample: &WaitingTimeSample) -> Result<WeibullFit> {
    let n = sample.durations.len();
    if n < 2 {
        return Err(Error::NotEnoughData(format!(
            "weibull moment fit needs at least 2 durations, got {n}"
        )));
    }
    let mean = stats::mean(&sample.durations);
    let std = stats::variance(&sample.durations).sqrt();
    if !(mean > 0.0) {
        return Err(Error::invalid("durations must be positive"));
    }
    if std == 0.0 {
        return Err(Error::DegenerateSample(
            "weibull moment fit: zero variance".into(),
        ));
    }
    let beta = beta_from_cv(std / mean)?;
    let scale = mean / ln_gamma(1.0 + 1.0 / beta).exp();
    let alpha = scale.powf(-beta);
    Ok(WeibullFit {
        alpha,
        beta,
        mean_tau: mean,
        std_tau: std,
    })
}

/// log CV^2 residual: f(beta) = lnGamma(1+2/b) - 2 lnGamma(1+1/b) - ln(1+cv^2).
fn cv_residual(beta: f64, cv: f64) -> f64 {
    ln_gamma(1.0 + 2.0 / beta) - 2.0 * ln_gamma(1.0 + 1.0 / beta) - (1.0 + cv * cv).ln()
}

fn cv_residual_deriv(beta: f64) -> f64 {
    // d/db [lnGamma(1+2/b) - 2 lnGamma(1+1/b)]
    (2.0 / (beta * beta)) * (digamma(1.0 + 1.0 / beta) - digamma(1.0 + 2.0 / beta))
}

/// Solves the coefficient-of-variation identity for beta.
///
/// The residual is strictly decreasing on the bracket (its derivative is
/// negative because digamma is increasing), so the root is unique;
/// non-bracketing CVs are reported as errors rather than clamped.
pub fn beta_from_cv(cv: f64) -> Result<f64> {
    if !(cv > 0.0 && cv.is_finite()) {
        return Err(Error::invalid(format!("cv must be positive, got {cv}")));
    }
    let (mut lo, mut hi) = BETA_BRACKET;
    let f_lo = cv_residual(lo, cv);
    let f_hi = cv_residual(hi, cv);
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::Solver(format!(
            "cv {cv} outside solver bracket [{:.6}, {:.6e}]",
            cv_from_beta(BETA_BRACKET.1),
            cv_from_beta(BETA_BRACKET.0),
        )));
    }
    // bisection to a coarse interval
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cv_residual(mid, cv) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-6 {
            break;
        }
    }
    // Newton polish
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..64 {
        let step = cv_residual(beta, cv) / cv_residual_deriv(beta);
        let next = (beta - step).clamp(BETA_BRACKET.0, BETA_BRACKET.1);
        let done = ((next - beta) / next).abs() < BETA_REL_TOL;
        beta = next;
        if done {
            return Ok(beta);
        }
    }
    Err(Error::Solver(format!("beta solver did not converge for cv {cv}")))
}

/// Coefficient of variation implied by a Weibull shape.
pub fn cv_from_beta(beta: f64) -> f64 {
    ((ln_gamma(1.0 + 2.0 / beta) - 2.0 * ln_gamma(1.0 + 1.0 / beta)).exp() - 1.0).sqrt()
}

/// Anderson-Darling test of z = alpha tau^beta against the unit exponential.
///
/// A2 = -N - (1/N) sum (2i-1) [ln F(z_(i)) + ln(1 - F(z_(N+1-i)))] with
/// F(z) = 1 - exp(-z). Log-probabilities are evaluated stably; order
/// statistics that would underflow are clamped to 1e-300 and counted.
pub fn ad_exponentiality(sample: &WaitingTimeSample, fit: &WeibullFit) -> Result<AdResult> {
    let n = sample.durations.len();
    if n < 8 {
        return Err(Error::NotEnoughData(format!(
            "anderson-darling needs at least 8 durations, got {n}"
        )));
    }
    if !(fit.alpha > 0.0 && fit.beta > 0.0) {
        return Err(Error::invalid("invalid weibull fit"));
    }
    let mut z: Vec<f64> = sample
        .durations
        .iter()
        .map(|&tau| fit.alpha * tau.powf(fit.beta))
        .collect();
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite transforms"));

    const LN_EPS: f64 = -690.775_527_898_213_7; // ln(1e-300)
    let mut clamped = 0usize;
    // ln F(z) = ln(1 - e^-z), ln(1 - F(z)) = -z
    let ln_f: Vec<f64> = z
        .iter()
        .map(|&v| {
            let lf = if v > 1e-3 {
                (-(-v).exp()).ln_1p()
            } else {
                // small z: F ~ z, use log1p(-exp(-z)) via expm1 for accuracy
                (-(-v).exp_m1()).ln()
            };
            if lf < LN_EPS {
                clamped += 1;
                LN_EPS
            } else {
                lf
            }
        })
        .collect();
    let ln_sf: Vec<f64> = z
        .iter()
        .map(|&v| {
            if v > -LN_EPS {
                clamped += 1;
                LN_EPS
            } else {
                -v
            }
        })
        .collect();

    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let w = (2 * (i + 1) - 1) as f64;
        acc += w * (ln_f[i] + ln_sf[n - 1 - i]);
    }
    let statistic = -nf - acc / nf;
    Ok(AdResult {
        statistic,
        n,
        critical_005: AD_CRITICAL_005,
        reject: statistic > AD_CRITICAL_005,
        clamped,
    })
}

/// Rescales the empirical survival to the dimensionless abscissa t/<tau>
/// and pairs it with exp(-x^beta*) for collapse plotting.
pub fn rescale_survival(sample: &WaitingTimeSample, beta_star: f64) -> Result<ScalingCollapse> {
    if sample.durations.is_empty() {
        return Err(Error::EmptyInput("rescale_survival: no durations"));
    }
    if !(beta_star > 0.0) {
        return Err(Error::invalid(format!(
            "beta_star must be positive, got {beta_star}"
        )));
    }
    let mean = stats::mean(&sample.durations);
    let mut rescaled: Vec<f64> = sample.durations.iter().map(|&d| d / mean).collect();
    rescaled.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
    let grid = build_grid(rescaled[0], *rescaled.last().unwrap(), &GridSpec::default())?;
    let empirical = survival_on_grid(&rescaled, &grid);
    let reference = grid.iter().map(|&x| (-(x.powf(beta_star))).exp()).collect();
    Ok(ScalingCollapse {
        beta_star,
        grid,
        empirical,
        reference,
    })
}

/// Evaluates the rescaled empirical survival on a caller-provided
/// dimensionless grid (for cross-instrument collapse comparison).
pub fn rescaled_survival_on(sample: &WaitingTimeSample, grid: &[f64]) -> Result<Vec<f64>> {
    if sample.durations.is_empty() {
        return Err(Error::EmptyInput("rescaled_survival_on: no durations"));
    }
    let mean = stats::mean(&sample.durations);
    let mut rescaled: Vec<f64> = sample.durations.iter().map(|&d| d / mean).collect();
    rescaled.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
    Ok(survival_on_grid(&rescaled, grid))
}
