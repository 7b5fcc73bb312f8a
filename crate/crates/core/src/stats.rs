//! Shared descriptive statistics, regression and distribution-distance
//! helpers used throughout the pipeline.

use crate::error::{Error, Result};

/// Descriptive moments of a univariate sample.
///
/// `variance` is the unbiased sample variance; `skewness` and `kurtosis`
/// are the standardized central-moment ratios m3/m2^(3/2) and m4/m2^2
/// (raw kurtosis, 3 for a normal sample).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn descriptive_moments(xs: &[f64]) -> Result<Moments> {
    if xs.len() < 2 {
        return Err(Error::NotEnoughData(format!(
            "descriptive moments need at least 2 observations, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    Ok(Moments {
        n: xs.len(),
        mean: m,
        variance: m2 * n / (n - 1.0),
        skewness,
        kurtosis,
    })
}

/// Ordinary least-squares line fit with the usual slope standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub n: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("ols: x and y length mismatch"));
    }
    if x.len() < 2 {
        return Err(Error::NotEnoughData("ols needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateSample("ols: regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let e = yi - intercept - slope * xi;
        rss += e * e;
    }
    let slope_stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(OlsFit {
        slope,
        intercept,
        slope_stderr,
        n: x.len(),
    })
}

/// Least-squares through the origin: minimizes sum (y - c x)^2.
pub fn ols_through_origin(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::invalid("ols_through_origin: bad input lengths"));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateSample(
            "ols_through_origin: regressor is identically zero".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(sxy / sxx)
}

/// Pearson correlation; `None` when either variable has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("non-finite value in ranks"));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("ks_two_sample"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("non-finite value in ks sample"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("non-finite value in ks sample"));
    let xi = 1.0 / xs.len() as f64;
    let yi = 1.0 / ys.len() as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut diff = 0.0f64;
    let mut sup = 0.0f64;
    while i < xs.len() && j < ys.len() {
        if xs[i] < ys[j] {
            diff += xi;
            i += 1;
        } else if xs[i] > ys[j] {
            diff -= yi;
            j += 1;
        } else {
            let v = xs[i];
            while i < xs.len() && xs[i] == v {
                diff += xi;
                i += 1;
            }
            while j < ys.len() && ys[j] == v {
                diff -= yi;
                j += 1;
            }
        }
        sup = sup.max(diff.abs());
    }
    // remaining mass only moves |diff| toward its endpoint value
    Ok(sup)
}

/// One-sample KS statistic against a reference CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("ks_one_sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("non-finite value in ks sample"));
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        sup = sup.max((f - lo).abs()).max((hi - f).abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_symmetric_pair() {
        let m = descriptive_moments(&[-1.0, 1.0]).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!((m.variance - 2.0).abs() < 1e-15);
        assert_eq!(m.skewness, 0.0);
    }

    #[test]
    fn moments_match_normal_shape() {
        // deterministic quasi-sample via inverse normal on a fine grid
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        let xs: Vec<f64> = (1..20000)
            .map(|i| normal.inverse_cdf(i as f64 / 20000.0))
            .collect();
        let m = descriptive_moments(&xs).unwrap();
        assert!(m.mean.abs() < 1e-10);
        assert!((m.variance - 1.0).abs() < 5e-3);
        assert!(m.skewness.abs() < 1e-10);
        assert!((m.kurtosis - 3.0).abs() < 0.1);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
    }

    #[test]
    fn ols_rejects_constant_regressor() {
        assert!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn through_origin_closed_form() {
        // constant y, varying x: c = <xy>/<x^2>
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 2.0, 2.0];
        let c = ols_through_origin(&x, &y).unwrap();
        assert!((c - 12.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_degenerate_is_none() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let a = [1.0, 2.0];
        let b = [10.0, 11.0];
        assert!((ks_two_sample(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        // sample at exact uniform quantile midpoints: D = 1/(2n)
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }
}
