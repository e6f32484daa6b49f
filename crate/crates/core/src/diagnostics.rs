//! Chain diagnostics: autocovariance, integrated autocorrelation time,
//! quantile intervals and histogram tooling for posterior comparisons.

use crate::error::{Error, Result};

/// Autocorrelation `rho(0..=max_lag)` of a scalar series. Lag `j` uses
/// the biased-window estimator
///
/// ```text
/// B(j) = 1/(n-j) sum_{k=1}^{n-j} (d_k - mean)(d_{k+j} - mean)
/// ```
///
/// normalised by `B(0)`; a flat series has no scale and is rejected.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InvalidArgument("autocorrelation needs at least two points".into()));
    }
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "maximum lag {max_lag} must be below the series length {n}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let b0 = autocovariance(series, mean, 0);
    if b0 == 0.0 {
        return Err(Error::DegenerateSeries("series is constant".into()));
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    rho.push(1.0);
    for j in 1..=max_lag {
        rho.push(autocovariance(series, mean, j) / b0);
    }
    Ok(rho)
}

fn autocovariance(series: &[f64], mean: f64, lag: usize) -> f64 {
    let n = series.len();
    let mut acc = 0.0;
    for k in 0..n - lag {
        acc += (series[k] - mean) * (series[k + lag] - mean);
    }
    acc / (n - lag) as f64
}

/// Default reporting depth: `floor(10 log10 n)` lags.
pub fn default_max_lag(n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    (10.0 * (n as f64).log10()).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IactEstimate {
    /// Integrated autocorrelation time `1 + 2 sum rho(j)`.
    pub tau: f64,
    /// Summation window chosen by the self-consistent rule.
    pub window: usize,
    /// False when the window hit a third of the series without
    /// satisfying the rule; `tau` is then a lower-confidence estimate.
    pub converged: bool,
}

/// Integrated autocorrelation time with the self-consistent window: the
/// smallest `J` with `J >= 3 tau(J)`. Needs at least 100 points.
pub fn iact(series: &[f64]) -> Result<IactEstimate> {
    let n = series.len();
    if n < 100 {
        return Err(Error::InvalidArgument(format!(
            "integrated autocorrelation needs at least 100 points, got {n}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let b0 = autocovariance(series, mean, 0);
    if b0 == 0.0 {
        return Err(Error::DegenerateSeries("series is constant".into()));
    }
    let cap = n / 3;
    let mut tau = 1.0;
    for j in 1..=cap {
        tau += 2.0 * autocovariance(series, mean, j) / b0;
        if (j as f64) >= 3.0 * tau {
            return Ok(IactEstimate { tau, window: j, converged: true });
        }
    }
    Ok(IactEstimate { tau, window: cap, converged: false })
}

/// Equal-tail credible interval from empirical quantiles with linear
/// interpolation (`h = p (n - 1)`). A constant series collapses to a
/// zero-width interval.
pub fn credible_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("interval needs at least one sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must be in (0, 1), got {level}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Mean and sample standard deviation (the `n - 1` normalisation).
pub fn mean_and_std(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("samples".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Ok((mean, (ss / (n - 1) as f64).sqrt()))
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    /// Samples outside `[lo, hi]`, excluded from the counts.
    pub outside: usize,
}

impl Histogram {
    /// Bin probabilities, normalised over in-range samples.
    pub fn mass(&self) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / bins as f64)
            .collect()
    }
}

/// Histogram over the data range `[min, max]`: every sample lands in a
/// bin, so the counts always sum to the series length. A constant series
/// puts all mass in the first bin.
pub fn histogram_auto(samples: &[f64], bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("histogram needs at least one sample".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("samples".into()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        let mut counts = vec![0usize; bins];
        counts[0] = samples.len();
        return Ok(Histogram { lo, hi, counts, outside: 0 });
    }
    histogram(samples, bins, (lo, hi))
}

/// Uniform histogram on `[lo, hi]`; the top edge closes the last bin.
pub fn histogram(samples: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("bad histogram range ({lo}, {hi})")));
    }
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    let width = hi - lo;
    for &v in samples {
        if !v.is_finite() || v < lo || v > hi {
            outside += 1;
            continue;
        }
        let idx = (((v - lo) / width) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(Histogram { lo, hi, counts, outside })
}

/// Total variation distance `0.5 sum |p - q|` between two discrete
/// distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions have {} and {} bins",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone)]
pub struct ComponentSummary {
    pub mean: f64,
    pub std: f64,
    pub iact: IactEstimate,
    pub interval: (f64, f64),
}

/// Full per-component report used by the chain diagnostics output.
pub fn summarize(samples: &[f64], level: f64) -> Result<ComponentSummary> {
    let (mean, std) = mean_and_std(samples)?;
    let iact = iact(samples)?;
    let interval = credible_interval(samples, level)?;
    Ok(ComponentSummary { mean, std, iact, interval })
}
