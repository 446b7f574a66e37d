//! Small statistics toolkit: empirical distributions with censoring, KS
//! distances, hazard tables and the tests used by the acceptance suite.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sorted first-passage times, right-censored at `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    times: Vec<f64>,
    trials: usize,
    censored: usize,
    horizon: f64,
}

impl EmpiricalDistribution {
    /// `observed` holds one entry per trial, `None` for censored ones.
    pub fn new(observed: impl IntoIterator<Item = Option<f64>>, horizon: f64) -> Self {
        let mut times = Vec::new();
        let mut trials = 0;
        for t in observed {
            trials += 1;
            if let Some(t) = t {
                times.push(t);
            }
        }
        times.sort_by(f64::total_cmp);
        let censored = trials - times.len();
        Self { times, trials, censored, horizon }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn censored(&self) -> usize {
        self.censored
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.trials as f64
    }

    /// Right-continuous empirical CDF over all trials.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        k as f64 / self.trials as f64
    }
}

/// Kolmogorov–Smirnov distances against a model CDF on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Censored mass kept at the horizon: compares `F_emp` with `F` on `[0, T]`.
    pub unconditional: f64,
    /// Uncensored times only, against `F(t)/F(T)`.
    pub conditional: f64,
    pub n: usize,
    pub n_observed: usize,
}

/// Supremum distance between the step function of `sorted` (scaled to total
/// mass `mass` out of `n`) and `model` on `[0, end]`, exact over the jumps.
fn sup_distance(sorted: &[f64], n: usize, end: f64, model: impl Fn(f64) -> f64) -> f64 {
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = model(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    // between the last jump and the end the step is flat and F keeps rising
    d.max((model(end) - sorted.len() as f64 / nf).abs())
}

pub fn ks_statistic(emp: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if emp.trials == 0 {
        return Err(Error::EmptySample);
    }
    let unconditional = sup_distance(&emp.times, emp.trials, emp.horizon, &cdf);
    let total = cdf(emp.horizon);
    let conditional = if emp.times.is_empty() || total <= 0.0 {
        0.0
    } else {
        sup_distance(&emp.times, emp.times.len(), emp.horizon, |t| cdf(t) / total)
    };
    Ok(KsResult { unconditional, conditional, n: emp.trials, n_observed: emp.times.len() })
}

/// Asymptotic two-sided Kolmogorov critical value at level `alpha`
/// (0.01 → 1.6276/√n, 0.05 → 1.3581/√n).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardBin {
    pub start: f64,
    pub end: f64,
    /// Trials still without an event at `start`.
    pub at_risk: usize,
    pub events: usize,
    /// `events / at_risk / width`.
    pub hazard: f64,
    /// `−ln(1 − events/at_risk) / width`, unbiased for a constant hazard.
    pub hazard_log: f64,
    pub low_confidence: bool,
}

/// Survivors below which a bin is flagged.
pub const LOW_CONFIDENCE_AT_RISK: usize = 50;

/// Discrete hazard on consecutive bins of `bin_width` covering `[0, horizon)`.
pub fn hazard_estimate(emp: &EmpiricalDistribution, bin_width: f64) -> Result<Vec<HazardBin>> {
    if !(bin_width > 0.0 && bin_width < emp.horizon) {
        return Err(Error::InvalidParameter(format!(
            "bin width {bin_width} outside (0, {})",
            emp.horizon
        )));
    }
    // tolerate rounding in horizon/bin_width so no sliver bin appears
    let bins = ((emp.horizon / bin_width) * (1.0 - 1e-12)).ceil() as usize;
    let mut out = Vec::with_capacity(bins);
    let mut i = 0;
    for b in 0..bins {
        let start = b as f64 * bin_width;
        let end = ((b + 1) as f64 * bin_width).min(emp.horizon);
        let at_risk = emp.trials - i;
        let mut events = 0;
        while i < emp.times.len() && (emp.times[i] < end || (b + 1 == bins && emp.times[i] <= end)) {
            i += 1;
            events += 1;
        }
        let w = end - start;
        let p = if at_risk > 0 { events as f64 / at_risk as f64 } else { 0.0 };
        out.push(HazardBin {
            start,
            end,
            at_risk,
            events,
            hazard: p / w,
            hazard_log: -(-p).ln_1p() / w,
            low_confidence: at_risk < LOW_CONFIDENCE_AT_RISK,
        });
    }
    Ok(out)
}

/// Weighted linear trend of the hazard over bin midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardTrend {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    /// Exposure-weighted mean of `hazard_log` over confident bins.
    pub mean_hazard: f64,
    pub bins_used: usize,
    /// `|slope| ≤ 1.96·se`.
    pub flat_at_95: bool,
}

/// Fit `h ≈ a + b·t` to `hazard_log` on confident bins with weights
/// `at_risk·width/h̄` (its variance is `h/(at_risk·width)` for a constant
/// hazard). `hazard` itself reads low by about `h·width/2` because survivors
/// leave the risk set within the bin.
pub fn hazard_trend(bins: &[HazardBin]) -> Result<HazardTrend> {
    let used: Vec<&HazardBin> = bins.iter().filter(|b| !b.low_confidence).collect();
    if used.len() < 3 {
        return Err(Error::EmptySample);
    }
    let exposure = |b: &HazardBin| b.at_risk as f64 * (b.end - b.start);
    let total: f64 = used.iter().map(|b| exposure(b)).sum();
    let mean = used.iter().map(|b| exposure(b) * b.hazard_log).sum::<f64>() / total;
    let pts: Vec<(f64, f64, f64)> = used
        .iter()
        .map(|b| (0.5 * (b.start + b.end), b.hazard_log, exposure(b) / mean.max(f64::MIN_POSITIVE)))
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    // weights are inverse variances, so var(slope) = 1/Sxx
    let slope_se = (1.0 / sxx).sqrt();
    Ok(HazardTrend {
        slope,
        slope_se,
        intercept: my - slope * mx,
        mean_hazard: mean,
        bins_used: pts.len(),
        flat_at_95: slope.abs() <= 1.96 * slope_se,
    })
}

/// Pearson χ² goodness of fit; returns `(statistic, p-value)`. Cells with
/// zero expectation must be dropped by the caller.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::InvalidParameter("χ² needs matching cell lists of length ≥ 2".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((stat, dist.sf(stat)))
}

/// Normal-approximation confidence interval for a binomial proportion.
pub fn binomial_ci(successes: u64, trials: u64, level: f64) -> (f64, f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + 0.5 * level);
    let half = z * (p * (1.0 - p) / n).sqrt();
    (p, p - half, p + half)
}

/// Probability that a Poisson process of `rate` on `[0, horizon]` has two
/// points within `window` of each other.
///
/// Given `k` points, the chance that all gaps exceed `w` is
/// `(1 − (k−1)·w/H)₊^k`.
pub fn poisson_close_pair_probability(rate: f64, horizon: f64, window: f64) -> f64 {
    let mean = rate * horizon;
    let mut pk = (-mean).exp();
    let mut none = 0.0;
    for k in 0..10_000u32 {
        if k > 0 {
            pk *= mean / k as f64;
        }
        let free = if k <= 1 {
            1.0
        } else {
            (1.0 - (k - 1) as f64 * window / horizon).max(0.0).powi(k as i32)
        };
        none += pk * free;
        if k as f64 > mean && pk < 1e-18 {
            break;
        }
    }
    1.0 - none
}

/// Whether two of the sorted `times` are within `window`.
pub fn has_close_pair(times: &[f64], window: f64) -> bool {
    times.windows(2).any(|w| w[1] - w[0] <= window)
}
