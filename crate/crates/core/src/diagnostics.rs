//! Ensemble versions of the hyperbolicity diagnostics, as serializable
//! reports. Each report is a pure function of its arguments and the seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{parallel_map, sample_state, trial_rng, velocity_autocorrelation};
use crate::geometry::BilliardTable;
use crate::tangent::{
    audit_cone_invariance, itinerary_counts, curve_length, distortion_ratio, expansion_factor,
    fit_quadratic, ConeCheckContext, QuadraticFit, UnstableCurve,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub samples: usize,
    pub collisions: usize,
    pub c_f: f64,
    pub checks: usize,
    pub violations: usize,
    /// Samples cut short by a near-grazing collision.
    pub grazing_samples: usize,
    /// Samples whose starting cone could not be built (no past collision found).
    pub skipped: usize,
}

/// Transport `samples` random cone vectors through `collisions` collisions
/// each, counting cone-membership failures.
pub fn cone_report(
    table: &BilliardTable,
    samples: usize,
    collisions: usize,
    c_f: f64,
    seed: u64,
    workers: usize,
) -> Result<ConeReport> {
    let audits = parallel_map(samples, workers, |i| {
        let mut rng = trial_rng(seed, i);
        let s = sample_state(table, &mut rng)?;
        audit_cone_invariance(&s, collisions, c_f, table, &mut rng)
    })?;
    let mut r = ConeReport { samples, collisions, c_f, checks: 0, violations: 0, grazing_samples: 0, skipped: 0 };
    for a in audits {
        match a {
            Ok(a) => {
                r.checks += a.checks;
                r.violations += a.violations;
                r.grazing_samples += a.grazing as usize;
            }
            Err(Error::UndefinedCone | Error::GrazingDerivative { .. }) => r.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub n: usize,
    pub samples: usize,
    /// Minimum over samples of `factor(n)^{1/n}`.
    pub min_rate: f64,
    /// Geometric mean of `factor(n)^{1/n}`.
    pub mean_rate: f64,
    pub max_rate: f64,
    pub skipped: usize,
}

/// `expansion_factor(n)^{1/n}` over random cone vectors at μ-random states.
pub fn expansion_report(
    table: &BilliardTable,
    n: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<ExpansionReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("expansion needs n ≥ 1".into()));
    }
    let rates = parallel_map(samples, workers, |i| -> Result<Option<f64>> {
        let mut rng = trial_rng(seed, i);
        let s = sample_state(table, &mut rng)?;
        let Ok(ctx) = ConeCheckContext::of_state(&s, crate::tangent::DEFAULT_C_F, table) else {
            return Ok(None);
        };
        let v = ctx.random_cone_vector(&mut rng);
        match expansion_factor(&s, &v, n, table) {
            Ok(f) => Ok(Some(f.powf(1.0 / n as f64))),
            Err(Error::GrazingDerivative { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let mut ok = Vec::with_capacity(samples);
    for r in rates {
        if let Some(x) = r? {
            ok.push(x);
        }
    }
    if ok.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(ExpansionReport {
        n,
        samples,
        min_rate: ok.iter().copied().fold(f64::INFINITY, f64::min),
        mean_rate: (ok.iter().map(|x| x.ln()).sum::<f64>() / ok.len() as f64).exp(),
        max_rate: ok.iter().copied().fold(0.0, f64::max),
        skipped: samples - ok.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub ns: Vec<usize>,
    /// Mean number of distinct itineraries over the curve centers, per `n`.
    pub mean_counts: Vec<f64>,
    pub max_counts: Vec<usize>,
    pub centers: usize,
    pub halfwidth: f64,
    pub samples_per_curve: usize,
    /// Fit of the maximal counts against `n²`.
    pub fit: QuadraticFit,
}

/// Itinerary counts on short unstable curves through `centers` random points.
pub fn complexity_report(
    table: &BilliardTable,
    ns: &[usize],
    centers: usize,
    halfwidth: f64,
    samples_per_curve: usize,
    seed: u64,
    workers: usize,
) -> Result<ComplexityReport> {
    let rows = parallel_map(centers, workers, |i| -> Result<Option<Vec<usize>>> {
        let mut rng = trial_rng(seed, i);
        let s = sample_state(table, &mut rng)?;
        match itinerary_counts(&s, halfwidth, ns, samples_per_curve, table) {
            Ok(row) => Ok(Some(row)),
            Err(Error::UndefinedCone) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let mut sums = vec![0.0; ns.len()];
    let mut maxes = vec![0usize; ns.len()];
    let mut used = 0;
    for r in rows {
        let Some(row) = r? else { continue };
        used += 1;
        for (k, c) in row.into_iter().enumerate() {
            sums[k] += c as f64;
            maxes[k] = maxes[k].max(c);
        }
    }
    if used == 0 {
        return Err(Error::EmptySample);
    }
    Ok(ComplexityReport {
        ns: ns.to_vec(),
        mean_counts: sums.iter().map(|s| s / used as f64).collect(),
        max_counts: maxes.clone(),
        centers: used,
        halfwidth,
        samples_per_curve,
        fit: fit_quadratic(ns, &maxes),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSample {
    pub n: usize,
    pub curve_length: f64,
    pub gap_length: f64,
    pub log_ratio: f64,
    /// `|log ratio| · |W|^{2/3} / |W(Y,Z)|`.
    pub c_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub requested: usize,
    /// Curves rejected because their backward images left one homogeneity label.
    pub rejected: usize,
    /// Smallest `C_d` bounding every admissible sample.
    pub c_d: f64,
    pub samples: Vec<DistortionSample>,
}

/// Distortion log-ratios on random homogeneous curves of transverse
/// half-length `halfwidth`, with `n` uniform in `n_range`.
pub fn distortion_report(
    table: &BilliardTable,
    requested: usize,
    halfwidth: f64,
    n_range: (usize, usize),
    seed: u64,
    workers: usize,
) -> Result<DistortionReport> {
    // a few attempts per requested sample; inhomogeneous curves are discarded
    let attempts = requested * 4;
    let raw = parallel_map(attempts, workers, |i| -> Result<Option<DistortionSample>> {
        let mut rng = trial_rng(seed, i);
        let s = sample_state(table, &mut rng)?;
        let Ok(curve) = UnstableCurve::through(&s, table) else { return Ok(None) };
        let h = curve.param_for_length(halfwidth);
        let n = rng.random_range(n_range.0..=n_range.1);
        let (uy, uz) = (h * (2.0 * rng.random::<f64>() - 1.0), h * (2.0 * rng.random::<f64>() - 1.0));
        match distortion_ratio(&curve, uy, uz, n, table) {
            Ok(r) => {
                let w = 2.0 * halfwidth;
                let gap = curve_length(&curve, uy, uz);
                let log_ratio = r.ln();
                Ok(Some(DistortionSample {
                    n,
                    curve_length: w,
                    gap_length: gap,
                    log_ratio,
                    c_d: if gap > 0.0 { log_ratio.abs() * w.powf(2.0 / 3.0) / gap } else { 0.0 },
                }))
            }
            Err(Error::NotHomogeneous { .. } | Error::GrazingDerivative { .. } | Error::UndefinedCone) => {
                Ok(None)
            }
            Err(e) => Err(e),
        }
    })?;
    let mut samples = Vec::new();
    let mut rejected = 0;
    for r in raw {
        if samples.len() == requested {
            break;
        }
        match r? {
            Some(s) => samples.push(s),
            None => rejected += 1,
        }
    }
    let c_d = samples.iter().map(|s| s.c_d).fold(0.0, f64::max);
    Ok(DistortionReport { requested, rejected, c_d, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCurve {
    pub samples: usize,
    /// `(lag, E⟨v(0), v(t)⟩)`.
    pub correlation: Vec<(f64, f64)>,
}

/// Velocity autocorrelation on an evenly spaced lag grid `0, dt, …, max_lag`.
pub fn mixing_curve(
    table: &BilliardTable,
    max_lag: f64,
    points: usize,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<MixingCurve> {
    let lags: Vec<f64> = (0..points.max(2)).map(|i| max_lag * i as f64 / (points.max(2) - 1) as f64).collect();
    Ok(MixingCurve { samples, correlation: velocity_autocorrelation(table, &lags, samples, seed, workers)? })
}
