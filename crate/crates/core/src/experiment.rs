//! Monte Carlo harness: μ×μ sampling, trials, ensembles and the estimators
//! built on top of them.
//!
//! Each trial draws from its own ChaCha8 stream: the master seed selects the
//! key and the trial index selects the stream, so an outcome depends only on
//! `(config, trial_index)` and ensembles are independent of scheduling.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encounter::{all_encounters, first_encounter, JointState};
use crate::error::{Error, Result};
use crate::flow::{flow, ParticleState};
use crate::geometry::{BilliardTable, TorusPoint};
use crate::rate::{exponential_cdf, rho_closed_form, transversal_speed_mean};
use crate::stats::{
    binomial_ci, has_close_pair, hazard_estimate, hazard_trend, ks_statistic, EmpiricalDistribution,
    HazardBin, HazardTrend, KsResult,
};

/// Proposals without an acceptance before sampling is declared stalled.
pub const STALL_PROPOSALS: usize = 10_000;

/// Physical knobs of an experiment; the table is supplied separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub xi: f64,
    /// Macroscopic horizon; trials run to `T/ε` in particle-1 time.
    #[serde(rename = "T")]
    pub t_macro: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub table: BilliardTable,
    pub params: ExperimentParams,
}

impl ExperimentConfig {
    pub fn new(table: BilliardTable, params: ExperimentParams) -> Result<Self> {
        let p = &params;
        if !(0.0..=1.0).contains(&p.lambda) {
            return Err(Error::OutOfRangeLambda(p.lambda));
        }
        if !(p.epsilon > 0.0 && p.epsilon < p.xi) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < epsilon < xi (epsilon {}, xi {})",
                p.epsilon, p.xi
            )));
        }
        if p.epsilon >= p.xi / 10.0 {
            log::warn!("epsilon {} is not small against xi {}", p.epsilon, p.xi);
        }
        if !(p.t_macro >= 0.0 && p.t_macro.is_finite()) {
            return Err(Error::InvalidParameter(format!("T = {} must be finite and ≥ 0", p.t_macro)));
        }
        if p.trials == 0 {
            return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
        }
        Ok(Self { table, params })
    }

    /// Particle-1 time horizon `T/ε`.
    pub fn horizon(&self) -> f64 {
        self.params.t_macro / self.params.epsilon
    }

    pub fn rho(&self) -> f64 {
        rho_closed_form(self.params.lambda, self.table.domain_area())
            .expect("validated lambda and area")
            .rho
    }
}

/// Deterministic RNG for `(master_seed, trial_index)`.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// A μ-distributed phase point: position uniform on the domain by rejection,
/// direction uniform.
pub fn sample_state(table: &BilliardTable, rng: &mut impl Rng) -> Result<ParticleState> {
    if table.domain_area() < 0.1 {
        return Err(Error::RejectionStall { acceptance: table.domain_area() });
    }
    for _ in 0..STALL_PROPOSALS {
        let p = TorusPoint::new(rng.random(), rng.random());
        if table.is_free(&p) {
            return Ok(ParticleState { position: p, angle: rng.random::<f64>() * TAU });
        }
    }
    Err(Error::RejectionStall { acceptance: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u64,
    /// Unscaled time `s` of the first good encounter.
    pub first_good_time: Option<f64>,
    /// `ε·s`, in `[0, T]`.
    pub scaled_time: Option<f64>,
    pub skipped_approaches: usize,
    /// `ε·s` for the first ε-visit regardless of the ξ constraints.
    pub first_any_scaled_time: Option<f64>,
    /// Good encounters found; at most 1 since the trial stops at the first.
    pub good_count_total: usize,
    pub grazing_flagged: bool,
    /// Error message for a trial that could not be completed.
    pub fault: Option<String>,
}

impl TrialOutcome {
    /// Whether the trial enters the statistics.
    pub fn usable(&self) -> bool {
        self.fault.is_none() && !self.grazing_flagged
    }
}

pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialOutcome> {
    let p = &config.params;
    let mut rng = trial_rng(p.seed, trial_index);
    let s1 = sample_state(&config.table, &mut rng)?;
    let s2 = sample_state(&config.table, &mut rng)?;
    let joint = JointState::new(s1, s2, p.lambda)?;
    let first = first_encounter(&joint, p.epsilon, p.xi, config.horizon(), &config.table)?;
    let time = first.event.map(|e| e.time);
    Ok(TrialOutcome {
        trial_index,
        first_good_time: time,
        scaled_time: time.map(|s| (p.epsilon * s).min(p.t_macro)),
        skipped_approaches: first.skipped,
        first_any_scaled_time: first.first_any.map(|s| (p.epsilon * s).min(p.t_macro)),
        good_count_total: time.is_some() as usize,
        grazing_flagged: first.grazing,
        fault: None,
    })
}

fn faulted(trial_index: u64, err: &Error) -> TrialOutcome {
    TrialOutcome {
        trial_index,
        first_good_time: None,
        scaled_time: None,
        skipped_approaches: 0,
        first_any_scaled_time: None,
        good_count_total: 0,
        grazing_flagged: false,
        fault: Some(err.to_string()),
    }
}

/// Evaluate `f` on `0..n` with `workers` threads, results in index order.
pub fn parallel_map<T: Send>(
    n: usize,
    workers: usize,
    f: impl Fn(u64) -> T + Sync + Send,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n as u64).into_par_iter().map(&f).collect()))
}

/// Predicted rate of *good* encounters per unit scaled time: the full
/// crossing rate `2ρ` restricted to `ξ`-clear positions of particle 1 and to
/// `ξ`-transversal relative angles.
pub fn predicted_good_rate(table: &BilliardTable, lambda: f64, xi: f64) -> Result<f64> {
    let area = table.domain_area();
    let clear_fraction = table.clearance_area(xi, 2000) / area;
    Ok(2.0 * clear_fraction * transversal_speed_mean(lambda, xi)? / area)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub params: ExperimentParams,
    pub rho: f64,
    pub trials: usize,
    pub usable_trials: usize,
    pub faulted: usize,
    pub grazing_excluded: usize,
    pub ks: KsResult,
    pub censored_fraction: f64,
    /// `e^{−ρT}`.
    pub expected_censored_fraction: f64,
    pub hazard_bin_width: f64,
    pub hazard: Vec<HazardBin>,
    pub hazard_trend: Option<HazardTrend>,
    pub mean_skipped_approaches: f64,
    /// Diagnostic: good-encounter rate predicted from crossing geometry.
    pub predicted_good_rate: f64,
    /// KS distance against `1 − e^{−r t}` with `r` the predicted good rate.
    pub ks_vs_predicted_rate: KsResult,
    /// First ε-visit of any kind against `1 − e^{−2ρt}`: the crossing rate of
    /// a distance-ε neighbourhood, whose cross-section is `2ε`.
    pub ks_first_any_vs_crossing_rate: KsResult,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub outcomes: Vec<TrialOutcome>,
    pub distribution: EmpiricalDistribution,
    pub summary: EnsembleSummary,
}

/// Hazard bin width used for ensemble summaries: `T/60`.
pub fn default_bin_width(t_macro: f64) -> f64 {
    t_macro / 60.0
}

/// Run all trials and summarize.
pub fn run_ensemble(config: &ExperimentConfig, workers: usize) -> Result<EnsembleResult> {
    let outcomes = parallel_map(config.params.trials, workers, |i| {
        run_trial(config, i).unwrap_or_else(|e| faulted(i, &e))
    })?;
    summarize(config, outcomes)
}

/// Build the distribution and summary from trial outcomes in index order.
pub fn summarize(config: &ExperimentConfig, outcomes: Vec<TrialOutcome>) -> Result<EnsembleResult> {
    let p = config.params;
    let trials = outcomes.len();
    let faults = outcomes.iter().filter(|o| o.fault.is_some()).count();
    if faults * 1000 > trials {
        return Err(Error::TooManyFaults { faulted: faults, trials });
    }
    let grazing = outcomes.iter().filter(|o| o.fault.is_none() && o.grazing_flagged).count();
    let usable: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.usable()).collect();
    let distribution = EmpiricalDistribution::new(usable.iter().map(|o| o.scaled_time), p.t_macro);
    let rho = config.rho();
    let ks = ks_statistic(&distribution, |t| exponential_cdf(rho, t))?;
    let bin_width = default_bin_width(p.t_macro);
    let hazard = if p.t_macro > 0.0 { hazard_estimate(&distribution, bin_width)? } else { Vec::new() };
    let trend = hazard_trend(&hazard).ok();
    let good_rate = predicted_good_rate(&config.table, p.lambda, p.xi)?;
    let ks_pred = ks_statistic(&distribution, |t| exponential_cdf(good_rate, t))?;
    let any = EmpiricalDistribution::new(usable.iter().map(|o| o.first_any_scaled_time), p.t_macro);
    let ks_any = ks_statistic(&any, |t| exponential_cdf(2.0 * rho, t))?;
    let mean_skipped =
        usable.iter().map(|o| o.skipped_approaches as f64).sum::<f64>() / usable.len().max(1) as f64;
    let summary = EnsembleSummary {
        params: p,
        rho,
        trials,
        usable_trials: usable.len(),
        faulted: faults,
        grazing_excluded: grazing,
        ks,
        censored_fraction: distribution.censored_fraction(),
        expected_censored_fraction: (-rho * p.t_macro).exp(),
        hazard_bin_width: bin_width,
        hazard,
        hazard_trend: trend,
        mean_skipped_approaches: mean_skipped,
        predicted_good_rate: good_rate,
        ks_vs_predicted_rate: ks_pred,
        ks_first_any_vs_crossing_rate: ks_any,
    };
    Ok(EnsembleResult { outcomes, distribution, summary })
}

/// Monte Carlo estimate of the probability of a good encounter within flow
/// time `delta`, for particle 1 fixed at `(q1, φ1)` and particle 2 μ-random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroEstimate {
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub proposals: u64,
    /// `ρ·δ·ε`.
    pub reference: f64,
    /// `(ρ ∓ η)·δ·ε` with `η = 0.1ρ`.
    pub band: (f64, f64),
}

/// Only particle-2 starts within `δ(1+λ) + ε` of `q1` can meet particle 1 by
/// time `δ`, so particle 2 is drawn uniformly from that disk (and the domain)
/// and the hit fraction is rescaled by the disk's share of `|D|`.
pub fn micro_encounter_probability(
    q1: TorusPoint,
    phi1: f64,
    config: &ExperimentConfig,
    delta: f64,
    n: u64,
    workers: usize,
) -> Result<MicroEstimate> {
    let p = config.params;
    let table = &config.table;
    if table.clearance(&q1) <= 2.0 * p.xi {
        return Err(Error::InvalidParameter("base point needs clearance > 2ξ".into()));
    }
    if !(delta > 0.0 && delta < p.xi) {
        return Err(Error::InvalidParameter(format!("need 0 < delta < xi (delta {delta})")));
    }
    let radius = delta * (1.0 + p.lambda) + p.epsilon;
    let p1 = ParticleState { position: q1, angle: phi1 };
    const CHUNK: u64 = 10_000;
    let chunks = n.div_ceil(CHUNK);
    let counts = parallel_map(chunks as usize, workers, |c| -> Result<u64> {
        let mut rng = trial_rng(p.seed, c);
        let m = CHUNK.min(n - c * CHUNK);
        let mut hits = 0;
        for _ in 0..m {
            let r = radius * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * TAU;
            let q2 = TorusPoint::new(q1.x + r * a.cos(), q1.y + r * a.sin());
            if !table.is_free(&q2) {
                continue;
            }
            let p2 = ParticleState { position: q2, angle: rng.random::<f64>() * TAU };
            let joint = JointState::new(p1, p2, p.lambda)?;
            if first_encounter(&joint, p.epsilon, p.xi, delta, table)?.event.is_some() {
                hits += 1;
            }
        }
        Ok(hits)
    })?;
    let hits = counts.into_iter().sum::<Result<u64>>()?;
    let scale = PI * radius * radius / table.domain_area();
    let (frac, lo, hi) = binomial_ci(hits, n, 0.95);
    let rho = config.rho();
    let reference = rho * delta * p.epsilon;
    Ok(MicroEstimate {
        probability: frac * scale,
        ci_low: lo * scale,
        ci_high: hi * scale,
        hits,
        proposals: n,
        reference,
        band: (0.9 * reference, 1.1 * reference),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReencounterStats {
    pub trials: usize,
    /// Trials with at least one good encounter.
    pub with_good: usize,
    /// Trials with two good encounters at most `window` apart.
    pub with_reencounter: usize,
    pub fraction: f64,
    pub single_fraction: f64,
    /// Smallest separation of consecutive good encounters seen in any trial.
    pub min_good_separation: Option<f64>,
}

/// Fraction of trials with two good encounters within `window` (particle-1
/// time), over the horizon `T/ε`.
pub fn reencounter_fraction(
    config: &ExperimentConfig,
    window: f64,
    workers: usize,
) -> Result<ReencounterStats> {
    let p = config.params;
    if !(window > 0.0 && window <= 100.0) {
        return Err(Error::InvalidParameter(format!("window {window} outside (0, 100]")));
    }
    let per_trial = parallel_map(p.trials, workers, |i| -> Result<(bool, bool, Option<f64>)> {
        let mut rng = trial_rng(p.seed, i);
        let s1 = sample_state(&config.table, &mut rng)?;
        let s2 = sample_state(&config.table, &mut rng)?;
        let joint = JointState::new(s1, s2, p.lambda)?;
        let log = all_encounters(&joint, p.epsilon, p.xi, config.horizon(), &config.table)?;
        let good: Vec<f64> = log.events.iter().filter(|e| e.good).map(|e| e.time).collect();
        Ok((!good.is_empty(), has_close_pair(&good, window), log.min_good_separation))
    })?;
    let mut stats = ReencounterStats {
        trials: p.trials,
        with_good: 0,
        with_reencounter: 0,
        fraction: 0.0,
        single_fraction: 0.0,
        min_good_separation: None,
    };
    for r in per_trial {
        let (any, close, sep) = r?;
        stats.with_good += any as usize;
        stats.with_reencounter += close as usize;
        if let Some(s) = sep {
            stats.min_good_separation = Some(stats.min_good_separation.map_or(s, |m: f64| m.min(s)));
        }
    }
    stats.fraction = stats.with_reencounter as f64 / p.trials as f64;
    stats.single_fraction = stats.with_good as f64 / p.trials as f64;
    Ok(stats)
}

/// Velocity autocorrelation `E[⟨v(0), v(t)⟩]` under μ at the given lags, a
/// qualitative picture of correlation decay.
pub fn velocity_autocorrelation(
    table: &BilliardTable,
    lags: &[f64],
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<(f64, f64)>> {
    let rows = parallel_map(samples, workers, |i| -> Result<Vec<f64>> {
        let mut rng = trial_rng(seed, i);
        let s = sample_state(table, &mut rng)?;
        let v0 = s.velocity();
        lags.iter()
            .map(|&t| {
                let v = flow(&s, t, table)?.velocity();
                Ok(v0[0] * v[0] + v0[1] * v[1])
            })
            .collect()
    })?;
    let mut sums = vec![0.0; lags.len()];
    for r in rows {
        for (acc, x) in sums.iter_mut().zip(r?) {
            *acc += x;
        }
    }
    Ok(lags.iter().zip(sums).map(|(&t, s)| (t, s / samples as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fh1;

    fn config(trials: usize, t_macro: f64, epsilon: f64) -> ExperimentConfig {
        let params = ExperimentParams { lambda: 0.37, epsilon, xi: 0.05, t_macro, trials, seed: 42 };
        ExperimentConfig::new(fh1(), params).unwrap()
    }

    #[test]
    fn samples_avoid_scatterers_and_are_isotropic() {
        let t = fh1();
        let mut rng = trial_rng(1, 0);
        let n = 100_000;
        let (mut c, mut s) = (0.0, 0.0);
        for _ in 0..n {
            let st = sample_state(&t, &mut rng).unwrap();
            assert!(t.is_free(&st.position));
            c += st.angle.cos();
            s += st.angle.sin();
        }
        let sigma = (0.5 / n as f64).sqrt();
        assert!((c / n as f64).abs() < 3.0 * sigma);
        assert!((s / n as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = config(1, 1.0, 0.004);
        let a = run_trial(&cfg, 17).unwrap();
        let b = run_trial(&cfg, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(run_trial(&cfg, 18).unwrap(), a);
    }

    #[test]
    fn zero_horizon_censors_everything() {
        let cfg = config(20, 0.0, 0.004);
        let r = run_ensemble(&cfg, 1).unwrap();
        assert_eq!(r.distribution.censored(), 20);
    }

    #[test]
    fn huge_epsilon_meets_immediately() {
        // ε ≥ √2/2 covers the torus; ξ must stay above 10ε, so relax the
        // config check by building the joint search directly
        let t = fh1();
        let mut rng = trial_rng(3, 0);
        for _ in 0..50 {
            let j = JointState::new(sample_state(&t, &mut rng).unwrap(), sample_state(&t, &mut rng).unwrap(), 0.37)
                .unwrap();
            let log = all_encounters(&j, 0.75, 0.8, 1.0, &t).unwrap();
            assert_eq!(log.events[0].time, 0.0);
        }
    }

    #[test]
    fn single_trial_distribution() {
        let cfg = config(1, 1.0, 0.004);
        let r = run_ensemble(&cfg, 1).unwrap();
        assert_eq!(r.distribution.trials(), 1);
    }

    #[test]
    fn ensemble_independent_of_workers() {
        let cfg = config(64, 0.5, 0.004);
        let a = run_ensemble(&cfg, 1).unwrap();
        let b = run_ensemble(&cfg, 3).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn reencounter_below_xi_is_zero() {
        let cfg = config(100, 1.0, 0.004);
        let r = reencounter_fraction(&cfg, 0.5 * cfg.params.xi, 1).unwrap();
        assert_eq!(r.with_reencounter, 0);
        if let Some(s) = r.min_good_separation {
            assert!(s > cfg.params.xi - cfg.params.epsilon);
        }
    }

    #[test]
    fn config_validation() {
        let params = ExperimentParams { lambda: 0.37, epsilon: 0.06, xi: 0.05, t_macro: 1.0, trials: 1, seed: 0 };
        assert!(ExperimentConfig::new(fh1(), params).is_err());
        let params = ExperimentParams { trials: 0, epsilon: 0.005, ..params };
        assert!(ExperimentConfig::new(fh1(), params).is_err());
        let params = ExperimentParams { lambda: 1.2, epsilon: 0.001, ..params };
        assert!(matches!(ExperimentConfig::new(fh1(), params), Err(Error::OutOfRangeLambda(_))));
    }
}
