//! Acceptance criteria A1–A8. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing output capture) before asserting, so a full run prints
//! the whole scorecard. Tolerances are the literal acceptance thresholds.

mod common;

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::OnceLock;

use billiard_core::diagnostics::{complexity_report, cone_report, distortion_report, expansion_report};
use billiard_core::experiment::{predicted_good_rate, trial_rng};
use billiard_core::fixtures::fh1;
use billiard_core::report::times_csv;
use billiard_core::stats::poisson_close_pair_probability;
use billiard_core::*;
use rand::Rng;

fn report(id: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "\n{id} {verdict}: {detail}");
}

const A1_TRIALS: usize = 20_000;

fn main_config(lambda: f64) -> ExperimentConfig {
    let table = fh1();
    let rho = rho(lambda, table.domain_area()).unwrap();
    let params = ExperimentParams { lambda, epsilon: 0.005, xi: 0.05, t_macro: 3.0 / rho, trials: A1_TRIALS, seed: 2024 };
    ExperimentConfig::new(table, params).unwrap()
}

/// The λ = 0.37 main experiment, shared by A1 and A2.
fn main_ensemble() -> &'static EnsembleResult {
    static RESULT: OnceLock<EnsembleResult> = OnceLock::new();
    RESULT.get_or_init(|| run_ensemble(&main_config(0.37), 1).unwrap())
}

#[test]
fn a1_first_encounter_law_is_exponential() {
    let mut all = true;
    let mut lines = Vec::new();
    for lambda in [0.37, 0.29, 0.61] {
        let owned;
        let r = if lambda == 0.37 {
            main_ensemble()
        } else {
            owned = run_ensemble(&main_config(lambda), 1).unwrap();
            &owned
        };
        let s = &r.summary;
        let ks_ok = s.ks.unconditional <= 0.02;
        let cens_ok = (s.censored_fraction - s.expected_censored_fraction).abs() <= 0.02;
        all &= ks_ok && cens_ok;
        lines.push(format!(
            "λ={lambda}: KS {:.4} (≤ 0.02 {}), censored {:.4} vs e^(-ρT) {:.4} (±0.02 {}), \
             KS vs predicted good rate {:.3}: {:.4}, KS first visit vs 2ρ: {:.4}",
            s.ks.unconditional,
            ks_ok,
            s.censored_fraction,
            s.expected_censored_fraction,
            cens_ok,
            s.predicted_good_rate,
            s.ks_vs_predicted_rate.unconditional,
            s.ks_first_any_vs_crossing_rate.unconditional,
        ));
    }
    report("A1", all, format!("N={A1_TRIALS} per λ; {}", lines.join("; ")));
    assert!(all);
}

#[test]
fn a2_hazard_is_flat_at_rho() {
    let s = &main_ensemble().summary;
    let trend = s.hazard_trend.expect("enough confident hazard bins");
    let rel = trend.mean_hazard / s.rho - 1.0;
    let pass = trend.flat_at_95 && rel.abs() <= 0.10;
    report(
        "A2",
        pass,
        format!(
            "slope {:.4} ± {:.4} (1.96σ {:.4}, flat {}), mean hazard {:.4} vs ρ {:.4} ({:+.1}%, ≤ 10%)",
            trend.slope,
            trend.slope_se,
            1.96 * trend.slope_se,
            trend.flat_at_95,
            trend.mean_hazard,
            s.rho,
            100.0 * rel
        ),
    );
    assert!(pass);
}

#[test]
fn a3_micro_encounter_probability() {
    let table = fh1();
    let rho = rho(0.37, table.domain_area()).unwrap();
    let params = ExperimentParams { lambda: 0.37, epsilon: 1e-3, xi: 0.05, t_macro: 1.0, trials: 1, seed: 3 };
    let mut rng = trial_rng(33, 0);
    let mut ratios = Vec::new();
    while ratios.len() < 10 {
        let q1 = TorusPoint::new(rng.random(), rng.random());
        if table.clearance(&q1) <= 2.0 * params.xi {
            continue;
        }
        let phi1 = rng.random::<f64>() * TAU;
        let cfg = ExperimentConfig::new(table.clone(), ExperimentParams { seed: 300 + ratios.len() as u64, ..params })
            .unwrap();
        let m = micro_encounter_probability(q1, phi1, &cfg, 0.01, 1_000_000, 1).unwrap();
        assert!((m.reference - rho * 0.01 * 1e-3).abs() < 1e-15);
        ratios.push(m.probability / m.reference);
    }
    let pass = ratios.iter().all(|r| (r - 1.0).abs() <= 0.10);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    report("A3", pass, format!("estimate / ρδε at 10 base points: [{}] (each within 1 ± 0.10)", shown.join(", ")));
    assert!(pass);
}

#[test]
fn a4_rate_function_closed_form_and_quadrature_agree() {
    let area = fh1().domain_area();
    let mut worst: f64 = 0.0;
    for i in 0..=100 {
        let lambda = i as f64 / 100.0;
        let q = rho_quadrature(lambda, area).unwrap().rho;
        let c = rho_closed_form(lambda, area).unwrap().rho;
        worst = worst.max((q - c).abs());
    }
    let at0 = rho(0.0, area).unwrap() * area;
    let at1 = rho(1.0, area).unwrap() * area;
    let pass = worst <= 1e-10 && (at0 - 1.0).abs() <= 1e-12 && (at1 - 4.0 / PI).abs() <= 1e-10;
    report(
        "A4",
        pass,
        format!(
            "max |quadrature − closed form| {worst:.2e} (≤ 1e-10), |ρ(0)|D| − 1| {:.2e} (≤ 1e-12), |ρ(1)|D| − 4/π| {:.2e} (≤ 1e-10)",
            (at0 - 1.0).abs(),
            (at1 - 4.0 / PI).abs()
        ),
    );
    assert!(pass);
}

#[test]
fn a5_flow_is_reversible_and_measure_preserving() {
    let table = fh1();
    let mut rng = trial_rng(55, 0);
    let mut rev: f64 = 0.0;
    for _ in 0..5 {
        let s = sample_state(&table, &mut rng).unwrap();
        rev = rev.max(reversibility_error(&table, &s, 100.0).unwrap().max_error());
    }
    let (mu_stat, mu_p) = common::liouville_chi_square(&table, 100_000, 1.0, 56);
    let (nu_stat, nu_p) = common::boundary_chi_square(&table, 100_000, 57);
    let expected = mean_free_path(&table);
    let mean = common::mean_flight(&table, 100, 10_000, 58);
    let mfp_rel = mean / expected - 1.0;
    let pass = rev <= 1e-9 && mu_p > 0.01 && nu_p > 0.01 && mfp_rel.abs() <= 0.01;
    report(
        "A5",
        pass,
        format!(
            "reversibility error over t=100 {rev:.1e} (≤ 1e-9), μ χ² {mu_stat:.1} p={mu_p:.3}, ν χ² {nu_stat:.1} p={nu_p:.3} (p > 0.01), \
             mean free path {mean:.5} vs π|D|/|∂D| {expected:.5} ({:+.2}%, ≤ 1%)",
            100.0 * mfp_rel
        ),
    );
    assert!(pass);
}

#[test]
fn a6_hyperbolicity_diagnostics() {
    let table = fh1();
    let cone = cone_report(&table, 1000, 20, 10.0, 61, 1).unwrap();
    let expansion = expansion_report(&table, 40, 1000, 62, 1).unwrap();
    let ns: Vec<usize> = (4..=16).collect();
    let complexity = complexity_report(&table, &ns, 20, 1e-6, 10_000, 63, 1).unwrap();
    let distortion = distortion_report(&table, 100, 1e-4, (4, 12), 64, 1).unwrap();
    let pass = cone.violations == 0 && expansion.min_rate > 1.0 && complexity.fit.residual_trend <= 0.0;
    report(
        "A6",
        pass,
        format!(
            "cone: {} violations in {} checks ({} grazing, {} skipped); min expansion(40)^(1/40) {:.3} (> 1); \
             itinerary counts n=4..16 max {:?}, L {:.4}, residual trend {:.2e} (≤ 0); distortion C_d {:.2} over {} curves",
            cone.violations,
            cone.checks,
            cone.grazing_samples,
            cone.skipped,
            expansion.min_rate,
            complexity.max_counts,
            complexity.fit.l,
            complexity.fit.residual_trend,
            distortion.c_d,
            distortion.samples.len()
        ),
    );
    assert!(pass);
}

#[test]
fn a7_reencounters_are_rare() {
    let table = fh1();
    let lambda = 0.37;
    let rho = rho(lambda, table.domain_area()).unwrap();
    let good_rate = predicted_good_rate(&table, lambda, 0.05).unwrap();
    let mut rows = Vec::new();
    for epsilon in [0.02, 0.01, 0.005] {
        let params = ExperimentParams { lambda, epsilon, xi: 0.05, t_macro: 3.0 / rho, trials: 20_000, seed: 7 };
        let cfg = ExperimentConfig::new(table.clone(), params).unwrap();
        let stats = reencounter_fraction(&cfg, 1.0, 1).unwrap();
        // independent good encounters at the predicted rate, per unit particle-1 time
        let null = poisson_close_pair_probability(good_rate * epsilon, cfg.horizon(), 1.0);
        rows.push((epsilon, stats, null));
    }
    let monotone = rows.windows(2).all(|w| w[1].1.fraction <= w[0].1.fraction);
    let last = rows.last().unwrap().1;
    let small = last.fraction <= 0.05 * last.single_fraction;
    let pass = monotone && small;
    let shown: Vec<String> = rows
        .iter()
        .map(|(e, s, null)| {
            format!("ε={e}: {:.4} (single {:.4}, Poisson null {:.4})", s.fraction, s.single_fraction, null)
        })
        .collect();
    report(
        "A7",
        pass,
        format!(
            "re-encounter fraction within window 1: {}; monotone {monotone}; ratio at ε=0.005 {:.4} (≤ 0.05)",
            shown.join(", "),
            last.fraction / last.single_fraction
        ),
    );
    assert!(pass);
}

#[test]
fn a8_reproducible_and_exact() {
    let cfg = ExperimentConfig::new(fh1(), ExperimentParams { trials: 2000, ..main_config(0.37).params }).unwrap();
    let serial = times_csv(&run_ensemble(&cfg, 1).unwrap().outcomes).unwrap();
    let parallel = times_csv(&run_ensemble(&cfg, 4).unwrap().outcomes).unwrap();
    let identical = serial == parallel;

    let table = fh1();
    let (epsilon, xi) = (0.005, 0.05);
    let mut totals = DenseAudit::default();
    for i in 0..1000 {
        let mut rng = trial_rng(88, i);
        let p1 = sample_state(&table, &mut rng).unwrap();
        let p2 = sample_state(&table, &mut rng).unwrap();
        let joint = JointState::new(p1, p2, 0.37).unwrap();
        let a = dense_audit(&joint, epsilon, xi, 20.0, epsilon / 100.0, &table).unwrap();
        totals.samples += a.samples;
        totals.sweep_visits += a.sweep_visits;
        totals.sampled_runs += a.sampled_runs;
        totals.missed_by_sweep += a.missed_by_sweep;
        totals.unconfirmed_visits += a.unconfirmed_visits;
    }
    let pass = identical && totals.missed_by_sweep == 0 && totals.unconfirmed_visits == 0;
    report(
        "A8",
        pass,
        format!(
            "times.csv identical for 1 and 4 workers: {identical} ({} bytes); dense audit of 1000 trials: \
             {} samples, {} sampled runs, {} sweep visits, {} missed, {} unconfirmed",
            serial.len(),
            totals.samples,
            totals.sampled_runs,
            totals.sweep_visits,
            totals.missed_by_sweep,
            totals.unconfirmed_visits
        ),
    );
    assert!(pass);
}
