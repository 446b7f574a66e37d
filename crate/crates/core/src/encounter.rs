//! Exact detection of ε-close encounters between two particles with speeds 1
//! and λ.
//!
//! Both orbits are generated lazily as flight segments. A two-pointer merge
//! over the segment timelines (particle-2 times divided by λ) yields windows on
//! which both particles move in straight lines, so the relative displacement
//! is affine in time and every ε-crossing is a quadratic root.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{flow_segments, FlightSegment, Orbit, ParticleState, SegmentEnd};
use crate::geometry::{min_image, torus_distance, BilliardTable, TorusPoint};

/// Below this speed ratio particle 2 is treated as static.
pub const STATIC_LAMBDA: f64 = 1e-12;
/// Visits separated by at most this much time are merged.
const MERGE_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub p1: ParticleState,
    pub p2: ParticleState,
    pub lambda: f64,
}

impl JointState {
    pub fn new(p1: ParticleState, p2: ParticleState, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRangeLambda(lambda));
        }
        Ok(Self { p1, p2, lambda })
    }
}

/// One maximal visit to the ε-neighbourhood, reported at its entry time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncounterEvent {
    /// Entry time `s` in particle-1 time.
    pub time: f64,
    pub exit_time: f64,
    pub pos1: TorusPoint,
    pub pos2: TorusPoint,
    pub distance: f64,
    /// Angle between the velocities modulo π, folded into `[0, π/2]`.
    pub rel_angle_mod_pi: f64,
    /// Distance of `pos1` to the scatterers.
    pub boundary_clearance: f64,
    pub xi: f64,
    pub good: bool,
}

/// `(angle1 − angle2) mod π`, folded into `[0, π/2]`.
pub fn fold_relative_angle(a1: f64, a2: f64) -> f64 {
    let d = (a1 - a2).rem_euclid(PI);
    d.min(PI - d)
}

fn check_window(seg1: &FlightSegment, seg2: &FlightSegment, lambda: f64, w: (f64, f64)) -> Result<()> {
    // window ends are reconstructed from accumulated times; allow their rounding
    let tol = 1e-12 * w.1.abs().max(1.0);
    let inside1 = w.0 >= seg1.start_time - tol && w.1 <= seg1.end_time() + tol;
    let inside2 = lambda * w.0 >= seg2.start_time - tol && lambda * w.1 <= seg2.end_time() + tol;
    if !(w.0 <= w.1) || !inside1 || !inside2 {
        return Err(Error::EmptyWindow { start: w.0, end: w.1 });
    }
    Ok(())
}

/// Straight-line relative motion on one window: displacement `pos2 − pos1`
/// reduced to its minimal image at `t0`, and its constant velocity.
#[derive(Debug, Clone, Copy)]
struct RelativeLine {
    d0: [f64; 2],
    v: [f64; 2],
}

impl RelativeLine {
    fn new(seg1: &FlightSegment, seg2: &FlightSegment, lambda: f64, t0: f64) -> Self {
        let p1 = seg1.position_at(t0);
        let p2 = seg2.position_at(lambda * t0);
        let u = seg1.velocity();
        let w = seg2.velocity();
        Self {
            d0: [min_image(p2.x - p1.x), min_image(p2.y - p1.y)],
            v: [lambda * w[0] - u[0], lambda * w[1] - u[1]],
        }
    }

    /// Lattice shifts `k` for which `d0 + k + s·v` can come within 1 of the
    /// origin for `s ∈ [0, len]`.
    fn images(&self, len: f64) -> impl Iterator<Item = [f64; 2]> {
        let range = |d: f64, v: f64| {
            let (a, b) = (d.min(d + v * len), d.max(d + v * len));
            ((-b).floor() as i64 - 1, (-a).ceil() as i64 + 1)
        };
        let (x0, x1) = range(self.d0[0], self.v[0]);
        let (y0, y1) = range(self.d0[1], self.v[1]);
        (x0..=x1).flat_map(move |i| (y0..=y1).map(move |j| [i as f64, j as f64]))
    }
}

/// Minimum torus distance between the two particles over `window` (particle-1
/// time), with its minimizer.
pub fn relative_min_distance(
    seg1: &FlightSegment,
    seg2: &FlightSegment,
    lambda: f64,
    window: (f64, f64),
) -> Result<(f64, f64)> {
    check_window(seg1, seg2, lambda, window)?;
    let line = RelativeLine::new(seg1, seg2, lambda, window.0);
    let len = window.1 - window.0;
    let vv = line.v[0] * line.v[0] + line.v[1] * line.v[1];
    let mut best = (window.0, f64::INFINITY);
    for k in line.images(len) {
        let d = [line.d0[0] + k[0], line.d0[1] + k[1]];
        let s = if vv > 0.0 {
            (-(d[0] * line.v[0] + d[1] * line.v[1]) / vv).clamp(0.0, len)
        } else {
            0.0
        };
        let dist = (d[0] + s * line.v[0]).hypot(d[1] + s * line.v[1]);
        if dist < best.1 {
            best = (window.0 + s, dist);
        }
    }
    Ok(best)
}

/// Sub-intervals of `window` (particle-1 time) on which the distance is ≤ ε.
pub fn epsilon_intervals(
    seg1: &FlightSegment,
    seg2: &FlightSegment,
    lambda: f64,
    window: (f64, f64),
    epsilon: f64,
) -> Result<Vec<(f64, f64)>> {
    check_window(seg1, seg2, lambda, window)?;
    let line = RelativeLine::new(seg1, seg2, lambda, window.0);
    let len = window.1 - window.0;
    let a = line.v[0] * line.v[0] + line.v[1] * line.v[1];
    let mut out = Vec::new();
    for k in line.images(len) {
        let d = [line.d0[0] + k[0], line.d0[1] + k[1]];
        let b = d[0] * line.v[0] + d[1] * line.v[1];
        let c = d[0] * d[0] + d[1] * d[1] - epsilon * epsilon;
        let (lo, hi) = if a == 0.0 {
            if c > 0.0 {
                continue;
            }
            (0.0, len)
        } else {
            let disc = b * b - a * c;
            if disc < 0.0 {
                continue;
            }
            // roots of a·s² + 2b·s + c in the cancellation-free form
            let q = -(b + b.signum() * disc.sqrt());
            if q == 0.0 {
                (0.0, 0.0)
            } else {
                let (r1, r2) = (q / a, c / q);
                (r1.min(r2), r1.max(r2))
            }
        };
        let (lo, hi) = (lo.max(0.0), hi.min(len));
        if lo <= hi {
            out.push((window.0 + lo, window.0 + hi));
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

/// Time-ordered generator of ε-visits.
pub struct EncounterSweep<'a> {
    table: &'a BilliardTable,
    lambda: f64,
    epsilon: f64,
    xi: f64,
    horizon: f64,
    o1: Orbit<'a>,
    o2: Option<Orbit<'a>>,
    seg1: FlightSegment,
    seg2: FlightSegment,
    pending: Option<EncounterEvent>,
    ready: VecDeque<EncounterEvent>,
    done: bool,
}

fn static_segment(state: &ParticleState) -> FlightSegment {
    FlightSegment {
        start_time: 0.0,
        duration: f64::INFINITY,
        start: state.position,
        angle: state.angle,
        end: SegmentEnd::TimeCap,
    }
}

impl<'a> EncounterSweep<'a> {
    pub fn new(
        joint: &JointState,
        epsilon: f64,
        xi: f64,
        horizon: f64,
        table: &'a BilliardTable,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
        }
        if !(horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be ≥ 0")));
        }
        let lambda = joint.lambda;
        let mut o1 = Orbit::new(table, joint.p1);
        let seg1 = o1.advance_capped(horizon)?.0;
        let (o2, seg2) = if lambda < STATIC_LAMBDA {
            (None, static_segment(&joint.p2))
        } else {
            let mut o2 = Orbit::new(table, joint.p2);
            let seg2 = o2.advance_capped(lambda * horizon)?.0;
            (Some(o2), seg2)
        };
        Ok(Self {
            table,
            lambda: if lambda < STATIC_LAMBDA { 0.0 } else { lambda },
            epsilon,
            xi,
            horizon,
            o1,
            o2,
            seg1,
            seg2,
            pending: None,
            ready: VecDeque::new(),
            done: false,
        })
    }

    /// Whether either orbit has met a near-grazing collision so far.
    pub fn grazing_flagged(&self) -> bool {
        self.o1.grazing_flagged() || self.o2.as_ref().is_some_and(|o| o.grazing_flagged())
    }

    // A capped segment ends exactly at the horizon: `a + (H − a)` and
    // `λH / λ` may round below `H`, which would stall the sweep.
    fn seg1_end(&self) -> f64 {
        match self.seg1.end {
            SegmentEnd::TimeCap => self.horizon,
            _ => self.seg1.end_time(),
        }
    }

    fn seg2_end(&self) -> f64 {
        match self.seg2.end {
            _ if self.lambda == 0.0 => f64::INFINITY,
            SegmentEnd::TimeCap => self.horizon,
            _ => self.seg2.end_time() / self.lambda,
        }
    }

    fn event_at(&self, t: f64) -> EncounterEvent {
        let pos1 = self.seg1.position_at(t);
        let pos2 = self.seg2.position_at(self.lambda * t);
        let rel = fold_relative_angle(self.seg1.angle, self.seg2.angle);
        let clearance = self.table.clearance(&pos1);
        EncounterEvent {
            time: t,
            exit_time: t,
            pos1,
            pos2,
            distance: torus_distance(&pos1, &pos2),
            rel_angle_mod_pi: rel,
            boundary_clearance: clearance,
            xi: self.xi,
            good: clearance > self.xi && rel > self.xi,
        }
    }

    fn process_window(&mut self) -> Result<()> {
        let w0 = self.seg1.start_time.max(if self.lambda == 0.0 { 0.0 } else { self.seg2.start_time / self.lambda });
        let w1 = self.seg1_end().min(self.seg2_end()).min(self.horizon);
        if w1 > w0 || (w1 == w0 && w0 == 0.0) {
            let ivs = epsilon_intervals(&self.seg1, &self.seg2, self.lambda, (w0, w1), self.epsilon)?;
            for (lo, hi) in ivs {
                match self.pending.as_mut() {
                    Some(p) if lo <= p.exit_time + MERGE_GAP => p.exit_time = p.exit_time.max(hi),
                    _ => {
                        if let Some(p) = self.pending.take() {
                            self.ready.push_back(p);
                        }
                        let mut ev = self.event_at(lo);
                        ev.exit_time = hi;
                        self.pending = Some(ev);
                    }
                }
            }
            if let Some(p) = self.pending {
                if p.exit_time < w1 - MERGE_GAP {
                    self.ready.push_back(p);
                    self.pending = None;
                }
            }
        }
        if w1 >= self.horizon {
            self.done = true;
            if let Some(p) = self.pending.take() {
                self.ready.push_back(p);
            }
            return Ok(());
        }
        let e1 = self.seg1_end();
        let e2 = self.seg2_end();
        if e1 <= e2 {
            let cap = self.horizon - self.o1.time();
            self.seg1 = self.o1.advance_capped(cap)?.0;
        }
        if e2 <= e1 {
            let o2 = self.o2.as_mut().expect("moving particle 2 has an orbit");
            let cap = self.lambda * self.horizon - o2.time();
            self.seg2 = o2.advance_capped(cap)?.0;
        }
        Ok(())
    }

    /// Next ε-visit in time order, or `None` once the horizon is reached.
    pub fn next_visit(&mut self) -> Result<Option<EncounterEvent>> {
        loop {
            if let Some(ev) = self.ready.pop_front() {
                return Ok(Some(ev));
            }
            if self.done {
                return Ok(None);
            }
            self.process_window()?;
        }
    }
}

/// Outcome of a first-good-encounter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstEncounter {
    pub event: Option<EncounterEvent>,
    /// Entry time of the first ε-visit, good or not.
    pub first_any: Option<f64>,
    /// ε-visits before the first good one that failed the ξ constraints.
    pub skipped: usize,
    pub grazing: bool,
}

/// First good ε-encounter in `[0, horizon]`.
pub fn first_encounter(
    joint: &JointState,
    epsilon: f64,
    xi: f64,
    horizon: f64,
    table: &BilliardTable,
) -> Result<FirstEncounter> {
    check_params(epsilon, xi)?;
    let mut sweep = EncounterSweep::new(joint, epsilon, xi, horizon, table)?;
    let mut skipped = 0;
    let mut first_any = None;
    while let Some(ev) = sweep.next_visit()? {
        first_any.get_or_insert(ev.time);
        if ev.good {
            let grazing = sweep.grazing_flagged();
            return Ok(FirstEncounter { event: Some(ev), first_any, skipped, grazing });
        }
        skipped += 1;
    }
    Ok(FirstEncounter { event: None, first_any, skipped, grazing: sweep.grazing_flagged() })
}

/// Every ε-visit in `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterLog {
    pub events: Vec<EncounterEvent>,
    /// Smallest gap between the entry times of consecutive good visits.
    pub min_good_separation: Option<f64>,
    pub grazing: bool,
}

pub fn all_encounters(
    joint: &JointState,
    epsilon: f64,
    xi: f64,
    horizon: f64,
    table: &BilliardTable,
) -> Result<EncounterLog> {
    check_params(epsilon, xi)?;
    let mut sweep = EncounterSweep::new(joint, epsilon, xi, horizon, table)?;
    let mut events = Vec::new();
    while let Some(ev) = sweep.next_visit()? {
        events.push(ev);
    }
    let good: Vec<f64> = events.iter().filter(|e| e.good).map(|e| e.time).collect();
    let min_good_separation = good.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    Ok(EncounterLog { events, min_good_separation, grazing: sweep.grazing_flagged() })
}

/// [`all_encounters`] for particles running at speeds `speed` and
/// `speed·λ`. Times are reported in the sped-up clock.
pub fn all_encounters_at_speed(
    joint: &JointState,
    speed: f64,
    epsilon: f64,
    xi: f64,
    horizon: f64,
    table: &BilliardTable,
) -> Result<EncounterLog> {
    if !(speed > 0.0) {
        return Err(Error::InvalidParameter(format!("speed {speed} must be positive")));
    }
    let mut log = all_encounters(joint, epsilon, xi, speed * horizon, table)?;
    for ev in &mut log.events {
        ev.time /= speed;
        ev.exit_time /= speed;
    }
    log.min_good_separation = log.min_good_separation.map(|s| s / speed);
    Ok(log)
}

/// Comparison of the exact sweep with brute-force distance sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DenseAudit {
    pub samples: usize,
    pub sweep_visits: usize,
    /// Maximal runs of consecutive samples within ε.
    pub sampled_runs: usize,
    /// Sampled runs not covered by any sweep visit.
    pub missed_by_sweep: usize,
    /// Sweep visits longer than two steps containing no sample within ε.
    pub unconfirmed_visits: usize,
    pub grazing: bool,
}

impl DenseAudit {
    pub fn agrees(&self) -> bool {
        self.missed_by_sweep == 0 && self.unconfirmed_visits == 0
    }
}

/// Sample the pair distance every `step` over `[0, horizon]` and check that
/// the sweep reports exactly the visits the samples see.
pub fn dense_audit(
    joint: &JointState,
    epsilon: f64,
    xi: f64,
    horizon: f64,
    step: f64,
    table: &BilliardTable,
) -> Result<DenseAudit> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step {step} must be positive")));
    }
    let log = all_encounters(joint, epsilon, xi, horizon, table)?;
    let lambda = if joint.lambda < STATIC_LAMBDA { 0.0 } else { joint.lambda };
    let segs1 = flow_segments(&joint.p1, horizon, table)?;
    let segs2 = if lambda == 0.0 {
        vec![static_segment(&joint.p2)]
    } else {
        flow_segments(&joint.p2, lambda * horizon, table)?
    };
    // boundary roundoff: a sample this close to a visit edge counts as inside
    const EDGE: f64 = 1e-9;
    let covered = |t: f64| log.events.iter().any(|e| t >= e.time - EDGE && t <= e.exit_time + EDGE);
    let mut audit = DenseAudit { sweep_visits: log.events.len(), grazing: log.grazing, ..Default::default() };
    let mut hits_per_visit = vec![0usize; log.events.len()];
    let (mut i1, mut i2) = (0, 0);
    let mut in_run = false;
    let mut run_missed = false;
    let n = (horizon / step).floor() as usize;
    for k in 0..=n {
        let t = k as f64 * step;
        while i1 + 1 < segs1.len() && segs1[i1].end_time() < t {
            i1 += 1;
        }
        let t2 = lambda * t;
        while i2 + 1 < segs2.len() && segs2[i2].end_time() < t2 {
            i2 += 1;
        }
        let (Some(s1), Some(s2)) = (segs1.get(i1), segs2.get(i2)) else { break };
        let d = torus_distance(&s1.position_at(t), &s2.position_at(t2));
        audit.samples += 1;
        if d <= epsilon {
            if let Some(j) = log.events.iter().position(|e| t >= e.time - EDGE && t <= e.exit_time + EDGE) {
                hits_per_visit[j] += 1;
            }
            if !in_run {
                in_run = true;
                run_missed = false;
                audit.sampled_runs += 1;
            }
            if !covered(t) && !run_missed {
                run_missed = true;
                audit.missed_by_sweep += 1;
            }
        } else {
            in_run = false;
        }
    }
    audit.unconfirmed_visits = log
        .events
        .iter()
        .zip(&hits_per_visit)
        .filter(|(e, &h)| h == 0 && e.exit_time - e.time > 2.0 * step)
        .count();
    Ok(audit)
}

fn check_params(epsilon: f64, xi: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < xi) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < epsilon < xi (got epsilon {epsilon}, xi {xi})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_table, Scatterer};
    use crate::horizon::{check_finite_horizon, DEFAULT_CUTOFF};

    fn seg(x: f64, y: f64, angle: f64, start: f64, dur: f64) -> FlightSegment {
        FlightSegment {
            start_time: start,
            duration: dur,
            start: TorusPoint::new(x, y),
            angle,
            end: SegmentEnd::TimeCap,
        }
    }

    fn fh1() -> BilliardTable {
        let mut t =
            build_table(vec![Scatterer::new(0.5, 0.5, 0.38), Scatterer::new(0.0, 0.0, 0.175)]).unwrap();
        check_finite_horizon(&mut t, DEFAULT_CUTOFF).unwrap();
        t
    }

    #[test]
    fn head_on_pass() {
        let s1 = seg(0.0, 0.0, 0.0, 0.0, 1.0);
        let s2 = seg(1.0, 0.1, PI, 0.0, 1.0);
        let (t, d) = relative_min_distance(&s1, &s2, 1.0, (0.2, 0.8)).unwrap();
        assert!((t - 0.5).abs() < 1e-12 && (d - 0.1).abs() < 1e-12, "{t} {d}");
        // on the torus the particles also coincide in x at t = 0 and t = 1
        let (_, d) = relative_min_distance(&s1, &s2, 1.0, (0.0, 1.0)).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn static_target_receding() {
        // p2 static 0.04 behind p1 across the seam; p1 moves away
        let s1 = seg(0.02, 0.5, 0.0, 0.0, 0.3);
        let s2 = seg(0.98, 0.5, 1.0, 0.0, f64::INFINITY);
        let (t, d) = relative_min_distance(&s1, &s2, 0.0, (0.0, 0.3)).unwrap();
        assert_eq!(t, 0.0);
        assert!((d - 0.04).abs() < 1e-12);
    }

    #[test]
    fn window_outside_segment_rejected() {
        let s1 = seg(0.0, 0.0, 0.0, 0.0, 1.0);
        let s2 = seg(0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            relative_min_distance(&s1, &s2, 1.0, (0.5, 1.5)),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(relative_min_distance(&s1, &s2, 1.0, (0.6, 0.5)).is_err());
    }

    #[test]
    fn min_distance_dense_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let lambda: f64 = rng.random();
            let s1 = seg(rng.random(), rng.random(), rng.random::<f64>() * 6.3, 0.0, 2.0);
            let s2 = seg(rng.random(), rng.random(), rng.random::<f64>() * 6.3, 0.0, 2.0);
            let w = (0.1, 0.1 + 1.5 * rng.random::<f64>());
            let (ts, ds) = relative_min_distance(&s1, &s2, lambda, w).unwrap();
            let at = |t: f64| torus_distance(&s1.position_at(t), &s2.position_at(lambda * t));
            assert!((at(ts) - ds).abs() < 1e-12);
            for k in 0..=1000 {
                let t = w.0 + (w.1 - w.0) * k as f64 / 1000.0;
                assert!(ds <= at(t) + 1e-12);
            }
        }
    }

    #[test]
    fn sweep_terminates_when_capped_times_round_short() {
        // 0.37 · 3 / 0.37 rounds below 3
        assert!(0.37 * 3.0 / 0.37 < 3.0);
        let t = fh1();
        let j = JointState::new(ParticleState::new(0.72, 0.16, 4.46), ParticleState::new(0.91, 0.47, 1.17), 0.37)
            .unwrap();
        let log = all_encounters(&j, 0.04, 0.1, 3.0, &t).unwrap();
        assert!(log.events.iter().all(|e| e.time <= 3.0));
        for horizon in [1e3, 12345.678] {
            all_encounters(&j, 0.001, 0.1, horizon, &t).unwrap();
        }
    }

    #[test]
    fn zero_time_encounter() {
        let t = fh1();
        let p = ParticleState::new(0.05, 0.5, 0.3);
        let q = ParticleState::new(0.05, 0.5, 1.6);
        let j = JointState::new(p, q, 0.5).unwrap();
        let first = first_encounter(&j, 0.005, 0.05, 1.0, &t).unwrap();
        let ev = first.event.unwrap();
        assert_eq!(ev.time, 0.0);
        assert!(ev.good && first.skipped == 0);
    }

    #[test]
    fn parallel_approach_is_not_good() {
        let t = fh1();
        // same line, same direction, particle 2 slower and ahead: p1 catches up
        let p = ParticleState::new(0.03, 0.5, PI / 2.0);
        let q = ParticleState::new(0.03, 0.52, PI / 2.0);
        let j = JointState::new(p, q, 0.5).unwrap();
        let log = all_encounters(&j, 0.005, 0.05, 0.1, &t).unwrap();
        assert_eq!(log.events.len(), 1);
        let ev = log.events[0];
        assert!(!ev.good && ev.rel_angle_mod_pi < 1e-12);
        assert!((ev.time - 0.015 / 0.5).abs() < 1e-12, "{}", ev.time);
        let first = first_encounter(&j, 0.005, 0.05, 0.1, &t).unwrap();
        assert!(first.event.is_none() && first.skipped == 1);
    }

    #[test]
    fn no_encounter_is_empty() {
        let t = fh1();
        let p = ParticleState::new(0.03, 0.5, PI / 2.0);
        let q = ParticleState::new(0.03, 0.7, PI / 2.0);
        let j = JointState::new(p, q, 1.0).unwrap();
        assert!(all_encounters(&j, 0.005, 0.05, 0.1, &t).unwrap().events.is_empty());
    }

    #[test]
    fn bad_parameters() {
        let t = fh1();
        let p = ParticleState::new(0.03, 0.5, 0.0);
        let j = JointState::new(p, p, 0.5).unwrap();
        assert!(first_encounter(&j, 0.1, 0.05, 1.0, &t).is_err());
        assert!(JointState::new(p, p, 1.5).is_err());
    }
}
