//! Multi-precision billiard flow for reversibility audits.
//!
//! The state carries a velocity vector instead of an angle so that one flow
//! step uses only `+ − × ÷ √`. Candidate scatterer images are shortlisted in
//! f64 with generous slack and the hit is decided in full precision, so the
//! itinerary is the one of the precise orbit, not of an f64 shadow.

use astro_float::{BigFloat, RoundingMode, Sign};

use crate::error::{Error, Result};
use crate::flow::ParticleState;
use crate::geometry::{min_image, BilliardTable};

const RM: RoundingMode = RoundingMode::ToEven;
/// Slack on f64 hit-time and discriminant estimates when shortlisting images.
const SHORTLIST_SLACK: f64 = 1e-6;
/// Round-trip error targeted by the adaptive precision loop.
const PRECISION_TARGET: f64 = 1e-40;
const MIN_BITS: usize = 256;
const MAX_BITS: usize = 1 << 15;

/// Nearest-f64 view of a finite `BigFloat` (truncated to the top word).
pub fn to_f64(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((words, _, sign, exp, _)) => {
            let top = *words.last().unwrap_or(&0);
            if top == 0 {
                return 0.0;
            }
            let mag = top as f64 * 2f64.powi(exp - 64);
            if sign == Sign::Neg { -mag } else { mag }
        }
        None => f64::NAN,
    }
}

/// Phase point in multi-precision: position in the unit cell and unit velocity.
#[derive(Debug, Clone)]
pub struct PreciseState {
    pub x: BigFloat,
    pub y: BigFloat,
    pub vx: BigFloat,
    pub vy: BigFloat,
}

impl PreciseState {
    /// Lift an f64 state, renormalizing the velocity in full precision.
    pub fn from_state(s: &ParticleState, bits: usize) -> Self {
        let (vx, vy) = normalized(
            &BigFloat::from_f64(s.angle.cos(), bits),
            &BigFloat::from_f64(s.angle.sin(), bits),
            bits,
        );
        PreciseState {
            x: BigFloat::from_f64(s.position.x, bits),
            y: BigFloat::from_f64(s.position.y, bits),
            vx,
            vy,
        }
    }

    pub fn reversed(&self) -> Self {
        PreciseState { x: self.x.clone(), y: self.y.clone(), vx: self.vx.neg(), vy: self.vy.neg() }
    }
}

fn normalized(x: &BigFloat, y: &BigFloat, p: usize) -> (BigFloat, BigFloat) {
    let norm = x.mul(x, p, RM).add(&y.mul(y, p, RM), p, RM).sqrt(p, RM);
    (x.div(&norm, p, RM), y.div(&norm, p, RM))
}

fn is_finite(x: &BigFloat) -> bool {
    !x.is_nan() && !x.is_inf()
}

/// Images whose f64 hit estimate lies within slack of the earliest robust hit,
/// including near-tangent candidates the precise test may accept or reject.
fn shortlist(p: [f64; 2], d: [f64; 2], table: &BilliardTable) -> Result<Vec<(usize, [f64; 2])>> {
    let p = [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)];
    let limit = table.search_limit();
    let mut cell = [0.0f64, 0.0f64];
    let step = [d[0].signum(), d[1].signum()];
    let inv = [1.0 / d[0].abs(), 1.0 / d[1].abs()];
    let mut t_next = [
        if d[0] > 0.0 { (1.0 - p[0]) * inv[0] } else if d[0] < 0.0 { p[0] * inv[0] } else { f64::INFINITY },
        if d[1] > 0.0 { (1.0 - p[1]) * inv[1] } else if d[1] < 0.0 { p[1] * inv[1] } else { f64::INFINITY },
    ];
    let mut found: Vec<(f64, usize, [f64; 2])> = Vec::new();
    let mut best = f64::INFINITY;
    loop {
        for img in table.images() {
            let c = [img.center[0] + cell[0], img.center[1] + cell[1]];
            let f = [p[0] - c[0], p[1] - c[1]];
            let b = f[0] * d[0] + f[1] * d[1];
            if b >= SHORTLIST_SLACK {
                continue;
            }
            let cc = f[0] * f[0] + f[1] * f[1] - img.radius_sq;
            let disc = b * b - cc;
            if disc < -SHORTLIST_SLACK {
                continue;
            }
            let t = if disc > 0.0 && b < 0.0 { cc / (-b + disc.sqrt()) } else { (-b).max(0.0) };
            // only robust hits bound the search: the precise test cannot reject them
            if disc > SHORTLIST_SLACK && b < 0.0 {
                best = best.min(t);
            }
            found.push((t, img.scatterer, c));
        }
        let t_exit = t_next[0].min(t_next[1]);
        if best + SHORTLIST_SLACK <= t_exit {
            break;
        }
        if t_exit > limit {
            return Err(Error::HorizonViolation { limit, x: p[0], y: p[1], angle: d[1].atan2(d[0]) });
        }
        if t_next[0] <= t_next[1] {
            cell[0] += step[0];
            t_next[0] += inv[0];
        } else {
            cell[1] += step[1];
            t_next[1] += inv[1];
        }
    }
    Ok(found
        .into_iter()
        .filter(|&(t, _, _)| t <= best + SHORTLIST_SLACK)
        .map(|(_, s, c)| (s, c))
        .collect())
}

/// Flow `state` for time `t` at `bits` of precision; returns the end state
/// and the number of collisions.
pub fn precise_flow(table: &BilliardTable, state: &PreciseState, t: f64, bits: usize) -> Result<(PreciseState, usize)> {
    let p = bits;
    let mut s = state.clone();
    let mut remaining = BigFloat::from_f64(t, p);
    let mut collisions = 0;
    loop {
        let d = [to_f64(&s.vx), to_f64(&s.vy)];
        let cands = shortlist([to_f64(&s.x), to_f64(&s.y)], d, table)?;
        let mut hit: Option<(BigFloat, BigFloat, BigFloat)> = None;
        for (idx, c) in cands {
            let cx = BigFloat::from_f64(c[0], p);
            let cy = BigFloat::from_f64(c[1], p);
            let r = BigFloat::from_f64(table.scatterers()[idx].radius, p);
            let fx = s.x.sub(&cx, p, RM);
            let fy = s.y.sub(&cy, p, RM);
            let b = fx.mul(&s.vx, p, RM).add(&fy.mul(&s.vy, p, RM), p, RM);
            if !b.is_negative() {
                continue;
            }
            let cc = fx.mul(&fx, p, RM).add(&fy.mul(&fy, p, RM), p, RM).sub(&r.mul(&r, p, RM), p, RM);
            let disc = b.mul(&b, p, RM).sub(&cc, p, RM);
            if disc.is_negative() || disc.is_zero() {
                continue;
            }
            let th = cc.div(&b.neg().add(&disc.sqrt(p, RM), p, RM), p, RM);
            if hit.as_ref().is_none_or(|(best, ..)| th.cmp(best).is_some_and(|c| c < 0)) {
                hit = Some((th, cx, cy));
            }
        }
        let Some((th, cx, cy)) = hit else {
            return Err(Error::HorizonViolation {
                limit: table.search_limit(),
                x: to_f64(&s.x),
                y: to_f64(&s.y),
                angle: d[1].atan2(d[0]),
            });
        };
        if !is_finite(&th) {
            return Err(Error::NonFinite);
        }
        let stop = th.cmp(&remaining).is_none_or(|c| c >= 0);
        let dt = if stop { remaining.clone() } else { th };
        let x = s.x.add(&dt.mul(&s.vx, p, RM), p, RM);
        let y = s.y.add(&dt.mul(&s.vy, p, RM), p, RM);
        if stop {
            s.x = x;
            s.y = y;
            break;
        }
        remaining = remaining.sub(&dt, p, RM);
        // v' = v − 2⟨v,n⟩n; both n and v' are renormalized because a residual
        // in |v| would feed back into the next hit point and grow each bounce
        let (nx, ny) = normalized(&x.sub(&cx, p, RM), &y.sub(&cy, p, RM), p);
        let k = s.vx.mul(&nx, p, RM).add(&s.vy.mul(&ny, p, RM), p, RM);
        let k2 = k.add(&k, p, RM);
        let vx = s.vx.sub(&k2.mul(&nx, p, RM), p, RM);
        let vy = s.vy.sub(&k2.mul(&ny, p, RM), p, RM);
        (s.vx, s.vy) = normalized(&vx, &vy, p);
        s.x = x.sub(&BigFloat::from_f64(to_f64(&x).floor(), p), p, RM);
        s.y = y.sub(&BigFloat::from_f64(to_f64(&y).floor(), p), p, RM);
        collisions += 1;
    }
    s.x = s.x.sub(&BigFloat::from_f64(to_f64(&s.x).floor(), p), p, RM);
    s.y = s.y.sub(&BigFloat::from_f64(to_f64(&s.y).floor(), p), p, RM);
    Ok((s, collisions))
}

/// Outcome of a forward / reverse / forward round trip.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ReversibilityReport {
    pub time: f64,
    pub collisions: usize,
    pub precision_bits: usize,
    /// Torus distance between the start point and the round-trip end point.
    pub position_error: f64,
    /// Euclidean distance between start and round-trip velocities.
    pub velocity_error: f64,
}

impl ReversibilityReport {
    pub fn max_error(&self) -> f64 {
        self.position_error.max(self.velocity_error)
    }
}

fn round_trip(table: &BilliardTable, start: &ParticleState, t: f64, bits: usize) -> Result<ReversibilityReport> {
    let s0 = PreciseState::from_state(start, bits);
    let (s1, collisions) = precise_flow(table, &s0, t, bits)?;
    let (s2, back) = precise_flow(table, &s1.reversed(), t, bits)?;
    let s2 = s2.reversed();
    let dx = min_image(to_f64(&s2.x.sub(&s0.x, bits, RM)));
    let dy = min_image(to_f64(&s2.y.sub(&s0.y, bits, RM)));
    let dvx = to_f64(&s2.vx.sub(&s0.vx, bits, RM));
    let dvy = to_f64(&s2.vy.sub(&s0.vy, bits, RM));
    if collisions != back {
        log::warn!("round trip itinerary lengths differ: {collisions} forward, {back} back");
    }
    Ok(ReversibilityReport {
        time: t,
        collisions,
        precision_bits: bits,
        position_error: dx.hypot(dy),
        velocity_error: dvx.hypot(dvy),
    })
}

/// Flow forward for `t`, reverse, flow `t` again and reverse, doubling the
/// precision until the round-trip error drops below `1e-40` or the precision
/// cap is reached. The final attempt is reported either way.
pub fn reversibility_error(table: &BilliardTable, start: &ParticleState, t: f64) -> Result<ReversibilityReport> {
    let mut bits = MIN_BITS;
    loop {
        let report = round_trip(table, start, t, bits)?;
        if report.max_error() < PRECISION_TARGET || bits >= MAX_BITS {
            return Ok(report);
        }
        bits *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fh1;
    use crate::flow::{flow, next_collision};

    #[test]
    fn to_f64_round_trips() {
        for v in [1.0, -0.375, 1e-30, 123456.789, -7.5e12] {
            assert_eq!(to_f64(&BigFloat::from_f64(v, 256)), v);
        }
        assert_eq!(to_f64(&BigFloat::from_f64(0.0, 256)), 0.0);
    }

    #[test]
    fn first_hit_matches_f64() {
        let table = fh1();
        let s = ParticleState::new(0.1, 0.5, 0.3);
        let hit = next_collision(&s, &table).unwrap();
        let (end, n) = precise_flow(&table, &PreciseState::from_state(&s, 256), hit.time * 0.999, 256).unwrap();
        assert_eq!(n, 0);
        let (_, n) = precise_flow(&table, &PreciseState::from_state(&s, 256), hit.time * 1.001, 256).unwrap();
        assert_eq!(n, 1);
        assert!((to_f64(&end.x) - s.position.advance(s.velocity(), hit.time * 0.999).x).abs() < 1e-14);
    }

    #[test]
    fn short_flow_matches_f64() {
        let table = fh1();
        let s = ParticleState::new(0.12, 0.77, 2.1);
        let f = flow(&s, 3.0, &table).unwrap();
        let (p, _) = precise_flow(&table, &PreciseState::from_state(&s, 512), 3.0, 512).unwrap();
        let dx = min_image(to_f64(&p.x) - f.position.x);
        let dy = min_image(to_f64(&p.y) - f.position.y);
        assert!(dx.hypot(dy) < 1e-9, "{dx} {dy}");
    }

    #[test]
    fn long_round_trip_is_reversible() {
        let table = fh1();
        let r = reversibility_error(&table, &ParticleState::new(0.1, 0.5, 0.7), 30.0).unwrap();
        assert!(r.max_error() < 1e-9, "{r:?}");
        assert!(r.collisions > 20);
    }
}
