//! Single-particle billiard dynamics: collision search, reflection, the flow
//! as a sequence of flight segments, the collision map and the time-𝔰 map.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BilliardTable, TorusPoint};

/// Discriminants below this are tangencies and count as misses.
pub const TANGENCY_DISCRIMINANT: f64 = 1e-24;
/// Collisions with `cos φ` below this are flagged as grazing.
pub const GRAZING_COS: f64 = 1e-12;

#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[inline]
pub fn unit(angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c, s]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Phase point `(q, φ)` of one particle with unit speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub position: TorusPoint,
    pub angle: f64,
}

impl ParticleState {
    pub fn new(x: f64, y: f64, angle: f64) -> Self {
        Self { position: TorusPoint::new(x, y), angle: wrap_angle(angle) }
    }

    pub fn velocity(&self) -> [f64; 2] {
        unit(self.angle)
    }

    /// Same position, velocity negated.
    pub fn reversed(&self) -> Self {
        Self { position: self.position, angle: wrap_angle(self.angle + PI) }
    }
}

/// Result of the collision search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub time: f64,
    pub scatterer: usize,
    /// Hit point, re-projected onto the scatterer circle.
    pub point: TorusPoint,
    /// Unit normal at the hit point, pointing into the domain.
    pub normal: [f64; 2],
    /// `|⟨v, n⟩|` at the hit.
    pub cos_incidence: f64,
}

/// First scatterer hit along the ray from `state`.
///
/// Walks the unit cells crossed by the unfolded ray. Every scatterer image
/// overlapping a cell is tested when that cell is visited, so once the best
/// root found lies before the exit of the current cell it is the global
/// minimum.
pub fn next_collision(state: &ParticleState, table: &BilliardTable) -> Result<Collision> {
    let p = state.position.as_array();
    let d = state.velocity();
    let limit = table.search_limit();

    let mut cell = [0.0f64, 0.0f64];
    let step = [d[0].signum(), d[1].signum()];
    let inv = [1.0 / d[0].abs(), 1.0 / d[1].abs()];
    let mut t_next = [
        if d[0] > 0.0 { (1.0 - p[0]) * inv[0] } else if d[0] < 0.0 { p[0] * inv[0] } else { f64::INFINITY },
        if d[1] > 0.0 { (1.0 - p[1]) * inv[1] } else if d[1] < 0.0 { p[1] * inv[1] } else { f64::INFINITY },
    ];

    let mut best_t = f64::INFINITY;
    let mut best: Option<(usize, [f64; 2])> = None;
    loop {
        for img in table.images() {
            let c = [img.center[0] + cell[0], img.center[1] + cell[1]];
            let f = [p[0] - c[0], p[1] - c[1]];
            let b = dot(f, d);
            if b >= 0.0 {
                // moving away from (or tangent to) this image
                continue;
            }
            let cc = dot(f, f) - img.radius_sq;
            let disc = b * b - cc;
            if disc < TANGENCY_DISCRIMINANT {
                continue;
            }
            // entry root in the cancellation-free form
            let t = (cc / (-b + disc.sqrt())).max(0.0);
            if t < best_t {
                best_t = t;
                best = Some((img.scatterer, c));
            }
        }
        let t_exit = t_next[0].min(t_next[1]);
        if best_t <= t_exit {
            break;
        }
        if t_exit > limit {
            return Err(Error::HorizonViolation {
                limit,
                x: p[0],
                y: p[1],
                angle: state.angle,
            });
        }
        if t_next[0] <= t_next[1] {
            cell[0] += step[0];
            t_next[0] += inv[0];
        } else {
            cell[1] += step[1];
            t_next[1] += inv[1];
        }
    }

    let (scatterer, c) = best.expect("loop exits with a hit");
    let r = table.scatterers()[scatterer].radius;
    let hx = p[0] + best_t * d[0] - c[0];
    let hy = p[1] + best_t * d[1] - c[1];
    let norm = hx.hypot(hy);
    let normal = [hx / norm, hy / norm];
    let point = TorusPoint::new(c[0] + r * normal[0], c[1] + r * normal[1]);
    Ok(Collision {
        time: best_t,
        scatterer,
        point,
        normal,
        cos_incidence: (-dot(d, normal)).max(0.0),
    })
}

/// Specular reflection `v' = v − 2⟨v,n⟩n`, as a vector.
#[inline]
pub fn reflect_vector(v: [f64; 2], normal: [f64; 2]) -> [f64; 2] {
    let k = 2.0 * dot(v, normal);
    [v[0] - k * normal[0], v[1] - k * normal[1]]
}

/// Specular reflection of the direction `angle` off a wall with unit `normal`.
pub fn reflect(angle: f64, normal: [f64; 2]) -> f64 {
    let v = reflect_vector(unit(angle), normal);
    wrap_angle(v[1].atan2(v[0]))
}

/// Signed angle from the inward normal to the outgoing velocity, in `[−π/2, π/2]`.
pub fn incidence_angle(normal: [f64; 2], outgoing: [f64; 2]) -> f64 {
    cross(normal, outgoing).atan2(dot(normal, outgoing).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SegmentEnd {
    ScattererHit {
        scatterer: usize,
        point: TorusPoint,
        /// Signed outgoing incidence angle.
        incidence_angle: f64,
    },
    TimeCap,
}

/// A maximal straight piece of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightSegment {
    pub start_time: f64,
    pub duration: f64,
    pub start: TorusPoint,
    pub angle: f64,
    pub end: SegmentEnd,
}

impl FlightSegment {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }

    pub fn velocity(&self) -> [f64; 2] {
        unit(self.angle)
    }

    /// Position at absolute time `t` (not clamped to the segment).
    pub fn position_at(&self, t: f64) -> TorusPoint {
        self.start.advance(self.velocity(), t - self.start_time)
    }

    pub fn hit_id(&self) -> Option<usize> {
        match self.end {
            SegmentEnd::ScattererHit { scatterer, .. } => Some(scatterer),
            SegmentEnd::TimeCap => None,
        }
    }
}

/// A lazily generated orbit; each call to [`Orbit::next_flight`] returns one
/// full free flight and leaves the orbit just after the reflection.
#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    table: &'a BilliardTable,
    state: ParticleState,
    time: f64,
    grazing: bool,
    min_cos: f64,
}

impl<'a> Orbit<'a> {
    pub fn new(table: &'a BilliardTable, state: ParticleState) -> Self {
        Self { table, state, time: 0.0, grazing: false, min_cos: f64::INFINITY }
    }

    pub fn state(&self) -> ParticleState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Whether any collision so far had `cos φ` below [`GRAZING_COS`].
    pub fn grazing_flagged(&self) -> bool {
        self.grazing
    }

    pub fn min_cos_incidence(&self) -> f64 {
        self.min_cos
    }

    pub fn next_flight(&mut self) -> Result<(FlightSegment, Collision)> {
        let hit = next_collision(&self.state, self.table)?;
        Ok((self.apply(&hit), hit))
    }

    /// Fly to the already computed `hit` and reflect there.
    fn apply(&mut self, hit: &Collision) -> FlightSegment {
        let v_out = reflect_vector(self.state.velocity(), hit.normal);
        let seg = FlightSegment {
            start_time: self.time,
            duration: hit.time,
            start: self.state.position,
            angle: self.state.angle,
            end: SegmentEnd::ScattererHit {
                scatterer: hit.scatterer,
                point: hit.point,
                incidence_angle: incidence_angle(hit.normal, v_out),
            },
        };
        if hit.cos_incidence < GRAZING_COS {
            self.grazing = true;
        }
        self.min_cos = self.min_cos.min(hit.cos_incidence);
        self.time += hit.time;
        self.state = ParticleState {
            position: hit.point,
            angle: wrap_angle(v_out[1].atan2(v_out[0])),
        };
        seg
    }

    /// Advance by at most `cap` time; returns the segment flown and whether it
    /// ended in a collision.
    pub fn advance_capped(&mut self, cap: f64) -> Result<(FlightSegment, Option<Collision>)> {
        let hit = next_collision(&self.state, self.table)?;
        if hit.time >= cap {
            let seg = FlightSegment {
                start_time: self.time,
                duration: cap,
                start: self.state.position,
                angle: self.state.angle,
                end: SegmentEnd::TimeCap,
            };
            self.state.position = seg.position_at(self.time + cap);
            self.time += cap;
            return Ok((seg, None));
        }
        Ok((self.apply(&hit), Some(hit)))
    }
}

/// Partition `[0, t]` of the orbit of `state` into flight segments.
///
/// Interior segments end in a scatterer hit; the last one ends in `TimeCap`.
/// Zero-length flights (a start exactly on a wall, moving inward) reflect
/// without producing a segment.
pub fn flow_segments(
    state: &ParticleState,
    t: f64,
    table: &BilliardTable,
) -> Result<Vec<FlightSegment>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("flow time {t} must be ≥ 0")));
    }
    let mut segs = Vec::new();
    if t == 0.0 {
        return Ok(segs);
    }
    let mut orbit = Orbit::new(table, *state);
    loop {
        let start = orbit.time();
        let (seg, hit) = orbit.advance_capped(t - start)?;
        match hit {
            None => {
                segs.push(seg);
                return Ok(segs);
            }
            Some(_) if seg.duration > 0.0 => segs.push(seg),
            Some(_) => {}
        }
    }
}

/// The flow map `Φᵗ(state)`.
pub fn flow(state: &ParticleState, t: f64, table: &BilliardTable) -> Result<ParticleState> {
    let segs = flow_segments(state, t, table)?;
    Ok(match segs.last() {
        None => *state,
        Some(last) => ParticleState { position: last.position_at(t), angle: last.angle },
    })
}

/// Time-𝔰 map with `𝔰 = tau_min / 2`.
pub fn time_s_map(state: &ParticleState, table: &BilliardTable) -> Result<ParticleState> {
    flow(state, table.s_step(), table)
}

/// Point of the collision-map phase space: concatenated arclength `r` and
/// signed outgoing incidence angle `φ ∈ [−π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    pub arc_coordinate: f64,
    pub incidence_angle: f64,
}

impl BoundaryState {
    /// Locate the scatterer and the polar angle on it.
    pub fn locate(&self, table: &BilliardTable) -> (usize, f64) {
        let total = table.boundary_length();
        let r = self.arc_coordinate.rem_euclid(total);
        let n = table.scatterers().len();
        let idx = (0..n).rev().find(|&i| table.arc_offset(i) <= r).unwrap_or(0);
        let s = &table.scatterers()[idx];
        (idx, (r - table.arc_offset(idx)) / s.radius)
    }

    /// Outgoing phase point on the scatterer boundary.
    pub fn to_state(&self, table: &BilliardTable) -> ParticleState {
        let (idx, theta) = self.locate(table);
        let s = &table.scatterers()[idx];
        let n = unit(theta);
        let pos = TorusPoint::new(s.center.x + s.radius * n[0], s.center.y + s.radius * n[1]);
        ParticleState { position: pos, angle: wrap_angle(theta + self.incidence_angle) }
    }

    pub fn from_hit(table: &BilliardTable, scatterer: usize, normal: [f64; 2], outgoing: [f64; 2]) -> Self {
        let s = &table.scatterers()[scatterer];
        let theta = wrap_angle(normal[1].atan2(normal[0]));
        BoundaryState {
            arc_coordinate: table.arc_offset(scatterer) + theta * s.radius,
            incidence_angle: incidence_angle(normal, outgoing),
        }
    }
}

/// The collision map `F`: from one outgoing boundary state to the next.
pub fn billiard_map(b: &BoundaryState, table: &BilliardTable) -> Result<BoundaryState> {
    let state = b.to_state(table);
    let hit = next_collision(&state, table)?;
    let v_out = reflect_vector(state.velocity(), hit.normal);
    Ok(BoundaryState::from_hit(table, hit.scatterer, hit.normal, v_out))
}

/// Iterate the collision map, returning `(boundary state, flight time)` pairs.
pub fn billiard_map_orbit(
    b: &BoundaryState,
    n: usize,
    table: &BilliardTable,
) -> Result<Vec<(BoundaryState, f64)>> {
    let mut out = Vec::with_capacity(n);
    let mut state = b.to_state(table);
    for _ in 0..n {
        let hit = next_collision(&state, table)?;
        let v_out = reflect_vector(state.velocity(), hit.normal);
        out.push((BoundaryState::from_hit(table, hit.scatterer, hit.normal, v_out), hit.time));
        state = ParticleState { position: hit.point, angle: wrap_angle(v_out[1].atan2(v_out[0])) };
    }
    Ok(out)
}
