//! Finite-horizon certification by a corridor scan over rational directions.
//!
//! A line of primitive rational direction `(p, q)` is a closed geodesic of
//! length `|(p, q)|`; its transverse coordinate lives on a circle of period
//! `1/|(p, q)|`. The direction is blocked when the scatterer shadows cover that
//! circle. Blocked directions with coverage margin `m` also bound every free
//! flight whose direction lies within a small angle of `(p, q)`; when these
//! angular neighbourhoods cover all of `[0, π)`, the worst of the per-direction
//! flight bounds is a rigorous `tau_max`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BilliardTable;

/// Coverage of one rational direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionMargin {
    pub p: i32,
    pub q: i32,
    /// Transverse period `1/|(p,q)|`.
    pub period: f64,
    /// Minimum over transverse coordinates of the deepest shadow penetration;
    /// negative means an open corridor.
    pub margin: f64,
}

/// Record of a corridor scan, serialized next to experiment results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonCertificate {
    pub cutoff: u32,
    pub directions_checked: usize,
    pub min_margin: f64,
    pub min_margin_direction: (i32, i32),
    /// Widest single shadow, `2·max radius`.
    pub tail_shadow_width: f64,
    /// Largest transverse period among directions beyond the cutoff, `1/(cutoff+1)`.
    pub tail_period_bound: f64,
    /// Tail criterion: one shadow is wider than every period beyond the cutoff.
    pub tail_blocked: bool,
    /// Whether the angular neighbourhoods of blocked directions cover `[0, π)`.
    pub angular_cover: bool,
    pub tau_max: Option<f64>,
    pub margins: Vec<DirectionMargin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HorizonVerdict {
    Finite {
        tau_max: f64,
        certificate: HorizonCertificate,
    },
    InfiniteHorizon {
        direction: (i32, i32),
        corridor_width: f64,
        certificate: HorizonCertificate,
    },
}

impl HorizonVerdict {
    pub fn certificate(&self) -> &HorizonCertificate {
        match self {
            HorizonVerdict::Finite { certificate, .. } => certificate,
            HorizonVerdict::InfiniteHorizon { certificate, .. } => certificate,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, HorizonVerdict::Finite { .. })
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Primitive directions with `max(|p|,|q|) ≤ cutoff`, one per line orientation,
/// ordered by increasing `max(|p|,|q|)`.
pub fn primitive_directions(cutoff: u32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for m in 1..=cutoff as i32 {
        for a in 0..=m {
            for (p, q) in [(m, a), (a, m), (m, -a), (a, -m)] {
                // canonical orientation: p > 0, or the positive y axis
                let (p, q) = if p < 0 || (p == 0 && q < 0) { (-p, -q) } else { (p, q) };
                if p.abs().max(q.abs()) != m || gcd(p, q) != 1 {
                    continue;
                }
                if !out.contains(&(p, q)) {
                    out.push((p, q));
                }
            }
        }
    }
    out
}

/// Transverse projections `(center·n mod period, radius)` for direction `(p, q)`.
fn shadows(table: &BilliardTable, p: i32, q: i32) -> (f64, Vec<(f64, f64)>) {
    let len = (p as f64).hypot(q as f64);
    let period = 1.0 / len;
    let n = [-(q as f64) / len, p as f64 / len];
    let sh = table
        .scatterers()
        .iter()
        .map(|s| {
            let c = (s.center.x * n[0] + s.center.y * n[1]).rem_euclid(period);
            (c, s.radius)
        })
        .collect();
    (period, sh)
}

fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Coverage margin of direction `(p, q)`: `min_t max_j (r_j − dist(t, c_j))`.
///
/// The envelope is piecewise linear with slopes ±1, so its minima sit at the
/// valley of a single tent or where a falling branch meets a rising one.
pub fn direction_margin(table: &BilliardTable, p: i32, q: i32) -> DirectionMargin {
    let (period, sh) = shadows(table, p, q);
    let envelope = |t: f64| {
        sh.iter()
            .map(|&(c, r)| r - circ_dist(t, c, period))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut candidates = Vec::new();
    for &(c, _) in &sh {
        candidates.push(c + 0.5 * period);
    }
    for &(cj, rj) in &sh {
        for &(ck, rk) in &sh {
            for shift in [-1.0, 0.0, 1.0] {
                let ck = ck + shift * period;
                if ck > cj {
                    candidates.push(0.5 * (cj + ck + rj - rk));
                }
            }
        }
    }
    let margin = candidates
        .into_iter()
        .map(|t| envelope(t.rem_euclid(period)))
        .fold(f64::INFINITY, f64::min);
    DirectionMargin { p, q, period, margin }
}

/// Width of the widest uncovered transverse gap (0 when blocked).
pub fn corridor_width(table: &BilliardTable, p: i32, q: i32) -> f64 {
    let (period, sh) = shadows(table, p, q);
    if sh.iter().any(|&(_, r)| 2.0 * r >= period) {
        return 0.0;
    }
    let mut iv: Vec<(f64, f64)> = sh.iter().map(|&(c, r)| (c - r, c + r)).collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let base = iv[0].0;
    let mut reach = iv[0].1;
    let mut widest: f64 = 0.0;
    for &(lo, hi) in iv.iter().skip(1) {
        widest = widest.max(lo - reach);
        reach = reach.max(hi);
    }
    // wrap back to the first interval one period later
    widest = widest.max(base + period - reach);
    widest.max(0.0)
}

/// Largest angle `α` with `(r_max·tan α + |pq|)·sin α ≤ margin`, and the flight
/// bound `|pq| + r_max·(1 + tan α)` valid for directions within `α` of `(p, q)`.
fn angular_neighbourhood(len: f64, margin: f64, r_max: f64) -> (f64, f64) {
    let ok = |a: f64| (r_max * a.tan() + len) * a.sin() <= margin;
    let (mut lo, mut hi) = (0.0, 0.25 * PI);
    if ok(hi) {
        lo = hi;
    } else {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    (lo, len + r_max * (1.0 + lo.tan()))
}

/// Cover `[0, π)` with the angular neighbourhoods and return the worst-case
/// flight bound, or `None` if some direction is left uncovered.
fn angular_cover_bound(arcs: &[(f64, f64, f64)]) -> Option<f64> {
    // arcs: (center angle in [0, π), half width, bound)
    let mut cuts = vec![0.0, PI];
    for &(c, w, _) in arcs {
        cuts.push((c - w).rem_euclid(PI));
        cuts.push((c + w).rem_euclid(PI));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut worst: f64 = 0.0;
    for pair in cuts.windows(2) {
        if pair[1] - pair[0] < 1e-15 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let best = arcs
            .iter()
            .filter(|&&(c, w, _)| circ_dist(mid, c, PI) < w)
            .map(|&(_, _, b)| b)
            .fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return None;
        }
        worst = worst.max(best);
    }
    Some(worst)
}

/// Direction cutoff used when none is given.
pub const DEFAULT_CUTOFF: u32 = 30;

/// Scan all primitive directions up to `direction_cutoff`.
///
/// On a finite verdict the table's `tau_max` is set from the angular cover.
pub fn check_finite_horizon(
    table: &mut BilliardTable,
    direction_cutoff: u32,
) -> Result<HorizonVerdict> {
    if direction_cutoff < 1 {
        return Err(Error::InvalidParameter("direction_cutoff must be ≥ 1".into()));
    }
    let dirs = primitive_directions(direction_cutoff);
    let margins: Vec<DirectionMargin> =
        dirs.iter().map(|&(p, q)| direction_margin(table, p, q)).collect();
    let worst = margins
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .copied()
        .expect("cutoff ≥ 1 yields directions");

    let r_max = table.max_radius();
    let tail_period_bound = 1.0 / (direction_cutoff as f64 + 1.0);
    let tail_blocked = 2.0 * r_max > tail_period_bound;

    let mut certificate = HorizonCertificate {
        cutoff: direction_cutoff,
        directions_checked: dirs.len(),
        min_margin: worst.margin,
        min_margin_direction: (worst.p, worst.q),
        tail_shadow_width: 2.0 * r_max,
        tail_period_bound,
        tail_blocked,
        angular_cover: false,
        tau_max: None,
        margins: margins.clone(),
    };

    if let Some(open) = margins.iter().find(|m| m.margin <= 0.0) {
        let width = corridor_width(table, open.p, open.q);
        return Ok(HorizonVerdict::InfiniteHorizon {
            direction: (open.p, open.q),
            corridor_width: width,
            certificate,
        });
    }

    let arcs: Vec<(f64, f64, f64)> = margins
        .iter()
        .map(|m| {
            let len = 1.0 / m.period;
            let (w, bound) = angular_neighbourhood(len, m.margin, r_max);
            ((m.q as f64).atan2(m.p as f64).rem_euclid(PI), w, bound)
        })
        .collect();
    let bound = angular_cover_bound(&arcs);
    certificate.angular_cover = bound.is_some();

    match bound {
        Some(tau_max) if tail_blocked => {
            certificate.tau_max = Some(tau_max);
            table.set_horizon(Some(tau_max), certificate.clone());
            Ok(HorizonVerdict::Finite { tau_max, certificate })
        }
        _ => Err(Error::CutoffTooSmall {
            cutoff: direction_cutoff,
            reason: if tail_blocked {
                "blocked directions do not cover every angle".into()
            } else {
                "tail directions not provably blocked".into()
            },
        }),
    }
}
