//! Hyperbolicity diagnostics in Jacobi coordinates.
//!
//! A tangent vector at `(q, φ)` is written `(dη, dξ, dω)`: `dη` along the
//! velocity, `dξ` along the left normal `(−sin φ, cos φ)`, `dω = dφ`. Free
//! flight of length `τ` maps `dξ ↦ dξ + τ·dω`; a collision with curvature `K`
//! and incidence cosine `cos φ` maps
//!
//! ```text
//! dξ ↦ −dξ,    dω ↦ −dω − (2K / cos φ)·dξ,
//! ```
//!
//! so the wavefront curvature `B = dω/dξ` jumps by `2K / cos φ`. `dη` is the
//! value of the invariant contact form and never changes.

use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{incidence_angle, Orbit, ParticleState, GRAZING_COS};
use crate::geometry::{min_image, BilliardTable};

/// Default strip index cutoff `k₀`.
pub const DEFAULT_K0: u32 = 10;
/// Default cone-opening constant `C_f`.
pub const DEFAULT_C_F: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub d_eta: f64,
    pub d_xi: f64,
    pub d_omega: f64,
}

impl TangentVector {
    pub fn new(d_eta: f64, d_xi: f64, d_omega: f64) -> Self {
        Self { d_eta, d_xi, d_omega }
    }

    /// Euclidean norm of the transverse part `(dξ, dω)`.
    pub fn transverse_norm(&self) -> f64 {
        self.d_xi.hypot(self.d_omega)
    }

    /// The same vector seen from the time-reversed phase point.
    pub fn reversed(&self) -> Self {
        Self { d_eta: -self.d_eta, d_xi: -self.d_xi, d_omega: self.d_omega }
    }

    fn scaled(&self, s: f64) -> Self {
        Self { d_eta: self.d_eta * s, d_xi: self.d_xi * s, d_omega: self.d_omega * s }
    }

    fn free_flight(&mut self, tau: f64) {
        self.d_xi += tau * self.d_omega;
    }

    fn collide(&mut self, curvature: f64, cos_phi: f64) -> Result<()> {
        if cos_phi < GRAZING_COS {
            return Err(Error::GrazingDerivative { cos_phi });
        }
        let kick = 2.0 * curvature / cos_phi;
        let xi = self.d_xi;
        self.d_xi = -xi;
        self.d_omega = -self.d_omega - kick * xi;
        Ok(())
    }
}

/// Past of a phase point as seen by the cone field.
///
/// The cone at `X` is the image, after `t_minus` of free flight, of the
/// outgoing cone `B⁺ ∈ [2K/cos φ, 2K/cos φ + 1/prior_flight]` at the last
/// collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeCheckContext {
    /// Curvature at the last collision footpoint.
    pub curvature: f64,
    /// Time since the last collision.
    pub t_minus: f64,
    pub c_f: f64,
    /// `cos φ` at the last collision.
    pub cos_incidence: f64,
    /// Signed outgoing incidence angle at the last collision.
    pub incidence_angle: f64,
    /// Free flight that ended at the last collision.
    pub prior_flight: f64,
}

impl ConeCheckContext {
    /// Reconstruct the context of `state` by flowing backwards.
    pub fn of_state(state: &ParticleState, c_f: f64, table: &BilliardTable) -> Result<Self> {
        let mut back = Orbit::new(table, state.reversed());
        let (seg, hit) = back.next_flight().map_err(|_| Error::UndefinedCone)?;
        let (prior, _) = back.next_flight().map_err(|_| Error::UndefinedCone)?;
        let radius = table.scatterers()[hit.scatterer].radius;
        Ok(Self {
            curvature: 1.0 / radius,
            t_minus: seg.duration,
            c_f,
            cos_incidence: hit.cos_incidence,
            incidence_angle: incidence_angle(hit.normal, state.velocity()),
            prior_flight: prior.duration,
        })
    }

    fn b_plus_range(&self) -> (f64, f64) {
        let lo = 2.0 * self.curvature / self.cos_incidence;
        (lo, lo + 1.0 / self.prior_flight)
    }

    /// Map-coordinate slope `dφ/dr` of `v` pulled back to the last collision.
    pub fn pulled_back_slope(&self, v: &TangentVector) -> f64 {
        let xi_c = v.d_xi - self.t_minus * v.d_omega;
        let b_plus = v.d_omega / xi_c;
        b_plus * self.cos_incidence - self.curvature
    }

    /// Tangent vector with outgoing curvature `b_plus`, carried to `X`, with
    /// unit transverse norm and `dη = eta_ratio·dξ`.
    pub fn cone_vector(&self, b_plus: f64, eta_ratio: f64) -> TangentVector {
        let b = b_plus / (1.0 + self.t_minus * b_plus);
        let v = TangentVector::new(eta_ratio, 1.0, b);
        v.scaled(1.0 / v.transverse_norm())
    }

    /// A cone vector with `B⁺` uniform in the cone and `|dη/dξ| < C_f/2`.
    pub fn random_cone_vector(&self, rng: &mut impl Rng) -> TangentVector {
        let (lo, hi) = self.b_plus_range();
        let b_plus = lo + (hi - lo) * rng.random::<f64>();
        let eta = self.c_f * (rng.random::<f64>() - 0.5);
        self.cone_vector(b_plus, eta)
    }
}

/// Cone membership: `K ≤ dφ/dr ≤ K + cos φ / prior_flight` for the pulled-back
/// slope, and `|dη/dξ| < C_f`. Edges are inclusive up to rounding.
pub fn cone_contains(ctx: &ConeCheckContext, v: &TangentVector) -> Result<bool> {
    if !(ctx.curvature > 0.0 && ctx.prior_flight > 0.0 && ctx.t_minus >= 0.0) {
        return Err(Error::UndefinedCone);
    }
    let slope = ctx.pulled_back_slope(v);
    let lo = ctx.curvature;
    let hi = ctx.curvature + ctx.cos_incidence / ctx.prior_flight;
    let tol = 1e-9 * hi;
    let in_slope = slope >= lo - tol && slope <= hi + tol;
    Ok(in_slope && (v.d_eta / v.d_xi).abs() < ctx.c_f)
}

/// Carry `v` along the orbit of `state` for time `t`.
pub fn transport_tangent(
    state: &ParticleState,
    v: &TangentVector,
    t: f64,
    table: &BilliardTable,
) -> Result<TangentVector> {
    Ok(transport_with_state(state, v, t, table)?.1)
}

/// Like [`transport_tangent`], also returning `Φᵗ(state)`.
pub fn transport_with_state(
    state: &ParticleState,
    v: &TangentVector,
    t: f64,
    table: &BilliardTable,
) -> Result<(ParticleState, TangentVector)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("transport time {t} must be ≥ 0")));
    }
    let mut orbit = Orbit::new(table, *state);
    let mut w = *v;
    while orbit.time() < t {
        let (seg, hit) = orbit.advance_capped(t - orbit.time())?;
        w.free_flight(seg.duration);
        if let Some(hit) = hit {
            w.collide(1.0 / table.scatterers()[hit.scatterer].radius, hit.cos_incidence)?;
        }
    }
    Ok((orbit.state(), w))
}

/// Transverse stretch of `v` under `n` steps of the time-𝔰 map.
pub fn expansion_factor(
    state: &ParticleState,
    v: &TangentVector,
    n: usize,
    table: &BilliardTable,
) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let w = transport_tangent(state, v, n as f64 * table.s_step(), table)?;
    Ok(w.transverse_norm() / v.transverse_norm())
}

/// Result of transporting one cone vector through several collisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConeAudit {
    pub checks: usize,
    pub violations: usize,
    /// Set when a collision was too close to grazing to differentiate.
    pub grazing: bool,
}

/// Transport a random cone vector at `state` through `collisions` collisions,
/// checking cone membership at the middle of every following flight.
pub fn audit_cone_invariance(
    state: &ParticleState,
    collisions: usize,
    c_f: f64,
    table: &BilliardTable,
    rng: &mut impl Rng,
) -> Result<ConeAudit> {
    let ctx = ConeCheckContext::of_state(state, c_f, table)?;
    let mut v = ctx.random_cone_vector(rng);
    let mut audit = ConeAudit::default();
    let mut orbit = Orbit::new(table, *state);
    let mut last: Option<ConeCheckContext> = None;
    for _ in 0..=collisions {
        let (seg, hit) = orbit.next_flight()?;
        if let Some(ctx) = last {
            let half = 0.5 * seg.duration;
            let mut mid = v;
            mid.free_flight(half);
            audit.checks += 1;
            if !cone_contains(&ConeCheckContext { t_minus: half, ..ctx }, &mid)? {
                audit.violations += 1;
            }
        }
        v.free_flight(seg.duration);
        if hit.cos_incidence < GRAZING_COS {
            audit.grazing = true;
            return Ok(audit);
        }
        let curvature = 1.0 / table.scatterers()[hit.scatterer].radius;
        v.collide(curvature, hit.cos_incidence)?;
        // membership is scale invariant; keep the vector O(1)
        v = v.scaled(1.0 / v.transverse_norm());
        last = Some(ConeCheckContext {
            curvature,
            t_minus: 0.0,
            c_f,
            cos_incidence: hit.cos_incidence,
            incidence_angle: incidence_angle(hit.normal, orbit.state().velocity()),
            prior_flight: seg.duration,
        });
    }
    Ok(audit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HomogeneityLabel {
    G,
    H(i64),
}

/// Strip index of a signed incidence angle: 0 in the central strip
/// `|φ| ≤ π/2 − k₀⁻²`, else `±⌊(π/2 − |φ|)^{−1/2}⌋`, so strip `k` is
/// `π/2 − k⁻² ≤ |φ| < π/2 − (k+1)⁻²`.
pub fn strip_index(phi: f64, k0: u32) -> i64 {
    let gap = std::f64::consts::FRAC_PI_2 - phi.abs();
    let k0f = k0 as f64;
    if gap > 1.0 / (k0f * k0f) {
        return 0;
    }
    let k = if gap <= 0.0 { i64::MAX } else { (1.0 / gap.sqrt()).floor() as i64 };
    k.max(k0 as i64) * if phi < 0.0 { -1 } else { 1 }
}

/// `G` when the last collision is more than 𝔰 in the past, otherwise the
/// homogeneity strip of that collision.
pub fn homogeneity_label(
    state: &ParticleState,
    k0: u32,
    table: &BilliardTable,
) -> Result<HomogeneityLabel> {
    let mut back = Orbit::new(table, state.reversed());
    let (seg, hit) = back.next_flight()?;
    if seg.duration > table.s_step() {
        return Ok(HomogeneityLabel::G);
    }
    let phi = incidence_angle(hit.normal, state.velocity());
    Ok(HomogeneityLabel::H(strip_index(phi, k0)))
}

/// A short unstable curve through `center`: the wavefront of curvature `b`
/// (the middle of the unstable cone), i.e. rays from a virtual point source
/// at distance `1/b` behind `center`. Parameter `u` is the ray angle offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnstableCurve {
    pub center: ParticleState,
    pub b: f64,
}

impl UnstableCurve {
    pub fn through(center: &ParticleState, table: &BilliardTable) -> Result<Self> {
        let ctx = ConeCheckContext::of_state(center, DEFAULT_C_F, table)?;
        let (lo, hi) = ctx.b_plus_range();
        let b_plus = 0.5 * (lo + hi);
        Ok(Self { center: *center, b: b_plus / (1.0 + ctx.t_minus * b_plus) })
    }

    pub fn point(&self, u: f64) -> ParticleState {
        let v0 = self.center.velocity();
        let r = 1.0 / self.b;
        let a = self.center.angle + u;
        let (s, c) = a.sin_cos();
        let x = self.center.position.x - r * v0[0] + r * c;
        let y = self.center.position.y - r * v0[1] + r * s;
        ParticleState::new(x, y, a)
    }

    /// Curve tangent `d/du` in Jacobi coordinates.
    pub fn tangent(&self) -> TangentVector {
        TangentVector::new(0.0, 1.0 / self.b, 1.0)
    }

    /// Parameter half-width for a given transverse half-length.
    pub fn param_for_length(&self, length: f64) -> f64 {
        length / self.tangent().transverse_norm()
    }
}

/// Homogeneity label after each of `n` time-𝔰 steps. Two points share an
/// itinerary iff no singularity of `Φ^{k𝔰}`, `k ≤ n`, separates them at the
/// resolution of the labels (collision timing and strip index).
pub fn itinerary(state: &ParticleState, n: usize, table: &BilliardTable) -> Result<Vec<HomogeneityLabel>> {
    let s = table.s_step();
    let mut orbit = Orbit::new(table, *state);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let end = i as f64 * s;
        while orbit.time() < end {
            orbit.advance_capped(end - orbit.time())?;
        }
        out.push(homogeneity_label(&orbit.state(), DEFAULT_K0, table)?);
    }
    Ok(out)
}

/// Distinct itinerary prefixes of each length in `ns`, over `samples` evenly
/// spaced points on the unstable curve of transverse half-length
/// `curve_halfwidth` through `center`.
pub fn itinerary_counts(
    center: &ParticleState,
    curve_halfwidth: f64,
    ns: &[usize],
    samples: usize,
    table: &BilliardTable,
) -> Result<Vec<usize>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let curve = UnstableCurve::through(center, table)?;
    let half = curve.param_for_length(curve_halfwidth);
    let mut words = Vec::with_capacity(samples);
    for j in 0..samples {
        let u = -half + 2.0 * half * j as f64 / (samples - 1) as f64;
        words.push(itinerary(&curve.point(u), n_max, table)?);
    }
    Ok(ns
        .iter()
        .map(|&n| words.iter().map(|w| &w[..n]).collect::<HashSet<_>>().len())
        .collect())
}

/// Number of distinct itineraries of length `n` on the curve; see
/// [`itinerary_counts`].
pub fn count_itineraries(
    center: &ParticleState,
    curve_halfwidth: f64,
    n: usize,
    samples: usize,
    table: &BilliardTable,
) -> Result<usize> {
    if n == 0 {
        return Ok(1);
    }
    Ok(itinerary_counts(center, curve_halfwidth, &[n], samples, table)?[0])
}

/// Least-squares fit `count ≈ a + L·n²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub intercept: f64,
    pub l: f64,
    pub r_squared: f64,
    /// Slope of `count/n²` against `n`; positive values indicate growth
    /// faster than quadratic.
    pub residual_trend: f64,
}

pub fn fit_quadratic(ns: &[usize], counts: &[usize]) -> QuadraticFit {
    let xs: Vec<f64> = ns.iter().map(|&n| (n * n) as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (a, b, r2) = linear_fit(&xs, &ys);
    let ratio: Vec<f64> = ys.iter().zip(&xs).map(|(y, x)| y / x).collect();
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (_, trend, _) = linear_fit(&nf, &ratio);
    QuadraticFit { intercept: a, l: b, r_squared: r2, residual_trend: trend }
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(a, b, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 { b * sxy / syy } else { 1.0 };
    (a, b, r2)
}

/// Phase-space displacement `(dq, dφ)` between two nearby states.
fn phase_gap(a: &ParticleState, b: &ParticleState) -> f64 {
    let dx = min_image(b.position.x - a.position.x);
    let dy = min_image(b.position.y - a.position.y);
    let dphi = min_image((b.angle - a.angle) / TAU) * TAU;
    (dx * dx + dy * dy + dphi * dphi).sqrt()
}

fn flow_back(state: &ParticleState, t: f64, table: &BilliardTable) -> Result<ParticleState> {
    Ok(crate::flow::flow(&state.reversed(), t, table)?.reversed())
}

/// Finite-difference step in the curve parameter.
pub const FD_STEP: f64 = 1e-6;

/// Jacobian of `Φ^{−n𝔰}` restricted to the curve at parameter `u`, by central
/// differences with one Richardson extrapolation.
pub fn backward_jacobian(curve: &UnstableCurve, u: f64, n: usize, table: &BilliardTable) -> Result<f64> {
    let t = n as f64 * table.s_step();
    let diff = |h: f64| -> Result<f64> {
        let a = curve.point(u - h);
        let b = curve.point(u + h);
        let fa = flow_back(&a, t, table)?;
        let fb = flow_back(&b, t, table)?;
        Ok(phase_gap(&fa, &fb) / phase_gap(&a, &b))
    };
    let d1 = diff(FD_STEP)?;
    let d2 = diff(0.5 * FD_STEP)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// The same Jacobian from tangent transport along the reversed orbit.
pub fn backward_jacobian_tangent(
    curve: &UnstableCurve,
    u: f64,
    n: usize,
    table: &BilliardTable,
) -> Result<f64> {
    let p = curve.point(u);
    let v = curve.tangent();
    let w = transport_tangent(&p.reversed(), &v.reversed(), n as f64 * table.s_step(), table)?;
    let full = |x: &TangentVector| (x.d_eta * x.d_eta + x.d_xi * x.d_xi + x.d_omega * x.d_omega).sqrt();
    Ok(full(&w) / full(&v))
}

/// Check that the backward images of the curve stay within one homogeneity
/// label at `checkpoints` evenly spaced points, for each of `n` steps.
pub fn check_weak_homogeneity(
    curve: &UnstableCurve,
    u_lo: f64,
    u_hi: f64,
    n: usize,
    checkpoints: usize,
    k0: u32,
    table: &BilliardTable,
) -> Result<()> {
    let s = table.s_step();
    let mut pts: Vec<ParticleState> = (0..checkpoints.max(2))
        .map(|j| curve.point(u_lo + (u_hi - u_lo) * j as f64 / (checkpoints.max(2) - 1) as f64))
        .collect();
    for step in 1..=n {
        for p in pts.iter_mut() {
            *p = flow_back(p, s, table)?;
        }
        let first = homogeneity_label(&pts[0], k0, table)?;
        for p in &pts[1..] {
            if homogeneity_label(p, k0, table)? != first {
                return Err(Error::NotHomogeneous { step });
            }
        }
    }
    Ok(())
}

/// `J_W Φ^{−n𝔰}(Y) / J_W Φ^{−n𝔰}(Z)` for the points at parameters `u_y` and
/// `u_z` on `curve`.
pub fn distortion_ratio(
    curve: &UnstableCurve,
    u_y: f64,
    u_z: f64,
    n: usize,
    table: &BilliardTable,
) -> Result<f64> {
    if u_y == u_z {
        return Ok(1.0);
    }
    check_weak_homogeneity(curve, u_y.min(u_z), u_y.max(u_z), n, 9, DEFAULT_K0, table)?;
    let jy = backward_jacobian(curve, u_y, n, table)?;
    let jz = backward_jacobian(curve, u_z, n, table)?;
    Ok(jy / jz)
}

/// Transverse arclength of the curve between two parameters.
pub fn curve_length(curve: &UnstableCurve, u_y: f64, u_z: f64) -> f64 {
    (u_y - u_z).abs() * curve.tangent().transverse_norm()
}
