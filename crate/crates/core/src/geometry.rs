//! The billiard table: unit torus minus disjoint circular scatterers.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::HorizonCertificate;

/// Reduce a coordinate into `[0, 1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    let w = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Minimum-image reduction of a displacement component into `[-0.5, 0.5]`.
#[inline]
pub fn min_image(d: f64) -> f64 {
    d - d.round()
}

/// A point of the unit torus, coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x: wrap_unit(x), y: wrap_unit(y) }
    }

    /// Shortest displacement `other - self` over all lattice translates.
    #[inline]
    pub fn displacement_to(&self, other: &TorusPoint) -> [f64; 2] {
        [min_image(other.x - self.x), min_image(other.y - self.y)]
    }

    /// Move by `t` along the unit vector `dir`.
    #[inline]
    pub fn advance(&self, dir: [f64; 2], t: f64) -> TorusPoint {
        TorusPoint::new(self.x + t * dir[0], self.y + t * dir[1])
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Torus distance: Euclidean distance minimized over lattice translates.
///
/// Per-coordinate minimum image is the same minimum as the one over the nine
/// nearest translates, and never exceeds `√2/2`.
#[inline]
pub fn torus_distance(p: &TorusPoint, q: &TorusPoint) -> f64 {
    let [dx, dy] = p.displacement_to(q);
    dx.hypot(dy)
}

/// A circular scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub center: TorusPoint,
    pub radius: f64,
}

impl Scatterer {
    pub fn new(x: f64, y: f64, radius: f64) -> Self {
        Self { center: TorusPoint::new(x, y), radius }
    }

    pub fn curvature(&self) -> f64 {
        1.0 / self.radius
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }
}

/// One lattice image of a scatterer that overlaps the fundamental cell `[0,1]²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellImage {
    pub scatterer: usize,
    pub center: [f64; 2],
    pub radius_sq: f64,
}

/// Validated billiard domain with derived constants.
///
/// Immutable once certified; share freely across trial workers.
#[derive(Debug, Clone)]
pub struct BilliardTable {
    scatterers: Vec<Scatterer>,
    domain_area: f64,
    boundary_length: f64,
    tau_min: f64,
    tau_max: Option<f64>,
    certificate: Option<HorizonCertificate>,
    arc_offsets: Vec<f64>,
    images: Vec<CellImage>,
    max_radius: f64,
}

/// Search cap for tables whose horizon has not been certified.
pub const UNCERTIFIED_SEARCH_LIMIT: f64 = 1.0e3;

/// Validate scatterers and compute the derived constants.
///
/// `tau_min` is the smallest boundary-to-boundary gap over a 5×5 block of
/// lattice translates. `tau_max` stays unset until the horizon is certified.
pub fn build_table(scatterers: Vec<Scatterer>) -> Result<BilliardTable> {
    if scatterers.is_empty() {
        return Err(Error::EmptyTable);
    }
    for (index, s) in scatterers.iter().enumerate() {
        if !s.center.x.is_finite() || !s.center.y.is_finite() {
            return Err(Error::Center { index });
        }
        if !(s.radius > 0.0 && s.radius < 0.5) {
            return Err(Error::Radius { index, radius: s.radius });
        }
    }

    let mut tau_min = f64::INFINITY;
    for (i, a) in scatterers.iter().enumerate() {
        for (j, b) in scatterers.iter().enumerate().skip(i) {
            for ox in -2..=2 {
                for oy in -2..=2 {
                    if i == j && ox == 0 && oy == 0 {
                        continue;
                    }
                    let dx = b.center.x + ox as f64 - a.center.x;
                    let dy = b.center.y + oy as f64 - a.center.y;
                    let gap = dx.hypot(dy) - a.radius - b.radius;
                    if gap <= 0.0 {
                        return Err(Error::Overlap { first: i, second: j, gap });
                    }
                    tau_min = tau_min.min(gap);
                }
            }
        }
    }

    let covered: f64 = scatterers.iter().map(|s| PI * s.radius * s.radius).sum();
    let domain_area = 1.0 - covered;
    let boundary_length = scatterers.iter().map(Scatterer::perimeter).sum();

    let mut arc_offsets = Vec::with_capacity(scatterers.len());
    let mut acc = 0.0;
    for s in &scatterers {
        arc_offsets.push(acc);
        acc += s.perimeter();
    }

    let mut images = Vec::new();
    for (idx, s) in scatterers.iter().enumerate() {
        for ox in -1..=1 {
            for oy in -1..=1 {
                let cx = s.center.x + ox as f64;
                let cy = s.center.y + oy as f64;
                // distance from the image center to the closed unit square
                let ex = (0.0 - cx).max(cx - 1.0).max(0.0);
                let ey = (0.0 - cy).max(cy - 1.0).max(0.0);
                if ex.hypot(ey) <= s.radius {
                    images.push(CellImage {
                        scatterer: idx,
                        center: [cx, cy],
                        radius_sq: s.radius * s.radius,
                    });
                }
            }
        }
    }

    let max_radius = scatterers.iter().map(|s| s.radius).fold(0.0, f64::max);

    Ok(BilliardTable {
        scatterers,
        domain_area,
        boundary_length,
        tau_min,
        tau_max: None,
        certificate: None,
        arc_offsets,
        images,
        max_radius,
    })
}

impl BilliardTable {
    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    /// |D|
    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    /// |∂D|
    pub fn boundary_length(&self) -> f64 {
        self.boundary_length
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> Option<f64> {
        self.tau_max
    }

    pub fn certificate(&self) -> Option<&HorizonCertificate> {
        self.certificate.as_ref()
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    /// Step of the time-𝔰 map, `tau_min / 2`.
    pub fn s_step(&self) -> f64 {
        0.5 * self.tau_min
    }

    /// Longest ray the collision search will follow before declaring a horizon violation.
    pub fn search_limit(&self) -> f64 {
        match self.tau_max {
            Some(t) => t + self.max_radius + 1.0,
            None => UNCERTIFIED_SEARCH_LIMIT,
        }
    }

    pub(crate) fn images(&self) -> &[CellImage] {
        &self.images
    }

    pub(crate) fn set_horizon(&mut self, tau_max: Option<f64>, certificate: HorizonCertificate) {
        self.tau_max = tau_max;
        self.certificate = Some(certificate);
    }

    /// Arclength offset of scatterer `idx` in the concatenated boundary coordinate.
    pub fn arc_offset(&self, idx: usize) -> f64 {
        self.arc_offsets[idx]
    }

    /// Signed distance from `p` to the nearest scatterer boundary (negative inside).
    pub fn clearance(&self, p: &TorusPoint) -> f64 {
        self.scatterers
            .iter()
            .map(|s| torus_distance(p, &s.center) - s.radius)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_free(&self, p: &TorusPoint) -> bool {
        self.clearance(p) > 0.0
    }

    /// Lebesgue measure of `{q ∈ D : dist(q, ∂D) > xi}` by midpoint integration
    /// on a `resolution²` grid.
    pub fn clearance_area(&self, xi: f64, resolution: usize) -> f64 {
        let h = 1.0 / resolution as f64;
        let mut hits = 0usize;
        for i in 0..resolution {
            let x = (i as f64 + 0.5) * h;
            for j in 0..resolution {
                let p = TorusPoint { x, y: (j as f64 + 0.5) * h };
                if self.clearance(&p) > xi {
                    hits += 1;
                }
            }
        }
        hits as f64 * h * h
    }

    pub fn to_scene(&self) -> Scene {
        Scene {
            scatterers: self
                .scatterers
                .iter()
                .map(|s| SceneScatterer { center: [s.center.x, s.center.y], radius: s.radius })
                .collect(),
            mean_free_path: None,
        }
    }
}

/// Mean free flight time between collisions, `π|D| / |∂D|`.
pub fn mean_free_path(table: &BilliardTable) -> f64 {
    PI * table.domain_area() / table.boundary_length()
}

/// Scene file: `{ "scatterers": [ { "center": [x, y], "radius": r }, ... ] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub scatterers: Vec<SceneScatterer>,
    /// Recorded mean free path, kept for reference; not used for validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_free_path: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneScatterer {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Scene> {
        let scene: Scene =
            serde_json::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        for (i, s) in scene.scatterers.iter().enumerate() {
            if !(s.center[0].is_finite() && s.center[1].is_finite() && s.radius.is_finite()) {
                return Err(Error::Scene(format!("scatterer {i} has non-finite values")));
            }
        }
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let text = std::fs::read_to_string(path)?;
        Scene::from_json(&text)
    }

    pub fn scatterers(&self) -> Vec<Scatterer> {
        self.scatterers
            .iter()
            .map(|s| Scatterer::new(s.center[0], s.center[1], s.radius))
            .collect()
    }

    pub fn build(&self) -> Result<BilliardTable> {
        build_table(self.scatterers())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_disk_area() {
        let t = build_table(vec![Scatterer::new(0.5, 0.5, 0.2)]).unwrap();
        assert!((t.domain_area() - (1.0 - 0.04 * PI)).abs() < 1e-15);
        assert!((t.domain_area() - 0.874336).abs() < 1e-6);
        assert!(t.tau_max().is_none());
        // self-translate gap
        assert!((t.tau_min() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn overlapping_disks_rejected() {
        let err = build_table(vec![Scatterer::new(0.0, 0.0, 0.3), Scatterer::new(0.4, 0.4, 0.3)])
            .unwrap_err();
        assert!(matches!(err, Error::Overlap { first: 0, second: 1, .. }));
    }

    #[test]
    fn radius_out_of_range() {
        for r in [0.6, 0.5, 0.0, -0.1, f64::NAN] {
            let err = build_table(vec![Scatterer::new(0.5, 0.5, r)]).unwrap_err();
            assert!(matches!(err, Error::Radius { index: 0, .. }), "r = {r}");
        }
        assert!(matches!(build_table(vec![]).unwrap_err(), Error::EmptyTable));
    }

    #[test]
    fn overlap_through_wraparound() {
        // centers 0.1 apart across the seam
        let err = build_table(vec![Scatterer::new(0.95, 0.5, 0.1), Scatterer::new(0.05, 0.5, 0.1)])
            .unwrap_err();
        assert!(matches!(err, Error::Overlap { .. }));
    }

    #[test]
    fn distance_examples() {
        let d = torus_distance(&TorusPoint::new(0.05, 0.0), &TorusPoint::new(0.95, 0.0));
        assert!((d - 0.1).abs() < 1e-15);
        let p = TorusPoint::new(0.3, 0.7);
        assert_eq!(torus_distance(&p, &p), 0.0);
        let d = torus_distance(&TorusPoint::new(0.25, 0.25), &TorusPoint::new(0.75, 0.75));
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wrap_is_idempotent() {
        for v in [-1e-18, -0.3, 0.0, 0.999_999_999_999, 1.0, 7.25, -3.5] {
            let w = wrap_unit(v);
            assert!((0.0..1.0).contains(&w), "{v} -> {w}");
            assert_eq!(wrap_unit(w), w);
        }
    }

    #[test]
    fn mean_free_path_single_disk() {
        let t = build_table(vec![Scatterer::new(0.5, 0.5, 0.2)]).unwrap();
        let expected = PI * (1.0 - 0.04 * PI) / (0.4 * PI);
        assert!((mean_free_path(&t) - expected).abs() < 1e-14);
        assert!((mean_free_path(&t) - 2.18584).abs() < 1e-5);
    }

    #[test]
    fn scene_rejects_garbage() {
        assert!(Scene::from_json("{\"scatterers\": [{\"center\": [0.1], \"radius\": 0.2}]}").is_err());
        assert!(Scene::from_json("{\"scatterers\": [{\"center\": [0.1, 0.2], \"radius\": NaN}]}").is_err());
        assert!(Scene::from_json("{\"scatterers\": [{\"center\": [0.1, 0.2], \"radius\": \"x\"}]}").is_err());
        assert!(Scene::from_json("not json").is_err());
        let s = Scene::from_json("{\"scatterers\": [{\"center\": [0.1, 0.2], \"radius\": 0.7}]}").unwrap();
        assert!(matches!(s.build().unwrap_err(), Error::Radius { .. }));
    }

    #[test]
    fn clearance_area_single_disk() {
        let t = build_table(vec![Scatterer::new(0.5, 0.5, 0.2)]).unwrap();
        let a = t.clearance_area(0.05, 1000);
        assert!((a - (1.0 - PI * 0.25 * 0.25)).abs() < 2e-3, "{a}");
    }
}
