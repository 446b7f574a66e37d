//! Bundled scene files.

use crate::geometry::{BilliardTable, Scene};
use crate::horizon::{check_finite_horizon, DEFAULT_CUTOFF};

/// Two-disk table with finite horizon: radius 0.38 at (0.5, 0.5) and radius
/// 0.175 at the origin.
pub const FH1_JSON: &str = include_str!("../fixtures/fh1.json");
/// One disk of radius 0.2; open corridors along both axes.
pub const SINGLE_DISK_JSON: &str = include_str!("../fixtures/single_disk.json");
/// Two radius-0.3 disks with an open diagonal corridor.
pub const CORRIDOR_11_JSON: &str = include_str!("../fixtures/corridor_11.json");

pub fn fh1_scene() -> Scene {
    Scene::from_json(FH1_JSON).expect("bundled scene parses")
}

/// The finite-horizon fixture, certified at the default cutoff.
pub fn fh1() -> BilliardTable {
    let mut table = fh1_scene().build().expect("bundled scene is valid");
    check_finite_horizon(&mut table, DEFAULT_CUTOFF).expect("bundled scene has finite horizon");
    table
}
