//! Command implementations behind the `billiard` binary, and the file
//! formats it reads and writes.
//!
//! Exit codes are part of the interface: see [`exit`].

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use anyhow::{Context, Result};
use billiard_core::diagnostics::{
    complexity_report, cone_report, distortion_report, expansion_report, mixing_curve,
};
use billiard_core::experiment::{run_ensemble, sample_state, trial_rng, ExperimentConfig, ExperimentParams};
use billiard_core::flow::{flow_segments, ParticleState, SegmentEnd};
use billiard_core::geometry::{BilliardTable, Scene};
use billiard_core::horizon::{check_finite_horizon, HorizonCertificate, HorizonVerdict};
use billiard_core::rate::{rho_closed_form, rho_quadrature, RateResult};
use billiard_core::report::{cdf_csv, hazard_csv, times_csv};
use billiard_core::{fixtures, EnsembleSummary};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// The run could not complete (for example too many faulted trials).
    pub const FAILURE: u8 = 1;
    /// The table has an infinite horizon.
    pub const DOMAIN_VERDICT: u8 = 2;
    /// The scene is geometrically invalid or cannot be certified.
    pub const INVALID_MODEL: u8 = 3;
    /// Unreadable files, malformed JSON, or out-of-range configuration.
    pub const IO_SCHEMA: u8 = 4;
}

/// A table rejected for having an open corridor.
#[derive(Debug, Clone, Copy)]
pub struct InfiniteHorizon {
    pub direction: (i32, i32),
    pub corridor_width: f64,
}

impl fmt::Display for InfiniteHorizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "infinite horizon: open corridor in direction ({}, {}) of width {:.6}",
            self.direction.0, self.direction.1, self.corridor_width
        )
    }
}

impl std::error::Error for InfiniteHorizon {}

/// Exit code for an error, from the first recognized cause in its chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use billiard_core::Error as E;
    for cause in err.chain() {
        if cause.is::<InfiniteHorizon>() {
            return exit::DOMAIN_VERDICT;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::EmptyTable | E::Radius { .. } | E::Center { .. } | E::Overlap { .. } | E::CutoffTooSmall { .. } => {
                    exit::INVALID_MODEL
                }
                E::Scene(_) | E::Io(_) | E::Json(_) | E::InvalidParameter(_) | E::OutOfRangeLambda(_) => {
                    exit::IO_SCHEMA
                }
                _ => exit::FAILURE,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return exit::IO_SCHEMA;
        }
    }
    exit::FAILURE
}

/// Experiment configuration file. `scene` is resolved relative to the
/// configuration file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub scene: PathBuf,
    pub lambda: f64,
    pub epsilon: f64,
    pub xi: f64,
    #[serde(rename = "T")]
    pub t_macro: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Provenance of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the effective parameters as canonical JSON.
    pub config_sha256: String,
    /// SHA-256 of the scene file bytes.
    pub scene_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    pub git_revision: Option<String>,
    pub workers: usize,
    pub outputs: Vec<PathBuf>,
}

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub manifest: RunManifest,
    pub params: ExperimentParams,
    pub scene: Scene,
    pub horizon: HorizonCertificate,
    pub summary: EnsembleSummary,
}

/// Both evaluations of the rate function, as printed by `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub lambda: f64,
    pub domain_area: f64,
    pub quadrature: RateResult,
    pub closed_form: RateResult,
    pub difference: f64,
}

/// A scene with the bytes it was read from.
pub struct LoadedScene {
    pub scene: Scene,
    pub bytes: Vec<u8>,
}

/// Read a scene file, or the built-in FH-1 fixture when `path` is `None`.
pub fn load_scene(path: Option<&Path>) -> Result<LoadedScene> {
    let bytes = match path {
        Some(p) => fs::read(p).with_context(|| format!("reading scene {}", p.display()))?,
        None => fixtures::FH1_JSON.as_bytes().to_vec(),
    };
    let text = String::from_utf8(bytes.clone()).map_err(|e| billiard_core::Error::Scene(e.to_string()))?;
    Ok(LoadedScene { scene: Scene::from_json(&text)?, bytes })
}

/// Build the table and require a certified finite horizon.
pub fn certified_table(scene: &Scene, cutoff: u32) -> Result<(BilliardTable, HorizonCertificate)> {
    let mut table = scene.build()?;
    match check_finite_horizon(&mut table, cutoff)? {
        HorizonVerdict::Finite { certificate, .. } => Ok((table, certificate)),
        HorizonVerdict::InfiniteHorizon { direction, corridor_width, .. } => {
            Err(InfiniteHorizon { direction, corridor_width }.into())
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_file(&dir.join(name), text.as_bytes())?;
    }
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{text}")?;
    Ok(())
}

/// `validate-table`: print the horizon verdict; exit 0 when finite, 2 when
/// a corridor is open.
pub fn cmd_validate_table(scene: &Path, cutoff: u32, out: Option<&Path>) -> Result<u8> {
    let loaded = load_scene(Some(scene))?;
    let mut table = loaded.scene.build()?;
    let verdict = check_finite_horizon(&mut table, cutoff)?;
    emit_json(&verdict, out, "certificate.json")?;
    Ok(if verdict.is_finite() { exit::OK } else { exit::DOMAIN_VERDICT })
}

/// `rate`: ρ(λ) by both methods. Without a scene the domain area is 1.
pub fn cmd_rate(lambda: f64, scene: Option<&Path>, out: Option<&Path>) -> Result<u8> {
    let area = match scene {
        Some(p) => load_scene(Some(p))?.scene.build()?.domain_area(),
        None => 1.0,
    };
    let quadrature = rho_quadrature(lambda, area)?;
    let closed_form = rho_closed_form(lambda, area)?;
    let report = RateReport {
        lambda,
        domain_area: area,
        quadrature,
        closed_form,
        difference: (quadrature.rho - closed_form.rho).abs(),
    };
    emit_json(&report, out, "rate.json")?;
    Ok(exit::OK)
}

/// Initial condition for `simulate`.
#[derive(Debug, Clone, Copy)]
pub enum StartState {
    Given(ParticleState),
    Sampled { seed: u64 },
}

/// `simulate`: flight segments of one orbit as CSV, to `orbit.csv` under
/// `out` or to stdout.
pub fn cmd_simulate(scene: Option<&Path>, start: StartState, time: f64, cutoff: u32, out: Option<&Path>) -> Result<u8> {
    let loaded = load_scene(scene)?;
    let (table, _) = certified_table(&loaded.scene, cutoff)?;
    let state = match start {
        StartState::Given(s) => {
            anyhow::ensure!(
                table.is_free(&s.position),
                billiard_core::Error::InvalidParameter("start position lies inside a scatterer".into())
            );
            s
        }
        StartState::Sampled { seed } => sample_state(&table, &mut trial_rng(seed, 0))?,
    };
    let segments = flow_segments(&state, time, &table)?;
    let mut text = String::from("index,start_time,duration,x,y,angle,end\n");
    for (i, s) in segments.iter().enumerate() {
        let end = match s.end {
            SegmentEnd::ScattererHit { scatterer, .. } => scatterer.to_string(),
            SegmentEnd::TimeCap => "cap".to_string(),
        };
        text.push_str(&format!(
            "{i},{:e},{:e},{:e},{:e},{:e},{end}\n",
            s.start_time, s.duration, s.start.x, s.start.y, s.angle
        ));
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write_file(&dir.join("orbit.csv"), text.as_bytes())?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(exit::OK)
}

/// Number of points on the `cdf.csv` grid.
pub const CDF_POINTS: usize = 201;

/// `experiment`: run the ensemble described by `config` and write
/// `results.json`, `times.csv`, `cdf.csv` and `hazard.csv` into `out`.
/// `seed` overrides the configured master seed.
pub fn cmd_experiment(config: &Path, out: &Path, workers: usize, seed: Option<u64>, cutoff: u32) -> Result<u8> {
    let started_at = now();
    let text = fs::read_to_string(config).with_context(|| format!("reading config {}", config.display()))?;
    let file: ExperimentFile =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", config.display()))?;
    let scene_path = config.parent().unwrap_or(Path::new(".")).join(&file.scene);
    let loaded = load_scene(Some(&scene_path))?;
    let (table, certificate) = certified_table(&loaded.scene, cutoff)?;
    let params = ExperimentParams {
        lambda: file.lambda,
        epsilon: file.epsilon,
        xi: file.xi,
        t_macro: file.t_macro,
        trials: file.trials,
        seed: seed.unwrap_or(file.seed),
    };
    let cfg = ExperimentConfig::new(table, params)?;
    log::info!("running {} trials on {} workers", params.trials, workers);
    let result = run_ensemble(&cfg, workers)?;

    // all writes happen after the deterministic merge
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files = ["times.csv", "cdf.csv", "hazard.csv", "results.json"];
    write_file(&out.join(files[0]), times_csv(&result.outcomes)?.as_bytes())?;
    write_file(&out.join(files[1]), cdf_csv(&result.distribution, result.summary.rho, CDF_POINTS)?.as_bytes())?;
    write_file(&out.join(files[2]), hazard_csv(&result.summary.hazard)?.as_bytes())?;
    let results = ResultsFile {
        manifest: RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(&serde_json::to_vec(&params)?),
            scene_sha256: sha256_hex(&loaded.bytes),
            started_at,
            finished_at: now(),
            git_revision: git_revision(),
            workers,
            outputs: files.iter().map(|f| out.join(f)).collect(),
        },
        params,
        scene: loaded.scene,
        horizon: certificate,
        summary: result.summary,
    };
    write_file(&out.join(files[3]), serde_json::to_string_pretty(&results)?.as_bytes())?;
    let s = &results.summary;
    println!(
        "{} trials ({} usable): KS {:.4} vs ρ = {:.4}, censored {:.4} (expected {:.4}); results in {}",
        s.trials,
        s.usable_trials,
        s.ks.unconditional,
        s.rho,
        s.censored_fraction,
        s.expected_censored_fraction,
        out.display()
    );
    Ok(exit::OK)
}

/// One `diagnose` report.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Cones { samples: usize, n: usize, c_f: f64 },
    Expansion { samples: usize, n: usize },
    Complexity { centers: usize, n_min: usize, n_max: usize, halfwidth: f64, samples: usize },
    Distortion { curves: usize, halfwidth: f64, n_min: usize, n_max: usize },
    MixingCurve { max_lag: f64, points: usize, samples: usize },
}

/// `diagnose`: print the report as JSON and write `<name>.json` under `out`.
pub fn cmd_diagnose(
    kind: &Diagnostic,
    scene: Option<&Path>,
    seed: u64,
    workers: usize,
    cutoff: u32,
    out: Option<&Path>,
) -> Result<u8> {
    let loaded = load_scene(scene)?;
    let (table, _) = certified_table(&loaded.scene, cutoff)?;
    match *kind {
        Diagnostic::Cones { samples, n, c_f } => {
            emit_json(&cone_report(&table, samples, n, c_f, seed, workers)?, out, "cones.json")?
        }
        Diagnostic::Expansion { samples, n } => {
            emit_json(&expansion_report(&table, n, samples, seed, workers)?, out, "expansion.json")?
        }
        Diagnostic::Complexity { centers, n_min, n_max, halfwidth, samples } => {
            anyhow::ensure!(
                1 <= n_min && n_min < n_max,
                billiard_core::Error::InvalidParameter(format!("need 1 ≤ n-min < n-max, got {n_min}..{n_max}"))
            );
            let ns: Vec<usize> = (n_min..=n_max).collect();
            let report = complexity_report(&table, &ns, centers, halfwidth, samples, seed, workers)?;
            emit_json(&report, out, "complexity.json")?
        }
        Diagnostic::Distortion { curves, halfwidth, n_min, n_max } => {
            anyhow::ensure!(
                1 <= n_min && n_min <= n_max,
                billiard_core::Error::InvalidParameter(format!("need 1 ≤ n-min ≤ n-max, got {n_min}..{n_max}"))
            );
            let report = distortion_report(&table, curves, halfwidth, (n_min, n_max), seed, workers)?;
            emit_json(&report, out, "distortion.json")?
        }
        Diagnostic::MixingCurve { max_lag, points, samples } => {
            emit_json(&mixing_curve(&table, max_lag, points, samples, seed, workers)?, out, "mixing-curve.json")?
        }
    }
    Ok(exit::OK)
}
