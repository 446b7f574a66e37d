use thiserror::Error;

/// Errors produced by table construction, dynamics and the statistics layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("table has no scatterers")]
    EmptyTable,

    #[error("scatterer {index} has invalid radius {radius} (must lie in (0, 0.5))")]
    Radius { index: usize, radius: f64 },

    #[error("scatterer {index} has a non-finite center")]
    Center { index: usize },

    #[error("scatterers {first} and {second} overlap (boundary gap {gap:.6})")]
    Overlap { first: usize, second: usize, gap: f64 },

    #[error("malformed scene: {0}")]
    Scene(String),

    #[error("horizon scan inconclusive at cutoff {cutoff}: {reason}")]
    CutoffTooSmall { cutoff: u32, reason: String },

    #[error("no collision within flight length {limit} from ({x:.6}, {y:.6}) at angle {angle:.6}")]
    HorizonViolation { limit: f64, x: f64, y: f64, angle: f64 },

    #[error("grazing collision (cos φ = {cos_phi:e}), derivative undefined")]
    GrazingDerivative { cos_phi: f64 },

    #[error("unstable cone undefined: no prior collision within the lookback")]
    UndefinedCone,

    #[error("curve is not weakly homogeneous at backward step {step}")]
    NotHomogeneous { step: usize },

    #[error("empty time window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("speed ratio {0} outside [0, 1]")]
    OutOfRangeLambda(f64),

    #[error("rejection sampling stalled: acceptance {acceptance:.4} below 10%")]
    RejectionStall { acceptance: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("multi-precision arithmetic produced a non-finite value")]
    NonFinite,

    #[error("{faulted} of {trials} trials faulted (limit 0.1%)")]
    TooManyFaults { faulted: usize, trials: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
