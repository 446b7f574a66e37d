//! Two-particle Sinai billiard simulation and first-encounter statistics.
//!
//! A point particle moves on the unit torus minus disjoint circular
//! scatterers, reflecting specularly. Two independent particles with speeds
//! 1 and λ are flowed together and their ε-close encounters are detected
//! exactly. The statistics layer compares the law of the first good encounter
//! with the exponential law of rate ρ(λ).

pub mod diagnostics;
pub mod encounter;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod flow;
pub mod geometry;
pub mod horizon;
pub mod precise;
pub mod rate;
pub mod report;
pub mod stats;
pub mod tangent;

pub use encounter::{
    all_encounters, dense_audit, first_encounter, relative_min_distance, EncounterEvent, EncounterLog,
    DenseAudit, FirstEncounter, JointState,
};
pub use error::{Error, Result};
pub use experiment::{
    micro_encounter_probability, reencounter_fraction, run_ensemble, run_trial, sample_state,
    EnsembleResult, EnsembleSummary, ExperimentConfig, ExperimentParams, TrialOutcome,
};
pub use flow::{
    billiard_map, flow, flow_segments, next_collision, reflect, time_s_map, BoundaryState,
    Collision, FlightSegment, Orbit, ParticleState, SegmentEnd,
};
pub use geometry::{
    build_table, mean_free_path, torus_distance, BilliardTable, Scatterer, Scene, TorusPoint,
};
pub use horizon::{check_finite_horizon, HorizonCertificate, HorizonVerdict, DEFAULT_CUTOFF};
pub use precise::{reversibility_error, ReversibilityReport};
pub use rate::{exponential_cdf, rho, rho_closed_form, rho_quadrature, RateMethod, RateResult};
pub use stats::{hazard_estimate, ks_statistic, EmpiricalDistribution, HazardBin, KsResult};
pub use tangent::{
    cone_contains, count_itineraries, distortion_ratio, expansion_factor, homogeneity_label,
    transport_tangent, ConeCheckContext, HomogeneityLabel, TangentVector, UnstableCurve,
};
