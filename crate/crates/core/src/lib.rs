//! Antenna planning and robust interference control for sojourner sub-cells.
//!
//! Two design procedures share this crate:
//!
//! * planning: fit a phase-type law to stay durations ([`phasefit`]), turn an
//!   arrival profile into the Poisson concurrency of an M_t/G/∞ queue
//!   ([`queue`]) and pick transmit-antenna counts from it ([`planner`]);
//! * transmission: block-diagonalization precoding ([`mimo`]) combined with
//!   an auxiliary covariance that caps worst-case interference at inhabitants
//!   under bounded channel error ([`robust`]), exercised by the Monte-Carlo
//!   [`harness`].

pub mod error;
pub mod linalg;
pub mod quadrature;

pub mod phasefit;
pub mod planner;
pub mod queue;

pub mod mimo;
pub mod robust;

pub mod harness;

pub mod cli;
pub mod config;

mod barrier;

pub use error::{Error, Result};
pub use phasefit::{empht_fit, DurationSamples, EmOptions, PhaseTypeDist, PhaseTypeFit};
pub use queue::{
    adequacy_probability, concurrency_cdf, concurrency_pmf, mean_adequacy, offered_load, AdequacyProfile,
    ArrivalProfile, ConcurrencyModel, CountBound,
};
pub use planner::{
    disk_overlap_area, iap_antennas, select_sap_antennas_eta, select_sap_antennas_gamma, supportable_sojourners,
    PlannerConfig,
};
pub use mimo::{bd_precoder, capacity_term, perturb_channel, sample_channel, stack_interfering, BdPrecoder};
pub use robust::{
    assemble_lmi, beamformer_from_q, interference, solve_p2, BeamformerSolution, RobustBfProblem, SolveStatus,
};
