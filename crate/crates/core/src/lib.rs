//! Simulation and policy learning for single-shot adaptive interferometric
//! phase estimation.
//!
//! An N-photon input state is sent one photon at a time through a
//! Mach-Zehnder interferometer with an unknown phase φ and a controllable
//! phase Φ. After each detection Φ is moved by a feedback policy and the
//! final Φ is the estimate. The crate provides:
//!
//! - [`symstate`]: symmetric-basis states (sine state, product state) and
//!   Wigner d-matrices at π/2,
//! - [`interferometer`]: Kraus-operator measurement and single-shot simulation,
//! - [`policy`]: the update rule, decision-tree enumeration and policy files,
//! - [`inference`]: exact outcome and estimate distributions, Holevo variance,
//!   Fisher information and the Cramér-Rao bound,
//! - [`optimizer`]: differential evolution on the policy torus and the
//!   Holevo-variance training objective,
//! - [`experiment`]: training, held-out evaluation and N-sweep scaling runs.

pub mod angle;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod interferometer;
pub mod io;
pub mod optimizer;
pub mod policy;
pub mod rng;
pub mod symstate;

pub use error::{Error, Result};
pub use inference::{
    crlb, estimate_distribution, fisher_information, outcome_distribution, plain_variance,
    sharpness_and_holevo, EstimateDistribution, FisherReport, ImprecisionReport,
    OutcomeDistribution,
};
pub use interferometer::{
    kraus_apply, measure_one, simulate_single_shot, single_photon_matrix, MeasurementRecord,
    Outcome, PhasePair,
};
pub use optimizer::{de_optimize, DeConfig, DeOutcome, TrainingSet};
pub use policy::{
    enumerate_histories, feedback_update, policy_tree_size, OutcomeHistory, Policy, PolicyFile,
    PolicyMeta,
};
pub use symstate::{wigner_d_half_pi, StateKind, SymmetricState, WignerDTable};
