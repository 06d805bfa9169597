//! Structured pruning of GLU MLP layers by optimization.
//!
//! Channel selection is cast as a mixed-integer least-squares model whose
//! binary indicator relaxes to the simplex without losing binary optima. A
//! penalty method alternates composite channel scoring, soft indicator
//! updates, and closed-form generalized-ridge weight solves under a
//! geometrically growing penalty, then hardens the mask and refits the kept
//! columns. Weight recovery alternates Adam steps on the up and gate
//! projections with exact least-squares updates of the down projection.
//!
//! Everything is deterministic: fixed seeds and fixed accumulation orders
//! reproduce results bitwise. Brute-force subset enumeration certifies
//! solution quality at desk scale.

pub mod activation;
pub mod altmin;
pub mod config;
pub mod container;
pub mod error;
pub mod glu;
pub mod matrix;
pub mod oracle;
pub mod penalty;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scoring;

pub use activation::{sigmoid, swish, swish_grad};
pub use altmin::{
    altmin_recover, down_closed_form, gd_recover, mlp_gradients, mlp_objective, AdamState,
    AltMinConfig,
};
pub use config::{OneOrMany, RunConfig};
pub use container::WeightContainer;
pub use error::{Result, SpapError};
pub use glu::{glu_forward, prune_by_correspondence, ActivationPair, GluLayer};
pub use matrix::{frobenius_error, matmul, spd_solve, Matrix};
pub use oracle::{
    magnitude_baseline, oracle_best_subset, oracle_best_subset_with_guard, theorem1_roundtrip,
    OracleResult, DEFAULT_SUBSET_GUARD,
};
pub use penalty::{
    least_squares_refit, penalty_prune, ridge_update, PenaltyConfig, PenaltyOutcome,
    PenaltyRecord, PenaltyTrace,
};
pub use pipeline::{
    analytic_cost, sequential_prune, sparsity_to_lambda, LayerReport, PruneOptions, PruneReport,
    SparsityPlan, ToyModel, Variant,
};
pub use report::{ReportFile, RunRecord};
pub use rng::Rng;
pub use scoring::{
    composite_score, composite_score_with, hard_assign, soft_update, PruneAssignment, ScoreNorm,
    ScoreVector,
};
