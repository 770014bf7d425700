//! Scoring: Cramér-Rao bounds, detection-to-truth association and the
//! Monte-Carlo experiment runner.

mod associate;
mod crb;
mod experiment;

pub use associate::{associate, Association, Gates, Match};
pub use crb::{crb, CrbBounds, CrbParams};
pub use experiment::{
    run_experiment, DetectorKind, ExperimentConfig, ExperimentReport, PointStats, Scenario, SeparationAxis,
    TrialRecord,
};
