//! Objective metrics, evaluation reports and corpus audits.

mod audit;
mod metrics;
mod report;

pub use audit::{audit_corpus, AuditReport, ReplayCheck, Summary, REPLAY_TOLERANCE};
pub use metrics::{clipped_fraction, lsd, LSD_FLOOR};
pub use report::{
    aggregate, evaluate_dirs, score_file, write_report, Aggregate, EvalReport, FileResult,
    ModelInfo, CLIP_LEVEL,
};
