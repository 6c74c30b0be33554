//! Optimisation, learning-rate schedule and the two training stages.

mod adam;
mod config;
mod run;
mod schedule;
mod step;

pub use adam::Adam;
pub use config::{OptimConfig, Precision, TrainConfig};
pub use run::{
    run_epochs, train_from_config, validate, validation_set, EpochRecord, TrainOutcome, ValMetrics,
};
pub use schedule::LrSchedule;
pub use step::{Evaluated, PreparedBatch, Stage1Trainer, Stage2Trainer, StepLosses, Trainer};
