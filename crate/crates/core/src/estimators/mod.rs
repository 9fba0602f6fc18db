//! Batch EM, online EM, incremental EM and Titterington's recursion, all
//! generic over [`LatentModel`](crate::model::LatentModel), plus
//! Polyak-Ruppert averaging and a multi-tour driver for fixed data sets.
//!
//! Each run is sequential; independent runs can be executed concurrently.

mod averaging;
mod batch;
mod incremental;
mod online;
mod schedule;
mod titterington;
mod tours;
mod trajectory;

pub use averaging::{default_averaging_start, polyak_ruppert};
pub use batch::{batch_em, limiting_em_step};
pub use incremental::{incremental_em, IncrementalEmConfig};
pub use online::{online_em, OnlineEm, OnlineEmConfig, StepOutcome};
pub use schedule::StepsizeSchedule;
pub use titterington::{
    fisher_direction, titterington, titterington_step, TitteringtonConfig, FISHER_RIDGE, PROJECTION_EPS,
};
pub use tours::{pseudo_observations, tour_runner, visit_order, ScanMode, ScanOrder};
pub use trajectory::{Record, RecordPolicy, Trajectory};
