//! Schedules and process models for the three constructions.

mod model;
mod rate;
mod schedule;

pub use model::{build_counterexample, LevelWeights, ModelSummary, NoiseSpec, ProcessModel, SlabSet};
pub use rate::{RateSequence, SearchGrid};
pub use schedule::{
    derive_schedule_thm1, derive_schedule_thm2, derive_schedule_thm3, DensityConstants, Schedule,
    ScheduleOptions, Variant, DENSITY_P0,
};
