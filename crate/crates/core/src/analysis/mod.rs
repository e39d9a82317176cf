//! Predictors for chattering and deadlock, and detectors that find them in
//! simulated logs.

mod detect;
mod predict;

pub use detect::{
    detect_chattering, detect_deadlock, last_relock, relocks, transitions, ChatterInterval, DeadlockEpisode, DeadlockExit,
    Transition,
};
pub use predict::{
    chatter_condition, chattering_threshold, chattering_threshold_elm, chattering_threshold_epm, deadlock_bounds,
    max_step_exit_deadlock, min_step_avoid_deadlock_differentiable, min_step_avoid_deadlock_discrete,
    ChatterPrediction, DeadlockBounds, SummandReading,
};
