//! Planner/actor runtime: action buffer, interrupts, planners and the
//! episode loop.

pub mod action;
pub mod control;
pub mod episode;
pub mod external;
pub mod planner;
pub mod policies;

use serde::{Deserialize, Serialize};

pub use action::{should_interrupt, ActionBuffer, ActionClass, InterruptSignal, PlannedAction, MAX_PRIORITY};
pub use episode::{
    run_episode, run_wall_clock, AgentChannels, AgentRuntime, AgentSetup, Episode, EpisodeError, EpisodeOptions, EpisodeSetup,
};
pub use control::{control_channel, run_paced, state_document, ControlCommand, ControlEndpoint, ControlError, ControlHandle};
pub use external::{parse_planner_output, ExternalPlanner};
pub use planner::{FnPlanner, LatencyModel, Planner, PlannerContext, PlannerError, SequencePlanner};

/// How a team couples planning and acting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Planner and actor run concurrently around the action buffer.
    Parallel,
    /// The agent plans, then acts, then plans again.
    Serialized,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Parallel => "parallel",
            Mode::Serialized => "serialized",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(Mode::Parallel),
            "serialized" => Ok(Mode::Serialized),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// When a parallel-mode planner starts its next cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cadence", rename_all = "snake_case")]
pub enum PlanningCadence {
    /// Re-plan whenever idle, at least `min_gap` ticks after the last
    /// delivery.
    Continuous { min_gap: u64 },
    /// Plan once at episode start and again each time the actor takes a
    /// plan from the buffer.
    OnDispatch,
}

impl Default for PlanningCadence {
    fn default() -> Self {
        PlanningCadence::Continuous { min_gap: 0 }
    }
}
