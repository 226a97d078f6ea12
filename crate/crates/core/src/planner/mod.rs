//! Optimal forward state-space planning over the STRIPS subset.

mod astar;
mod compiled;
mod external;
mod heuristic;

use std::time::Duration;

pub use astar::{AStarPlanner, SearchFailure};
pub use compiled::{BitState, CompiledAction, CompiledTask};
pub use external::ExternalPlanner;
pub use heuristic::{Blind, HMax, Heuristic};

use crate::pddl::{Plan, State, Task};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("no plan reaches the goal")]
    Unsolvable,
    #[error("search timed out")]
    Timeout { incumbent: Option<Plan> },
    #[error("external planner failed: {0}")]
    External(String),
}

pub trait Planner: Send + Sync {
    fn solve(&self, task: &Task, timeout: Duration) -> Result<Plan, PlannerError>;

    /// Solve from `state` towards the task's original goal.
    fn replan_from(&self, state: &State, task: &Task, timeout: Duration) -> Result<Plan, PlannerError> {
        self.solve(&task.with_init(state.clone()), timeout)
    }
}

/// A* with h_max; the returned plan has minimum length.
pub fn solve_optimal(task: &Task, timeout: Duration) -> Result<Plan, PlannerError> {
    AStarPlanner::default().solve(task, timeout)
}

pub fn replan_from(state: &State, task: &Task, timeout: Duration) -> Result<Plan, PlannerError> {
    AStarPlanner::default().replan_from(state, task, timeout)
}
