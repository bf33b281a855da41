//! Plans that keep the actor's goal ambiguous to an adversarial observer
//! while making it legible to a cooperative one.
//!
//! Two solvers share one problem model: an exact 0/1 integer-program
//! encoding ([`ip`]) solved by an in-crate branch-and-bound ([`solver`]),
//! and a satisficing belief-space best-first search ([`search`]).

pub mod bench;
pub mod error;
pub mod ip;
pub mod model;
pub mod observer;
pub mod par;
pub mod problem;
pub mod search;
pub mod solver;

pub use error::*;
pub use model::{
    satisfies, Action, ActionId, ActionSpec, CandidateGoalSet, Fluent, FluentId, Plan, PlanningDomain, State,
};
pub use observer::{
    belief_update, observe, possible_goals, run_trace, run_trace_padded, run_traces, Belief, BeliefTrace, ObserverId,
    ObserverTrace, SensorModel, SensorRule,
};
pub use par::Execution;
pub use problem::{parse, serialize, ProblemFile};
