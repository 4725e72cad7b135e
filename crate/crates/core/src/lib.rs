//! Solver toolkit for a two-stage bi-objective single-source capacitated
//! facility location problem under scenario-based demand uncertainty.
//!
//! The first stage opens points of distribution (PODs) at a cost; the second
//! stage assigns demand nodes to open PODs within a coverage radius, per
//! demand scenario. The toolkit minimizes opening cost against risk-adjusted
//! uncovered demand under three risk attitudes (expectation, worst case,
//! CVaR), computes exact Pareto frontiers by epsilon-constraint or
//! balanced-box criterion-space search, approximates them with a
//! variable-fixing/local-branching matheuristic, and scores frontiers with
//! hypervolume and risk-adapted stochastic value measures.

pub mod error;
pub mod frontier;
pub mod instance;
pub mod matheuristic;
pub mod metrics;
pub mod model;
pub mod pareto;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use instance::{generate_scenarios, synth_instance, GenParams, Instance, ScenarioSet};
pub use model::{build_model, cvar, evaluate_recourse, MipModel, UncertaintyMode};
pub use pareto::{CriterionBox, FrontEntry, ObjectivePoint, ParetoFront, F2_TOL};
pub use solver::{Backend, SolveRequest, SolveResult, SolveStatus, Solver};
