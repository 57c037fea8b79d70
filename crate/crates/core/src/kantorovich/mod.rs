//! Kantorovich lifting of state distances to subdistributions, computed
//! exactly by linear programming.

mod lift;
mod lp;

pub use lift::{lift, lift_dual, lift_primal, MetricError, PseudoMetric, TransportPlan};
pub use lp::{
    solve_lp_exact, Constraint, LinearProgram, LpError, LpSolution, Relation, Sense,
};
