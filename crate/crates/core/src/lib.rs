//! # splitsys
//!
//! Solver for systems of monotone inclusion problems
//!
//! ```text
//! find x such that 0 ∈ A_i(x) + B_i(x)   for every i = 1..m
//! ```
//!
//! where each `A_i` is a point-to-point monotone map and each `B_i` is a
//! maximal monotone set-valued operator with a closed-form resolvent.
//!
//! The main method ([`solver::solve`]) sweeps over the components in order.
//! For each component it evaluates the forward-backward map once, runs an
//! Armijo-type backtracking search along the segment between the current
//! point and that forward-backward point, and then projects onto the
//! separating halfspace built from the accepted probe, followed by a
//! projection onto the feasible set `X`. No Lipschitz constant of `A_i` is
//! needed.
//!
//! The crate also ships:
//!
//! * a catalog of operators and convex sets with exact resolvents and
//!   projections ([`operators`], [`geometry`]),
//! * a fixed-step forward-backward baseline ([`solver::solve_baseline_fb`]),
//! * instance generators with planted solutions, an independent oracle solver,
//!   run metrics and file formats ([`harness`]),
//! * sampled property checks for the operator and projection identities the
//!   method relies on ([`verify`]).

pub mod cli;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod operators;
pub mod serde_la;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{ConvexSet, Halfspace};
pub use harness::{Metrics, ProblemInstance, Structure};
pub use operators::{ForwardOperator, ForwardOp, SetValuedOperator, SetValuedOp};
pub use solver::{AlgoParams, BetaSchedule, SolveOutcome, SolveStatus, SolveTrace};

/// Dense real vector used for iterates and operator values.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Returns an error if any component is NaN or infinite.
pub fn check_finite(what: &str, v: &Vector) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} has non-finite components")))
    }
}
