//! Solver toolkit for the workflow satisfiability problem (WSP).
//!
//! A WSP instance asks for a plan assigning an authorised user to every step
//! of a workflow such that all constraints hold. The crate provides:
//!
//! * [`instance`]: steps, users, authorisations, the constraint catalogue and
//!   plan-level semantics.
//! * [`patterns`]: set partitions of the steps as restricted growth strings.
//! * [`matching`]: the block/user bipartite graph and Hopcroft–Karp matching.
//! * [`absorption`]: context-dependent authorisation families and absorption
//!   of user-dependent constraints.
//! * [`solver`]: pattern enumeration, pattern backtracking and brute force.
//! * [`encode`]: UDPB, PBPB and CS formulations plus OPB/DIMACS/JSON writers.
//! * [`generator`]: the pseudo-random instance generator and phase-transition
//!   calibration.
//! * [`format`]: JSON instance and plan files.
//! * [`fixtures`]: the purchase-order example and small random instances.

pub mod absorption;
pub mod encode;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod generator;
pub mod instance;
pub mod matching;
pub mod patterns;
pub mod solver;

pub use error::{Result, WspError};
pub use instance::{
    AuthorisationFunction, Constraint, CustomConstraint, Instance, Plan, StepId, UserId, UserSet,
};
pub use patterns::Pattern;
