//! Order-preserving couplings for mass-action stochastic reaction networks.
//!
//! Given a reaction network with two sets of rate constants, this crate
//! decides which coordinatewise matrix preorders on the species counts can
//! be preserved almost surely by a coupling of the two processes, emits the
//! rate-constant inequalities that make a preorder preservable, searches the
//! lattice of candidate preorders, and verifies every emitted structure by
//! exhaustive generator checks and coupled stochastic simulation.

// The pivoting and lattice code indexes several arrays in step;
// iterator rewrites obscure the row/column arithmetic.
#![allow(clippy::needless_range_loop)]

pub mod linalg;
pub mod lp;
pub mod network;
pub mod order;
pub mod search;
pub mod sim;

pub use num::BigRational as Rational;
