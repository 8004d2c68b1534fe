//! Independent reference implementations and samplers for the test suites:
//! a Fourier-Motzkin feasibility oracle, brute-force preorder comparisons
//! on truncated compatibility classes, and random kinetics generators that
//! comply with (or deliberately break) an emitted constraint system.

// Indexed loops keep the reference implementations close to their
// textbook form.
#![allow(clippy::needless_range_loop)]

pub mod boxes;
pub mod fm;
pub mod nets;
pub mod sample;
pub mod stats;
