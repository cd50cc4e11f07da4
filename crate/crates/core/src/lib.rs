//! Stability analysis of switched dynamical systems under dwell-time
//! switching constraints.
//!
//! A switched system runs one of several subsystem dynamics at a time,
//! selected by a piecewise-constant switching signal. This crate certifies
//! exponential stability of such systems with multiple quadratic Lyapunov
//! functions, supports four switching schemes — average dwell time (ADT),
//! mode-dependent ADT (MDADT), and the sequence-based variants that budget
//! the successor (SBASDT) or predecessor (SBAPDT) side of each switch — and
//! closes the loop with gain synthesis, signal generation, and simulation.
//!
//! The narrative guide lives in `book/`; its chapters compile and run as
//! doc-tests of the [`guide`] module.

pub mod certify;
pub mod demo;
pub mod dwell;
pub mod linalg;
pub mod model;
pub mod synth;

pub use linalg::{Matrix, SymmetricMatrix};
