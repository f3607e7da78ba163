//! Generalized-scaling upper bounds for constrained maximum-entropy sampling.
//!
//! Given a covariance matrix `C`, a cardinality `s` and side constraints
//! `Ax ≤ b`, the problem is to pick `s` indices maximizing `ldet C[S,S]`.
//! This crate evaluates the scaled linx, factorization and BQP objectives,
//! solves the continuous relaxations by away-step Frank-Wolfe, optimizes
//! the scaling vector, fixes variables from dual information, and provides a
//! brute-force oracle for small instances.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;

pub mod bqp;
pub mod ddfact;
pub mod error;
pub mod fixing;
pub mod gamma;
pub mod heuristic;
pub mod instance;
pub mod linx;
pub mod lp;
pub mod matrix;
pub mod oracle;
pub mod relax;
pub mod scaling;
pub mod spectral;

pub use error::{Error, Result};
pub use instance::{complement_instance, factorize, gen_constraints, scale_matrix, Factorization, Instance};
pub use matrix::Mat;
pub use relax::{solve_relaxation, BoundKind, RelaxOptions, RelaxationResult};
pub use scaling::{scaled_bound, ScalingMode, ScalingOptions, ScalingVector};
