//! Bayesian persuasion of a heterogeneous audience by a partisan sender.
//!
//! Receivers differ in their cost of supporting a policy and in their prior
//! about the state. A sender commits to a binary signal and wants to maximize
//! the share of supporters. The crate builds the sender's value function from
//! a joint distribution of costs and priors, solves for the optimal signal
//! (through the concave envelope and through the closed forms available when
//! the virtual density is single-peaked or single-dipped), partitions
//! receivers into never-supporters, compliers and always-supporters, and runs
//! comparative statics over stochastic orders and polarization.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concavification;
pub mod densities;
pub mod error;
pub mod grid;
pub mod io;
pub mod persuasion;
pub mod statics;

pub use concavification::{solve, solve_oracle, ConcaveEnvelope, Method, PersuasionSolution};
pub use densities::{DensitySpec, GridDensity1D, ParametricDensity1D, Shape, ShapeClass};
pub use error::{Error, Result};
pub use persuasion::{build_value_table, sender_payoff, JointDensityCP, JointSpec, Policy, Prior, ValueTable};
