//! Random degree-constrained process (RDCP) toolkit.
//!
//! Edges of a host graph arrive in random order and an edge is added only if
//! neither endpoint has reached its degree constraint. This crate provides:
//!
//! * finite-host simulation in continuous or discrete time ([`sim`]),
//! * two independent samplers for the local weak limit object: an explicit
//!   multi-type branching process and a two-phase exploration of the
//!   Poisson weighted infinite tree ([`limit`]),
//! * the nonlinear initial value problem for `lambda(t)` together with every
//!   derived scalar function and the critical-time solver ([`ode`]),
//! * a discretized branching operator whose principal eigenvalue crosses 1
//!   exactly at the critical time ([`spectral`]).

pub mod dist;
pub mod explore;
pub mod host;
pub mod limit;
pub mod ode;
pub mod rng;
pub mod sim;
pub mod spectral;

pub use dist::DegreeDistribution;
pub use host::HostGraph;
pub use ode::LambdaSolution;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid host graph: {0}")]
    InvalidHost(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
