//! Constrained binary optimization through penalized QUBO objectives.
//!
//! Problems are written as polynomial objectives with constraints, folded
//! into a QUBO with per-group penalty weights, and handed to one of several
//! solvers: an exact QAOA state-vector simulator wrapped in a gradient
//! optimizer, a simulated-annealing sampler, or brute-force enumeration.
//! Penalty weights themselves can be tuned by grid, random or cross-entropy
//! search. Experiments are described by a YAML or JSON document.
//!
//! The numeric core ([`poly`], [`qubo`], [`simulator`]) is generic over the
//! [`Scalar`] type; the aliases below fix it to `f64`, which the problem,
//! solver and configuration layers use throughout.

pub mod config;
pub mod optimizers;
pub mod parser;
pub mod poly;
pub mod problems;
pub mod qubo;
pub mod results;
pub mod scalar;
pub mod simulator;
pub mod solvers;

pub use scalar::Scalar;

pub type Polynomial = poly::Poly<f64>;
pub type Polynomial32 = poly::Poly<f32>;
pub type Qubo = qubo::Qubo<f64>;
pub type Qubo32 = qubo::Qubo<f32>;
pub type Ising = qubo::Ising<f64>;

pub type StateVector = simulator::StateVector<f64>;
pub type StateVector32 = simulator::StateVector<f32>;
pub type Angles = simulator::Angles<f64>;
