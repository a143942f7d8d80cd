//! Reaction network analysis: network structure and deficiency, mass-action
//! equilibria, continuous-time Markov chain simulation and quasi-stationary
//! distributions.

pub mod deterministic;
pub mod exact;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod parser;
pub mod presets;
pub mod qsd;
pub mod stochastic;
pub mod structure;

pub use model::{Complex, InitialState, Reaction, ReactionNetwork, Species};
pub use parser::{parse_network, ParseError};
