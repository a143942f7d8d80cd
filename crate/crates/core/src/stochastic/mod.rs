//! Stochastic (continuous-time Markov chain) model of a reaction network.

mod estimators;
mod generator;
mod space;
mod ssa;
mod transient;

pub use estimators::{
    estimate_absorption_time, estimate_qsd_time_average, estimate_qsd_yaglom, estimate_time_marginal,
    time_average_distribution, EnsembleStats, InitialDistribution, Marginal, YaglomEstimate,
};
pub use generator::{build_generator, Generator, SparseGenerator, TransientBlock};
pub use space::{enumerate_state_space, ClosedClass, Limits, StateSpace};
pub use ssa::{ssa_trajectory, Absorbing, SsaOptions, Trajectory, DEFAULT_BUDGET};
pub use transient::{evolve, evolve_conditioned};

use std::sync::Arc;

use thiserror::Error;

use crate::model::ReactionNetwork;
use crate::structure::linkage_decomposition;

#[derive(Debug, Error, PartialEq)]
pub enum StochError {
    #[error("state space may be infinite: the network is not conservative and no cap was given")]
    PossiblyInfinite,
    #[error("state space exceeds {limit} states (frontier holds {frontier} unexplored states)")]
    CapExceeded { limit: usize, frontier: usize },
    #[error("all paths absorbed; reduce T or increase N")]
    AllAbsorbed,
    #[error("initial state has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("initial distribution is empty or has non-positive mass")]
    EmptyDistribution,
}

/// Reaction data in the form the simulation kernels need.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub m: usize,
    pub sources: Vec<Vec<(usize, u32)>>,
    pub deltas: Vec<Vec<(usize, i64)>>,
    /// Source complexes of non-terminal strong linkage classes.
    pub non_terminal_sources: Vec<Vec<(usize, u32)>>,
}

impl Compiled {
    pub fn new(net: &ReactionNetwork) -> Self {
        let nz = |c: &crate::model::Complex| -> Vec<(usize, u32)> {
            c.coeffs
                .iter()
                .enumerate()
                .filter(|(_, &y)| y > 0)
                .map(|(j, &y)| (j, y))
                .collect()
        };
        let dec = linkage_decomposition(net);
        let non_terminal_sources = dec
            .non_terminal_complexes
            .iter()
            .filter(|&&j| net.is_source(j))
            .map(|&j| nz(&net.complexes[j]))
            .collect();
        Compiled {
            m: net.m(),
            sources: (0..net.r()).map(|i| nz(net.source(i))).collect(),
            deltas: net
                .reaction_vectors()
                .into_iter()
                .map(|v| {
                    v.into_iter()
                        .enumerate()
                        .filter(|(_, d)| *d != 0)
                        .map(|(j, d)| (j, d))
                        .collect()
                })
                .collect(),
            non_terminal_sources,
        }
    }

    pub fn r(&self) -> usize {
        self.sources.len()
    }

    /// `x >= y_i` componentwise.
    pub fn enabled(&self, x: &[u32], i: usize) -> bool {
        self.sources[i].iter().all(|&(j, y)| x[j] >= y)
    }

    pub fn apply(&self, x: &mut [u32], i: usize) {
        for &(j, d) in &self.deltas[i] {
            x[j] = (x[j] as i64 + d) as u32;
        }
    }

    /// Every non-terminal source complex is off at `x`.
    pub fn non_terminal_off(&self, x: &[u32]) -> bool {
        self.non_terminal_sources
            .iter()
            .all(|c| c.iter().any(|&(j, y)| x[j] < y))
    }
}

/// Binomial coefficient C(x, y) in floating point.
pub fn binomial(x: u32, y: u32) -> f64 {
    if y > x {
        return 0.0;
    }
    let mut v = 1.0;
    for k in 0..y {
        v = v * (x - k) as f64 / (k + 1) as f64;
    }
    v
}

/// Stochastic rate function. Implementations must be stoichiometrically
/// admissible: positive exactly when the state covers the source complex.
pub trait Propensity: Sync + Send {
    fn compiled(&self) -> &Compiled;
    fn propensity(&self, x: &[u32], i: usize) -> f64;

    fn all(&self, x: &[u32], out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.propensity(x, i);
            total += *o;
        }
        total
    }
}

/// Stochastic mass action: `κ_i / Ω^{|y_i|-1} · Π_j C(X_j, y_ij)` with
/// `Ω = n_A V` the network volume.
#[derive(Debug, Clone)]
pub struct MassAction {
    compiled: Compiled,
    pub constants: Vec<f64>,
    pub scale: f64,
}

impl MassAction {
    /// Converts the network's deterministic rates with its volume.
    pub fn new(net: &ReactionNetwork) -> Self {
        Self::with_scale(net, &net.rates(), net.volume)
    }

    pub fn with_scale(net: &ReactionNetwork, kappa: &[f64], scale: f64) -> Self {
        let constants = (0..net.r())
            .map(|i| kappa[i] / scale.powi(net.source(i).order() as i32 - 1))
            .collect();
        MassAction {
            compiled: Compiled::new(net),
            constants,
            scale,
        }
    }

    /// Uses the given constants directly as stochastic constants.
    pub fn with_constants(net: &ReactionNetwork, constants: Vec<f64>) -> Self {
        MassAction {
            compiled: Compiled::new(net),
            constants,
            scale: 1.0,
        }
    }
}

impl Propensity for MassAction {
    fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    #[inline]
    fn propensity(&self, x: &[u32], i: usize) -> f64 {
        let mut v = self.constants[i];
        for &(j, y) in &self.compiled.sources[i] {
            let xj = x[j];
            if xj < y {
                return 0.0;
            }
            v *= if y == 1 { xj as f64 } else { binomial(xj, y) };
        }
        v
    }
}

type RateFn = dyn Fn(&[u32], usize) -> f64 + Send + Sync;

/// User-supplied rate function; admissibility is enforced by returning zero
/// whenever the source complex is not covered.
#[derive(Clone)]
pub struct CustomPropensity {
    compiled: Compiled,
    f: Arc<RateFn>,
}

impl CustomPropensity {
    pub fn new(net: &ReactionNetwork, f: impl Fn(&[u32], usize) -> f64 + Send + Sync + 'static) -> Self {
        CustomPropensity {
            compiled: Compiled::new(net),
            f: Arc::new(f),
        }
    }
}

impl Propensity for CustomPropensity {
    fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    fn propensity(&self, x: &[u32], i: usize) -> f64 {
        if !self.compiled.enabled(x, i) {
            return 0.0;
        }
        let v = (self.f)(x, i);
        assert!(
            v > 0.0 && v.is_finite(),
            "custom propensity must be positive where enabled"
        );
        v
    }
}
