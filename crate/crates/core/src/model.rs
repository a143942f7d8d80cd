//! Core network types: species, complexes, reactions and the network itself.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// A complex is a vector of stoichiometric coefficients over the species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Complex {
    pub coeffs: Vec<u32>,
}

impl Complex {
    pub fn new(coeffs: Vec<u32>) -> Self {
        Complex { coeffs }
    }

    pub fn zero(m: usize) -> Self {
        Complex { coeffs: vec![0; m] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Molecularity |y|.
    pub fn order(&self) -> u32 {
        self.coeffs.iter().sum()
    }

    /// `self <= other` componentwise.
    pub fn le(&self, other: &Complex) -> bool {
        self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a <= b)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i)
    }

    pub fn label(&self, species: &[Species]) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| {
                if c == 1 {
                    species[i].name.clone()
                } else {
                    format!("{}{}", c, species[i].name)
                }
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

/// A reaction between stored complexes, referenced by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reaction {
    pub source: usize,
    pub product: usize,
    pub rate: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("self-reaction {0}")]
    SelfReaction(String),
    #[error("duplicate reaction {0}")]
    DuplicateReaction(String),
    #[error("rate constant must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("species {0} does not appear in any complex")]
    UnusedSpecies(String),
    #[error("duplicate species name {0}")]
    DuplicateSpecies(String),
    #[error("complex has {got} coefficients, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("volume must be positive and finite, got {0}")]
    BadVolume(f64),
    #[error("expected {expected} rate constants, got {got}")]
    RateCount { expected: usize, got: usize },
}

/// An immutable reaction network. Complexes are deduplicated; each reaction
/// refers to its source and product complex by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReactionNetwork {
    pub species: Vec<Species>,
    pub complexes: Vec<Complex>,
    pub reactions: Vec<Reaction>,
    /// Molecules per unit concentration (n_A * V in the chosen units).
    pub volume: f64,
    pub units: Option<String>,
}

impl ReactionNetwork {
    /// Builds a network from explicit species names and coefficient-vector
    /// reactions. Complexes are numbered by first appearance (source before
    /// product, reaction by reaction).
    pub fn from_reactions(names: &[&str], reactions: &[(Vec<u32>, Vec<u32>, f64)]) -> Result<Self, ModelError> {
        let m = names.len();
        let mut species = Vec::with_capacity(m);
        let mut seen = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if seen.insert(n.to_string(), i).is_some() {
                return Err(ModelError::DuplicateSpecies(n.to_string()));
            }
            species.push(Species {
                name: n.to_string(),
                index: i,
            });
        }
        let mut net = ReactionNetwork {
            species,
            complexes: Vec::new(),
            reactions: Vec::new(),
            volume: 1.0,
            units: None,
        };
        let mut lookup: HashMap<Complex, usize> = HashMap::new();
        for (src, prod, rate) in reactions {
            for v in [src, prod] {
                if v.len() != m {
                    return Err(ModelError::Dimension {
                        expected: m,
                        got: v.len(),
                    });
                }
            }
            let s = net.intern(&mut lookup, Complex::new(src.clone()));
            let p = net.intern(&mut lookup, Complex::new(prod.clone()));
            net.push_reaction(s, p, *rate)?;
        }
        for sp in &net.species {
            if !net.complexes.iter().any(|c| c.coeffs[sp.index] > 0) {
                return Err(ModelError::UnusedSpecies(sp.name.clone()));
            }
        }
        Ok(net)
    }

    pub(crate) fn intern(&mut self, lookup: &mut HashMap<Complex, usize>, c: Complex) -> usize {
        if let Some(&j) = lookup.get(&c) {
            return j;
        }
        let j = self.complexes.len();
        lookup.insert(c.clone(), j);
        self.complexes.push(c);
        j
    }

    pub(crate) fn push_reaction(&mut self, source: usize, product: usize, rate: f64) -> Result<(), ModelError> {
        if source == product {
            return Err(ModelError::SelfReaction(self.complex_label(source)));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(ModelError::NonPositiveRate(rate));
        }
        if self
            .reactions
            .iter()
            .any(|r| r.source == source && r.product == product)
        {
            return Err(ModelError::DuplicateReaction(format!(
                "{} -> {}",
                self.complex_label(source),
                self.complex_label(product)
            )));
        }
        self.reactions.push(Reaction { source, product, rate });
        Ok(())
    }

    pub fn with_volume(mut self, volume: f64) -> Result<Self, ModelError> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(ModelError::BadVolume(volume));
        }
        self.volume = volume;
        Ok(self)
    }

    /// Number of species.
    pub fn m(&self) -> usize {
        self.species.len()
    }

    /// Number of complexes.
    pub fn n(&self) -> usize {
        self.complexes.len()
    }

    /// Number of reactions.
    pub fn r(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn complex_index(&self, c: &Complex) -> Option<usize> {
        self.complexes.iter().position(|x| x == c)
    }

    pub fn complex_label(&self, j: usize) -> String {
        self.complexes[j].label(&self.species)
    }

    pub fn source(&self, i: usize) -> &Complex {
        &self.complexes[self.reactions[i].source]
    }

    pub fn product(&self, i: usize) -> &Complex {
        &self.complexes[self.reactions[i].product]
    }

    pub fn reaction_label(&self, i: usize) -> String {
        let r = &self.reactions[i];
        format!("{} -> {}", self.complex_label(r.source), self.complex_label(r.product))
    }

    pub fn reaction_vector(&self, i: usize) -> Vec<i64> {
        let s = self.source(i);
        let p = self.product(i);
        s.coeffs
            .iter()
            .zip(&p.coeffs)
            .map(|(&a, &b)| b as i64 - a as i64)
            .collect()
    }

    pub fn reaction_vectors(&self) -> Vec<Vec<i64>> {
        (0..self.r()).map(|i| self.reaction_vector(i)).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.reactions.iter().map(|r| r.rate).collect()
    }

    /// Copy of the network with every rate constant replaced.
    pub fn with_rates(&self, rates: &[f64]) -> Result<Self, ModelError> {
        if rates.len() != self.r() {
            return Err(ModelError::RateCount {
                expected: self.r(),
                got: rates.len(),
            });
        }
        let mut net = self.clone();
        for (r, &k) in net.reactions.iter_mut().zip(rates) {
            if !(k > 0.0 && k.is_finite()) {
                return Err(ModelError::NonPositiveRate(k));
            }
            r.rate = k;
        }
        Ok(net)
    }

    /// Complexes that are the source of at least one reaction.
    pub fn is_source(&self, j: usize) -> bool {
        self.reactions.iter().any(|r| r.source == j)
    }

    /// Complexes that take part in no reaction.
    pub fn orphan_complexes(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&j| !self.reactions.iter().any(|r| r.source == j || r.product == j))
            .collect()
    }

    /// Serializes to the `.crn` text format; `parse_network` reads it back
    /// to an identical network.
    pub fn to_crn(&self) -> String {
        let mut out = String::new();
        if self.volume != 1.0 {
            out.push_str(&format!("@volume {:?}\n", self.volume));
        }
        if let Some(u) = &self.units {
            out.push_str(&format!("@units {}\n", u));
        }
        for r in &self.reactions {
            out.push_str(&format!(
                "{} -> {} ; {:?}\n",
                self.complex_label(r.source),
                self.complex_label(r.product),
                r.rate
            ));
        }
        out
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_crn())
    }
}

/// Initial condition for a simulation or equilibrium search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitialState {
    Counts(Vec<u32>),
    Concentrations(Vec<f64>),
}

impl InitialState {
    pub fn validate(&self, m: usize) -> Result<(), String> {
        match self {
            InitialState::Counts(v) if v.len() != m => Err(format!("expected {} counts, got {}", m, v.len())),
            InitialState::Concentrations(v) if v.len() != m => {
                Err(format!("expected {} concentrations, got {}", m, v.len()))
            }
            InitialState::Concentrations(v) if v.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) => {
                Err("concentrations must be finite and non-negative".into())
            }
            _ => Ok(()),
        }
    }

    /// Concentrations, converting counts by the network volume.
    pub fn concentrations(&self, volume: f64) -> Vec<f64> {
        match self {
            InitialState::Counts(v) => v.iter().map(|&x| x as f64 / volume).collect(),
            InitialState::Concentrations(v) => v.clone(),
        }
    }
}
