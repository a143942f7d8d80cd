//! Network structure: linkage classes, deficiency, conservation laws,
//! domination between complexes, the kernel of `Y A_κ`, theorem checkers and
//! the reduced / post-absorption sub-networks.

mod kernel;
mod theorems;

pub use kernel::{kernel_basis, KernelBasis};
pub use theorems::{
    check_absorption_cor1, check_absorption_general, check_theorem1, default_rate_samples, Certificate,
    EquilibriumEvidence, Outcome, TheoremId, TheoremVerdict, ANNIHILATOR_TOL, KERNEL_TOL,
};

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::exact;
use crate::graph::{strongly_connected, weakly_connected, Digraph};
use crate::model::{Complex, ReactionNetwork, Species};

#[derive(Debug, Clone, Serialize)]
pub struct LinkageDecomposition {
    pub linkage_classes: Vec<Vec<usize>>,
    pub strong_linkage_classes: Vec<Vec<usize>>,
    pub terminal_flags: Vec<bool>,
    pub t: usize,
    pub non_terminal_complexes: Vec<usize>,
    #[serde(skip)]
    pub strong_of: Vec<usize>,
    #[serde(skip)]
    pub linkage_of: Vec<usize>,
}

impl LinkageDecomposition {
    pub fn ell(&self) -> usize {
        self.linkage_classes.len()
    }

    pub fn is_terminal(&self, complex: usize) -> bool {
        self.terminal_flags[self.strong_of[complex]]
    }

    pub fn terminal_classes(&self) -> Vec<&Vec<usize>> {
        self.strong_linkage_classes
            .iter()
            .zip(&self.terminal_flags)
            .filter(|(_, &t)| t)
            .map(|(c, _)| c)
            .collect()
    }
}

fn complex_edges(net: &ReactionNetwork) -> Vec<(usize, usize)> {
    net.reactions.iter().map(|r| (r.source, r.product)).collect()
}

/// Group vertices by component id, ordering the groups by smallest member.
fn groups(comp: &[usize], count: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut raw = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        raw[c].push(v);
    }
    raw.sort_by_key(|g| g[0]);
    let mut of = vec![0; comp.len()];
    for (k, g) in raw.iter().enumerate() {
        for &v in g {
            of[v] = k;
        }
    }
    (raw, of)
}

pub fn linkage_decomposition(net: &ReactionNetwork) -> LinkageDecomposition {
    let n = net.n();
    let edges = complex_edges(net);
    let weak = weakly_connected(n, &edges);
    let (linkage_classes, linkage_of) = groups(&weak.comp, weak.count);
    let g = Digraph::from_edges(n, &edges);
    let scc = strongly_connected(&g);
    let (strong, strong_of) = groups(&scc.comp, scc.count);
    let mut terminal_flags = vec![true; strong.len()];
    for &(a, b) in &edges {
        if strong_of[a] != strong_of[b] {
            terminal_flags[strong_of[a]] = false;
        }
    }
    let t = terminal_flags.iter().filter(|&&x| x).count();
    let non_terminal_complexes = (0..n).filter(|&j| !terminal_flags[strong_of[j]]).collect();
    LinkageDecomposition {
        linkage_classes,
        strong_linkage_classes: strong,
        terminal_flags,
        t,
        non_terminal_complexes,
        strong_of,
        linkage_of,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeficiencyReport {
    pub n: usize,
    pub ell: usize,
    pub s: usize,
    pub delta: i64,
}

/// Rank of the stoichiometric subspace, computed exactly.
pub fn stoichiometric_rank(net: &ReactionNetwork) -> usize {
    exact::rank(&net.reaction_vectors())
}

pub fn deficiency(net: &ReactionNetwork) -> DeficiencyReport {
    let ell = linkage_decomposition(net).ell();
    let s = stoichiometric_rank(net);
    DeficiencyReport {
        n: net.n(),
        ell,
        s,
        delta: net.n() as i64 - ell as i64 - s as i64,
    }
}

fn ser_big<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        match x.to_i64() {
            Some(i) => seq.serialize_element(&i)?,
            None => seq.serialize_element(&x.to_string())?,
        }
    }
    seq.end()
}

fn ser_big_opt<S: Serializer>(v: &Option<Vec<BigInt>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_big(v, s),
        None => s.serialize_none(),
    }
}

fn ser_big_rows<S: Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Row<'a>(&'a [BigInt]);
    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_big(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&Row(r))?;
    }
    seq.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationCertificate {
    pub conservative: bool,
    #[serde(serialize_with = "ser_big_opt")]
    pub witness: Option<Vec<BigInt>>,
    #[serde(serialize_with = "ser_big_rows")]
    pub basis: Vec<Vec<BigInt>>,
}

impl ConservationCertificate {
    pub fn basis_f64(&self) -> Vec<Vec<f64>> {
        self.basis
            .iter()
            .map(|v| v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    /// Integer conservation vectors, when they fit in `i64`.
    pub fn basis_i64(&self) -> Option<Vec<Vec<i64>>> {
        self.basis
            .iter()
            .map(|v| v.iter().map(|x| x.to_i64()).collect())
            .collect()
    }
}

pub fn conservation_certificate(net: &ReactionNetwork) -> ConservationCertificate {
    let rv = net.reaction_vectors();
    let m = net.m();
    let basis = exact::null_space(&rv, m);
    let witness = exact::positive_orthogonal(&rv, m);
    ConservationCertificate {
        conservative: witness.is_some(),
        witness,
        basis,
    }
}

/// `dominated ≪ dominator`: the dominator is componentwise below the
/// dominated complex. Both are non-terminal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominationPair {
    pub dominated: usize,
    pub dominator: usize,
    /// Set when the two complexes differ in exactly one species.
    pub differs_only_in: Option<usize>,
}

pub fn domination_pairs(net: &ReactionNetwork, dec: &LinkageDecomposition) -> Vec<DominationPair> {
    let nt = &dec.non_terminal_complexes;
    let mut out = Vec::new();
    for &y in nt {
        for &yp in nt {
            if y == yp {
                continue;
            }
            let (cy, cyp) = (&net.complexes[y], &net.complexes[yp]);
            if cyp.le(cy) {
                let diff: Vec<usize> = (0..net.m()).filter(|&i| cy.coeffs[i] != cyp.coeffs[i]).collect();
                out.push(DominationPair {
                    dominated: y,
                    dominator: yp,
                    differs_only_in: if diff.len() == 1 { Some(diff[0]) } else { None },
                });
            }
        }
    }
    out
}

/// Network with every reaction sourced in `d_star` removed. Species and
/// complexes are kept; complexes left without reactions are reported by
/// [`ReactionNetwork::orphan_complexes`].
pub fn reduced_network(net: &ReactionNetwork, d_star: &[usize]) -> ReactionNetwork {
    let mut out = net.clone();
    out.reactions.retain(|r| !d_star.contains(&r.source));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PostAbsorptionNetwork {
    pub trivial: bool,
    pub species_prime: Vec<String>,
    pub complexes_prime: Vec<String>,
    pub reactions_prime: Vec<String>,
    pub weakly_reversible: Option<bool>,
    pub deficiency: Option<i64>,
    #[serde(skip)]
    pub network: Option<ReactionNetwork>,
}

pub fn is_weakly_reversible(net: &ReactionNetwork) -> bool {
    let dec = linkage_decomposition(net);
    dec.strong_linkage_classes.len() == dec.linkage_classes.len()
}

pub fn post_absorption_network(net: &ReactionNetwork) -> PostAbsorptionNetwork {
    let dec = linkage_decomposition(net);
    let c_prime: Vec<usize> = (0..net.n())
        .filter(|&j| dec.is_terminal(j) && net.is_source(j))
        .collect();
    if c_prime.is_empty() {
        return PostAbsorptionNetwork {
            trivial: true,
            species_prime: Vec::new(),
            complexes_prime: Vec::new(),
            reactions_prime: Vec::new(),
            weakly_reversible: None,
            deficiency: None,
            network: None,
        };
    }
    let mut s_prime: Vec<usize> = c_prime
        .iter()
        .flat_map(|&j| net.complexes[j].support().collect::<Vec<_>>())
        .collect();
    s_prime.sort_unstable();
    s_prime.dedup();
    let species: Vec<Species> = s_prime
        .iter()
        .enumerate()
        .map(|(k, &i)| Species {
            name: net.species[i].name.clone(),
            index: k,
        })
        .collect();
    let project = |c: &Complex| Complex::new(s_prime.iter().map(|&i| c.coeffs[i]).collect());
    let mut sub = ReactionNetwork {
        species,
        complexes: Vec::new(),
        reactions: Vec::new(),
        volume: net.volume,
        units: net.units.clone(),
    };
    let mut lookup = HashMap::new();
    let mut labels = Vec::new();
    for (i, r) in net.reactions.iter().enumerate() {
        if c_prime.contains(&r.source) {
            let s = sub.intern(&mut lookup, project(&net.complexes[r.source]));
            let p = sub.intern(&mut lookup, project(&net.complexes[r.product]));
            sub.push_reaction(s, p, r.rate)
                .expect("sub-network of a valid network is valid");
            labels.push(net.reaction_label(i));
        }
    }
    let wr = is_weakly_reversible(&sub);
    let d = deficiency(&sub).delta;
    PostAbsorptionNetwork {
        trivial: false,
        species_prime: s_prime.iter().map(|&i| net.species[i].name.clone()).collect(),
        complexes_prime: c_prime.iter().map(|&j| net.complex_label(j)).collect(),
        reactions_prime: labels,
        weakly_reversible: Some(wr),
        deficiency: Some(d),
        network: Some(sub),
    }
}

/// True when `w · (y' - y) = 0` for every reaction, in exact integers.
pub fn is_conservation_law(net: &ReactionNetwork, w: &[BigInt]) -> bool {
    net.reaction_vectors().iter().all(|v| {
        let s: BigInt = w.iter().zip(v).map(|(a, &b)| a * BigInt::from(b)).sum();
        s.is_zero()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub schema: &'static str,
    pub species: Vec<String>,
    pub complexes: Vec<String>,
    pub reactions: Vec<String>,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub deficiency: DeficiencyReport,
    pub linkage: LinkageDecomposition,
    pub conservation: ConservationCertificate,
    pub domination: Vec<DominationPair>,
    pub post_absorption: PostAbsorptionNetwork,
    pub weakly_reversible: bool,
}

pub const STRUCTURE_SCHEMA: &str = "acr.structure/1";

/// Rate-independent structural summary.
pub fn structure_report(net: &ReactionNetwork) -> StructureReport {
    let linkage = linkage_decomposition(net);
    let s = stoichiometric_rank(net);
    let deficiency = DeficiencyReport {
        n: net.n(),
        ell: linkage.ell(),
        s,
        delta: net.n() as i64 - linkage.ell() as i64 - s as i64,
    };
    let domination = domination_pairs(net, &linkage);
    StructureReport {
        schema: STRUCTURE_SCHEMA,
        species: net.species.iter().map(|s| s.name.clone()).collect(),
        complexes: (0..net.n()).map(|j| net.complex_label(j)).collect(),
        reactions: (0..net.r()).map(|i| net.reaction_label(i)).collect(),
        m: net.m(),
        n: net.n(),
        r: net.r(),
        deficiency,
        conservation: conservation_certificate(net),
        domination,
        post_absorption: post_absorption_network(net),
        weakly_reversible: linkage.strong_linkage_classes.len() == linkage.ell(),
        linkage,
    }
}
