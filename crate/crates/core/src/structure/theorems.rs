//! Mechanical checkers for the deficiency-one ACR theorem and the two
//! absorption theorems.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    conservation_certificate, deficiency, domination_pairs, kernel_basis, linkage_decomposition, DominationPair,
};
use crate::deterministic::{find_equilibrium, MassActionSystem};
use crate::model::ReactionNetwork;

/// Entry bound for the annihilator test of the general absorption theorem.
pub const ANNIHILATOR_TOL: f64 = 1e-8;
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    #[serde(rename = "ACR_Thm1")]
    AcrThm1,
    #[serde(rename = "Absorption_Thm_cor1")]
    AbsorptionCor1,
    #[serde(rename = "Absorption_Thm_general")]
    AbsorptionGeneral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairLabel {
    pub dominated: String,
    pub dominator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub differs_only_in: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deficiency: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservative: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation_witness: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairLabel>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub acr_species: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub c_star: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub c_star_star: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_dim: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub kernel_supports: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passing_sample: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_tried: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub theorem: TheoremId,
    pub outcome: Outcome,
    pub certificate: Certificate,
    pub notes: Vec<String>,
}

impl TheoremVerdict {
    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }
}

/// How the positive-equilibrium hypothesis is discharged.
#[derive(Debug, Clone)]
pub enum EquilibriumEvidence {
    /// Search for a positive equilibrium from each of these initial points.
    Search(Vec<Vec<f64>>),
    /// The user asserts a positive equilibrium exists.
    Assumed,
}

fn pair_label(net: &ReactionNetwork, p: &DominationPair) -> PairLabel {
    PairLabel {
        dominated: net.complex_label(p.dominated),
        dominator: net.complex_label(p.dominator),
        differs_only_in: p.differs_only_in.map(|i| net.species[i].name.clone()),
    }
}

enum EqStatus {
    Found(Vec<f64>),
    Assumed,
    NotFound,
}

fn positive_equilibrium(net: &ReactionNetwork, kappa: &[f64], ev: &EquilibriumEvidence) -> EqStatus {
    match ev {
        EquilibriumEvidence::Assumed => EqStatus::Assumed,
        EquilibriumEvidence::Search(starts) => {
            let sys = MassActionSystem::new(net, kappa.to_vec());
            for c0 in starts {
                if let Some(e) = find_equilibrium(&sys, c0, true) {
                    return EqStatus::Found(e.concentrations);
                }
            }
            EqStatus::NotFound
        }
    }
}

fn settle_equilibrium(status: EqStatus, cert: &mut Certificate, notes: &mut Vec<String>) -> Outcome {
    match status {
        EqStatus::Found(c) => {
            cert.equilibrium = Some(c);
            Outcome::Holds
        }
        EqStatus::Assumed => {
            notes.push("positive equilibrium asserted by the user, not verified".into());
            Outcome::Holds
        }
        EqStatus::NotFound => {
            notes.push("no positive equilibrium found in the searched compatibility classes".into());
            Outcome::Inconclusive
        }
    }
}

/// Deficiency one, a positive equilibrium, and two non-terminal complexes
/// differing in a single species S imply ACR in S.
pub fn check_theorem1(net: &ReactionNetwork, kappa: &[f64], evidence: &EquilibriumEvidence) -> TheoremVerdict {
    let dec = linkage_decomposition(net);
    let d = deficiency(net);
    let pairs = domination_pairs(net, &dec);
    let single: Vec<&DominationPair> = pairs.iter().filter(|p| p.differs_only_in.is_some()).collect();
    let mut cert = Certificate {
        deficiency: Some(d.delta),
        pairs: single.iter().map(|p| pair_label(net, p)).collect(),
        ..Default::default()
    };
    let mut notes = Vec::new();
    let mut failed = false;
    if d.delta != 1 {
        failed = true;
        notes.push(format!(
            "deficiency is {}, not 1; the theorem does not apply, though ACR may still hold",
            d.delta
        ));
    }
    if single.is_empty() {
        failed = true;
        notes.push("no two non-terminal complexes differ in exactly one species".into());
    }
    let mut species: Vec<usize> = single.iter().filter_map(|p| p.differs_only_in).collect();
    species.sort_unstable();
    species.dedup();
    if !failed {
        cert.acr_species = species.iter().map(|&i| net.species[i].name.clone()).collect();
    }
    let outcome = if failed {
        Outcome::Fails
    } else {
        settle_equilibrium(positive_equilibrium(net, kappa, evidence), &mut cert, &mut notes)
    };
    TheoremVerdict {
        theorem: TheoremId::AcrThm1,
        outcome,
        certificate: cert,
        notes,
    }
}

fn witness_i64(net: &ReactionNetwork) -> (bool, Option<Vec<i64>>) {
    let c = conservation_certificate(net);
    let w = c
        .witness
        .as_ref()
        .and_then(|w| w.iter().map(|x| x.to_i64()).collect::<Option<Vec<i64>>>());
    (c.conservative, w)
}

/// Conservative, deficiency one, a positive equilibrium and a non-terminal
/// domination pair imply every non-terminal complex is off at each positive
/// recurrent state.
pub fn check_absorption_cor1(net: &ReactionNetwork, kappa: &[f64], evidence: &EquilibriumEvidence) -> TheoremVerdict {
    let dec = linkage_decomposition(net);
    let d = deficiency(net);
    let pairs = domination_pairs(net, &dec);
    let (conservative, witness) = witness_i64(net);
    let mut cert = Certificate {
        deficiency: Some(d.delta),
        conservative: Some(conservative),
        conservation_witness: witness,
        pairs: pairs.iter().map(|p| pair_label(net, p)).collect(),
        ..Default::default()
    };
    let mut notes = Vec::new();
    let mut failed = false;
    if !conservative {
        failed = true;
        notes.push("network is not conservative".into());
    }
    if d.delta != 1 {
        failed = true;
        notes.push(format!("deficiency is {}, not 1", d.delta));
    }
    if pairs.is_empty() {
        failed = true;
        notes.push("no non-terminal complex is dominated by another non-terminal complex".into());
    }
    let outcome = if failed {
        Outcome::Fails
    } else {
        settle_equilibrium(positive_equilibrium(net, kappa, evidence), &mut cert, &mut notes)
    };
    TheoremVerdict {
        theorem: TheoremId::AbsorptionCor1,
        outcome,
        certificate: cert,
        notes,
    }
}

/// `first` followed by `count` log-uniform samples in `[1e-2, 1e2]^r`.
pub fn default_rate_samples(first: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![first.to_vec()];
    for _ in 0..count {
        out.push(
            (0..first.len())
                .map(|_| 10f64.powf(rng.random_range(-2.0f64..=2.0)))
                .collect(),
        );
    }
    out
}

/// Kernel condition of the general absorption theorem, tried over rate
/// samples; the first passing sample wins.
pub fn check_absorption_general(net: &ReactionNetwork, samples: &[Vec<f64>]) -> TheoremVerdict {
    let dec = linkage_decomposition(net);
    let pairs = domination_pairs(net, &dec);
    let (conservative, witness) = witness_i64(net);
    let mut c_star: Vec<usize> = pairs.iter().map(|p| p.dominated).collect();
    c_star.sort_unstable();
    c_star.dedup();
    let mut c_star_star: Vec<usize> = pairs.iter().map(|p| p.dominator).collect();
    c_star_star.sort_unstable();
    c_star_star.dedup();
    let nt = &dec.non_terminal_complexes;
    let mut cert = Certificate {
        conservative: Some(conservative),
        conservation_witness: witness,
        pairs: pairs.iter().map(|p| pair_label(net, p)).collect(),
        c_star: c_star.iter().map(|&j| net.complex_label(j)).collect(),
        c_star_star: c_star_star.iter().map(|&j| net.complex_label(j)).collect(),
        ..Default::default()
    };
    let mut notes = Vec::new();
    let verdict = |outcome, cert, notes| TheoremVerdict {
        theorem: TheoremId::AbsorptionGeneral,
        outcome,
        certificate: cert,
        notes,
    };
    if nt.is_empty() {
        notes.push("not applicable: the network has no non-terminal complexes".into());
        return verdict(Outcome::Fails, cert, notes);
    }
    if c_star.is_empty() {
        notes.push("not applicable: no non-terminal complex is dominated by another".into());
        return verdict(Outcome::Fails, cert, notes);
    }
    if !conservative {
        notes.push("network is not conservative".into());
        return verdict(Outcome::Fails, cert, notes);
    }
    for (k, kappa) in samples.iter().enumerate() {
        let kb = kernel_basis(net, kappa, KERNEL_TOL);
        let z = kb.vanishing_on(&c_star);
        let worst = z
            .iter()
            .flat_map(|v| nt.iter().map(move |&j| v[j].abs()))
            .fold(0.0, f64::max);
        if worst <= ANNIHILATOR_TOL {
            cert.passing_sample = Some(k);
            cert.samples_tried = Some(k + 1);
            cert.kernel_dim = Some(kb.dim());
            cert.kernel_supports = kb
                .projected_aligned(nt, &c_star)
                .into_iter()
                .map(|(_, v)| {
                    nt.iter()
                        .zip(&v)
                        .filter(|(_, x)| x.abs() > kb.tol)
                        .map(|(&j, _)| net.complex_label(j))
                        .collect()
                })
                .collect();
            notes.extend(kb.warnings);
            if k > 0 {
                notes.push(format!("condition verified at random rate sample {}", k));
            }
            return verdict(Outcome::Holds, cert, notes);
        }
    }
    cert.samples_tried = Some(samples.len());
    notes.push(format!(
        "kernel condition failed at all {} rate samples; the condition is existential in the rates, so this is not a refutation",
        samples.len()
    ));
    verdict(Outcome::Inconclusive, cert, notes)
}
