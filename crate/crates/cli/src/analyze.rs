use acr_core::deterministic::{acr_probe, default_class_samples, AcrProbe, Equilibrium, MassActionSystem};
use acr_core::structure::{
    check_absorption_cor1, check_absorption_general, check_theorem1, default_rate_samples, structure_report,
    EquilibriumEvidence, Outcome, StructureReport, TheoremId, TheoremVerdict,
};
use clap::Args;
use serde::Serialize;

use crate::config::{config_hash, init_threads, load_network, resolve_seed, NetworkArgs, NetworkConfig, RunArgs};
use crate::error::CliError;
use crate::output::{to_json, Artifact, OutDir, Provenance};

/// Rate vectors tried by the general absorption check besides the given one.
const RATE_SAMPLES: usize = 16;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Extra starting concentrations for the equilibrium search
    #[arg(long, value_name = "SPECIES=CONC")]
    pub init: Vec<String>,
    /// Take the existence of a positive equilibrium as given
    #[arg(long)]
    pub assume_equilibrium: bool,
    /// Include every equilibrium found, with its stability
    #[arg(long)]
    pub deterministic: bool,
    /// Print the JSON report instead of the text summary
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct AnalyzeConfig<'a> {
    command: &'static str,
    network: &'a NetworkConfig,
    seed: u64,
    init: &'a [String],
    assume_equilibrium: bool,
    deterministic: bool,
}

#[derive(Serialize)]
struct Absorption {
    certified: bool,
    by: Option<TheoremId>,
}

#[derive(Serialize)]
struct Summary {
    deficiency: i64,
    conservative: bool,
    acr_species: Vec<String>,
    acr_species_numerical: Vec<String>,
    absorption: Absorption,
}

#[derive(Serialize)]
struct EquilibriumSummary {
    concentrations: Vec<f64>,
    residual: f64,
    max_real_eigenvalue: Option<f64>,
    stable: Option<bool>,
}

#[derive(Serialize)]
struct AnalysisReport {
    summary: Summary,
    structure: StructureReport,
    theorems: Vec<TheoremVerdict>,
    deterministic: AcrProbe,
    #[serde(skip_serializing_if = "Option::is_none")]
    equilibria: Option<Vec<EquilibriumSummary>>,
    diagnostics: Vec<String>,
}

fn parse_concentrations(net: &acr_core::ReactionNetwork, pairs: &[String]) -> Result<Option<Vec<f64>>, CliError> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut c = vec![0.0; net.m()];
    for kv in pairs {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("--init must look like SPECIES=CONC, got {:?}", kv)))?;
        let j = net
            .species_index(k.trim())
            .ok_or_else(|| CliError::Parse(format!("--init: unknown species {:?}", k)))?;
        c[j] = v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| *x >= 0.0 && x.is_finite())
            .ok_or_else(|| CliError::Parse(format!("--init: {:?} is not a non-negative number", v)))?;
    }
    Ok(Some(c))
}

fn stability(e: &Equilibrium) -> EquilibriumSummary {
    EquilibriumSummary {
        concentrations: e.concentrations.clone(),
        residual: e.residual,
        max_real_eigenvalue: e.max_real_eigenvalue,
        stable: e.max_real_eigenvalue.map(|l| l < 0.0),
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    init_threads(args.run.threads)?;
    let seed = resolve_seed(args.run.seed)?;
    let loaded = load_network(&args.network)?;
    let net = &loaded.net;
    let extra = parse_concentrations(net, &args.init)?;

    let mut samples = Vec::new();
    samples.extend(extra);
    samples.extend(default_class_samples(net.m(), seed));
    let kappa = net.rates();
    let evidence = if args.assume_equilibrium {
        EquilibriumEvidence::Assumed
    } else {
        EquilibriumEvidence::Search(samples.clone())
    };

    let structure = structure_report(net);
    let thm1 = check_theorem1(net, &kappa, &evidence);
    let cor1 = check_absorption_cor1(net, &kappa, &evidence);
    let mut general = check_absorption_general(net, &default_rate_samples(&kappa, RATE_SAMPLES, seed));
    if cor1.holds() && !general.holds() {
        general.outcome = Outcome::Holds;
        general
            .notes
            .push("implied by Absorption_Thm_cor1; the kernel test did not pass at the sampled rates".into());
    }
    let sys = MassActionSystem::from_network(net);
    let probe = acr_probe(&sys, &samples);

    let mut diagnostics = Vec::new();
    let numerical = probe.acr_species();
    let absorption = if cor1.holds() {
        Absorption {
            certified: true,
            by: Some(TheoremId::AbsorptionCor1),
        }
    } else if general.holds() {
        Absorption {
            certified: true,
            by: Some(TheoremId::AbsorptionGeneral),
        }
    } else {
        Absorption {
            certified: false,
            by: None,
        }
    };
    if !numerical.is_empty() && !absorption.certified && structure.conservation.conservative {
        diagnostics.push(format!(
            "deterministic ACR in {} without a certified absorption result; extinction in the stochastic model is expected but not proven here",
            numerical.join(", ")
        ));
    }
    if !structure.conservation.conservative {
        diagnostics.push(
            "network is not conservative; stochastic state spaces may be infinite and absorption is not guaranteed"
                .into(),
        );
    }
    let unstable: Vec<&Equilibrium> = probe
        .equilibria
        .iter()
        .filter(|e| e.max_real_eigenvalue.is_some_and(|l| l > 0.0))
        .collect();
    if !unstable.is_empty() {
        diagnostics.push(format!(
            "{} of {} positive equilibria are unstable within their compatibility class",
            unstable.len(),
            probe.equilibria.len()
        ));
    }
    if thm1.outcome == Outcome::Inconclusive || cor1.outcome == Outcome::Inconclusive {
        diagnostics
            .push("no positive equilibrium found in the searched classes; pass --init or --assume-equilibrium".into());
    }

    let report = AnalysisReport {
        summary: Summary {
            deficiency: structure.deficiency.delta,
            conservative: structure.conservation.conservative,
            acr_species: if thm1.holds() {
                thm1.certificate.acr_species.clone()
            } else {
                Vec::new()
            },
            acr_species_numerical: numerical,
            absorption,
        },
        equilibria: args
            .deterministic
            .then(|| probe.equilibria.iter().map(stability).collect()),
        structure,
        theorems: vec![thm1, cor1, general],
        deterministic: probe,
        diagnostics,
    };
    let config = AnalyzeConfig {
        command: "analyze",
        network: &loaded.config,
        seed,
        init: &args.init,
        assume_equilibrium: args.assume_equilibrium,
        deterministic: args.deterministic,
    };
    let prov = Provenance::new(config_hash(&config));
    let json = to_json(&Artifact {
        kind: "analysis",
        provenance: &prov,
        config: &config,
        result: &report,
    });
    if let Some(dir) = &args.run.out {
        let mut out = OutDir::new(dir)?;
        out.write_text("analysis.json", &json)?;
    }
    if args.json {
        print!("{}", json);
    } else {
        print!("{}", text_summary(&loaded.config.file, &report));
    }
    Ok(())
}

fn outcome_word(o: Outcome) -> &'static str {
    match o {
        Outcome::Holds => "holds",
        Outcome::Fails => "fails",
        Outcome::Inconclusive => "inconclusive",
    }
}

fn text_summary(file: &str, r: &AnalysisReport) -> String {
    let s = &r.structure;
    let d = &s.deficiency;
    let mut out = format!(
        "network      {}: {} species, {} complexes, {} reactions\n",
        file, s.m, s.n, s.r
    );
    out += &format!("deficiency   {} - {} - {} = {}\n", d.n, d.ell, d.s, d.delta);
    out += &format!(
        "classes      {} linkage, {} strong, {} terminal\n",
        s.linkage.linkage_classes.len(),
        s.linkage.strong_linkage_classes.len(),
        s.linkage.t
    );
    out += &format!(
        "conservative {}\n",
        if s.conservation.conservative { "yes" } else { "no" }
    );
    let names = ["ACR_Thm1", "Absorption_Thm_cor1", "Absorption_Thm_general"];
    for (name, v) in names.iter().zip(&r.theorems) {
        out += &format!("{:<23}{}", name, outcome_word(v.outcome));
        if !v.certificate.acr_species.is_empty() && v.holds() {
            out += &format!(" (ACR in {})", v.certificate.acr_species.join(", "));
        }
        out += "\n";
        for n in &v.notes {
            out += &format!("  - {}\n", n);
        }
    }
    let p = &r.deterministic;
    out += &format!(
        "equilibria   {} positive from {} classes",
        p.equilibria_found, p.samples
    );
    if !r.summary.acr_species_numerical.is_empty() {
        let vals: Vec<String> = p
            .species
            .iter()
            .filter(|sp| sp.acr_candidate)
            .map(|sp| format!("{} = {:.6}", sp.species, sp.max))
            .collect();
        out += &format!("; constant: {}", vals.join(", "));
    }
    out += "\n";
    out += &format!(
        "absorption   {}\n",
        match r.summary.absorption.by {
            Some(TheoremId::AbsorptionCor1) => "certified (Absorption_Thm_cor1)",
            Some(_) => "certified (Absorption_Thm_general)",
            None => "not certified",
        }
    );
    for d in &r.diagnostics {
        out += &format!("note: {}\n", d);
    }
    out
}
