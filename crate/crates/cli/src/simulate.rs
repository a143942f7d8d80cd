use std::collections::BTreeMap;

use acr_core::qsd::mean_absorption_times;
use acr_core::stochastic::{
    build_generator, enumerate_state_space, estimate_absorption_time, estimate_qsd_yaglom, estimate_time_marginal,
    ssa_trajectory, time_average_distribution, Absorbing, EnsembleStats, Limits, Marginal, MassAction, SsaOptions,
};
use acr_core::ReactionNetwork;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::config::{
    config_hash, init_threads, initial_states, load_network, resolve_seed, species_counts, InitArgs, NetworkArgs,
    NetworkConfig, RunArgs,
};
use crate::error::CliError;
use crate::output::{fmt_f64, to_json, Artifact, OutDir, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One sample path, every jump
    Trajectory,
    /// Mean time until absorption over an ensemble
    Absorption,
    /// Distribution at fixed times, absorbed paths included
    Marginal,
    /// Distribution at time T among paths not yet absorbed
    Yaglom,
    /// Long-run occupation law of one or more paths
    Occupation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsorbingRule {
    /// Every non-terminal complex is turned off
    NonTerminalOff,
    /// No reaction can fire
    ZeroPropensity,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Number of paths
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Horizon; a comma list of output times for --mode marginal
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Start of the averaging window for --mode occupation
    #[arg(long, default_value_t = 0.0)]
    pub t_burn: f64,
    /// Species to tabulate (default: all)
    #[arg(long)]
    pub species: Vec<String>,
    /// Upper bound on a species count, repeatable; blocked reactions do not fire
    #[arg(long, value_name = "SPECIES=MAX")]
    pub cap: Vec<String>,
    /// Jump budget per path
    #[arg(long, default_value_t = acr_core::stochastic::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value_t = AbsorbingRule::NonTerminalOff)]
    pub absorbing: AbsorbingRule,
    /// Path index for --mode trajectory
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Also solve for the exact mean absorption time on the enumerated space
    #[arg(long)]
    pub exact: bool,
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    command: &'static str,
    network: &'a NetworkConfig,
    seed: u64,
    mode: Mode,
    initial: &'a [Vec<u32>],
    n: usize,
    t: &'a [f64],
    t_burn: f64,
    cap: Option<Vec<u32>>,
    budget: u64,
    absorbing: AbsorbingRule,
    stream: u64,
}

#[derive(Serialize)]
struct SpeciesMean {
    species: String,
    mean: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum RunResult {
    Trajectory {
        jumps: usize,
        absorbed_at: Option<f64>,
        end_time: f64,
        budget_exhausted: bool,
        final_state: Vec<u32>,
    },
    Absorption {
        #[serde(flatten)]
        stats: EnsembleStats,
        exact_mean: Option<f64>,
    },
    Marginal {
        times: Vec<f64>,
        means: Vec<Vec<SpeciesMean>>,
    },
    Yaglom {
        t: f64,
        n: usize,
        survivors: usize,
        survival_fraction: f64,
        budget_exhausted: usize,
        means: Vec<SpeciesMean>,
    },
    Occupation {
        t_burn: f64,
        t_end: f64,
        n: usize,
        means: Vec<SpeciesMean>,
    },
}

#[derive(Serialize)]
struct Run {
    initial: Vec<u32>,
    #[serde(flatten)]
    result: RunResult,
}

fn means(net: &ReactionNetwork, m: &Marginal, species: &[usize]) -> Vec<SpeciesMean> {
    species
        .iter()
        .map(|&j| SpeciesMean {
            species: net.species[j].name.clone(),
            mean: m.mean(j),
        })
        .collect()
}

fn single_t(t: &[f64], mode: &str) -> Result<f64, CliError> {
    match t {
        [x] if *x >= 0.0 => Ok(*x),
        _ => Err(CliError::Parse(format!("--mode {} needs one non-negative --t", mode))),
    }
}

fn distribution_rows(columns: &[Vec<f64>]) -> Vec<Vec<String>> {
    let len = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let mut row = vec![k.to_string()];
            row.extend(columns.iter().map(|c| fmt_f64(c.get(k).copied().unwrap_or(0.0))));
            row
        })
        .collect()
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    init_threads(args.run.threads)?;
    let seed = resolve_seed(args.run.seed)?;
    let loaded = load_network(&args.network)?;
    let net = &loaded.net;
    let starts = initial_states(net, &args.init)?;
    let species: Vec<usize> = if args.species.is_empty() {
        (0..net.m()).collect()
    } else {
        args.species
            .iter()
            .map(|s| {
                net.species_index(s)
                    .ok_or_else(|| CliError::Parse(format!("--species: unknown species {:?}", s)))
            })
            .collect::<Result<_, _>>()?
    };
    let cap = if args.cap.is_empty() {
        None
    } else {
        Some(species_counts(net, &args.cap, "--cap", u32::MAX)?)
    };
    let opts = SsaOptions {
        absorbing: match args.absorbing {
            AbsorbingRule::NonTerminalOff => Absorbing::NonTerminalOff,
            AbsorbingRule::ZeroPropensity => Absorbing::ZeroPropensity,
        },
        budget: args.budget,
        cap: cap.clone(),
        ..SsaOptions::default()
    };
    let prop = MassAction::new(net);
    let initial: Vec<Vec<u32>> = starts.iter().map(|(_, x)| x.clone()).collect();
    let config = SimulateConfig {
        command: "simulate",
        network: &loaded.config,
        seed,
        mode: args.mode,
        initial: &initial,
        n: args.n,
        t: &args.t,
        t_burn: args.t_burn,
        cap: cap.clone(),
        budget: args.budget,
        absorbing: args.absorbing,
        stream: args.stream,
    };
    let prov = Provenance::new(config_hash(&config));
    let mut out = args.run.out.as_deref().map(OutDir::new).transpose()?;
    let names: Vec<String> = net.species.iter().map(|s| s.name.clone()).collect();
    let numeric = |e: acr_core::stochastic::StochError| CliError::Numeric(e.to_string());

    let mut runs = Vec::new();
    for (tag, x0) in &starts {
        let result = match args.mode {
            Mode::Trajectory => {
                let t_max = match args.t.as_slice() {
                    [] => f64::INFINITY,
                    t => single_t(t, "trajectory")?,
                };
                let o = SsaOptions { t_max, ..opts.clone() };
                let tr = ssa_trajectory(&prop, x0, &o, seed, args.stream);
                if let Some(out) = out.as_mut() {
                    let mut header = vec!["t".to_string()];
                    header.extend(names.iter().cloned());
                    let rows: Vec<Vec<String>> = tr
                        .times
                        .iter()
                        .zip(&tr.states)
                        .map(|(t, x)| {
                            let mut r = vec![fmt_f64(*t)];
                            r.extend(x.iter().map(|c| c.to_string()));
                            r
                        })
                        .collect();
                    out.write_csv(&format!("trajectory{}.csv", tag), &prov, &header, &rows)?;
                }
                RunResult::Trajectory {
                    jumps: tr.reactions.len(),
                    absorbed_at: tr.absorbed_at,
                    end_time: tr.end_time,
                    budget_exhausted: tr.budget_exhausted,
                    final_state: tr.states.last().cloned().unwrap_or_default(),
                }
            }
            Mode::Absorption => {
                let stats =
                    estimate_absorption_time(&prop, &x0.clone().into(), args.n, seed, &opts).map_err(numeric)?;
                let exact_mean = if args.exact {
                    let limits = Limits {
                        cap: cap.clone(),
                        ..Limits::default()
                    };
                    let s = enumerate_state_space(net, &prop, x0, &limits).map_err(numeric)?;
                    let b = build_generator(&s, &prop).transient_block();
                    let k = s.index_of(x0).expect("start is enumerated");
                    match b.states.iter().position(|&q| q == k) {
                        None => Some(0.0),
                        Some(pos) => {
                            Some(mean_absorption_times(&b).map_err(|e| CliError::Numeric(e.to_string()))?[pos])
                        }
                    }
                } else {
                    None
                };
                RunResult::Absorption { stats, exact_mean }
            }
            Mode::Marginal => {
                if args.t.is_empty() || args.t.iter().any(|t| !(*t >= 0.0)) {
                    return Err(CliError::Parse(
                        "--mode marginal needs --t with non-negative times".into(),
                    ));
                }
                let marg: Vec<Marginal> = args
                    .t
                    .iter()
                    .map(|&t| estimate_time_marginal(&prop, &x0.clone().into(), t, args.n, seed, &opts))
                    .collect::<Result<_, _>>()
                    .map_err(numeric)?;
                if let Some(out) = out.as_mut() {
                    for &j in &species {
                        let cols: Vec<Vec<f64>> = marg.iter().map(|m| m.species(j)).collect();
                        let mut header = vec![names[j].clone()];
                        header.extend(args.t.iter().map(|t| format!("t={}", t)));
                        out.write_csv(
                            &format!("marginal{}_{}.csv", tag, names[j]),
                            &prov,
                            &header,
                            &distribution_rows(&cols),
                        )?;
                    }
                }
                RunResult::Marginal {
                    times: args.t.clone(),
                    means: marg.iter().map(|m| means(net, m, &species)).collect(),
                }
            }
            Mode::Yaglom => {
                let t = single_t(&args.t, "yaglom")?;
                let y = estimate_qsd_yaglom(&prop, &x0.clone().into(), t, args.n, seed, &opts).map_err(numeric)?;
                if let Some(out) = out.as_mut() {
                    for &j in &species {
                        let header = vec![names[j].clone(), "probability".into()];
                        out.write_csv(
                            &format!("yaglom{}_{}.csv", tag, names[j]),
                            &prov,
                            &header,
                            &distribution_rows(&[y.marginal.species(j)]),
                        )?;
                    }
                }
                RunResult::Yaglom {
                    t,
                    n: y.n,
                    survivors: y.survivors,
                    survival_fraction: y.survivors as f64 / y.n as f64,
                    budget_exhausted: y.budget_exhausted,
                    means: means(net, &y.marginal, &species),
                }
            }
            Mode::Occupation => {
                let t_end = single_t(&args.t, "occupation")?;
                if !(args.t_burn < t_end) {
                    return Err(CliError::Parse("--t-burn must be below --t".into()));
                }
                let m =
                    time_average_distribution(&prop, x0, args.t_burn, t_end, args.n, seed, &opts).map_err(numeric)?;
                if let Some(out) = out.as_mut() {
                    for &j in &species {
                        let header = vec![names[j].clone(), "probability".into()];
                        out.write_csv(
                            &format!("occupation{}_{}.csv", tag, names[j]),
                            &prov,
                            &header,
                            &distribution_rows(&[m.species(j)]),
                        )?;
                    }
                }
                RunResult::Occupation {
                    t_burn: args.t_burn,
                    t_end,
                    n: args.n,
                    means: means(net, &m, &species),
                }
            }
        };
        runs.push(Run {
            initial: x0.clone(),
            result,
        });
    }
    let mut result = BTreeMap::new();
    result.insert("runs", runs);
    let json = to_json(&Artifact {
        kind: "simulation",
        provenance: &prov,
        config: &config,
        result: &result,
    });
    if let Some(out) = out.as_mut() {
        out.write_text("simulation.json", &json)?;
    }
    print!("{}", json);
    Ok(())
}
