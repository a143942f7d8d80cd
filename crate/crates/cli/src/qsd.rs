use acr_core::deterministic::{find_equilibrium, MassActionSystem};
use acr_core::qsd::{invert_sis, poisson_pmf, qsd_exact, qsd_iterative_sis, tv_to_poisson, QsdError};
use acr_core::stochastic::{
    build_generator, enumerate_state_space, estimate_qsd_time_average, estimate_qsd_yaglom, Limits, MassAction,
    SsaOptions, StateSpace,
};
use acr_core::structure::{check_theorem1, EquilibriumEvidence};
use acr_core::{InitialState, ReactionNetwork};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::config::{
    config_hash, init_threads, initial_states, load_network, resolve_seed, sis_shape, species_counts, InitArgs,
    NetworkArgs, NetworkConfig, RunArgs,
};
use crate::error::CliError;
use crate::output::{fmt_f64, to_json, Artifact, OutDir, Provenance};

const ITERATIVE_STEPS: usize = 1_000_000;
const ITERATIVE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Iterative scheme for activation/deactivation networks, exact
    /// eigenvector when the space can be enumerated, Yaglom otherwise
    Auto,
    /// Left Perron vector of the transient block
    Exact,
    /// Fixed-point recursion of the activation/deactivation chain
    Iterative,
    /// Surviving paths at time T
    Yaglom,
    /// Occupation law with jumps into the absorbing set suppressed
    /// (approximation, no accuracy guarantee)
    TimeAverage,
}

#[derive(Args, Debug)]
pub struct QsdArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Report the total variation distance to a Poisson law
    #[arg(long)]
    pub poisson_check: bool,
    /// Poisson mean (default: the deterministic equilibrium count)
    #[arg(long)]
    pub poisson_mean: Option<f64>,
    /// Species for the Poisson check (default: the ACR species)
    #[arg(long)]
    pub species: Option<String>,
    /// Residual tolerance for the exact method, relative to the largest exit rate
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Largest state space to enumerate
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    /// Upper bound on a species count, repeatable
    #[arg(long, value_name = "SPECIES=MAX")]
    pub cap: Vec<String>,
    /// Paths for the sampling methods
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Horizon T for yaglom, end of the window for time-average
    #[arg(long)]
    pub t: Option<f64>,
    /// Start of the averaging window for time-average
    #[arg(long, default_value_t = 0.0)]
    pub t_burn: f64,
}

#[derive(Serialize)]
struct QsdConfig<'a> {
    command: &'static str,
    network: &'a NetworkConfig,
    seed: u64,
    method: Method,
    initial: &'a [Vec<u32>],
    poisson_check: bool,
    poisson_mean: Option<f64>,
    species: &'a Option<String>,
    tol: f64,
    max_states: usize,
    cap: Option<Vec<u32>>,
    n: usize,
    t: Option<f64>,
    t_burn: f64,
}

#[derive(Serialize)]
struct SpeciesMean {
    species: String,
    mean: f64,
}

#[derive(Serialize)]
struct PoissonDiag {
    species: String,
    mean: f64,
    tv: f64,
}

#[derive(Serialize)]
struct RunSummary {
    initial: Vec<u32>,
    method: Method,
    note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    /// `-1/θ`, the mean absorption time when started from the QSD.
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_absorption_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    survivors: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    survival_fraction: Option<f64>,
    means: Vec<SpeciesMean>,
    #[serde(skip_serializing_if = "Option::is_none")]
    poisson: Option<PoissonDiag>,
}

/// What every method produces before formatting.
struct Computed {
    method: Method,
    note: String,
    marginals: Vec<Vec<f64>>,
    /// Full distribution over states, for the eigenvector methods.
    states: Option<(Vec<Vec<u32>>, Vec<f64>)>,
    theta: Option<f64>,
    residual: Option<f64>,
    iterations: Option<usize>,
    survivors: Option<(usize, usize)>,
}

fn qsd_error(e: QsdError, space: Option<&StateSpace>) -> CliError {
    match (&e, space) {
        (QsdError::Reducible { classes }, Some(s)) => {
            let mut msg = format!("{} transient classes; the QSD is not unique\n", classes.len());
            for (k, c) in classes.iter().enumerate() {
                let shown: Vec<String> = c.iter().take(8).map(|&q| format!("{:?}", s.state(q))).collect();
                msg += &format!(
                    "  class {} ({} states): {}{}\n",
                    k + 1,
                    c.len(),
                    shown.join(" "),
                    if c.len() > 8 { " ..." } else { "" }
                );
            }
            CliError::Reducible(msg.trim_end().to_string())
        }
        (QsdError::Reducible { .. }, None) => CliError::Reducible(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

fn iterative(net: &ReactionNetwork, prop: &MassAction, x0: &[u32]) -> Result<Computed, CliError> {
    let shape = sis_shape(net)
        .ok_or_else(|| CliError::Parse("--method iterative needs a network of the form A + B -> 2B, B -> A".into()))?;
    let m = (x0[shape.a] + x0[shape.b]) as usize;
    let (alpha, beta) = (prop.constants[shape.infection], prop.constants[shape.recovery]);
    let r = qsd_iterative_sis(m, alpha, beta, ITERATIVE_STEPS, ITERATIVE_TOL).map_err(|e| qsd_error(e, None))?;
    let mut marginals = vec![Vec::new(); 2];
    marginals[shape.a] = invert_sis(&r.distribution);
    marginals[shape.b] = std::iter::once(0.0).chain(r.distribution.iter().copied()).collect();
    let states = (1..=m as u32)
        .map(|i| {
            let mut x = vec![0; 2];
            x[shape.a] = m as u32 - i;
            x[shape.b] = i;
            x
        })
        .collect();
    Ok(Computed {
        method: Method::Iterative,
        note: r.note,
        marginals,
        states: Some((states, r.distribution)),
        theta: Some(r.theta),
        residual: Some(r.residual),
        iterations: Some(r.iterations),
        survivors: None,
    })
}

fn exact(space: &StateSpace, prop: &MassAction, tol: f64) -> Result<Computed, CliError> {
    let b = build_generator(space, prop).transient_block();
    let mut r = qsd_exact(&b, tol).map_err(|e| qsd_error(e, Some(space)))?;
    r.attach_states(space, &b);
    Ok(Computed {
        method: Method::Exact,
        note: r.note,
        marginals: r.marginals,
        states: Some((r.states, r.distribution)),
        theta: Some(r.theta),
        residual: Some(r.residual),
        iterations: Some(r.iterations),
        survivors: None,
    })
}

/// Poisson species and mean: explicit flags, else the activation/deactivation
/// ratio, else the ACR species at the equilibrium of the starting class.
fn poisson_target(
    args: &QsdArgs,
    net: &ReactionNetwork,
    prop: &MassAction,
    x0: &[u32],
) -> Result<(usize, f64), CliError> {
    let named = |s: &str| {
        net.species_index(s)
            .ok_or_else(|| CliError::Parse(format!("--species: unknown species {:?}", s)))
    };
    let shape = sis_shape(net);
    let j = match (&args.species, shape) {
        (Some(s), _) => named(s)?,
        (None, Some(sh)) => sh.a,
        (None, None) => {
            let v = check_theorem1(net, &net.rates(), &EquilibriumEvidence::Assumed);
            match v.certificate.acr_species.as_slice() {
                [s] => named(s)?,
                _ => {
                    return Err(CliError::Parse(
                        "--poisson-check: no unique ACR species; pass --species".into(),
                    ))
                }
            }
        }
    };
    if let Some(mu) = args.poisson_mean {
        return Ok((j, mu));
    }
    if let Some(sh) = shape {
        if j == sh.a {
            return Ok((j, prop.constants[sh.recovery] / prop.constants[sh.infection]));
        }
    }
    let c0 = InitialState::Counts(x0.to_vec()).concentrations(net.volume);
    let sys = MassActionSystem::from_network(net);
    let e = find_equilibrium(&sys, &c0, true).ok_or_else(|| {
        CliError::Numeric("no positive equilibrium in the starting class; pass --poisson-mean".into())
    })?;
    Ok((j, e.concentrations[j] * net.volume))
}

pub fn run(args: &QsdArgs) -> Result<(), CliError> {
    init_threads(args.run.threads)?;
    let seed = resolve_seed(args.run.seed)?;
    let loaded = load_network(&args.network)?;
    let net = &loaded.net;
    let starts = initial_states(net, &args.init)?;
    let cap = if args.cap.is_empty() {
        None
    } else {
        Some(species_counts(net, &args.cap, "--cap", u32::MAX)?)
    };
    let prop = MassAction::new(net);
    let initial: Vec<Vec<u32>> = starts.iter().map(|(_, x)| x.clone()).collect();
    let config = QsdConfig {
        command: "qsd",
        network: &loaded.config,
        seed,
        method: args.method,
        initial: &initial,
        poisson_check: args.poisson_check,
        poisson_mean: args.poisson_mean,
        species: &args.species,
        tol: args.tol,
        max_states: args.max_states,
        cap: cap.clone(),
        n: args.n,
        t: args.t,
        t_burn: args.t_burn,
    };
    let prov = Provenance::new(config_hash(&config));
    let mut out = args.run.out.as_deref().map(OutDir::new).transpose()?;
    let names: Vec<String> = net.species.iter().map(|s| s.name.clone()).collect();
    let limits = Limits {
        max_states: args.max_states,
        cap: cap.clone(),
    };
    let opts = SsaOptions {
        cap: cap.clone(),
        ..SsaOptions::default()
    };
    let need_t = |what: &str| {
        args.t
            .ok_or_else(|| CliError::Parse(format!("--method {} needs --t", what)))
    };

    let mut runs = Vec::new();
    let mut poisson_rows = Vec::new();
    for (tag, x0) in &starts {
        let c = match args.method {
            Method::Iterative => iterative(net, &prop, x0)?,
            Method::Exact => {
                let s = enumerate_state_space(net, &prop, x0, &limits).map_err(|e| CliError::Numeric(e.to_string()))?;
                exact(&s, &prop, args.tol)?
            }
            Method::Auto if sis_shape(net).is_some() => iterative(net, &prop, x0)?,
            Method::Auto => match enumerate_state_space(net, &prop, x0, &limits) {
                Ok(s) => exact(&s, &prop, args.tol)?,
                Err(e) => {
                    let t = args
                        .t
                        .ok_or_else(|| CliError::Parse(format!("{}; the Yaglom fallback needs --t", e)))?;
                    yaglom(
                        net,
                        &prop,
                        x0,
                        t,
                        args.n,
                        seed,
                        &opts,
                        &format!("enumeration failed ({}); Yaglom estimate", e),
                    )?
                }
            },
            Method::Yaglom => yaglom(
                net,
                &prop,
                x0,
                need_t("yaglom")?,
                args.n,
                seed,
                &opts,
                "Yaglom estimate",
            )?,
            Method::TimeAverage => {
                let t_end = need_t("time-average")?;
                if !(args.t_burn < t_end) {
                    return Err(CliError::Parse("--t-burn must be below --t".into()));
                }
                let m = estimate_qsd_time_average(&prop, x0, args.t_burn, t_end, args.n, seed, &opts)
                    .map_err(|e| CliError::Numeric(e.to_string()))?;
                Computed {
                    method: Method::TimeAverage,
                    note: "occupation law with absorbing jumps suppressed; approximation only".into(),
                    marginals: (0..net.m()).map(|j| m.species(j)).collect(),
                    states: None,
                    theta: None,
                    residual: None,
                    iterations: None,
                    survivors: None,
                }
            }
        };

        let poisson = if args.poisson_check {
            let (j, mu) = poisson_target(args, net, &prop, x0)?;
            let tv = tv_to_poisson(&c.marginals[j], mu);
            poisson_rows.push(vec![
                x0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                names[j].clone(),
                fmt_f64(mu),
                fmt_f64(tv),
            ]);
            Some(PoissonDiag {
                species: names[j].clone(),
                mean: mu,
                tv,
            })
        } else {
            None
        };

        if let Some(out) = out.as_mut() {
            for (j, marg) in c.marginals.iter().enumerate() {
                let mut header = vec![names[j].clone(), "probability".to_string()];
                let with_pmf = poisson.as_ref().filter(|p| p.species == names[j]);
                if with_pmf.is_some() {
                    header.push("poisson".into());
                }
                let rows: Vec<Vec<String>> = marg
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let mut r = vec![k.to_string(), fmt_f64(*p)];
                        if let Some(pd) = with_pmf {
                            r.push(fmt_f64(poisson_pmf(pd.mean, k as u64)));
                        }
                        r
                    })
                    .collect();
                out.write_csv(&format!("qsd{}_{}.csv", tag, names[j]), &prov, &header, &rows)?;
            }
            if let Some((states, p)) = &c.states {
                let mut header = names.clone();
                header.push("probability".into());
                let rows: Vec<Vec<String>> = states
                    .iter()
                    .zip(p)
                    .map(|(x, w)| {
                        let mut r: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                        r.push(fmt_f64(*w));
                        r
                    })
                    .collect();
                out.write_csv(&format!("qsd{}_states.csv", tag), &prov, &header, &rows)?;
            }
        }

        runs.push(RunSummary {
            initial: x0.clone(),
            method: c.method,
            note: c.note,
            states: c.states.as_ref().map(|(s, _)| s.len()),
            theta: c.theta,
            mean_absorption_time: c.theta.map(|t| -1.0 / t),
            residual: c.residual,
            iterations: c.iterations,
            survivors: c.survivors.map(|(s, _)| s),
            survival_fraction: c.survivors.map(|(s, n)| s as f64 / n as f64),
            means: c
                .marginals
                .iter()
                .enumerate()
                .map(|(j, m)| SpeciesMean {
                    species: names[j].clone(),
                    mean: m.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
                })
                .collect(),
            poisson,
        });
    }
    if let (Some(out), false) = (out.as_mut(), poisson_rows.is_empty()) {
        let header: Vec<String> = ["initial", "species", "mean", "tv"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        out.write_csv("poisson.csv", &prov, &header, &poisson_rows)?;
    }
    #[derive(Serialize)]
    struct Result<'a> {
        runs: &'a [RunSummary],
    }
    let json = to_json(&Artifact {
        kind: "qsd",
        provenance: &prov,
        config: &config,
        result: &Result { runs: &runs },
    });
    if let Some(out) = out.as_mut() {
        out.write_text("qsd.json", &json)?;
    }
    print!("{}", json);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn yaglom(
    net: &ReactionNetwork,
    prop: &MassAction,
    x0: &[u32],
    t: f64,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
    note: &str,
) -> Result<Computed, CliError> {
    let y = estimate_qsd_yaglom(prop, &x0.to_vec().into(), t, n, seed, opts)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(Computed {
        method: Method::Yaglom,
        note: format!("{}; {} of {} paths survived to T = {}", note, y.survivors, y.n, t),
        marginals: (0..net.m()).map(|j| y.marginal.species(j)).collect(),
        states: None,
        theta: None,
        residual: None,
        iterations: None,
        survivors: Some((y.survivors, y.n)),
    })
}
