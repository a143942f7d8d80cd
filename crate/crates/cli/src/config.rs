//! Arguments shared by the subcommands and the run configuration they
//! resolve to.

use std::path::PathBuf;

use acr_core::presets::envz_one_away;
use acr_core::{parse_network, ReactionNetwork};
use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Args, Debug, Clone)]
pub struct NetworkArgs {
    /// Network file in the .crn format
    pub network: PathBuf,
    /// Replace every rate constant, in reaction order
    #[arg(long, value_delimiter = ',', value_name = "K1,K2,..")]
    pub rates: Option<Vec<f64>>,
    /// Override one rate constant by 1-based reaction index
    #[arg(long = "set-rate", value_name = "INDEX=VALUE")]
    pub set_rate: Vec<String>,
    /// Molecules per unit concentration (replaces @volume)
    #[arg(long)]
    pub volume: Option<f64>,
    /// Rate of A + B -> 2B in an activation/deactivation network
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Rate of B -> A in an activation/deactivation network
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Base seed; the ACR_SEED environment variable takes precedence
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for JSON and CSV artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InitArgs {
    /// Initial molecule count, repeatable; unlisted species start at 0
    #[arg(long, value_name = "SPECIES=COUNT")]
    pub init: Vec<String>,
    /// EnvZ total: start one reaction away from absorption
    #[arg(long)]
    pub xtot: Option<u32>,
    /// OmpR total, used with --xtot
    #[arg(long)]
    pub ytot: Option<u32>,
    /// Conserved total of an activation/deactivation network; starts at B = 1
    #[arg(long = "M", value_delimiter = ',', value_name = "M")]
    pub m: Vec<u32>,
}

/// `A + B -> 2B` and `B -> A`, up to the species names.
#[derive(Debug, Clone, Copy)]
pub struct SisShape {
    pub infection: usize,
    pub recovery: usize,
    pub a: usize,
    pub b: usize,
}

pub fn sis_shape(net: &ReactionNetwork) -> Option<SisShape> {
    if net.m() != 2 || net.r() != 2 {
        return None;
    }
    for (a, b) in [(0, 1), (1, 0)] {
        let mut inf = None;
        let mut rec = None;
        for i in 0..2 {
            let (s, p) = (&net.source(i).coeffs, &net.product(i).coeffs);
            let mut want_s = [0; 2];
            let mut want_p = [0; 2];
            want_s[a] = 1;
            want_s[b] = 1;
            want_p[b] = 2;
            if s[..] == want_s && p[..] == want_p {
                inf = Some(i);
            }
            let mut ws = [0; 2];
            let mut wp = [0; 2];
            ws[b] = 1;
            wp[a] = 1;
            if s[..] == ws && p[..] == wp {
                rec = Some(i);
            }
        }
        if let (Some(infection), Some(recovery)) = (inf, rec) {
            return Some(SisShape {
                infection,
                recovery,
                a,
                b,
            });
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkConfig {
    /// File name only, so reports do not depend on the working directory.
    pub file: String,
    pub sha256: String,
    pub rates: Vec<f64>,
    pub volume: f64,
}

pub struct Loaded {
    pub net: ReactionNetwork,
    pub config: NetworkConfig,
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{:02x}", b)).collect()
}

fn parse_kv<'a>(s: &'a str, what: &str) -> Result<(&'a str, &'a str), CliError> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Parse(format!("{} must look like KEY=VALUE, got {:?}", what, s)))
}

pub fn load_network(args: &NetworkArgs) -> Result<Loaded, CliError> {
    let path = &args.network;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    let mut net = parse_network(&text).map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    let mut rates = net.rates();
    if let Some(all) = &args.rates {
        if all.len() != net.r() {
            return Err(CliError::Parse(format!(
                "--rates has {} values, network has {} reactions",
                all.len(),
                net.r()
            )));
        }
        rates = all.clone();
    }
    for kv in &args.set_rate {
        let (k, v) = parse_kv(kv, "--set-rate")?;
        let i: usize = k
            .parse()
            .ok()
            .filter(|&i| i >= 1 && i <= net.r())
            .ok_or_else(|| CliError::Parse(format!("--set-rate index {:?} is not in 1..={}", k, net.r())))?;
        rates[i - 1] = v
            .parse()
            .map_err(|_| CliError::Parse(format!("--set-rate value {:?} is not a number", v)))?;
    }
    if args.alpha.is_some() || args.beta.is_some() {
        let shape = sis_shape(&net)
            .ok_or_else(|| CliError::Parse("--alpha/--beta need a network of the form A + B -> 2B, B -> A".into()))?;
        if let Some(a) = args.alpha {
            rates[shape.infection] = a;
        }
        if let Some(b) = args.beta {
            rates[shape.recovery] = b;
        }
    }
    net = net.with_rates(&rates).map_err(|e| CliError::Parse(e.to_string()))?;
    if let Some(v) = args.volume {
        net = net.with_volume(v).map_err(|e| CliError::Parse(e.to_string()))?;
    }
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Loaded {
        config: NetworkConfig {
            file,
            sha256: hex_sha256(text.as_bytes()),
            rates,
            volume: net.volume,
        },
        net,
    })
}

/// `ACR_SEED` overrides `--seed`, which overrides the default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    match std::env::var("ACR_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("ACR_SEED={:?} is not an unsigned integer", s))),
        Err(_) => Ok(flag.unwrap_or(DEFAULT_SEED)),
    }
}

pub fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Parse("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Per-species counts from `NAME=VALUE` pairs.
pub fn species_counts(net: &ReactionNetwork, pairs: &[String], what: &str, fill: u32) -> Result<Vec<u32>, CliError> {
    let mut x = vec![fill; net.m()];
    for kv in pairs {
        let (k, v) = parse_kv(kv, what)?;
        let j = net
            .species_index(k)
            .ok_or_else(|| CliError::Parse(format!("{}: unknown species {:?}", what, k)))?;
        x[j] = v
            .parse()
            .map_err(|_| CliError::Parse(format!("{}: {:?} is not a non-negative integer", what, v)))?;
    }
    Ok(x)
}

/// Initial states requested on the command line; several when `--M` lists
/// more than one total.
pub fn initial_states(net: &ReactionNetwork, init: &InitArgs) -> Result<Vec<(String, Vec<u32>)>, CliError> {
    if !init.init.is_empty() {
        return Ok(vec![(String::new(), species_counts(net, &init.init, "--init", 0)?)]);
    }
    match (init.xtot, init.ytot) {
        (Some(x), Some(y)) => {
            let x0 = envz_one_away(net, x, y).map_err(CliError::Parse)?;
            return Ok(vec![(String::new(), x0)]);
        }
        (None, None) => {}
        _ => return Err(CliError::Parse("--xtot and --ytot go together".into())),
    }
    if !init.m.is_empty() {
        let shape = sis_shape(net)
            .ok_or_else(|| CliError::Parse("--M needs a network of the form A + B -> 2B, B -> A".into()))?;
        let tagged = init.m.len() > 1;
        return init
            .m
            .iter()
            .map(|&m| {
                if m == 0 {
                    return Err(CliError::Parse("--M must be at least 1".into()));
                }
                let mut x = vec![0; 2];
                x[shape.a] = m - 1;
                x[shape.b] = 1;
                Ok((if tagged { format!("_M{}", m) } else { String::new() }, x))
            })
            .collect();
    }
    Err(CliError::Parse(
        "no initial state: give --init, --xtot/--ytot or --M".into(),
    ))
}

pub fn config_hash<T: Serialize>(config: &T) -> String {
    hex_sha256(&serde_json::to_vec(config).expect("config serializes"))
}
