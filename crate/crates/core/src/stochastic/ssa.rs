use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Compiled, Propensity};

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Which states count as absorbed.
#[derive(Debug, Clone)]
pub enum Absorbing {
    /// Only states where no reaction can fire.
    ZeroPropensity,
    /// States where every non-terminal source complex is off.
    NonTerminalOff,
    /// An explicit set of states.
    States(HashSet<Vec<u32>>),
}

impl Absorbing {
    pub fn contains(&self, comp: &Compiled, x: &[u32]) -> bool {
        match self {
            Absorbing::ZeroPropensity => (0..comp.r()).all(|i| !comp.enabled(x, i)),
            Absorbing::NonTerminalOff => comp.non_terminal_off(x),
            Absorbing::States(s) => s.contains(x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SsaOptions {
    pub t_max: f64,
    pub stop_on_absorb: bool,
    pub absorbing: Absorbing,
    /// Maximum number of jumps per trajectory.
    pub budget: u64,
    /// Per-species upper bounds; reactions that would exceed them are blocked.
    pub cap: Option<Vec<u32>>,
}

impl Default for SsaOptions {
    fn default() -> Self {
        SsaOptions {
            t_max: f64::INFINITY,
            stop_on_absorb: true,
            absorbing: Absorbing::NonTerminalOff,
            budget: DEFAULT_BUDGET,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    /// Jump times, starting with 0 for the initial state.
    pub times: Vec<f64>,
    pub states: Vec<Vec<u32>>,
    /// Reaction fired at each jump (one fewer than `states`).
    pub reactions: Vec<usize>,
    pub seed: u64,
    pub stream: u64,
    pub absorbed_at: Option<f64>,
    pub end_time: f64,
    pub budget_exhausted: bool,
}

/// Independent generator for trajectory `stream` of an ensemble.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Draws an Exp(1) variate, never zero.
#[inline]
pub(crate) fn exp1<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let e = -(1.0 - u).ln();
        if e > 0.0 {
            return e;
        }
    }
}

pub(crate) struct RunEnd {
    pub absorbed_at: Option<f64>,
    pub end_time: f64,
    pub budget_exhausted: bool,
}

#[inline]
pub(crate) fn rates_with_cap<P: Propensity>(prop: &P, x: &[u32], cap: &Option<Vec<u32>>, a: &mut [f64]) -> f64 {
    let mut total = prop.all(x, a);
    if let Some(cap) = cap {
        let comp = prop.compiled();
        for (i, ai) in a.iter_mut().enumerate() {
            if *ai > 0.0 {
                let blocked = comp.deltas[i]
                    .iter()
                    .any(|&(j, d)| d > 0 && x[j] as i64 + d > cap[j] as i64);
                if blocked {
                    total -= *ai;
                    *ai = 0.0;
                }
            }
        }
        if total < 0.0 {
            total = a.iter().sum();
        }
    }
    total
}

#[inline]
pub(crate) fn choose(a: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &ai) in a.iter().enumerate() {
        if ai > 0.0 {
            acc += ai;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    last
}

/// Direct-method simulation from `x` in place. `on_jump(t, reaction, x)` is
/// called after every jump.
pub(crate) fn run<P: Propensity, R: Rng, F: FnMut(f64, usize, &[u32])>(
    prop: &P,
    x: &mut [u32],
    rng: &mut R,
    opts: &SsaOptions,
    mut on_jump: F,
) -> RunEnd {
    let comp = prop.compiled();
    let mut a = vec![0.0; comp.r()];
    let mut t = 0.0;
    let mut jumps = 0u64;
    let mut absorbed_at = None;
    loop {
        if absorbed_at.is_none() && opts.absorbing.contains(comp, x) {
            absorbed_at = Some(t);
            if opts.stop_on_absorb {
                return RunEnd {
                    absorbed_at,
                    end_time: t,
                    budget_exhausted: false,
                };
            }
        }
        let total = rates_with_cap(prop, x, &opts.cap, &mut a);
        if total <= 0.0 {
            return RunEnd {
                absorbed_at: absorbed_at.or(Some(t)),
                end_time: t,
                budget_exhausted: false,
            };
        }
        if jumps >= opts.budget {
            return RunEnd {
                absorbed_at,
                end_time: t,
                budget_exhausted: true,
            };
        }
        let dt = exp1(rng) / total;
        if t + dt > opts.t_max {
            return RunEnd {
                absorbed_at,
                end_time: opts.t_max,
                budget_exhausted: false,
            };
        }
        t += dt;
        let i = choose(&a, total, rng.random());
        comp.apply(x, i);
        jumps += 1;
        on_jump(t, i, x);
    }
}

/// One exact sample path by Gillespie's direct method.
pub fn ssa_trajectory<P: Propensity>(prop: &P, x0: &[u32], opts: &SsaOptions, seed: u64, stream: u64) -> Trajectory {
    let mut rng = path_rng(seed, stream);
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut reactions = Vec::new();
    let end = run(prop, &mut x, &mut rng, opts, |t, i, x| {
        times.push(t);
        states.push(x.to_vec());
        reactions.push(i);
    });
    Trajectory {
        times,
        states,
        reactions,
        seed,
        stream,
        absorbed_at: end.absorbed_at,
        end_time: end.end_time,
        budget_exhausted: end.budget_exhausted,
    }
}
