use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ssa::{path_rng, run, Absorbing, SsaOptions};
use super::{Compiled, Propensity, StochError};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    /// Paths that hit the horizon or jump budget before the event.
    pub incomplete: usize,
}

impl EnsembleStats {
    pub fn from_samples(xs: &[f64], incomplete: usize) -> Self {
        let n = xs.len();
        let mean = if n > 0 {
            xs.iter().sum::<f64>() / n as f64
        } else {
            f64::NAN
        };
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            f64::NAN
        };
        let std_dev = var.sqrt();
        EnsembleStats {
            n,
            mean,
            std_dev,
            std_err: std_dev / (n as f64).sqrt(),
            incomplete,
        }
    }
}

#[derive(Debug, Clone)]
pub enum InitialDistribution {
    Dirac(Vec<u32>),
    Weighted(Vec<(Vec<u32>, f64)>),
}

impl InitialDistribution {
    fn validate(&self, m: usize) -> Result<(), StochError> {
        let check = |x: &Vec<u32>| {
            if x.len() != m {
                Err(StochError::Dimension {
                    expected: m,
                    got: x.len(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            InitialDistribution::Dirac(x) => check(x),
            InitialDistribution::Weighted(w) => {
                let total: f64 = w.iter().map(|(_, p)| p.max(0.0)).sum();
                if w.is_empty() || !(total > 0.0) {
                    return Err(StochError::EmptyDistribution);
                }
                w.iter().try_for_each(|(x, _)| check(x))
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<u32> {
        match self {
            InitialDistribution::Dirac(x) => x.clone(),
            InitialDistribution::Weighted(w) => {
                let total: f64 = w.iter().map(|(_, p)| p.max(0.0)).sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (x, p) in w {
                    acc += p.max(0.0);
                    if u < acc {
                        return x.clone();
                    }
                }
                w.iter().rev().find(|(_, p)| *p > 0.0).unwrap().0.clone()
            }
        }
    }
}

impl From<Vec<u32>> for InitialDistribution {
    fn from(x: Vec<u32>) -> Self {
        InitialDistribution::Dirac(x)
    }
}

/// Empirical distribution over full states, with per-state weights.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Marginal {
    pub weights: BTreeMap<Vec<u32>, f64>,
    pub total: f64,
}

impl Marginal {
    fn add(&mut self, x: Vec<u32>, w: f64) {
        if w > 0.0 {
            *self.weights.entry(x).or_insert(0.0) += w;
            self.total += w;
        }
    }

    pub fn probability(&self, x: &[u32]) -> f64 {
        self.weights.get(x).map_or(0.0, |w| w / self.total)
    }

    /// Distribution of species `j`, indexed by count.
    pub fn species(&self, j: usize) -> Vec<f64> {
        let top = self.weights.keys().map(|x| x[j]).max().unwrap_or(0) as usize;
        let mut p = vec![0.0; top + 1];
        for (x, w) in &self.weights {
            p[x[j] as usize] += w / self.total;
        }
        p
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.weights.iter().map(|(x, w)| x[j] as f64 * w).sum::<f64>() / self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct YaglomEstimate {
    pub marginal: Marginal,
    pub t: f64,
    pub n: usize,
    pub survivors: usize,
    pub budget_exhausted: usize,
}

struct PathEnd {
    x: Vec<u32>,
    absorbed_at: Option<f64>,
    exhausted: bool,
}

fn ensemble<P: Propensity>(
    prop: &P,
    init: &InitialDistribution,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
) -> Result<Vec<PathEnd>, StochError> {
    init.validate(prop.compiled().m)?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k);
            let mut x = init.sample(&mut rng);
            let end = run(prop, &mut x, &mut rng, opts, |_, _, _| {});
            PathEnd {
                x,
                absorbed_at: end.absorbed_at,
                exhausted: end.budget_exhausted,
            }
        })
        .collect())
}

/// Absorption time over `n` independent paths. Paths that stop for another
/// reason are counted as incomplete and left out of the mean.
pub fn estimate_absorption_time<P: Propensity>(
    prop: &P,
    init: &InitialDistribution,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
) -> Result<EnsembleStats, StochError> {
    let opts = SsaOptions {
        stop_on_absorb: true,
        ..opts.clone()
    };
    let ends = ensemble(prop, init, n, seed, &opts)?;
    let taus: Vec<f64> = ends.iter().filter_map(|e| e.absorbed_at).collect();
    Ok(EnsembleStats::from_samples(&taus, n - taus.len()))
}

/// Distribution of `X(t)` over all paths, absorbed or not.
pub fn estimate_time_marginal<P: Propensity>(
    prop: &P,
    init: &InitialDistribution,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
) -> Result<Marginal, StochError> {
    let opts = SsaOptions {
        t_max: t,
        stop_on_absorb: false,
        ..opts.clone()
    };
    let mut m = Marginal::default();
    for e in ensemble(prop, init, n, seed, &opts)? {
        m.add(e.x, 1.0);
    }
    Ok(m)
}

/// Empirical law of `X(t)` given no absorption by `t`.
pub fn estimate_qsd_yaglom<P: Propensity>(
    prop: &P,
    init: &InitialDistribution,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
) -> Result<YaglomEstimate, StochError> {
    let opts = SsaOptions {
        t_max: t,
        stop_on_absorb: true,
        ..opts.clone()
    };
    let ends = ensemble(prop, init, n, seed, &opts)?;
    let mut m = Marginal::default();
    let mut survivors = 0;
    let mut exhausted = 0;
    for e in ends {
        if e.exhausted {
            exhausted += 1;
            continue;
        }
        if e.absorbed_at.is_none() {
            survivors += 1;
            m.add(e.x, 1.0);
        }
    }
    if survivors == 0 {
        return Err(StochError::AllAbsorbed);
    }
    Ok(YaglomEstimate {
        marginal: m,
        t,
        n,
        survivors,
        budget_exhausted: exhausted,
    })
}

/// Occupation-time distribution over `[t_burn, t_end]`, averaged over
/// `n` paths. Meant for chains with a stationary law, such as capped
/// non-conservative networks.
pub fn time_average_distribution<P: Propensity>(
    prop: &P,
    x0: &[u32],
    t_burn: f64,
    t_end: f64,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
) -> Result<Marginal, StochError> {
    let m = prop.compiled().m;
    if x0.len() != m {
        return Err(StochError::Dimension {
            expected: m,
            got: x0.len(),
        });
    }
    let opts = SsaOptions {
        t_max: t_end,
        stop_on_absorb: false,
        ..opts.clone()
    };
    let per_path: Vec<Vec<(Vec<u32>, f64)>> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k);
            let mut x = x0.to_vec();
            let mut occ: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            let mut prev_t = 0.0f64;
            let mut prev = x0.to_vec();
            let end = run(prop, &mut x, &mut rng, &opts, |t, _, x| {
                let dt = t - prev_t.max(t_burn);
                if dt > 0.0 {
                    *occ.entry(prev.clone()).or_insert(0.0) += dt;
                }
                prev_t = t;
                prev.copy_from_slice(x);
            });
            let stop = if end.budget_exhausted { end.end_time } else { t_end };
            let dt = stop - prev_t.max(t_burn);
            if dt > 0.0 {
                *occ.entry(prev).or_insert(0.0) += dt;
            }
            occ.into_iter().collect()
        })
        .collect();
    let mut out = Marginal::default();
    for path in per_path {
        for (x, w) in path {
            out.add(x, w);
        }
    }
    Ok(out)
}

/// Wraps a propensity so that reactions entering the absorbing set never
/// fire.
struct AvoidAbsorbing<'a, P> {
    inner: &'a P,
    absorbing: &'a Absorbing,
}

impl<P: Propensity> Propensity for AvoidAbsorbing<'_, P> {
    fn compiled(&self) -> &Compiled {
        self.inner.compiled()
    }

    fn propensity(&self, x: &[u32], i: usize) -> f64 {
        let v = self.inner.propensity(x, i);
        if v == 0.0 {
            return 0.0;
        }
        let comp = self.inner.compiled();
        let mut y = x.to_vec();
        comp.apply(&mut y, i);
        if self.absorbing.contains(comp, &y) {
            0.0
        } else {
            v
        }
    }
}

/// Approximate QSD: jumps into the absorbing set are suppressed and the
/// occupation law of the resulting chain over `[t_burn, t_end]` is returned.
/// No accuracy guarantee; close to the QSD only when absorption is rare.
pub fn estimate_qsd_time_average<P: Propensity>(
    prop: &P,
    x0: &[u32],
    t_burn: f64,
    t_end: f64,
    n: usize,
    seed: u64,
    opts: &SsaOptions,
) -> Result<Marginal, StochError> {
    if opts.absorbing.contains(prop.compiled(), x0) {
        return Err(StochError::AllAbsorbed);
    }
    let wrapped = AvoidAbsorbing {
        inner: prop,
        absorbing: &opts.absorbing,
    };
    let opts = SsaOptions {
        absorbing: Absorbing::ZeroPropensity,
        ..opts.clone()
    };
    time_average_distribution(&wrapped, x0, t_burn, t_end, n, seed, &opts)
}
