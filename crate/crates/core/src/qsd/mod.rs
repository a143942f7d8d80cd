//! Quasi-stationary distributions, absorption times and the Poisson limit of
//! the activation/deactivation chain.

mod exact;

pub use exact::{eigen_residual, mean_absorption_times, qsd_exact, MAX_BAND_ENTRIES};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::stochastic::{SparseGenerator, StateSpace, TransientBlock};

#[derive(Debug, Error, PartialEq)]
pub enum QsdError {
    #[error("transient block is reducible ({} communicating classes); the QSD is not unique", classes.len())]
    Reducible { classes: Vec<Vec<usize>> },
    #[error("no transient states")]
    Empty,
    #[error("no transient state can reach the absorbing set")]
    NoExit,
    #[error("no convergence after {iterations} iterations (last change {last_delta:e})")]
    NotConverged { iterations: usize, last_delta: f64 },
    #[error("eigen-residual {residual:e} above tolerance")]
    Residual { residual: f64 },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum QsdMethod {
    Eigen,
    Iterative,
    Yaglom,
}

#[derive(Debug, Clone, Serialize)]
pub struct QsdResult {
    /// Probability of each transient state, in transient-block order.
    pub distribution: Vec<f64>,
    /// Species counts of each transient state, when known.
    pub states: Vec<Vec<u32>>,
    pub theta: f64,
    pub method: QsdMethod,
    /// Per-species distributions indexed by count.
    pub marginals: Vec<Vec<f64>>,
    pub residual: f64,
    pub iterations: usize,
    pub note: String,
}

impl QsdResult {
    /// Fills `states` and `marginals` from the enumerated space.
    pub fn attach_states(&mut self, space: &StateSpace, block: &TransientBlock) {
        self.states = block.states.iter().map(|&k| space.state(k).to_vec()).collect();
        self.marginals = marginals(&self.states, &self.distribution, space.m);
    }

    pub fn mean(&self, species: usize) -> f64 {
        self.marginals[species]
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

fn marginals(states: &[Vec<u32>], p: &[f64], m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|j| {
            let top = states.iter().map(|x| x[j]).max().unwrap_or(0) as usize;
            let mut out = vec![0.0; top + 1];
            for (x, &w) in states.iter().zip(p) {
                out[x[j] as usize] += w;
            }
            out
        })
        .collect()
}

/// ½ Σ |p − q|, padding the shorter vector with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let g = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (g(p, i) - g(q, i)).abs()).sum::<f64>()
}

pub fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (-mean + k as f64 * mean.ln() - ln_gamma(k as f64 + 1.0)).exp()
}

/// TV distance from `p` (indexed by count) to Poisson(`mean`), counting the
/// Poisson mass beyond the support of `p`.
pub fn tv_to_poisson(p: &[f64], mean: f64) -> f64 {
    let mut inside = 0.0;
    let mut d = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        let q = poisson_pmf(mean, k as u64);
        inside += q;
        d += (pk - q).abs();
    }
    0.5 * (d + (1.0 - inside).max(0.0))
}

/// Birth–death chain on `{0, …, M}`, absorbing at 0 and reflecting at `M`.
#[derive(Debug, Clone, Serialize)]
pub struct BirthDeathChain {
    pub m: usize,
    pub birth: Vec<f64>,
    pub death: Vec<f64>,
}

impl BirthDeathChain {
    pub fn new(m: usize, birth: impl Fn(usize) -> f64, death: impl Fn(usize) -> f64) -> Result<Self, QsdError> {
        let birth: Vec<f64> = (0..=m).map(&birth).collect();
        let death: Vec<f64> = (0..=m).map(&death).collect();
        if m == 0 {
            return Err(QsdError::Invalid("M must be at least 1".into()));
        }
        if birth[0] != 0.0 || death[0] != 0.0 || birth[m] != 0.0 {
            return Err(QsdError::Invalid("need λ(0) = μ(0) = λ(M) = 0".into()));
        }
        if birth.iter().chain(&death).any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(QsdError::Invalid("rates must be finite and nonnegative".into()));
        }
        Ok(BirthDeathChain { m, birth, death })
    }

    /// `λ(i) = α i (M − i)`, `μ(i) = β i`, with `i` the count of `B`.
    pub fn sis(m: usize, alpha: f64, beta: f64) -> Self {
        let mf = m as f64;
        Self::new(m, |i| alpha * i as f64 * (mf - i as f64), |i| beta * i as f64).expect("valid SIS chain")
    }

    /// Transient block over `i = 1..=M` (local index `i − 1`).
    pub fn transient_block(&self) -> TransientBlock {
        let m = self.m;
        let mut rows = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        for i in 1..=m {
            let mut row = BTreeMap::new();
            if self.birth[i] > 0.0 {
                row.insert(i, self.birth[i]);
            }
            if i > 1 && self.death[i] > 0.0 {
                row.insert(i - 2, self.death[i]);
            }
            diag.push(-(self.birth[i] + self.death[i]));
            rows.push(row);
        }
        let mut exit = vec![0.0; m];
        exit[0] = self.death[1];
        TransientBlock {
            states: (1..=m).collect(),
            a: SparseGenerator::from_rows(rows, diag),
            exit,
        }
    }

    pub fn qsd(&self, tol: f64) -> Result<QsdResult, QsdError> {
        let block = self.transient_block();
        let mut r = qsd_exact(&block, tol)?;
        r.states = (1..=self.m as u32).map(|i| vec![i]).collect();
        r.marginals = marginals(&r.states, &r.distribution, 1);
        Ok(r)
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + compensated_sum(xs.iter().map(|x| (x - m).exp())).ln()
}

const OVERFLOW: f64 = 1e300;

/// Expected time to reach 0 from `i`, by the birth–death first-passage
/// formula evaluated in log space. Returns `+∞` when the value exceeds
/// 1e300 or absorption is impossible.
pub fn expected_absorption_time_bd(chain: &BirthDeathChain, i: usize) -> Result<f64, QsdError> {
    let m = chain.m;
    if i == 0 || i > m {
        return Err(QsdError::Invalid(format!("start state {} outside 1..={}", i, m)));
    }
    // D_k = E_k − E_{k−1} = (1/μ_k) Σ_{j≥k} Π_{l=k}^{j−1} λ_l / μ_{l+1}
    let mut terms = Vec::with_capacity(i);
    for k in 1..=i {
        if chain.death[k] <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let mut logs = vec![0.0];
        let mut acc = 0.0;
        for j in k + 1..=m {
            if chain.birth[j - 1] == 0.0 {
                break;
            }
            if chain.death[j] == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += chain.birth[j - 1].ln() - chain.death[j].ln();
            logs.push(acc);
        }
        terms.push(log_sum_exp(&logs) - chain.death[k].ln());
    }
    finite_or_inf(compensated_sum(terms.iter().map(|t| t.exp())), &terms)
}

fn finite_or_inf(v: f64, log_terms: &[f64]) -> Result<f64, QsdError> {
    if log_terms.iter().any(|&t| t > OVERFLOW.ln()) || !(v <= OVERFLOW) {
        Ok(f64::INFINITY)
    } else {
        Ok(v)
    }
}

/// Closed form for the SIS chain:
/// `Σ_{k=0}^{i−1} Σ_{j=k+1}^{M} (1/β)(α/β)^{j−k−1} (M−k−1)! / (j (M−j)!)`.
pub fn expected_absorption_time_sis(m: usize, alpha: f64, beta: f64, i: usize) -> Result<f64, QsdError> {
    if i == 0 || i > m {
        return Err(QsdError::Invalid(format!("start state {} outside 1..={}", i, m)));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(QsdError::Invalid("α and β must be positive".into()));
    }
    let r = (alpha / beta).ln();
    let lf = |n: usize| ln_gamma(n as f64 + 1.0);
    let mut logs = Vec::new();
    for k in 0..i {
        for j in k + 1..=m {
            logs.push(-beta.ln() + (j - k - 1) as f64 * r + lf(m - k - 1) - (j as f64).ln() - lf(m - j));
        }
    }
    let v = log_sum_exp(&logs).exp();
    finite_or_inf(v, &[log_sum_exp(&logs)])
}

/// QSD of the SIS chain as the fixed point of the flux recursion
/// `π(i) = π(1)·(1/i) Σ_{k≤i} (α/β)^{i−k} (M−k)!/(M−i)! · T_k`,
/// `T_k = Σ_{l≥k} π(l)`, normalized each sweep.
pub fn qsd_iterative_sis(m: usize, alpha: f64, beta: f64, iters: usize, tol: f64) -> Result<QsdResult, QsdError> {
    if m == 0 || !(alpha > 0.0 && beta > 0.0) {
        return Err(QsdError::Invalid("need M ≥ 1 and α, β > 0".into()));
    }
    let r = (alpha / beta).ln();
    let lf: Vec<f64> = (0..=m).map(|n| ln_gamma(n as f64 + 1.0)).collect();
    let mut pi = vec![1.0 / m as f64; m];
    let mut delta = f64::INFINITY;
    let mut lg = vec![0.0; m];
    for it in 1..=iters {
        // tails T_k for k = 1..=M
        let mut tail = vec![0.0; m + 1];
        for k in (1..=m).rev() {
            tail[k - 1] = tail[k] + pi[k - 1];
        }
        for i in 1..=m {
            let logs: Vec<f64> = (1..=i)
                .filter(|&k| tail[k - 1] > 0.0)
                .map(|k| (i - k) as f64 * r + lf[m - k] - lf[m - i] + tail[k - 1].ln())
                .collect();
            lg[i - 1] = log_sum_exp(&logs) - (i as f64).ln();
        }
        let norm = log_sum_exp(&lg);
        let next: Vec<f64> = lg.iter().map(|g| (g - norm).exp()).collect();
        delta = total_variation(&pi, &next);
        pi = next;
        if delta < tol {
            let chain = BirthDeathChain::sis(m, alpha, beta);
            let block = chain.transient_block();
            let (theta, residual) = eigen_residual(&block, &pi);
            let states: Vec<Vec<u32>> = (1..=m as u32).map(|i| vec![i]).collect();
            let marg = marginals(&states, &pi, 1);
            return Ok(QsdResult {
                distribution: pi,
                states,
                theta,
                method: QsdMethod::Iterative,
                marginals: marg,
                residual,
                iterations: it,
                note: String::new(),
            });
        }
    }
    Err(QsdError::NotConverged {
        iterations: iters,
        last_delta: delta,
    })
}

/// SIS QSD re-indexed by `X_A = M − X_B`, over `0..M`.
pub fn invert_sis(pi_b: &[f64]) -> Vec<f64> {
    let m = pi_b.len();
    (0..m).map(|i| pi_b[m - i - 1]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonRow {
    pub m: usize,
    pub tv: f64,
    pub theta: f64,
    pub mean_a: f64,
    pub qsd_a: Vec<f64>,
}

/// TV distance between the QSD of `X_A` and Poisson(β/α) for each `M`.
pub fn poisson_limit_check(alpha: f64, beta: f64, ms: &[usize]) -> Result<Vec<PoissonRow>, QsdError> {
    let mean = beta / alpha;
    ms.par_iter()
        .map(|&m| {
            if (m as f64) <= mean {
                return Err(QsdError::Invalid(format!("M = {} must exceed β/α = {}", m, mean)));
            }
            let r = BirthDeathChain::sis(m, alpha, beta).qsd(1e-9)?;
            let qa = invert_sis(&r.distribution);
            Ok(PoissonRow {
                m,
                tv: tv_to_poisson(&qa, mean),
                theta: r.theta,
                mean_a: qa.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
                qsd_a: qa,
            })
        })
        .collect()
}

/// Stationary law of `X_A` for `A + B → 0`, `B → A + 2B` with
/// `M = X_B − X_A`: `π(i) ∝ (β/α)^i / ((M + i) i!)`.
pub fn nonconservative_stationary_sis_like(alpha: f64, beta: f64, m: u32) -> Result<Vec<f64>, QsdError> {
    if m == 0 || !(alpha > 0.0) || !(beta >= 0.0) {
        return Err(QsdError::Invalid("need M ≥ 1, α > 0, β ≥ 0".into()));
    }
    let rho = beta / alpha;
    if rho == 0.0 {
        return Ok(vec![1.0]);
    }
    let mut logs = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for i in 0u32.. {
        let l = i as f64 * rho.ln() - ln_gamma(i as f64 + 1.0) - ((m + i) as f64).ln();
        logs.push(l);
        top = top.max(l);
        // past the mode, stop once terms are below 1e-20 of the largest
        if i as f64 > rho && l < top - 46.0 {
            break;
        }
    }
    let z = log_sum_exp(&logs);
    Ok(logs.iter().map(|l| (l - z).exp()).collect())
}
