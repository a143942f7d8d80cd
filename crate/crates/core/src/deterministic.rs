//! Deterministic mass-action kinetics: right-hand side, Jacobian, equilibria
//! within a compatibility class and an empirical ACR probe.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg;
use crate::model::ReactionNetwork;
use crate::structure::conservation_certificate;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const ACR_REL_SPREAD: f64 = 1e-6;
const EXTRA_STARTS: usize = 32;
const MAX_NEWTON: usize = 200;

/// A network together with deterministic rate constants.
#[derive(Debug, Clone)]
pub struct MassActionSystem<'a> {
    pub net: &'a ReactionNetwork,
    pub kappa: Vec<f64>,
    sources: Vec<Vec<(usize, i32)>>,
    deltas: Vec<Vec<(usize, f64)>>,
}

impl<'a> MassActionSystem<'a> {
    pub fn new(net: &'a ReactionNetwork, kappa: Vec<f64>) -> Self {
        assert_eq!(kappa.len(), net.r());
        assert!(kappa.iter().all(|&k| k > 0.0), "rate constants must be positive");
        let sources = (0..net.r())
            .map(|i| {
                net.source(i)
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &y)| y > 0)
                    .map(|(j, &y)| (j, y as i32))
                    .collect()
            })
            .collect();
        let deltas = net
            .reaction_vectors()
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .enumerate()
                    .filter(|(_, d)| *d != 0)
                    .map(|(j, d)| (j, d as f64))
                    .collect()
            })
            .collect();
        MassActionSystem {
            net,
            kappa,
            sources,
            deltas,
        }
    }

    /// Uses the rate constants stored in the network.
    pub fn from_network(net: &'a ReactionNetwork) -> Self {
        Self::new(net, net.rates())
    }

    pub fn m(&self) -> usize {
        self.net.m()
    }

    fn flux(&self, i: usize, c: &[f64]) -> f64 {
        self.sources[i]
            .iter()
            .fold(self.kappa[i], |acc, &(j, y)| acc * c[j].powi(y))
    }

    pub fn rhs(&self, c: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.m()];
        for i in 0..self.net.r() {
            let v = self.flux(i, c);
            for &(j, d) in &self.deltas[i] {
                f[j] += d * v;
            }
        }
        f
    }

    /// Analytic Jacobian `∂f_j / ∂c_l`.
    pub fn jacobian(&self, c: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let mut jac = DMatrix::zeros(m, m);
        for i in 0..self.net.r() {
            for (k, &(l, yl)) in self.sources[i].iter().enumerate() {
                let mut g = self.kappa[i] * yl as f64 * c[l].powi(yl - 1);
                for (k2, &(j, y)) in self.sources[i].iter().enumerate() {
                    if k2 != k {
                        g *= c[j].powi(y);
                    }
                }
                if g != 0.0 {
                    for &(j, d) in &self.deltas[i] {
                        jac[(j, l)] += d * g;
                    }
                }
            }
        }
        jac
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Equilibrium {
    pub concentrations: Vec<f64>,
    pub residual: f64,
    pub positive: bool,
    /// Conservation vectors `W` and totals `W c0` fixing the compatibility class.
    pub conservation: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
    /// Largest real part of the Jacobian spectrum restricted to the
    /// stoichiometric subspace.
    pub max_real_eigenvalue: Option<f64>,
    pub start: usize,
}

struct ClassData {
    w: DMatrix<f64>,
    q: DMatrix<f64>,
    totals: DVector<f64>,
}

fn class_data(sys: &MassActionSystem, c0: &[f64]) -> ClassData {
    let m = sys.m();
    let basis = conservation_certificate(sys.net).basis_f64();
    let mut w = DMatrix::zeros(basis.len(), m);
    for (r, v) in basis.iter().enumerate() {
        for j in 0..m {
            w[(r, j)] = v[j];
        }
    }
    let rv = sys.net.reaction_vectors();
    let mut n = DMatrix::zeros(m, rv.len());
    for (i, v) in rv.iter().enumerate() {
        for j in 0..m {
            n[(j, i)] = v[j] as f64;
        }
    }
    let q = linalg::column_space(&n, 1e-12);
    let totals = &w * DVector::from_column_slice(c0);
    ClassData { w, q, totals }
}

fn residuals(sys: &MassActionSystem, cd: &ClassData, c: &[f64]) -> (DVector<f64>, f64, f64) {
    let f = DVector::from_vec(sys.rhs(c));
    let cons = &cd.w * DVector::from_column_slice(c) - &cd.totals;
    let mut out = DVector::zeros(cd.q.ncols() + cd.w.nrows());
    out.rows_mut(0, cd.q.ncols()).copy_from(&(cd.q.transpose() * &f));
    out.rows_mut(cd.q.ncols(), cd.w.nrows()).copy_from(&cons);
    (out, f.amax(), cons.amax())
}

fn solve(jac: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(x) = jac.clone().lu().solve(rhs) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    jac.svd(true, true).solve(rhs, 1e-14).ok()
}

/// Damped Newton in log coordinates (`log_mode`) or plain coordinates with
/// clamping at zero.
fn newton(sys: &MassActionSystem, cd: &ClassData, start: &[f64], log_mode: bool) -> Option<Vec<f64>> {
    let m = sys.m();
    let tscale = cd.totals.amax().max(1.0);
    let mut c = start.to_vec();
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let (fv, fmax, cons) = residuals(sys, cd, &c);
        if fmax <= RESIDUAL_TOL && cons <= RESIDUAL_TOL * tscale && last_step <= 1e-6 {
            return Some(c);
        }
        let jf = sys.jacobian(&c);
        let mut jac = DMatrix::zeros(m, m);
        let top = cd.q.transpose() * &jf;
        jac.rows_mut(0, cd.q.ncols()).copy_from(&top);
        jac.rows_mut(cd.q.ncols(), cd.w.nrows()).copy_from(&cd.w);
        if log_mode {
            for l in 0..m {
                for r in 0..m {
                    jac[(r, l)] *= c[l];
                }
            }
        }
        let step = solve(jac, &(-&fv))?;
        let f0 = fv.norm();
        let mut alpha = 1.0;
        let scale = if log_mode { (2.0 / step.amax()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let a = alpha * scale;
            let trial: Vec<f64> = if log_mode {
                (0..m).map(|j| c[j] * (a * step[j]).exp()).collect()
            } else {
                (0..m).map(|j| (c[j] + a * step[j]).max(0.0)).collect()
            };
            let ft = residuals(sys, cd, &trial).0.norm();
            if ft.is_finite() && (ft < (1.0 - 1e-4 * a) * f0 || f0 == 0.0) {
                accepted = Some((trial, a));
                break;
            }
            alpha *= 0.5;
        }
        let (trial, a) = accepted?;
        last_step = if log_mode {
            a * step.amax()
        } else {
            (a * step.amax()) / trial.iter().cloned().fold(1e-300, f64::max)
        };
        c = trial;
    }
    None
}

fn max_real_restricted(sys: &MassActionSystem, q: &DMatrix<f64>, c: &[f64]) -> Option<f64> {
    if q.ncols() == 0 {
        return None;
    }
    let r = q.transpose() * sys.jacobian(c) * q;
    let ev = r.complex_eigenvalues();
    ev.iter().map(|z| z.re).reduce(f64::max)
}

/// Start points used by [`find_equilibrium`]: `c0` and log-uniform
/// perturbations `c0 · exp(U[-2, 2])`.
pub fn start_points(c0: &[f64], extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let floor = c0.iter().cloned().fold(0.0, f64::max).max(1.0) * 1e-3;
    let base: Vec<f64> = c0.iter().map(|&x| if x > 0.0 { x } else { floor }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![base.clone()];
    for _ in 0..extra {
        out.push(
            base.iter()
                .map(|&x| x * rng.random_range(-2.0f64..=2.0).exp())
                .collect(),
        );
    }
    out
}

/// Snapshots of an RK4 run of the ODE from `c0`. The flow keeps the class
/// fixed and leaves the boundary, which Newton alone often cannot.
fn relaxed_starts(sys: &MassActionSystem, c0: &[f64]) -> Vec<Vec<f64>> {
    const STEPS: usize = 8192;
    let j = sys.jacobian(c0);
    let stiff = (0..j.nrows())
        .map(|r| j.row(r).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let scale = c0.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let stiff = stiff.max(linalg::max_abs(&sys.rhs(c0)) / scale).max(1e-12);
    let dt = 0.2 / stiff;
    let axpy = |c: &[f64], k: &[f64], h: f64| -> Vec<f64> { c.iter().zip(k).map(|(x, d)| x + h * d).collect() };
    let mut c = c0.to_vec();
    let mut out = Vec::new();
    for step in 1..=STEPS {
        let k1 = sys.rhs(&c);
        let k2 = sys.rhs(&axpy(&c, &k1, dt / 2.0));
        let k3 = sys.rhs(&axpy(&c, &k2, dt / 2.0));
        let k4 = sys.rhs(&axpy(&c, &k3, dt));
        for i in 0..c.len() {
            c[i] = (c[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).max(0.0);
        }
        if step.is_power_of_two() && step >= 512 || step == STEPS {
            out.push(c.clone());
        }
    }
    out
}

/// Searches for an equilibrium in the compatibility class of `c0`.
pub fn find_equilibrium(sys: &MassActionSystem, c0: &[f64], positive_required: bool) -> Option<Equilibrium> {
    assert_eq!(c0.len(), sys.m());
    let cd = class_data(sys, c0);
    let mut starts = start_points(c0, EXTRA_STARTS, 0x5eed);
    starts.extend(relaxed_starts(sys, c0));
    let attempt = |(k, s): (usize, &Vec<f64>)| -> Option<(usize, Vec<f64>)> {
        if let Some(c) = newton(sys, &cd, s, true) {
            return Some((k, c));
        }
        if !positive_required {
            let mut s0 = c0.to_vec();
            if k > 0 {
                s0 = s.clone();
            }
            return newton(sys, &cd, &s0, false).map(|c| (k, c));
        }
        None
    };
    let found: Vec<Option<(usize, Vec<f64>)>> = starts.par_iter().enumerate().map(attempt).collect();
    // Log-mode Newton can also settle on a point that is positive only in
    // floating point; skip those when a positive equilibrium is wanted.
    let (start, c) = found
        .into_iter()
        .flatten()
        .map(|(k, c)| {
            let scale = c.iter().cloned().fold(0.0, f64::max).max(1e-300);
            (
                k,
                c.into_iter()
                    .map(|x| if x <= 1e-14 * scale { 0.0 } else { x })
                    .collect::<Vec<f64>>(),
            )
        })
        .find(|(_, c)| !positive_required || c.iter().all(|&x| x > 0.0))?;
    let positive = c.iter().all(|&x| x > 0.0);
    let residual = linalg::max_abs(&sys.rhs(&c));
    let max_real_eigenvalue = max_real_restricted(sys, &cd.q, &c);
    Some(Equilibrium {
        concentrations: c,
        residual,
        positive,
        conservation: (0..cd.w.nrows())
            .map(|r| cd.w.row(r).iter().copied().collect())
            .collect(),
        totals: cd.totals.iter().copied().collect(),
        max_real_eigenvalue,
        start,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeciesSpread {
    pub species: String,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub acr_candidate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcrProbe {
    pub samples: usize,
    pub equilibria_found: usize,
    pub sufficient: bool,
    pub species: Vec<SpeciesSpread>,
    #[serde(skip)]
    pub equilibria: Vec<Equilibrium>,
}

impl AcrProbe {
    pub fn acr_species(&self) -> Vec<String> {
        if !self.sufficient {
            return Vec::new();
        }
        self.species
            .iter()
            .filter(|s| s.acr_candidate)
            .map(|s| s.species.clone())
            .collect()
    }
}

/// Positive equilibria at each sample class and the per-species spread.
pub fn acr_probe(sys: &MassActionSystem, samples: &[Vec<f64>]) -> AcrProbe {
    let equilibria: Vec<Equilibrium> = samples
        .iter()
        .filter_map(|c0| find_equilibrium(sys, c0, true))
        .collect();
    let m = sys.m();
    let species = (0..m)
        .map(|j| {
            let vals: Vec<f64> = equilibria.iter().map(|e| e.concentrations[j]).collect();
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let spread = if vals.is_empty() { f64::NAN } else { max - min };
            SpeciesSpread {
                species: sys.net.species[j].name.clone(),
                min,
                max,
                spread,
                acr_candidate: vals.len() >= 2 && spread <= ACR_REL_SPREAD * max.abs(),
            }
        })
        .collect();
    AcrProbe {
        samples: samples.len(),
        equilibria_found: equilibria.len(),
        sufficient: equilibria.len() >= 2,
        species,
        equilibria,
    }
}

/// Class representatives `s · 1` over a geometric ladder plus seeded
/// log-uniform points in `[0.1, 100]^m`.
pub fn default_class_samples(m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = [1.0, 3.0, 10.0, 30.0, 100.0].iter().map(|&s| vec![s; m]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..6 {
        out.push((0..m).map(|_| 10f64.powf(rng.random_range(-1.0f64..=2.0))).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_network;

    fn sis(beta: f64) -> ReactionNetwork {
        parse_network(&format!("A + B -> 2B ; 1\nB -> A ; {}", beta)).unwrap()
    }

    #[test]
    fn sis_rhs_vanishes_at_equilibrium() {
        let net = sis(25.0);
        let sys = MassActionSystem::from_network(&net);
        assert_eq!(sys.rhs(&[25.0, 15.0]), vec![0.0, 0.0]);
        assert_eq!(sys.rhs(&[40.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn sis_equilibrium() {
        let net = sis(0.5);
        let sys = MassActionSystem::from_network(&net);
        let e = find_equilibrium(&sys, &[1.0, 1.0], true).unwrap();
        assert!((e.concentrations[0] - 0.5).abs() < 1e-10);
        assert!((e.concentrations[1] - 1.5).abs() < 1e-10);
        assert!(e.max_real_eigenvalue.unwrap() < 0.0);
    }

    #[test]
    fn sis_below_threshold_has_no_positive_equilibrium() {
        let net = sis(25.0);
        let sys = MassActionSystem::from_network(&net);
        assert!(find_equilibrium(&sys, &[1.0, 1.0], true).is_none());
        let e = find_equilibrium(&sys, &[1.0, 1.0], false).unwrap();
        assert!(!e.positive);
        assert!((e.concentrations[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn probe_sis() {
        let net = sis(0.5);
        let sys = MassActionSystem::from_network(&net);
        let samples: Vec<Vec<f64>> = [1.0, 2.0, 5.0].iter().map(|&m| vec![0.0, m]).collect();
        let p = acr_probe(&sys, &samples);
        assert!(p.sufficient);
        assert_eq!(p.acr_species(), vec!["A"]);
        assert!((p.species[0].max - 0.5).abs() < 1e-10);
    }

    #[test]
    fn unstable_acr_equilibrium_is_reported() {
        let net = parse_network("A + B -> 2B ; 1\n2A + B -> 3A ; 2").unwrap();
        let sys = MassActionSystem::from_network(&net);
        let e = find_equilibrium(&sys, &[1.0, 1.0], true).unwrap();
        assert!((e.concentrations[0] - 0.5).abs() < 1e-9);
        assert!(e.max_real_eigenvalue.unwrap() > 0.0);
    }

    #[test]
    fn jacobian_matches_differences() {
        let net = parse_network("2A + B -> C ; 1.5\nC -> A ; 0.3\n0 -> B ; 2\n3C -> 0 ; 0.1").unwrap();
        let sys = MassActionSystem::from_network(&net);
        let c = [0.7, 1.3, 0.4];
        let j = sys.jacobian(&c);
        for l in 0..3 {
            let h = 1e-6 * c[l];
            let mut cp = c;
            let mut cm = c;
            cp[l] += h;
            cm[l] -= h;
            let (fp, fm) = (sys.rhs(&cp), sys.rhs(&cm));
            for r in 0..3 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - j[(r, l)]).abs() <= 1e-6 * j[(r, l)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn boundary_start_still_finds_positive_equilibrium() {
        let net = parse_network(
            "XD <-> X ; 0.5, 0.5\nX <-> XT ; 0.5, 0.5\nXT -> X_p ; 0.1\nX_p + Y <-> X_pY ; 0.5, 0.5\n\
             X_pY -> X + Y_p ; 0.5\nXD + Y_p <-> XDY_p ; 0.5, 0.5\nXDY_p -> XD + Y ; 0.1",
        )
        .unwrap();
        let sys = MassActionSystem::from_network(&net);
        let e = find_equilibrium(&sys, &[0.0, 0.0, 0.04, 0.0, 0.0, 0.0, 1.4, 0.0], true).unwrap();
        assert!(e.positive);
        assert!((e.concentrations[6] - 1.0).abs() < 1e-9);
    }
}
