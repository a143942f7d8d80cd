//! Left Perron vector of a transient block by inverse iteration on `-A_Q`.
//!
//! `-A_Q` is a nonsingular M-matrix. Its LU factors are built without
//! subtraction (Grassmann–Taksar–Heyman elimination): every pivot is the
//! row's exit rate plus its remaining off-diagonal mass, so the factors and
//! every solve stay entrywise nonnegative.

use super::{total_variation, QsdError, QsdMethod, QsdResult};
use crate::graph::reverse_cuthill_mckee;
use crate::stochastic::TransientBlock;

/// Largest band (entries) factored directly before falling back to power
/// iteration.
pub const MAX_BAND_ENTRIES: usize = 200_000_000;
const VECTOR_TOL: f64 = 1e-12;
const MAX_INVERSE_STEPS: usize = 1000;
const MAX_POWER_STEPS: usize = 5_000_000;

struct BandLu {
    n: usize,
    b: usize,
    /// Magnitudes of off-diagonal entries; after factoring, the strict lower
    /// part holds the multipliers and the strict upper part holds `-U`.
    data: Vec<f64>,
    pivot: Vec<f64>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (2 * self.b + 1) + (j + self.b - i)
    }

    fn factor(n: usize, b: usize, entries: &[(usize, usize, f64)], mut slack: Vec<f64>) -> Self {
        let mut lu = BandLu {
            n,
            b,
            data: vec![0.0; n * (2 * b + 1)],
            pivot: vec![0.0; n],
        };
        for &(i, j, v) in entries {
            let k = lu.at(i, j);
            lu.data[k] += v;
        }
        for k in 0..n {
            let hi = (k + b).min(n - 1);
            let mut p = slack[k];
            for j in k + 1..=hi {
                p += lu.data[lu.at(k, j)];
            }
            lu.pivot[k] = p;
            for i in k + 1..=hi {
                let ik = lu.at(i, k);
                let v = lu.data[ik];
                if v == 0.0 {
                    continue;
                }
                let f = v / p;
                lu.data[ik] = f;
                slack[i] += f * slack[k];
                for j in k + 1..=hi {
                    if j != i {
                        let kj = lu.data[lu.at(k, j)];
                        if kj != 0.0 {
                            let ij = lu.at(i, j);
                            lu.data[ij] += f * kj;
                        }
                    }
                }
            }
        }
        lu
    }

    /// Solves `B x = v` for the factored `B`.
    fn solve_right(&self, v: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let mut z = v.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in i.saturating_sub(b)..i {
                s += self.data[self.at(i, k)] * z[k];
            }
            z[i] = s;
        }
        for k in (0..n).rev() {
            let hi = (k + b).min(n - 1);
            let mut s = z[k];
            for j in k + 1..=hi {
                s += self.data[self.at(k, j)] * z[j];
            }
            z[k] = s / self.pivot[k];
        }
        z
    }

    /// Solves `x B = v` for the factored `B`.
    fn solve_left(&self, v: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let mut y = vec![0.0; n];
        for j in 0..n {
            let mut s = v[j];
            for k in j.saturating_sub(b)..j {
                s += y[k] * self.data[self.at(k, j)];
            }
            y[j] = s / self.pivot[j];
        }
        for k in (0..n).rev() {
            let hi = (k + b).min(n - 1);
            let mut s = y[k];
            for i in k + 1..=hi {
                s += y[i] * self.data[self.at(i, k)];
            }
            y[k] = s;
        }
        y
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

pub(crate) fn check_block(block: &TransientBlock) -> Result<(), QsdError> {
    let n = block.a.n;
    if n == 0 {
        return Err(QsdError::Empty);
    }
    let classes = block.a.classes();
    if classes.len() > 1 {
        return Err(QsdError::Reducible {
            classes: classes
                .into_iter()
                .map(|c| c.into_iter().map(|q| block.states[q]).collect())
                .collect(),
        });
    }
    if block.exit.iter().all(|&e| e <= 0.0) {
        return Err(QsdError::NoExit);
    }
    Ok(())
}

/// Eigenvalue and residual `‖πA_Q − θπ‖₁` of a probability vector.
pub fn eigen_residual(block: &TransientBlock, pi: &[f64]) -> (f64, f64) {
    let theta = -pi.iter().zip(&block.exit).map(|(p, e)| p * e).sum::<f64>();
    let mut w = vec![0.0; pi.len()];
    block.a.left_mul(pi, &mut w);
    let res = w.iter().zip(pi).map(|(w, p)| (w - theta * p).abs()).sum();
    (theta, res)
}

/// RCM-ordered band factorization of `-A_Q`, or `None` when the band is
/// too wide. Returns the factors and `order[k] = state placed at k`.
fn factor_block(block: &TransientBlock) -> Option<(BandLu, Vec<usize>)> {
    let n = block.a.n;
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in block.a.row(i).0 {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let order = reverse_cuthill_mckee(&adj);
    let mut pos = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut entries = Vec::with_capacity(block.a.cols.len());
    let mut b = 0;
    for i in 0..n {
        let (c, v) = block.a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            let (pi, pj) = (pos[i], pos[j]);
            b = b.max(pi.abs_diff(pj));
            entries.push((pi, pj, x));
        }
    }
    if n.saturating_mul(2 * b + 1) > MAX_BAND_ENTRIES {
        return None;
    }
    let slack: Vec<f64> = order.iter().map(|&v| block.exit[v]).collect();
    Some((BandLu::factor(n, b, &entries, slack), order))
}

/// Expected time to absorption from each transient state, solving
/// `A_Q τ = −1`.
pub fn mean_absorption_times(block: &TransientBlock) -> Result<Vec<f64>, QsdError> {
    check_block(block)?;
    let (lu, order) = factor_block(block).ok_or(QsdError::Invalid("band too wide for a direct solve".into()))?;
    let tau = lu.solve_right(&vec![1.0; block.a.n]);
    let mut out = vec![0.0; block.a.n];
    for (k, &v) in order.iter().enumerate() {
        out[v] = tau[k];
    }
    Ok(out)
}

/// Quasi-stationary distribution of an irreducible transient block.
/// `tol` bounds the residual relative to the largest exit rate.
pub fn qsd_exact(block: &TransientBlock, tol: f64) -> Result<QsdResult, QsdError> {
    check_block(block)?;
    let n = block.a.n;
    let (pi, iterations, method_note) = if let Some((lu, order)) = factor_block(block) {
        let mut x = vec![1.0 / n as f64; n];
        let mut steps = 0;
        loop {
            let mut y = lu.solve_left(&x);
            normalize(&mut y);
            steps += 1;
            let d = total_variation(&x, &y);
            x = y;
            if d < VECTOR_TOL {
                break;
            }
            if steps >= MAX_INVERSE_STEPS {
                return Err(QsdError::NotConverged {
                    iterations: steps,
                    last_delta: d,
                });
            }
        }
        let mut pi = vec![0.0; n];
        for (k, &v) in order.iter().enumerate() {
            pi[v] = x[k];
        }
        (pi, steps, "inverse iteration, banded GTH factorization")
    } else {
        let (pi, steps) = power_iteration(block)?;
        (pi, steps, "uniformized power iteration")
    };
    let (theta, residual) = eigen_residual(block, &pi);
    let scale = block.a.max_exit_rate().max(1.0);
    if !(residual <= tol * scale) {
        return Err(QsdError::Residual { residual });
    }
    Ok(QsdResult {
        distribution: pi,
        states: Vec::new(),
        theta,
        method: QsdMethod::Eigen,
        marginals: Vec::new(),
        residual,
        iterations,
        note: method_note.to_string(),
    })
}

/// `π ← π(I + A_Q/Λ)` renormalized; converges to the Perron vector since
/// the uniformized matrix is aperiodic.
pub(crate) fn power_iteration(block: &TransientBlock) -> Result<(Vec<f64>, usize), QsdError> {
    let n = block.a.n;
    let lam = 2.0 * block.a.max_exit_rate();
    let mut x = vec![1.0 / n as f64; n];
    let mut w = vec![0.0; n];
    let mut d = f64::INFINITY;
    for step in 1..=MAX_POWER_STEPS {
        block.a.left_mul(&x, &mut w);
        let mut y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b / lam).collect();
        normalize(&mut y);
        d = total_variation(&x, &y);
        x = y;
        if d < VECTOR_TOL {
            return Ok((x, step));
        }
    }
    Err(QsdError::NotConverged {
        iterations: MAX_POWER_STEPS,
        last_delta: d,
    })
}
