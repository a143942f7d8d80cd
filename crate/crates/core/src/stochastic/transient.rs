use super::{SparseGenerator, TransientBlock};

/// `p0 exp(tA)` by uniformization. `A` may be sub-stochastic (a transient
/// block), in which case the result loses the absorbed mass.
pub fn evolve(a: &SparseGenerator, p0: &[f64], t: f64) -> Vec<f64> {
    assert_eq!(p0.len(), a.n);
    let lam = a.max_exit_rate() * 1.02;
    if lam <= 0.0 || t <= 0.0 {
        return p0.to_vec();
    }
    let lt = lam * t;
    let k_max = (lt + 12.0 * lt.sqrt() + 30.0).ceil() as usize;
    let mut v = p0.to_vec();
    let mut w = vec![0.0; a.n];
    let mut out = vec![0.0; a.n];
    // ln of Poisson(k; lt), by recurrence
    let mut ln_pk = -lt;
    for k in 0..=k_max {
        if k > 0 {
            ln_pk += lt.ln() - (k as f64).ln();
            // v <- v (I + A / lam)
            a.left_mul(&v, &mut w);
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi += wi / lam;
            }
        }
        let pk = ln_pk.exp();
        if pk > 0.0 {
            for (o, vi) in out.iter_mut().zip(&v) {
                *o += pk * vi;
            }
        }
    }
    for o in &mut out {
        if *o < 0.0 {
            *o = 0.0;
        }
    }
    out
}

/// Law at `t` conditioned on survival in the transient block, along with
/// the survival probability.
pub fn evolve_conditioned(block: &TransientBlock, p0: &[f64], t: f64) -> (Vec<f64>, f64) {
    let mut p = evolve(&block.a, p0, t);
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        for x in &mut p {
            *x /= s;
        }
    }
    (p, s)
}
