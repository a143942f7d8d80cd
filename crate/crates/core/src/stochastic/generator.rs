use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{Propensity, StateSpace};

/// Generator in row-compressed form with the diagonal stored apart.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub diag: Vec<f64>,
}

impl SparseGenerator {
    /// Builds from per-row off-diagonal maps; the diagonal is taken from
    /// `diag`.
    pub fn from_rows(rows: Vec<BTreeMap<usize, f64>>, diag: Vec<f64>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseGenerator {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        }
    }

    pub fn row(&self, k: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[k], self.row_ptr[k + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Row vector times matrix: `p A`.
    pub fn left_mul(&self, p: &[f64], out: &mut [f64]) {
        for (o, (&d, &x)) in out.iter_mut().zip(self.diag.iter().zip(p)) {
            *o = d * x;
        }
        for k in 0..self.n {
            let (c, v) = self.row(k);
            let pk = p[k];
            if pk != 0.0 {
                for (&j, &a) in c.iter().zip(v) {
                    out[j] += pk * a;
                }
            }
        }
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |a, &d| a.max(-d))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for k in 0..self.n {
            a[(k, k)] = self.diag[k];
            let (c, v) = self.row(k);
            for (&j, &x) in c.iter().zip(v) {
                a[(k, j)] += x;
            }
        }
        a
    }

    /// Communicating classes of the off-diagonal pattern.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let edges: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|k| self.row(k).0.iter().map(move |&j| (k, j)))
            .collect();
        let g = crate::graph::Digraph::from_edges(self.n, &edges);
        let mut m = crate::graph::strongly_connected(&g).members();
        m.sort_by_key(|c| c[0]);
        m
    }
}

/// Full generator over an enumerated state space.
#[derive(Debug, Clone)]
pub struct Generator {
    pub full: SparseGenerator,
    pub absorbing: Vec<bool>,
}

/// `A_Q`: the generator restricted to transient states, with the total rate
/// from each transient state into the absorbing set.
#[derive(Debug, Clone)]
pub struct TransientBlock {
    pub states: Vec<usize>,
    pub a: SparseGenerator,
    pub exit: Vec<f64>,
}

pub fn build_generator<P: Propensity>(space: &StateSpace, prop: &P) -> Generator {
    let comp = prop.compiled();
    let n = space.len();
    let mut rows = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut x = vec![0u32; space.m];
    for k in 0..n {
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for i in 0..comp.r() {
            let xs = space.state(k);
            let a = prop.propensity(xs, i);
            if a <= 0.0 {
                continue;
            }
            x.copy_from_slice(xs);
            comp.apply(&mut x, i);
            if let Some(t) = space.index_of(&x) {
                *row.entry(t).or_insert(0.0) += a;
            }
        }
        let total: f64 = row.values().sum();
        diag.push(-total);
        rows.push(row);
    }
    Generator {
        full: SparseGenerator::from_rows(rows, diag),
        absorbing: space.absorbing.clone(),
    }
}

impl Generator {
    pub fn transient_block(&self) -> TransientBlock {
        let n = self.full.n;
        let states: Vec<usize> = (0..n).filter(|&k| !self.absorbing[k]).collect();
        let mut local = vec![usize::MAX; n];
        for (q, &k) in states.iter().enumerate() {
            local[k] = q;
        }
        let mut rows = Vec::with_capacity(states.len());
        let mut exit = Vec::with_capacity(states.len());
        let mut diag = Vec::with_capacity(states.len());
        for &k in &states {
            let (c, v) = self.full.row(k);
            let mut row = BTreeMap::new();
            let mut out = 0.0;
            for (&j, &a) in c.iter().zip(v) {
                if self.absorbing[j] {
                    out += a;
                } else {
                    row.insert(local[j], a);
                }
            }
            exit.push(out);
            diag.push(self.full.diag[k]);
            rows.push(row);
        }
        TransientBlock {
            states,
            a: SparseGenerator::from_rows(rows, diag),
            exit,
        }
    }
}
