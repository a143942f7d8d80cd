use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg;
use crate::model::ReactionNetwork;

/// Singular-value cut used for subspaces of an orthonormal kernel basis.
const SUBSPACE_TOL: f64 = 1e-9;

/// Orthonormal basis of `ker(Y A_κ)` over the complexes.
#[derive(Debug, Clone, Serialize)]
pub struct KernelBasis {
    pub rate_constants: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub supports: Vec<Vec<usize>>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub tol: f64,
    pub warnings: Vec<String>,
}

/// The n×n kinetic matrix A_κ: column y carries the outflow of complex y.
pub fn kinetic_matrix(net: &ReactionNetwork, kappa: &[f64]) -> DMatrix<f64> {
    let n = net.n();
    let mut a = DMatrix::zeros(n, n);
    for (r, &k) in net.reactions.iter().zip(kappa) {
        a[(r.product, r.source)] += k;
        a[(r.source, r.source)] -= k;
    }
    a
}

/// The m×n matrix whose columns are the complexes.
pub fn complex_matrix(net: &ReactionNetwork) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(net.m(), net.n());
    for (j, c) in net.complexes.iter().enumerate() {
        for (i, &v) in c.coeffs.iter().enumerate() {
            y[(i, j)] = v as f64;
        }
    }
    y
}

pub fn kernel_basis(net: &ReactionNetwork, kappa: &[f64], tol: f64) -> KernelBasis {
    assert_eq!(kappa.len(), net.r(), "one rate constant per reaction");
    let ya = complex_matrix(net) * kinetic_matrix(net, kappa);
    let smax_raw = linalg::null_space(&ya, -1.0).1.first().copied().unwrap_or(0.0);
    let threshold = tol * smax_raw;
    let (basis, sv) = linalg::null_space(&ya, threshold);
    let mut warnings = Vec::new();
    if sv
        .iter()
        .any(|&s| s > threshold / 10.0 && s < threshold * 10.0 && s != 0.0)
    {
        warnings.push(format!(
            "singular value within a factor of 10 of the threshold {:e}; kernel dimension is ill-conditioned",
            threshold
        ));
    }
    let vectors: Vec<Vec<f64>> = (0..basis.ncols())
        .map(|k| basis.column(k).iter().copied().collect())
        .collect();
    let supports = vectors.iter().map(|v| support(v, tol)).collect();
    KernelBasis {
        rate_constants: kappa.to_vec(),
        vectors,
        supports,
        singular_values: sv,
        threshold,
        tol,
        warnings,
    }
}

fn support(v: &[f64], tol: f64) -> Vec<usize> {
    (0..v.len()).filter(|&j| v[j].abs() > tol).collect()
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    fn n(&self) -> usize {
        self.singular_values.len()
    }

    /// Basis as an n×d matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut k = DMatrix::zeros(n, self.dim());
        for (c, v) in self.vectors.iter().enumerate() {
            for j in 0..n {
                k[(j, c)] = v[j];
            }
        }
        k
    }

    /// Orthonormal basis of the kernel vectors that vanish on `coords`.
    pub fn vanishing_on(&self, coords: &[usize]) -> Vec<Vec<f64>> {
        let k = self.matrix();
        let d = self.dim();
        if d == 0 {
            return Vec::new();
        }
        let mut rows = DMatrix::zeros(coords.len(), d);
        for (r, &j) in coords.iter().enumerate() {
            rows.set_row(r, &k.row(j));
        }
        let (coef, _) = linalg::null_space(&rows, SUBSPACE_TOL);
        let z = &k * coef;
        (0..z.ncols()).map(|c| z.column(c).iter().copied().collect()).collect()
    }

    /// Kernel vectors supported inside `block`.
    pub fn supported_in(&self, block: &[usize]) -> Vec<Vec<f64>> {
        let outside: Vec<usize> = (0..self.n()).filter(|j| !block.contains(j)).collect();
        self.vanishing_on(&outside)
    }

    /// Support-aligned basis: for each block, the kernel vectors supported in
    /// it, with their supports at the kernel tolerance.
    pub fn aligned(&self, blocks: &[Vec<usize>]) -> Vec<(Vec<f64>, Vec<usize>)> {
        blocks
            .iter()
            .flat_map(|b| self.supported_in(b))
            .map(|v| {
                let s = support(&v, self.tol);
                (v, s)
            })
            .collect()
    }

    /// Kernel vectors projected onto `coords`, rotated so that for each
    /// `pivot` the returned vectors vanish on the other pivots. Vectors are in
    /// `coords` order.
    pub fn projected_aligned(&self, coords: &[usize], pivots: &[usize]) -> Vec<(usize, Vec<f64>)> {
        let p = self.projection(coords);
        if p.is_empty() {
            return Vec::new();
        }
        let mut pm = DMatrix::zeros(coords.len(), p.len());
        for (c, v) in p.iter().enumerate() {
            for r in 0..coords.len() {
                pm[(r, c)] = v[r];
            }
        }
        let mut out = Vec::new();
        for &piv in pivots {
            let others: Vec<usize> = pivots
                .iter()
                .filter(|&&q| q != piv)
                .filter_map(|q| coords.iter().position(|c| c == q))
                .collect();
            let mut rows = DMatrix::zeros(others.len(), p.len());
            for (r, &k) in others.iter().enumerate() {
                rows.set_row(r, &pm.row(k));
            }
            let (coef, _) = linalg::null_space(&rows, SUBSPACE_TOL);
            let z = &pm * coef;
            for c in 0..z.ncols() {
                out.push((piv, z.column(c).iter().copied().collect()));
            }
        }
        out
    }

    /// Orthonormal basis of the projection of the kernel onto `coords`,
    /// returned in those coordinates.
    pub fn projection(&self, coords: &[usize]) -> Vec<Vec<f64>> {
        let k = self.matrix();
        let mut rows = DMatrix::zeros(coords.len(), self.dim());
        for (r, &j) in coords.iter().enumerate() {
            rows.set_row(r, &k.row(j));
        }
        let q = linalg::column_space(&rows, SUBSPACE_TOL);
        (0..q.ncols()).map(|c| q.column(c).iter().copied().collect()).collect()
    }
}
