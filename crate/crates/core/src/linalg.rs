//! Floating-point helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Orthonormal basis of the right null space of `a` (as columns), with the
/// singular-value threshold `thr`, plus all singular values in descending
/// order (padded with zeros up to the column count).
pub fn null_space(a: &DMatrix<f64>, thr: f64) -> (DMatrix<f64>, Vec<f64>) {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return (DMatrix::zeros(0, 0), Vec::new());
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let keep: Vec<usize> = idx.iter().copied().filter(|&i| svd.singular_values[i] <= thr).collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        for j in 0..cols {
            basis[(j, k)] = vt[(i, j)];
        }
    }
    (basis, sv)
}

/// Orthonormal basis of the column space of `a`, dropping singular values at
/// or below `rel * σ_max`.
pub fn column_space(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel * smax && smax > 0.0)
        .collect();
    let mut q = DMatrix::zeros(rows, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        q.set_column(k, &u.column(i));
    }
    q
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let (ns, sv) = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert_eq!(sv.len(), 3);
        assert!((&a * &ns).norm() < 1e-12);
        let g = ns.transpose() * &ns;
        assert!((g - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn column_space_rank() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
        assert_eq!(column_space(&a, 1e-12).ncols(), 1);
    }
}
