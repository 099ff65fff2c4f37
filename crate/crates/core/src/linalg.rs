//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value threshold used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vector {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vector::zeros(0);
    }
    SVD::new(m.clone(), false, false).singular_values
}

/// Largest singular value (0 for empty matrices).
pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Rows of `m` selected by `rows`, in the given order.
pub fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_entries(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn l1_norm(v: &Vector) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Indices `0..len` not contained in the sorted set `set`.
pub fn complement(set: &[usize], len: usize) -> Vec<usize> {
    let mut mask = vec![false; len];
    for &i in set {
        mask[i] = true;
    }
    (0..len).filter(|&i| !mask[i]).collect()
}

/// Orthonormal basis of the orthogonal complement of the columns of `u1`,
/// where `u1` (N x n) already has orthonormal columns. Returns N x (N - n).
pub fn orthogonal_complement(u1: &Matrix) -> Matrix {
    let rows = u1.nrows();
    let k = rows - u1.ncols();
    if k == 0 {
        return Matrix::zeros(rows, 0);
    }
    let projector = Matrix::identity(rows, rows) - u1 * u1.transpose();
    let eig = SymmetricEigen::new(projector);
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis = Matrix::zeros(rows, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(src));
    }
    // One pass of modified Gram-Schmidt against u1 and earlier columns.
    for col in 0..k {
        let mut v = basis.column(col).into_owned();
        for j in 0..u1.ncols() {
            let c = u1.column(j).dot(&v);
            v -= c * u1.column(j);
        }
        for j in 0..col {
            let c = basis.column(j).dot(&v);
            v -= c * basis.column(j);
        }
        let nrm = v.norm();
        basis.set_column(col, &(v / nrm));
    }
    basis
}

/// Flip `v` so that its largest-magnitude entry is positive (deterministic sign).
pub fn canonical_sign(v: &mut Vector) {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

pub fn ser_vector<S: serde::Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub fn ser_opt_vector<S: serde::Serializer>(v: &Option<Vector>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_seq(v.iter()),
        None => s.serialize_none(),
    }
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
