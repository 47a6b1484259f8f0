//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Full symmetric eigendecomposition with eigenpairs sorted by decreasing
/// absolute eigenvalue. Ties in absolute value keep the algebraically larger
/// eigenvalue first. Eigenvector signs are canonicalized so the entry of
/// largest magnitude (lowest index on ties) is positive.
pub fn sym_eigen_desc_abs(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        vb.abs()
            .total_cmp(&va.abs())
            .then_with(|| vb.total_cmp(&va))
    });
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        canonicalize_sign(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Flips the vector so its largest-magnitude entry is positive.
pub fn canonicalize_sign(v: &mut DVector<f64>) {
    let mut arg = 0;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            arg = i;
        }
    }
    if v[arg] < 0.0 {
        v.neg_mut();
    }
}

/// Max over columns of `‖M·u_k − λ_k·u_k‖`.
pub fn eigen_residual(m: &DMatrix<f64>, u: &DMatrix<f64>, values: &DVector<f64>) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..u.ncols() {
        let col = u.column(k);
        let r = m * col - values[k] * col;
        worst = worst.max(r.norm());
    }
    worst
}

/// Random n×k matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let g = DMatrix::from_fn(n, k, |_, _| rng.next_gaussian());
    let qr = g.qr();
    let mut q = qr.q();
    // QR sign ambiguity: fix column signs by the R diagonal convention.
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}
