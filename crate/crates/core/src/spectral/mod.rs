//! Leading eigenpairs, spectral norms, and subspace alignment.
//!
//! Eigenpairs are always ordered by decreasing absolute eigenvalue, the
//! ordering the clustering pipeline relies on. Small matrices go through the
//! dense symmetric eigensolver; larger ones through Lanczos on the sparse
//! edge list. Consumers must treat eigenvector signs and within-eigenspace
//! rotations as arbitrary: compare subspaces via Procrustes alignment only.

pub mod lanczos;

use nalgebra::{DMatrix, DVector};

pub use lanczos::{LanczosOptions, SymOp};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::ModelSpec;
use crate::sampler::AdjacencyMatrix;

impl SymOp for AdjacencyMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
}

/// The operator A − P with P applied through its block factorization
/// diag(ψ)·Θ B Θᵀ·diag(ψ), in O(m + nK) per product.
pub struct DiffOp<'a> {
    adjacency: &'a AdjacencyMatrix,
    labels: &'a [usize],
    psi: Vec<f64>,
    b: DMatrix<f64>,
    k: usize,
}

impl<'a> DiffOp<'a> {
    pub fn new(adjacency: &'a AdjacencyMatrix, spec: &'a ModelSpec) -> Result<Self> {
        if adjacency.n() != spec.n() {
            return Err(Error::DimensionMismatch(format!(
                "adjacency has n = {}, model has n = {}",
                adjacency.n(),
                spec.n()
            )));
        }
        Ok(Self {
            adjacency,
            labels: spec.membership().labels(),
            psi: (0..spec.n()).map(|i| spec.psi(i)).collect(),
            b: spec.connectivity().matrix().clone(),
            k: spec.k(),
        })
    }
}

impl SymOp for DiffOp<'_> {
    fn dim(&self) -> usize {
        self.adjacency.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.adjacency.matvec(x, y);
        let mut t = vec![0.0f64; self.k];
        for (i, &xi) in x.iter().enumerate() {
            t[self.labels[i]] += self.psi[i] * xi;
        }
        let mut s = vec![0.0f64; self.k];
        for r in 0..self.k {
            let mut acc = 0.0;
            for c in 0..self.k {
                acc += self.b[(r, c)] * t[c];
            }
            s[r] = acc;
        }
        for i in 0..y.len() {
            y[i] -= self.psi[i] * s[self.labels[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense below `dense_cutoff`, Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct EigenConfig {
    pub method: EigenMethod,
    /// n at or below which `Auto` picks the dense path.
    pub dense_cutoff: usize,
    /// Residual tolerance as a multiple of the spectral norm estimate.
    pub residual_tol_factor: f64,
    /// Krylov dimension cap for the iterative path; 0 = auto.
    pub max_dim: usize,
    /// Start-vector seed for the iterative path.
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            method: EigenMethod::Auto,
            dense_cutoff: 800,
            residual_tol_factor: 1e-8,
            max_dim: 0,
            seed: 0x51_7c_c1_b7_27_22_0a_95,
        }
    }
}

/// Leading-K eigenpairs of an adjacency matrix.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    u: DMatrix<f64>,
    d: DVector<f64>,
    residual: f64,
    tie_at_k: bool,
    iterations: usize,
}

impl SpectralEmbedding {
    /// n×K eigenvector matrix with orthonormal columns.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Eigenvalues ordered by decreasing |value|.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.d
    }

    /// max_k ‖A·û_k − d_k·û_k‖ over the returned pairs.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Set when |D_K| and |D_{K+1}| are numerically tied: the returned
    /// subspace is then one deterministic choice among equally valid ones.
    pub fn tie_at_k(&self) -> bool {
        self.tie_at_k
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Debug dump: n rows × K comma-separated columns.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> crate::error::Result<()> {
        for i in 0..self.u.nrows() {
            let row: Vec<String> = (0..self.u.ncols())
                .map(|j| self.u[(i, j)].to_string())
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

const TIE_REL_TOL: f64 = 1e-9;

/// Leading-K eigenpairs of A ordered by absolute eigenvalue.
///
/// Signs and within-eigenspace rotations are deterministic for a given build
/// and seed but otherwise arbitrary; downstream comparisons must be
/// rotation-invariant.
pub fn leading_eigenvectors(
    a: &AdjacencyMatrix,
    k: usize,
    cfg: &EigenConfig,
) -> Result<SpectralEmbedding> {
    leading_eigenvectors_op(a, k, cfg)
}

/// Same as [`leading_eigenvectors`] for an arbitrary symmetric operator; the
/// dense path materializes the operator column by column.
pub fn leading_eigenvectors_op(
    op: &dyn SymOp,
    k: usize,
    cfg: &EigenConfig,
) -> Result<SpectralEmbedding> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "K = {k} out of range for n = {n}"
        )));
    }
    let dense = match cfg.method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => n <= cfg.dense_cutoff,
    };
    if dense {
        let m = materialize(op);
        let (vals, vecs) = linalg::sym_eigen_desc_abs(&m);
        let u = vecs.columns(0, k).clone_owned();
        let d = DVector::from_fn(k, |i, _| vals[i]);
        let residual = linalg::eigen_residual(&m, &u, &d);
        let scale = vals[0].abs().max(f64::MIN_POSITIVE);
        let tie_at_k = k < n && (vals[k - 1].abs() - vals[k].abs()).abs() <= TIE_REL_TOL * scale;
        Ok(SpectralEmbedding {
            u,
            d,
            residual,
            tie_at_k,
            iterations: 0,
        })
    } else {
        let out = lanczos::lanczos_top_abs(
            op,
            &LanczosOptions {
                want: k,
                residual_tol: cfg.residual_tol_factor,
                max_dim: cfg.max_dim,
                value_mode: false,
                seed: cfg.seed,
            },
        )?;
        let mut u = DMatrix::zeros(n, k);
        let mut d = DVector::zeros(k);
        let mut residual = 0.0f64;
        for (i, p) in out.pairs.iter().enumerate() {
            u.set_column(i, &p.vector);
            d[i] = p.value;
            residual = residual.max(p.residual);
        }
        let scale = d[0].abs().max(f64::MIN_POSITIVE);
        let tie_at_k = out
            .next_abs
            .map(|next| (d[k - 1].abs() - next).abs() <= TIE_REL_TOL * scale)
            .unwrap_or(false);
        Ok(SpectralEmbedding {
            u,
            d,
            residual,
            tie_at_k,
            iterations: out.iterations,
        })
    }
}

fn materialize(op: &dyn SymOp) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0f64; n];
    let mut col = vec![0.0f64; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Spectral norm (largest absolute eigenvalue) of a symmetric operator,
/// to relative accuracy `rtol` (1e-6 when 0 is passed).
pub fn spectral_norm(op: &dyn SymOp, rtol: f64, seed: u64) -> Result<f64> {
    let rtol = if rtol <= 0.0 { 1e-6 } else { rtol };
    let out = lanczos::lanczos_top_abs(
        op,
        &LanczosOptions {
            want: 1,
            residual_tol: rtol * 1e-2,
            max_dim: 0,
            value_mode: true,
            seed,
        },
    )?;
    Ok(out.pairs[0].value.abs())
}

/// Dense-oracle spectral norm.
pub fn spectral_norm_dense(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = linalg::sym_eigen_desc_abs(m);
    vals[0].abs()
}

/// Frobenius-optimal orthogonal alignment of Û onto the column frame of U.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    q: DMatrix<f64>,
    frobenius_distance: f64,
    rank_deficient: bool,
}

impl AlignmentResult {
    /// The K×K orthogonal matrix minimizing ‖Û − U·Q‖_F.
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn frobenius_distance(&self) -> f64 {
        self.frobenius_distance
    }

    /// Set when UᵀÛ is numerically rank deficient; Q is then one of several
    /// equally optimal completions.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }
}

/// Solves the orthogonal Procrustes problem min_Q ‖Û − U·Q‖_F via the polar
/// factor of UᵀÛ. Reflections are allowed: Q ranges over the full orthogonal
/// group, as in the subspace perturbation bound.
pub fn procrustes_align(u_hat: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<AlignmentResult> {
    if u_hat.shape() != u.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Procrustes inputs have shapes {:?} vs {:?}",
            u_hat.shape(),
            u.shape()
        )));
    }
    let k = u.ncols();
    check_orthonormal(u_hat, "first argument")?;
    check_orthonormal(u, "second argument")?;
    let m = u.transpose() * u_hat;
    let svd = m.svd(true, true);
    let w = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let q = w * vt;
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank_deficient = svd
        .singular_values
        .iter()
        .any(|&s| s <= 1e-12 * max_sv.max(f64::MIN_POSITIVE));
    let frobenius_distance = (u_hat - u * &q).norm();
    debug_assert!((q.transpose() * &q - DMatrix::identity(k, k)).norm() < 1e-10);
    Ok(AlignmentResult {
        q,
        frobenius_distance,
        rank_deficient,
    })
}

fn check_orthonormal(m: &DMatrix<f64>, which: &str) -> Result<()> {
    let k = m.ncols();
    let gram = m.transpose() * m;
    let err = (gram - DMatrix::identity(k, k)).norm();
    if err > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "{which} of Procrustes alignment is not orthonormal (‖UᵀU − I‖ = {err:.3e})"
        )));
    }
    Ok(())
}

/// The subspace perturbation inequality ‖Û − UQ‖_F ≤ (2√(2K)/γ_n)·‖A−P‖
/// evaluated with the Procrustes-optimal Q (which can only tighten the
/// left-hand side).
#[derive(Debug, Clone)]
pub struct GapBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub alignment: AlignmentResult,
}

pub const INEQUALITY_SLACK: f64 = 1e-9;

pub fn davis_kahan_gap_bound(
    u_hat: &DMatrix<f64>,
    u: &DMatrix<f64>,
    gamma_n: f64,
    norm_a_minus_p: f64,
) -> Result<GapBound> {
    if gamma_n <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gamma_n = {gamma_n} must be positive"
        )));
    }
    let alignment = procrustes_align(u_hat, u)?;
    let k = u.ncols() as f64;
    let lhs = alignment.frobenius_distance;
    let rhs = 2.0 * (2.0 * k).sqrt() / gamma_n * norm_a_minus_p;
    Ok(GapBound {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
        alignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset_planted_partition;
    use crate::rng::SplitMix64;
    use crate::sampler::{sample_adjacency, SeedSpec};

    #[test]
    fn two_node_path_graph_closed_form() {
        let a = AdjacencyMatrix::from_edges(2, vec![(0, 1)]).unwrap();
        let emb = leading_eigenvectors(&a, 2, &EigenConfig::default()).unwrap();
        assert!((emb.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!((emb.eigenvalues()[1] + 1.0).abs() < 1e-12);
        assert!(emb.tie_at_k() || emb.eigenvalues().len() == 2);
    }

    #[test]
    fn noiseless_population_matrix_recovers_exact_subspace() {
        let spec = preset_planted_partition(60, 3, 1.0, 0.5, &[20, 20, 20]).unwrap();
        let p = spec.probability_matrix().unwrap();
        let pop = spec.population_eigen().unwrap();
        let emb = leading_eigenvectors_op(&p, 3, &EigenConfig::default()).unwrap();
        let align = procrustes_align(emb.u(), pop.u()).unwrap();
        assert!(align.frobenius_distance < 1e-8, "{}", align.frobenius_distance);
        // with zero noise the gap bound degenerates to 0 <= 0 within slack
        let gb = davis_kahan_gap_bound(emb.u(), pop.u(), pop.gamma_n(), 0.0).unwrap();
        assert!(gb.holds);
        assert!(gb.lhs < 1e-8 && gb.rhs == 0.0);
    }

    #[test]
    fn noiseless_case_via_lanczos_handles_multiplicity() {
        // planted partition population: second eigenvalue has multiplicity K-1
        let spec = preset_planted_partition(120, 3, 1.0, 0.5, &[40, 40, 40]).unwrap();
        let p = spec.probability_matrix().unwrap();
        let pop = spec.population_eigen().unwrap();
        let cfg = EigenConfig {
            method: EigenMethod::Lanczos,
            ..Default::default()
        };
        let emb = leading_eigenvectors_op(&p, 3, &cfg).unwrap();
        let align = procrustes_align(emb.u(), pop.u()).unwrap();
        assert!(align.frobenius_distance < 1e-7, "{}", align.frobenius_distance);
    }

    #[test]
    fn rayleigh_ritz_identity_on_sampled_graph() {
        let spec = preset_planted_partition(50, 2, 0.6, 0.5, &[25, 25]).unwrap();
        let a = sample_adjacency(&spec, SeedSpec::new(3, 0));
        let emb = leading_eigenvectors(&a, 2, &EigenConfig::default()).unwrap();
        let dense = a.to_dense().unwrap();
        let quad = emb.u().transpose() * dense * emb.u();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { emb.eigenvalues()[i] } else { 0.0 };
                assert!((quad[(i, j)] - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn embedding_is_orthonormal() {
        let spec = preset_planted_partition(90, 3, 0.7, 0.4, &[30, 30, 30]).unwrap();
        for rep in 0..5 {
            let a = sample_adjacency(&spec, SeedSpec::new(8, rep));
            let emb = leading_eigenvectors(&a, 3, &EigenConfig::default()).unwrap();
            let gram = emb.u().transpose() * emb.u();
            assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-8);
        }
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let spec = preset_planted_partition(150, 2, 0.5, 0.6, &[75, 75]).unwrap();
        let a = sample_adjacency(&spec, SeedSpec::new(21, 0));
        let dense_cfg = EigenConfig {
            method: EigenMethod::Dense,
            ..Default::default()
        };
        let lanczos_cfg = EigenConfig {
            method: EigenMethod::Lanczos,
            ..Default::default()
        };
        let e1 = leading_eigenvectors(&a, 2, &dense_cfg).unwrap();
        let e2 = leading_eigenvectors(&a, 2, &lanczos_cfg).unwrap();
        for i in 0..2 {
            assert!((e1.eigenvalues()[i] - e2.eigenvalues()[i]).abs() < 1e-8);
        }
        let align = procrustes_align(e2.u(), e1.u()).unwrap();
        assert!(align.frobenius_distance < 1e-6);
    }

    #[test]
    fn spectral_norm_of_diagonal_and_zero() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -5.0, 1.0]));
        assert!((spectral_norm(&m, 1e-8, 1).unwrap() - 5.0).abs() < 1e-8);
        assert!((spectral_norm_dense(&m) - 5.0).abs() < 1e-14);
        let z = DMatrix::<f64>::zeros(6, 6);
        assert!(spectral_norm(&z, 1e-8, 1).unwrap() < 1e-12);
    }

    #[test]
    fn diff_op_norm_matches_dense_oracle() {
        let spec = preset_planted_partition(120, 2, 0.5, 0.5, &[60, 60]).unwrap();
        let p = spec.probability_matrix().unwrap();
        for rep in 0..3 {
            let a = sample_adjacency(&spec, SeedSpec::new(14, rep));
            let diff = DiffOp::new(&a, &spec).unwrap();
            let iterative = spectral_norm(&diff, 1e-6, 7).unwrap();
            let dense = spectral_norm_dense(&(a.to_dense().unwrap() - &p));
            assert!(
                (iterative - dense).abs() <= 1e-6 * dense.max(1.0),
                "rep {rep}: {iterative} vs {dense}"
            );
        }
    }

    #[test]
    fn procrustes_identity_and_rotation_recovery() {
        let u = linalg::random_orthonormal(40, 4, 5);
        let align = procrustes_align(&u, &u).unwrap();
        assert!(align.frobenius_distance < 1e-12);
        assert!((align.q() - DMatrix::identity(4, 4)).norm() < 1e-10);

        let q0 = linalg::random_orthonormal(4, 4, 9);
        let rotated = &u * &q0;
        let align = procrustes_align(&rotated, &u).unwrap();
        assert!(align.frobenius_distance < 1e-10);
        assert!((align.q() - &q0).norm() < 1e-8);
    }

    #[test]
    fn procrustes_beats_identity_alignment() {
        let mut rng = SplitMix64::new(33);
        let u = linalg::random_orthonormal(50, 3, 17);
        let noise = DMatrix::from_fn(50, 3, |_, _| 0.05 * rng.next_gaussian());
        let perturbed = &u + noise;
        // re-orthonormalize the perturbed frame
        let qr = perturbed.qr();
        let u_hat = qr.q();
        let align = procrustes_align(&u_hat, &u).unwrap();
        let identity_dist = (&u_hat - &u).norm();
        assert!(align.frobenius_distance <= identity_dist + 1e-12);
    }

    #[test]
    fn procrustes_is_frobenius_optimal_among_random_rotations() {
        let mut rng = SplitMix64::new(4);
        let u = linalg::random_orthonormal(30, 3, 2);
        let noise = DMatrix::from_fn(30, 3, |_, _| 0.1 * rng.next_gaussian());
        let u_hat = (&u + noise).qr().q();
        let align = procrustes_align(&u_hat, &u).unwrap();
        for trial in 0..100 {
            let q = linalg::random_orthonormal(3, 3, 1000 + trial);
            let dist = (&u_hat - &u * q).norm();
            assert!(align.frobenius_distance <= dist + 1e-10);
        }
    }

    #[test]
    fn davis_kahan_trivial_cases() {
        let u = linalg::random_orthonormal(25, 3, 8);
        let gb = davis_kahan_gap_bound(&u, &u, 1.0, 0.0).unwrap();
        assert!(gb.holds);
        assert!(gb.lhs < 1e-12);
        assert!(gb.rhs.abs() < 1e-15);
        assert!(davis_kahan_gap_bound(&u, &u, 0.0, 1.0).is_err());
    }

    #[test]
    fn normalized_vector_fact() {
        // ||v1/||v1|| - v2/||v2|||| <= 2||v1-v2||/max(||v1||,||v2||)
        let mut rng = SplitMix64::new(12);
        for _ in 0..100_000 {
            let dim = 2 + rng.next_below(4);
            let v1: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
            let v2: Vec<f64> = v1
                .iter()
                .map(|x| x + 0.5 * rng.next_gaussian())
                .collect();
            let n1 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n2 = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n1 < 1e-12 || n2 < 1e-12 {
                continue;
            }
            let normalized_dist = v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| (a / n1 - b / n2).powi(2))
                .sum::<f64>()
                .sqrt();
            let diff = v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(normalized_dist <= 2.0 * diff / n1.max(n2) + 1e-12);
        }
    }
}
