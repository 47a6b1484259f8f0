//! Block-model parameterizations and their exact population eigenstructure.
//!
//! A stochastic block model is a pair (membership, connectivity); the degree
//! corrected variant adds a positive per-node propensity vector. The expected
//! structure matrix `P` has rank at most K, and its eigenvectors are computed
//! here in closed form from a K×K core rather than from the n×n matrix, so
//! the "population" side of every experiment is exact up to K×K eigensolver
//! roundoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::SplitMix64;

/// Largest n for which `probability_matrix` will materialize a dense n×n.
pub const DENSE_P_LIMIT: usize = 4096;

const SYMMETRY_TOL: f64 = 1e-12;
const PROB_TOL: f64 = 1e-12;

/// Community assignment for n nodes into K communities.
///
/// Labels are stored 0-based and dense; every community must be nonempty.
/// The equivalent n×K binary matrix is only materialized on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    labels: Vec<usize>,
    k: usize,
    counts: Vec<usize>,
}

impl MembershipMatrix {
    /// Builds from 0-based labels. Every label must be `< k` and every
    /// community nonempty.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidModel("K must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidModel("membership must be nonempty".into()));
        }
        let mut counts = vec![0usize; k];
        for (i, &g) in labels.iter().enumerate() {
            if g >= k {
                return Err(Error::InvalidModel(format!(
                    "label {} at node {i} out of range for K = {k}",
                    g + 1
                )));
            }
            counts[g] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidModel(format!(
                "community {} is empty",
                empty + 1
            )));
        }
        Ok(Self { labels, k, counts })
    }

    /// Builds from 1-based labels in `{1..K}` (the serialized form).
    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        let zero_based = labels
            .iter()
            .map(|&g| {
                g.checked_sub(1).ok_or_else(|| {
                    Error::InvalidModel("labels are 1-based; found label 0".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero_based, k)
    }

    /// Contiguous blocks: the first `sizes[0]` nodes in community 1, etc.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidModel(
                "block sizes must be nonempty and positive".into(),
            ));
        }
        let mut labels = Vec::with_capacity(sizes.iter().sum());
        for (g, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat(g).take(s));
        }
        Self::new(labels, sizes.len())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn one_based_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|&g| g + 1).collect()
    }

    /// Community sizes n_k.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_min(&self) -> usize {
        *self.counts.iter().min().expect("nonempty")
    }

    pub fn n_max(&self) -> usize {
        *self.counts.iter().max().expect("nonempty")
    }

    /// Second largest community size (n_max itself when K = 1).
    pub fn n_second_max(&self) -> usize {
        let mut sorted = self.counts.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        if sorted.len() > 1 {
            sorted[1]
        } else {
            sorted[0]
        }
    }

    /// Node indices of community `g` (0-based community index).
    pub fn community_members(&self, g: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &gi)| (gi == g).then_some(i))
            .collect()
    }

    /// Dense n×K membership matrix; one 1 per row.
    pub fn dense_theta(&self) -> DMatrix<f64> {
        let mut theta = DMatrix::zeros(self.n(), self.k);
        for (i, &g) in self.labels.iter().enumerate() {
            theta[(i, g)] = 1.0;
        }
        theta
    }
}

/// Symmetric K×K matrix of within/between community edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    b: DMatrix<f64>,
}

impl ConnectivityMatrix {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() == 0 || b.nrows() != b.ncols() {
            return Err(Error::InvalidModel(
                "connectivity matrix must be square and nonempty".into(),
            ));
        }
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                let v = b[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidModel(format!(
                        "connectivity entry B[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
                if (v - b[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidModel(format!(
                        "connectivity matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { b })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidModel(
                "connectivity matrix rows must all have length K".into(),
            ));
        }
        Self::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn k(&self) -> usize {
        self.b.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        self.b[(k, l)]
    }

    /// α_n: the maximum entry.
    pub fn max_entry(&self) -> f64 {
        self.b.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    /// Smallest absolute eigenvalue; zero for a singular matrix.
    pub fn min_abs_eigenvalue(&self) -> f64 {
        let (vals, _) = linalg::sym_eigen_desc_abs(&self.b);
        vals[vals.len() - 1].abs()
    }
}

/// Positive per-node degree propensities for the degree-corrected model.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeParams {
    psi: Vec<f64>,
}

impl DegreeParams {
    /// Rejects nonpositive or non-finite entries; ν_k is undefined at ψ_i = 0.
    pub fn new(psi: Vec<f64>) -> Result<Self> {
        for (i, &p) in psi.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "degree parameter psi[{i}] = {p} must be a positive real"
                )));
            }
        }
        Ok(Self { psi })
    }

    pub fn values(&self) -> &[f64] {
        &self.psi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    PlantedPartition,
    PlantedClique,
}

/// Records how a spec was constructed, including the minimum absolute
/// eigenvalue λ of the base matrix B₀; the corollary-style bounds need it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetInfo {
    pub kind: PresetKind,
    /// min |eigenvalue| of B₀ (B = α_n·B₀).
    pub lambda_b0: f64,
    /// Sparsity scale α_n used to build B.
    pub alpha_n: f64,
}

/// Full parameterization of an SBM or DCBM.
///
/// Degree-corrected specs are canonicalized at construction so that
/// `max_{i in G_k} psi_i = 1` for every community, rescaling B to preserve
/// the edge probabilities exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    membership: MembershipMatrix,
    connectivity: ConnectivityMatrix,
    degrees: Option<DegreeParams>,
    preset: Option<PresetInfo>,
}

impl ModelSpec {
    /// Plain SBM: ψ ≡ 1.
    pub fn sbm(membership: MembershipMatrix, connectivity: ConnectivityMatrix) -> Result<Self> {
        if membership.k() != connectivity.k() {
            return Err(Error::DimensionMismatch(format!(
                "membership has K = {}, connectivity has K = {}",
                membership.k(),
                connectivity.k()
            )));
        }
        Ok(Self {
            membership,
            connectivity,
            degrees: None,
            preset: None,
        })
    }

    /// Degree-corrected model. ψ is rescaled per community to satisfy the
    /// identifiability convention max ψ = 1, with B rescaled to compensate,
    /// so the edge probability matrix is unchanged. Fails if any resulting
    /// edge probability exceeds 1.
    pub fn dcbm(
        membership: MembershipMatrix,
        connectivity: ConnectivityMatrix,
        degrees: DegreeParams,
    ) -> Result<Self> {
        if membership.k() != connectivity.k() {
            return Err(Error::DimensionMismatch(format!(
                "membership has K = {}, connectivity has K = {}",
                membership.k(),
                connectivity.k()
            )));
        }
        if degrees.values().len() != membership.n() {
            return Err(Error::DimensionMismatch(format!(
                "psi has length {}, membership has n = {}",
                degrees.values().len(),
                membership.n()
            )));
        }
        let k = membership.k();
        let mut scale = vec![0.0f64; k];
        for (i, &p) in degrees.values().iter().enumerate() {
            let g = membership.label(i);
            scale[g] = scale[g].max(p);
        }
        let needs_rescale = scale.iter().any(|&s| (s - 1.0).abs() > PROB_TOL);
        let (psi, b) = if needs_rescale {
            let psi: Vec<f64> = degrees
                .values()
                .iter()
                .enumerate()
                .map(|(i, &p)| p / scale[membership.label(i)])
                .collect();
            let raw = connectivity.matrix();
            let b = DMatrix::from_fn(k, k, |r, c| raw[(r, c)] * scale[r] * scale[c]);
            (psi, b)
        } else {
            (degrees.values().to_vec(), connectivity.matrix().clone())
        };
        for (i, j, &v) in b.iter().enumerate().map(|(idx, v)| (idx % k, idx / k, v)) {
            if v > 1.0 + PROB_TOL {
                return Err(Error::InvalidModel(format!(
                    "edge probability for communities ({}, {}) is {v} > 1 after \
                     identifiability rescaling",
                    i + 1,
                    j + 1
                )));
            }
        }
        let b = b.map(|v| v.min(1.0));
        Ok(Self {
            membership,
            connectivity: ConnectivityMatrix::new(b)?,
            degrees: Some(DegreeParams::new(psi)?),
            preset: None,
        })
    }

    fn with_preset(mut self, preset: PresetInfo) -> Self {
        self.preset = Some(preset);
        self
    }

    /// Attaches preset provenance (λ of B₀, α_n) to a spec assembled by
    /// hand, e.g. a degree-corrected variant of a preset connectivity.
    pub fn with_preset_info(self, preset: PresetInfo) -> Self {
        self.with_preset(preset)
    }

    pub fn membership(&self) -> &MembershipMatrix {
        &self.membership
    }

    pub fn connectivity(&self) -> &ConnectivityMatrix {
        &self.connectivity
    }

    pub fn degrees(&self) -> Option<&DegreeParams> {
        self.degrees.as_ref()
    }

    pub fn preset(&self) -> Option<&PresetInfo> {
        self.preset.as_ref()
    }

    pub fn is_degree_corrected(&self) -> bool {
        self.degrees.is_some()
    }

    pub fn n(&self) -> usize {
        self.membership.n()
    }

    pub fn k(&self) -> usize {
        self.membership.k()
    }

    /// ψ_i, defaulting to 1 for the plain SBM.
    pub fn psi(&self, node: usize) -> f64 {
        self.degrees.as_ref().map_or(1.0, |d| d.values()[node])
    }

    /// α_n = max_{k,l} B_{kl}.
    pub fn alpha_n(&self) -> f64 {
        self.connectivity.max_entry()
    }

    /// d = n·α_n, the sparsity/degree scale.
    pub fn degree_scale(&self) -> f64 {
        self.n() as f64 * self.alpha_n()
    }

    /// P_{ij} = ψ_i ψ_j B_{g_i g_j}; includes the diagonal (this is P, not
    /// the expected adjacency P − diag(P)).
    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        let b = self
            .connectivity
            .entry(self.membership.label(i), self.membership.label(j));
        self.psi(i) * self.psi(j) * b
    }

    /// Dense population matrix P = diag(ψ)·Θ B Θᵀ·diag(ψ).
    pub fn probability_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        if n > DENSE_P_LIMIT {
            return Err(Error::InstanceTooLarge(format!(
                "dense P requested for n = {n} > {DENSE_P_LIMIT}"
            )));
        }
        let p = DMatrix::from_fn(n, n, |i, j| self.edge_probability(i, j));
        if let Some(bad) = p.iter().position(|&v| v > 1.0 + PROB_TOL) {
            let (i, j) = (bad % n, bad / n);
            return Err(Error::InvalidModel(format!(
                "P[{i}][{j}] = {} exceeds 1",
                p[(i, j)]
            )));
        }
        Ok(p)
    }

    /// Per-community norms ‖φ_k‖ of the degree vector restricted to G_k.
    /// For the plain SBM this is √n_k.
    pub fn phi_norms(&self) -> Vec<f64> {
        let k = self.k();
        let mut sq = vec![0.0f64; k];
        for i in 0..self.n() {
            let p = self.psi(i);
            sq[self.membership.label(i)] += p * p;
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Exact eigenstructure of P via the K×K core factorization.
    pub fn population_eigen(&self) -> Result<PopulationEigen> {
        let k = self.k();
        let weights: Vec<f64> = if self.is_degree_corrected() {
            self.phi_norms()
        } else {
            self.membership
                .counts()
                .iter()
                .map(|&c| (c as f64).sqrt())
                .collect()
        };
        // Core = W B W with W = diag(weights); shares P's nonzero spectrum.
        let b = self.connectivity.matrix();
        let core = DMatrix::from_fn(k, k, |r, c| weights[r] * b[(r, c)] * weights[c]);
        let (values, vectors) = linalg::sym_eigen_desc_abs(&core);
        let scale = values[0].abs();
        if scale == 0.0 {
            return Err(Error::InvalidModel(
                "connectivity matrix is identically zero".into(),
            ));
        }
        let rank = values.iter().filter(|v| v.abs() > 1e-12 * scale).count();
        let gamma_n = values
            .iter()
            .take(rank)
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min);

        let n = self.n();
        let (u, x_or_h) = if self.is_degree_corrected() {
            // U_{i*} = ψ̃_i H_{g_i*} with H the eigenvectors of ΨBΨ.
            let h = vectors.clone();
            let u = DMatrix::from_fn(n, k, |i, j| {
                let g = self.membership.label(i);
                (self.psi(i) / weights[g]) * h[(g, j)]
            });
            (u, h)
        } else {
            // U = ΘX with X = Δ⁻¹Z.
            let x = DMatrix::from_fn(k, k, |r, c| vectors[(r, c)] / weights[r]);
            let u = DMatrix::from_fn(n, k, |i, j| x[(self.membership.label(i), j)]);
            (u, x)
        };
        Ok(PopulationEigen {
            u,
            d: values,
            x_or_h,
            gamma_n,
            rank,
            k,
        })
    }

    /// Degree-heterogeneity summaries; requires a degree-corrected spec.
    pub fn heterogeneity_stats(&self) -> Result<HeterogeneityStats> {
        let degrees = self.degrees.as_ref().ok_or_else(|| {
            Error::InvalidParameter("heterogeneity stats require a degree-corrected spec".into())
        })?;
        let phi_norms = self.phi_norms();
        let n_tilde: Vec<f64> = phi_norms.iter().map(|v| v * v).collect();
        let psi_tilde: Vec<f64> = degrees
            .values()
            .iter()
            .enumerate()
            .map(|(i, &p)| p / phi_norms[self.membership.label(i)])
            .collect();
        let mut inv_sq_sums = vec![0.0f64; self.k()];
        for (i, &pt) in psi_tilde.iter().enumerate() {
            inv_sq_sums[self.membership.label(i)] += 1.0 / (pt * pt);
        }
        let nu: Vec<f64> = inv_sq_sums
            .iter()
            .zip(self.membership.counts())
            .map(|(&s, &nk)| s / (nk as f64 * nk as f64))
            .collect();
        let n_tilde_min = n_tilde.iter().cloned().fold(f64::INFINITY, f64::min);
        let n_tilde_max = n_tilde.iter().cloned().fold(0.0f64, f64::max);
        Ok(HeterogeneityStats {
            phi_norms,
            n_tilde,
            psi_tilde,
            nu,
            n_tilde_min,
            n_tilde_max,
        })
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("model serialization cannot fail");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Eigenstructure of the population matrix P.
#[derive(Debug, Clone)]
pub struct PopulationEigen {
    u: DMatrix<f64>,
    d: DVector<f64>,
    x_or_h: DMatrix<f64>,
    gamma_n: f64,
    rank: usize,
    k: usize,
}

impl PopulationEigen {
    /// n×K orthonormal eigenvector matrix, columns ordered by decreasing |λ|.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Eigenvalues ordered by decreasing absolute value.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.d
    }

    /// X (SBM: U = ΘX) or H (DCBM: U_{i*} = ψ̃_i H_{g_i*}).
    pub fn x_or_h(&self) -> &DMatrix<f64> {
        &self.x_or_h
    }

    /// Smallest nonzero absolute eigenvalue of P.
    pub fn gamma_n(&self) -> f64 {
        self.gamma_n
    }

    /// Effective rank of P.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.k
    }

    /// Multiplicity of each eigenvalue at relative tolerance `rel_tol`,
    /// reported per eigenvalue in order. Consumers facing multiplicity > 1
    /// must compare subspaces via Procrustes alignment, not columns.
    pub fn multiplicities(&self, rel_tol: f64) -> Vec<usize> {
        let scale = self.d[0].abs().max(f64::MIN_POSITIVE);
        (0..self.d.len())
            .map(|i| {
                self.d
                    .iter()
                    .filter(|&&v| (v - self.d[i]).abs() <= rel_tol * scale)
                    .count()
            })
            .collect()
    }
}

/// Degree-heterogeneity summaries for a DCBM.
#[derive(Debug, Clone)]
pub struct HeterogeneityStats {
    phi_norms: Vec<f64>,
    n_tilde: Vec<f64>,
    psi_tilde: Vec<f64>,
    nu: Vec<f64>,
    n_tilde_min: f64,
    n_tilde_max: f64,
}

impl HeterogeneityStats {
    pub fn phi_norms(&self) -> &[f64] {
        &self.phi_norms
    }

    /// Effective community sizes ñ_k = ‖φ_k‖².
    pub fn n_tilde(&self) -> &[f64] {
        &self.n_tilde
    }

    /// ψ̃_i = ψ_i / ‖φ_{g_i}‖; unit-norm within each community.
    pub fn psi_tilde(&self) -> &[f64] {
        &self.psi_tilde
    }

    /// Per-community heterogeneity ν_k = n_k⁻² Σ_{i∈G_k} ψ̃_i⁻² ≥ 1.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn n_tilde_min(&self) -> f64 {
        self.n_tilde_min
    }

    pub fn n_tilde_max(&self) -> f64 {
        self.n_tilde_max
    }

    /// Σ_k n_k²·ν_k, the aggregate that drives the DCBM bounds.
    pub fn sum_nk_sq_nu(&self, counts: &[usize]) -> f64 {
        self.nu
            .iter()
            .zip(counts)
            .map(|(&nu, &nk)| nu * (nk as f64) * (nk as f64))
            .sum()
    }
}

/// Balanced size profile: distributes `n` over `k` communities, larger
/// blocks first when n is not divisible by k.
pub fn balanced_sizes(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    (0..k).map(|i| base + usize::from(i < extra)).collect()
}

/// Planted partition: B = α_n·B₀ with B₀ = λ·I + (1−λ)·𝟙𝟙ᵀ.
///
/// B₀ has minimum absolute eigenvalue exactly λ (multiplicity K−1), which is
/// recorded on the preset for corollary-style bound evaluation.
pub fn preset_planted_partition(
    n: usize,
    k: usize,
    alpha_n: f64,
    lambda: f64,
    sizes: &[usize],
) -> Result<ModelSpec> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must lie strictly inside (0, 1)"
        )));
    }
    if !(alpha_n > 0.0 && alpha_n <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha_n = {alpha_n} must lie in (0, 1]"
        )));
    }
    if sizes.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected {k} sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.iter().sum::<usize>() != n {
        return Err(Error::InvalidParameter(format!(
            "sizes sum to {}, expected n = {n}",
            sizes.iter().sum::<usize>()
        )));
    }
    let membership = MembershipMatrix::from_block_sizes(sizes)?;
    let b = DMatrix::from_fn(k, k, |r, c| {
        alpha_n * if r == c { 1.0 } else { 1.0 - lambda }
    });
    let spec = ModelSpec::sbm(membership, ConnectivityMatrix::new(b)?)?;
    Ok(spec.with_preset(PresetInfo {
        kind: PresetKind::PlantedPartition,
        lambda_b0: lambda,
        alpha_n,
    }))
}

/// Planted clique: K = 2 with B = [[1, 1/2], [1/2, 1/2]] and the clique as
/// community 1. B has minimum absolute eigenvalue (3−√5)/4 ≈ 0.19098.
pub fn preset_planted_clique(n: usize, clique_size: usize) -> Result<ModelSpec> {
    if clique_size < 2 || clique_size > n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "clique size {clique_size} must lie in [2, n-1] for n = {n}"
        )));
    }
    let membership = MembershipMatrix::from_block_sizes(&[clique_size, n - clique_size])?;
    let b = ConnectivityMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.5]])?;
    let lambda = (3.0 - 5.0f64.sqrt()) / 4.0;
    let spec = ModelSpec::sbm(membership, b)?;
    Ok(spec.with_preset(PresetInfo {
        kind: PresetKind::PlantedClique,
        lambda_b0: lambda,
        alpha_n: 1.0,
    }))
}

/// Draws ψ_i ~ Uniform[lo, hi] i.i.d.; the DCBM constructor then rescales
/// per community for identifiability.
pub fn draw_psi_uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "psi range [{lo}, {hi}] must satisfy 0 < lo <= hi"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    Ok((0..n).map(|_| lo + (hi - lo) * rng.next_f64()).collect())
}

// --- serialization -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelSpecJson {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    labels: Vec<usize>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<PresetInfo>,
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let b = (0..self.k())
            .map(|r| {
                (0..self.k())
                    .map(|c| self.connectivity.entry(r, c))
                    .collect()
            })
            .collect();
        ModelSpecJson {
            n: self.n(),
            k: self.k(),
            labels: self.membership.one_based_labels(),
            b,
            psi: self.degrees.as_ref().map(|d| d.values().to_vec()),
            preset: self.preset,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ModelSpecJson::deserialize(deserializer)?;
        if raw.labels.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "labels length {} does not match n = {}",
                raw.labels.len(),
                raw.n
            )));
        }
        let membership =
            MembershipMatrix::from_one_based(&raw.labels, raw.k).map_err(serde::de::Error::custom)?;
        let connectivity =
            ConnectivityMatrix::from_rows(&raw.b).map_err(serde::de::Error::custom)?;
        let spec = match raw.psi {
            Some(psi) => {
                let degrees = DegreeParams::new(psi).map_err(serde::de::Error::custom)?;
                ModelSpec::dcbm(membership, connectivity, degrees)
                    .map_err(serde::de::Error::custom)?
            }
            None => ModelSpec::sbm(membership, connectivity).map_err(serde::de::Error::custom)?,
        };
        Ok(match raw.preset {
            Some(p) => spec.with_preset(p),
            None => spec,
        })
    }
}
