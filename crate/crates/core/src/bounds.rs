//! Evaluation of the theoretical conditions and error bounds on concrete
//! instances, plus the Monte Carlo concentration study that estimates the
//! absolute constant they depend on.
//!
//! The theory's constants c and C are unspecified absolutes. Here C is
//! estimated empirically as the largest observed ‖A−P‖/√d over a
//! concentration grid, and c then defaults to 1/(64·C²) for the SBM checks
//! and 1/(8·C) for the DCBM checks, matching how the constants are wired
//! together in the proofs. Both are overridable. `log n` is the natural
//! logarithm throughout.
//!
//! Every report records an input snapshot; re-evaluating from the snapshot
//! reproduces both sides bit-for-bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusteringResult, SphericalSets};
use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::{exception_sets, ExceptionSets};
use crate::model::{HeterogeneityStats, MembershipMatrix, ModelSpec, PopulationEigen};
use crate::rng::derive_seed;
use crate::sampler::{sample_adjacency, SeedSpec};
use crate::spectral::{spectral_norm, DiffOp};

/// Additive slack absorbing floating-point noise in inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// `holds` outcomes with lhs within 1% of rhs are flagged separately.
const NEAR_BOUNDARY_FRACTION: f64 = 0.99;

/// The absolute constants used by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Empirical estimate of C in ‖A−P‖ ≤ C√d.
    pub c_empirical: f64,
    /// c for the SBM condition/bound; defaults to 1/(64·C²).
    pub c_sbm: f64,
    /// c for the DCBM condition/bound; defaults to 1/(8·C).
    pub c_dcbm: f64,
}

impl Constants {
    pub fn from_empirical(c_empirical: f64) -> Self {
        Self {
            c_empirical,
            c_sbm: 1.0 / (64.0 * c_empirical * c_empirical),
            c_dcbm: 1.0 / (8.0 * c_empirical),
        }
    }

    pub fn with_overrides(c_empirical: f64, c_sbm: Option<f64>, c_dcbm: Option<f64>) -> Self {
        let base = Self::from_empirical(c_empirical);
        Self {
            c_empirical,
            c_sbm: c_sbm.unwrap_or(base.c_sbm),
            c_dcbm: c_dcbm.unwrap_or(base.c_dcbm),
        }
    }
}

/// Snapshot of every primitive a bound evaluation reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub alpha_n: f64,
    pub gamma_n: f64,
    /// min |eigenvalue| of B₀ when the spec came from a preset.
    pub lambda: Option<f64>,
    pub n_min: usize,
    pub n_second_max: usize,
    pub epsilon: f64,
    /// d = n·α_n.
    pub d: f64,
    pub nu: Option<Vec<f64>>,
    pub n_tilde_min: Option<f64>,
    pub sum_nk_sq_nu: Option<f64>,
}

impl BoundInputs {
    pub fn from_spec(spec: &ModelSpec, pop: &PopulationEigen, epsilon: f64) -> Self {
        Self {
            n: spec.n(),
            k: spec.k(),
            alpha_n: spec.alpha_n(),
            gamma_n: pop.gamma_n(),
            lambda: spec.preset().map(|p| p.lambda_b0),
            n_min: spec.membership().n_min(),
            n_second_max: spec.membership().n_second_max(),
            epsilon,
            d: spec.degree_scale(),
            nu: None,
            n_tilde_min: None,
            sum_nk_sq_nu: None,
        }
    }

    pub fn with_heterogeneity(mut self, stats: &HeterogeneityStats, counts: &[usize]) -> Self {
        self.nu = Some(stats.nu().to_vec());
        self.n_tilde_min = Some(stats.n_tilde_min());
        self.sum_nk_sq_nu = Some(stats.sum_nk_sq_nu(counts));
        self
    }
}

/// One evaluated inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// holds, but with lhs within 1% of rhs.
    pub near_boundary: bool,
    pub inputs: BoundInputs,
    pub constants: Constants,
}

fn report(name: &str, lhs: f64, rhs: f64, inputs: &BoundInputs, constants: &Constants) -> BoundReport {
    let holds = lhs <= rhs + INEQUALITY_SLACK;
    let near_boundary = holds && rhs.is_finite() && rhs > 0.0 && lhs > NEAR_BOUNDARY_FRACTION * rhs;
    BoundReport {
        name: name.to_string(),
        lhs,
        rhs,
        holds,
        near_boundary,
        inputs: inputs.clone(),
        constants: *constants,
    }
}

/// The SBM consistency ratio (2+ε)·K·n·α_n / γ_n².
pub fn sbm_ratio(inputs: &BoundInputs) -> f64 {
    (2.0 + inputs.epsilon) * inputs.k as f64 * inputs.n as f64 * inputs.alpha_n
        / (inputs.gamma_n * inputs.gamma_n)
}

/// SBM condition `(2+ε)Knα_n/γ_n² < c` and, when an observed Σ|S_k|/n_k is
/// supplied, the matching error bound `Σ|S_k|/n_k ≤ c⁻¹(2+ε)Knα_n/γ_n²`.
pub fn sbm_condition_and_bound(
    inputs: &BoundInputs,
    observed_sum_relative: Option<f64>,
    constants: &Constants,
) -> Result<(BoundReport, Option<BoundReport>)> {
    if inputs.gamma_n <= 0.0 {
        return Err(Error::InvalidParameter("gamma_n must be positive".into()));
    }
    let ratio = sbm_ratio(inputs);
    let condition = report("sbm-condition", ratio, constants.c_sbm, inputs, constants);
    let bound = observed_sum_relative.map(|obs| {
        report(
            "sbm-exception-bound",
            obs,
            ratio / constants.c_sbm,
            inputs,
            constants,
        )
    });
    Ok((condition, bound))
}

/// Corollary-style SBM bounds with γ_n = n_min·α_n·λ substituted:
/// L̃ ≤ c⁻¹(2+ε)·Kn/(n_min²λ²α_n) and L ≤ c⁻¹(2+ε)·Kn'_max/(n_min²λ²α_n).
pub fn sbm_corollary_bounds(
    inputs: &BoundInputs,
    observed_l_tilde: Option<f64>,
    observed_l: Option<f64>,
    constants: &Constants,
) -> Result<(BoundReport, BoundReport)> {
    let lambda = inputs.lambda.ok_or_else(|| {
        Error::InvalidParameter("corollary bounds need lambda (a preset-built B = α_n·B₀)".into())
    })?;
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let denom = (inputs.n_min as f64).powi(2) * lambda * lambda * inputs.alpha_n;
    let common = (2.0 + inputs.epsilon) * inputs.k as f64 / (constants.c_sbm * denom);
    let l_tilde_rhs = common * inputs.n as f64;
    let l_rhs = common * inputs.n_second_max as f64;
    Ok((
        report(
            "sbm-corollary-l-tilde",
            observed_l_tilde.unwrap_or(0.0),
            l_tilde_rhs,
            inputs,
            constants,
        ),
        report(
            "sbm-corollary-l",
            observed_l.unwrap_or(0.0),
            l_rhs,
            inputs,
            constants,
        ),
    ))
}

/// Reports produced by the DCBM condition/bound evaluation.
#[derive(Debug, Clone)]
pub struct DcbmReports {
    pub condition: BoundReport,
    pub l_bound: BoundReport,
    /// √ν_max / (ñ_min·λ·√(nα_n)): the simplified rate under comparable
    /// heterogeneity; None when λ is unknown.
    pub simplified_rate: Option<f64>,
}

/// DCBM condition `(2.5+ε)√(Knα_n)/γ_n < c·n_min/√(Σn_k²ν_k)` and L bound
/// `L ≤ c⁻¹(2.5+ε)√(Σn_k²ν_k)·√(Kα_n)/(γ_n√n)`.
pub fn dcbm_condition_and_bound(
    inputs: &BoundInputs,
    observed_l: Option<f64>,
    constants: &Constants,
) -> Result<DcbmReports> {
    let sum = inputs.sum_nk_sq_nu.ok_or_else(|| {
        Error::InvalidParameter("DCBM bounds need heterogeneity stats (Σn_k²ν_k)".into())
    })?;
    if !sum.is_finite() {
        return Err(Error::InvalidParameter("Σn_k²ν_k is not finite".into()));
    }
    if inputs.gamma_n <= 0.0 {
        return Err(Error::InvalidParameter("gamma_n must be positive".into()));
    }
    let kna = (inputs.k as f64 * inputs.n as f64 * inputs.alpha_n).sqrt();
    let cond_lhs = (2.5 + inputs.epsilon) * kna / inputs.gamma_n;
    let cond_rhs = constants.c_dcbm * inputs.n_min as f64 / sum.sqrt();
    let condition = report("dcbm-condition", cond_lhs, cond_rhs, inputs, constants);

    let l_rhs = (2.5 + inputs.epsilon) / constants.c_dcbm
        * sum.sqrt()
        * (inputs.k as f64 * inputs.alpha_n).sqrt()
        / (inputs.gamma_n * (inputs.n as f64).sqrt());
    let l_bound = report(
        "dcbm-l-bound",
        observed_l.unwrap_or(0.0),
        l_rhs,
        inputs,
        constants,
    );

    let simplified_rate = match (inputs.lambda, inputs.n_tilde_min, inputs.nu.as_ref()) {
        (Some(lambda), Some(nt_min), Some(nu)) if lambda > 0.0 => {
            let nu_max = nu.iter().cloned().fold(0.0f64, f64::max);
            Some(nu_max.sqrt() / (nt_min * lambda * (inputs.n as f64 * inputs.alpha_n).sqrt()))
        }
        _ => None,
    };
    Ok(DcbmReports {
        condition,
        l_bound,
        simplified_rate,
    })
}

/// Reference-only comparison column: λ²α_n²n / (σ_n²·log n) with
/// σ_n² = α_n as the variance upper bound. Concerns a different algorithm
/// and is never verified as an inequality.
pub fn mcsherry_reference(inputs: &BoundInputs) -> Option<f64> {
    inputs.lambda.map(|lambda| {
        lambda * lambda * inputs.alpha_n * inputs.alpha_n * inputs.n as f64
            / (inputs.alpha_n * (inputs.n as f64).ln())
    })
}

// --- concentration study ---------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationCell {
    pub n: usize,
    pub c0: f64,
    /// d = c₀·log n (edge probability d/n).
    pub d: f64,
    pub replicates: usize,
    /// max over replicates of ‖A−P‖/√d.
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub q90_ratio: f64,
    /// max over replicates of ‖A−P‖/√(d·log n), the matrix-Bernstein-rate
    /// companion statistic.
    pub max_ratio_log: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationStudy {
    #[serde(rename = "C_empirical")]
    pub c_empirical: f64,
    pub master_seed: u64,
    pub cells: Vec<ConcentrationCell>,
}

impl ConcentrationStudy {
    pub fn constants(&self) -> Constants {
        Constants::from_empirical(self.c_empirical)
    }
}

/// Monte Carlo study of ‖A−P‖/√d on Erdős–Rényi cells with p = c₀·log n / n.
/// C_empirical is the max over all cells and replicates.
pub fn spectral_concentration_study(
    grid: &[(usize, f64)],
    replicates: usize,
    master_seed: u64,
) -> Result<ConcentrationStudy> {
    if grid.is_empty() || replicates == 0 {
        return Err(Error::InvalidParameter(
            "concentration study needs at least one cell and one replicate".into(),
        ));
    }
    let mut cells = Vec::with_capacity(grid.len());
    let mut c_empirical = 0.0f64;
    for (cell_idx, &(n, c0)) in grid.iter().enumerate() {
        if n < 2 || c0 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bad concentration cell (n = {n}, c0 = {c0})"
            )));
        }
        let log_n = (n as f64).ln();
        let d = c0 * log_n;
        let p = d / n as f64;
        if p > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "cell (n = {n}, c0 = {c0}) needs p = {p} > 1"
            )));
        }
        let membership = MembershipMatrix::from_block_sizes(&[n])?;
        let b = crate::model::ConnectivityMatrix::from_rows(&[vec![p]])?;
        let spec = ModelSpec::sbm(membership, b)?;
        let norms: Vec<Result<f64>> = exec::map_indexed(replicates, |r| {
            let seed = derive_seed(master_seed, &[0xc0, cell_idx as u64, r as u64]);
            let a = sample_adjacency(&spec, SeedSpec::new(seed, 0));
            let diff = DiffOp::new(&a, &spec)?;
            spectral_norm(&diff, 1e-6, derive_seed(seed, &[1]))
        });
        let mut ratios = Vec::with_capacity(replicates);
        for r in norms {
            ratios.push(r? / d.sqrt());
        }
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let max_ratio = *sorted.last().expect("nonempty");
        c_empirical = c_empirical.max(max_ratio);
        cells.push(ConcentrationCell {
            n,
            c0,
            d,
            replicates,
            max_ratio,
            mean_ratio: ratios.iter().sum::<f64>() / replicates as f64,
            median_ratio: quantile(&sorted, 0.5),
            q90_ratio: quantile(&sorted, 0.9),
            max_ratio_log: max_ratio / log_n.sqrt(),
        });
    }
    Ok(ConcentrationStudy {
        c_empirical,
        master_seed,
        cells,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

// --- deterministic lemma checks ---------------------------------------------

/// Outcome of the approximate-k-means performance lemma on one run.
#[derive(Debug, Clone)]
pub struct HammingCheck {
    /// Σ_k |S_k|δ_k² ≤ 4(4+2ε)‖Û−U‖_F².
    pub inequality: BoundReport,
    /// Whether (16+8ε)‖Û−U‖_F²/δ_k² < n_k held for every k.
    pub second_clause_holds: bool,
    /// When the second clause holds: whether the labels agree with the truth
    /// on G = ∪(G_k \ S_k) under a single permutation.
    pub agreement_on_g: Option<bool>,
    pub g_size: usize,
    pub exception_sets: ExceptionSets,
    /// Whether ε was certified against the exact oracle (vs nominal).
    pub epsilon_certified: bool,
}

/// Evaluates the k-means performance lemma on a finished run.
///
/// `u_hat` and `u_pop_aligned` live in the same frame (align the population
/// eigenvectors onto Û first); `result` is the k-means output on `u_hat`.
#[allow(clippy::too_many_arguments)]
pub fn lemma_hamming_check(
    u_hat: &DMatrix<f64>,
    u_pop_aligned: &DMatrix<f64>,
    result: &ClusteringResult,
    truth: &MembershipMatrix,
    epsilon: f64,
    delta: &[f64],
    epsilon_certified: bool,
    constants: &Constants,
) -> Result<HammingCheck> {
    let fitted = result.fitted_rows();
    let sets = exception_sets(&fitted, u_pop_aligned, truth, delta)?;
    let diff_fro = (u_hat - u_pop_aligned).norm();
    let lhs = sets.weighted_count;
    let rhs = 4.0 * (4.0 + 2.0 * epsilon) * diff_fro * diff_fro;
    let inputs = BoundInputs {
        n: truth.n(),
        k: truth.k(),
        alpha_n: f64::NAN,
        gamma_n: f64::NAN,
        lambda: None,
        n_min: truth.n_min(),
        n_second_max: truth.n_second_max(),
        epsilon,
        d: f64::NAN,
        nu: None,
        n_tilde_min: None,
        sum_nk_sq_nu: None,
    };
    let inequality = report("lemma-hamming", lhs, rhs, &inputs, constants);

    let second_clause_holds = delta.iter().zip(truth.counts()).all(|(&dk, &nk)| {
        (16.0 + 8.0 * epsilon) * diff_fro * diff_fro / (dk * dk) < nk as f64
    });
    let (agreement_on_g, g_size) = if second_clause_holds {
        let mut g_size = 0usize;
        let mut rep = vec![usize::MAX; truth.k()];
        let mut ok = true;
        for k in 0..truth.k() {
            let excluded: std::collections::HashSet<usize> =
                sets.sets[k].iter().cloned().collect();
            for i in truth.community_members(k) {
                if excluded.contains(&i) {
                    continue;
                }
                g_size += 1;
                let label = result.labels()[i];
                if rep[k] == usize::MAX {
                    rep[k] = label;
                } else if rep[k] != label {
                    ok = false;
                }
            }
        }
        // the per-community labels must also be distinct
        let mut seen = vec![false; truth.k()];
        for &r in &rep {
            if r != usize::MAX {
                if seen[r] {
                    ok = false;
                }
                seen[r] = true;
            }
        }
        (Some(ok), g_size)
    } else {
        (None, 0)
    };
    Ok(HammingCheck {
        inequality,
        second_clause_holds,
        agreement_on_g,
        g_size,
        exception_sets: sets,
        epsilon_certified,
    })
}

/// Zero-row bound: |I₀| ≤ √(Σn_k²ν_k)·‖Û−U‖_F.
pub fn lemma_zero_rows_check(
    i_zero_count: usize,
    u_diff_frobenius: f64,
    inputs: &BoundInputs,
    constants: &Constants,
) -> Result<BoundReport> {
    let sum = inputs.sum_nk_sq_nu.ok_or_else(|| {
        Error::InvalidParameter("zero-row bound needs heterogeneity stats".into())
    })?;
    Ok(report(
        "lemma-zero-rows",
        i_zero_count as f64,
        sum.sqrt() * u_diff_frobenius,
        inputs,
        constants,
    ))
}

/// The spherical proof's exception set S and the combined |S|+|I₀| bound
/// (2.5+ε)·8C·√(Knα_n)/γ_n·√(Σn_k²ν_k), evaluated with C = C_empirical.
#[derive(Debug, Clone)]
pub struct DcbmProofSets {
    pub s: Vec<usize>,
    pub report: BoundReport,
}

pub fn dcbm_proof_sets(
    result: &ClusteringResult,
    u_pop_aligned_normalized: &DMatrix<f64>,
    sets: &SphericalSets,
    inputs: &BoundInputs,
    constants: &Constants,
) -> Result<DcbmProofSets> {
    let sum = inputs.sum_nk_sq_nu.ok_or_else(|| {
        Error::InvalidParameter("DCBM proof sets need heterogeneity stats".into())
    })?;
    if inputs.gamma_n <= 0.0 {
        return Err(Error::InvalidParameter("gamma_n must be positive".into()));
    }
    let fitted = result.fitted_rows();
    let threshold = 1.0 / 2.0f64.sqrt();
    let mut s = Vec::new();
    for &i in &sets.i_plus {
        let dist = (fitted.row(i) - u_pop_aligned_normalized.row(i)).norm();
        if dist >= threshold {
            s.push(i);
        }
    }
    let lhs = (s.len() + sets.i_zero.len()) as f64;
    let rhs = (2.5 + inputs.epsilon)
        * 8.0
        * constants.c_empirical
        * (inputs.k as f64 * inputs.n as f64 * inputs.alpha_n).sqrt()
        / inputs.gamma_n
        * sum.sqrt();
    let report = report("dcbm-proof-sets", lhs, rhs, inputs, constants);
    Ok(DcbmProofSets { s, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset_planted_partition;

    fn inputs_for_test() -> BoundInputs {
        BoundInputs {
            n: 2000,
            k: 2,
            alpha_n: 0.038,
            gamma_n: 19.0,
            lambda: Some(0.5),
            n_min: 1000,
            n_second_max: 1000,
            epsilon: 0.5,
            d: 76.0,
            nu: Some(vec![1.2, 1.3]),
            n_tilde_min: Some(900.0),
            sum_nk_sq_nu: Some(2.5e6),
        }
    }

    #[test]
    fn sbm_ratio_monotonicity() {
        let base = inputs_for_test();
        let ratio = sbm_ratio(&base);
        let bump = 1.01f64;

        let mut gamma_up = base.clone();
        gamma_up.gamma_n *= bump;
        assert!(sbm_ratio(&gamma_up) < ratio, "decreasing in gamma");

        let mut k_up = base.clone();
        k_up.k += 1;
        assert!(sbm_ratio(&k_up) > ratio, "increasing in K");

        let mut n_up = base.clone();
        n_up.n += 100;
        assert!(sbm_ratio(&n_up) > ratio, "increasing in n");

        let mut a_up = base.clone();
        a_up.alpha_n *= bump;
        assert!(sbm_ratio(&a_up) > ratio, "increasing in alpha");

        let mut e_up = base.clone();
        e_up.epsilon += 0.1;
        assert!(sbm_ratio(&e_up) > ratio, "increasing in epsilon");
    }

    #[test]
    fn gamma_doubling_quarters_the_ratio() {
        let base = inputs_for_test();
        let mut doubled = base.clone();
        doubled.gamma_n *= 2.0;
        let r1 = sbm_ratio(&base);
        let r2 = sbm_ratio(&doubled);
        assert!((r1 / r2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn corollary_scalings() {
        let constants = Constants::from_empirical(2.0);
        let base = inputs_for_test();
        let (lt, l) = sbm_corollary_bounds(&base, None, None, &constants).unwrap();
        // doubling n_min divides both bounds by 4
        let mut bigger = base.clone();
        bigger.n_min *= 2;
        let (lt2, l2) = sbm_corollary_bounds(&bigger, None, None, &constants).unwrap();
        assert!((lt.rhs / lt2.rhs - 4.0).abs() < 1e-9);
        assert!((l.rhs / l2.rhs - 4.0).abs() < 1e-9);
    }

    #[test]
    fn planted_clique_bound_is_constant_when_nmin_scales_as_sqrt_n() {
        // n_min = sqrt(a n) makes the L-tilde bound a constant c'/a
        let constants = Constants::from_empirical(2.0);
        let a = 9.0;
        let mut values = Vec::new();
        for &n in &[10_000usize, 40_000, 160_000] {
            let n_min = ((a * n as f64).sqrt()) as usize;
            let inputs = BoundInputs {
                n,
                k: 2,
                alpha_n: 1.0,
                gamma_n: 1.0,
                lambda: Some(0.19),
                n_min,
                n_second_max: n - n_min,
                epsilon: 0.5,
                d: n as f64,
                nu: None,
                n_tilde_min: None,
                sum_nk_sq_nu: None,
            };
            let (lt, _) = sbm_corollary_bounds(&inputs, None, None, &constants).unwrap();
            values.push(lt.rhs);
        }
        for w in values.windows(2) {
            assert!(
                (w[0] / w[1] - 1.0).abs() < 0.02,
                "bound should be ~constant: {values:?}"
            );
        }
    }

    #[test]
    fn dcbm_reduces_to_sqrt_of_sbm_rate_when_homogeneous() {
        // with nu = 1 and balanced sizes, the DCBM rate over the sqrt of the
        // SBM corollary rate is a constant independent of (n, alpha, lambda)
        let constants = Constants::from_empirical(2.0);
        let ratio_at = |n: usize, alpha: f64, lambda: f64| {
            let k = 2usize;
            let nk = n / k;
            let gamma = nk as f64 * alpha * lambda;
            let inputs = BoundInputs {
                n,
                k,
                alpha_n: alpha,
                gamma_n: gamma,
                lambda: Some(lambda),
                n_min: nk,
                n_second_max: nk,
                epsilon: 0.5,
                d: n as f64 * alpha,
                nu: Some(vec![1.0; k]),
                n_tilde_min: Some(nk as f64),
                sum_nk_sq_nu: Some(k as f64 * (nk as f64).powi(2)),
            };
            let dcbm = dcbm_condition_and_bound(&inputs, None, &constants).unwrap();
            let (_, l_sbm) = sbm_corollary_bounds(&inputs, None, None, &constants).unwrap();
            dcbm.l_bound.rhs / l_sbm.rhs.sqrt()
        };
        let r1 = ratio_at(1000, 0.05, 0.5);
        let r2 = ratio_at(4000, 0.02, 0.3);
        let r3 = ratio_at(2000, 0.1, 0.7);
        assert!((r1 / r2 - 1.0).abs() < 1e-9, "{r1} vs {r2}");
        assert!((r1 / r3 - 1.0).abs() < 1e-9, "{r1} vs {r3}");
    }

    #[test]
    fn dcbm_bound_scales_as_sqrt_nu() {
        let constants = Constants::from_empirical(2.0);
        let base = inputs_for_test();
        let mut scaled = base.clone();
        scaled.sum_nk_sq_nu = Some(base.sum_nk_sq_nu.unwrap() * 4.0);
        let b1 = dcbm_condition_and_bound(&base, None, &constants).unwrap();
        let b2 = dcbm_condition_and_bound(&scaled, None, &constants).unwrap();
        assert!((b2.l_bound.rhs / b1.l_bound.rhs - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reports_reproduce_from_snapshot() {
        let constants = Constants::from_empirical(2.345);
        let inputs = inputs_for_test();
        let (cond, bound) = sbm_condition_and_bound(&inputs, Some(0.3), &constants).unwrap();
        let json = serde_json::to_string(&cond).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        let (cond2, bound2) =
            sbm_condition_and_bound(&back.inputs, Some(0.3), &back.constants).unwrap();
        assert_eq!(cond.lhs.to_bits(), cond2.lhs.to_bits());
        assert_eq!(cond.rhs.to_bits(), cond2.rhs.to_bits());
        assert_eq!(
            bound.as_ref().unwrap().rhs.to_bits(),
            bound2.as_ref().unwrap().rhs.to_bits()
        );

        // corollary and DCBM evaluators are equally pure in their snapshots
        let (lt, l) = sbm_corollary_bounds(&inputs, Some(0.1), Some(0.05), &constants).unwrap();
        let back: BoundReport = serde_json::from_str(&serde_json::to_string(&lt).unwrap()).unwrap();
        let (lt2, l2) =
            sbm_corollary_bounds(&back.inputs, Some(0.1), Some(0.05), &back.constants).unwrap();
        assert_eq!(lt.rhs.to_bits(), lt2.rhs.to_bits());
        assert_eq!(l.rhs.to_bits(), l2.rhs.to_bits());

        let d1 = dcbm_condition_and_bound(&inputs, Some(0.2), &constants).unwrap();
        let back: BoundReport =
            serde_json::from_str(&serde_json::to_string(&d1.l_bound).unwrap()).unwrap();
        let d2 = dcbm_condition_and_bound(&back.inputs, Some(0.2), &back.constants).unwrap();
        assert_eq!(d1.l_bound.rhs.to_bits(), d2.l_bound.rhs.to_bits());
        assert_eq!(d1.condition.lhs.to_bits(), d2.condition.lhs.to_bits());
    }

    #[test]
    fn concentration_complete_graph_case() {
        // p = 1: A = P off-diagonal exactly, so ‖A−P‖ = max p_ii = 1
        let n = 40usize;
        let c0 = n as f64 / (n as f64).ln(); // d = n, p = 1
        let study = spectral_concentration_study(&[(n, c0)], 3, 99).unwrap();
        let expected = 1.0 / (n as f64).sqrt();
        assert!(
            (study.c_empirical - expected).abs() < 1e-6,
            "{} vs {expected}",
            study.c_empirical
        );
    }

    #[test]
    fn concentration_rejects_supercritical_cell() {
        // p > 1 is a misconfigured cell
        let n = 20usize;
        let c0 = 2.0 * n as f64 / (n as f64).ln();
        assert!(spectral_concentration_study(&[(n, c0)], 2, 1).is_err());
    }

    #[test]
    fn concentration_smoke_on_small_grid() {
        let study = spectral_concentration_study(&[(150, 3.0), (300, 3.0)], 5, 7).unwrap();
        assert_eq!(study.cells.len(), 2);
        assert!(study.c_empirical > 1.0 && study.c_empirical < 4.0);
        for cell in &study.cells {
            assert!(cell.max_ratio >= cell.q90_ratio);
            assert!(cell.q90_ratio >= cell.median_ratio);
        }
        // determinism
        let again = spectral_concentration_study(&[(150, 3.0), (300, 3.0)], 5, 7).unwrap();
        assert_eq!(
            study.c_empirical.to_bits(),
            again.c_empirical.to_bits()
        );
    }

    #[test]
    fn hamming_check_trivial_case() {
        use crate::cluster::{kmeans_approx, ApproxConfig};
        use crate::metrics::default_delta;

        let spec = preset_planted_partition(12, 2, 1.0, 0.5, &[6, 6]).unwrap();
        let pop = spec.population_eigen().unwrap();
        let truth = spec.membership();
        let u = pop.u().clone();
        let result = kmeans_approx(&u, 2, &ApproxConfig::default()).unwrap();
        let delta = default_delta(truth).unwrap();
        let constants = Constants::from_empirical(2.0);
        let check =
            lemma_hamming_check(&u, &u, &result, truth, 0.0, &delta, true, &constants).unwrap();
        assert!(check.inequality.holds);
        assert_eq!(check.inequality.lhs, 0.0);
        assert!(check.second_clause_holds);
        assert_eq!(check.agreement_on_g, Some(true));
        assert_eq!(check.g_size, 12);
    }

    #[test]
    fn zero_rows_check_trivial() {
        let constants = Constants::from_empirical(2.0);
        let inputs = inputs_for_test();
        let rep = lemma_zero_rows_check(0, 0.5, &inputs, &constants).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.lhs, 0.0);
    }

    #[test]
    fn proof_set_threshold_is_inclusive() {
        use crate::cluster::{spherical_kmedian, ApproxConfig};
        use nalgebra::DMatrix;

        // two exact unit directions; k-median recovers them with zero cost
        let rows = DMatrix::from_row_slice(6, 2, &[
            1.0, 0.0, //
            1.0, 0.0, //
            1.0, 0.0, //
            0.0, 1.0, //
            0.0, 1.0, //
            0.0, 1.0,
        ]);
        let (result, sets) = spherical_kmedian(&rows, 2, &ApproxConfig::default()).unwrap();
        assert!(result.objective() < 1e-12);
        // population rows: rotate one row's reference so its distance to the
        // fitted center is exactly 1/sqrt(2); rows at distance 0 stay out
        let tgt = 1.0 / 2.0f64.sqrt();
        let mut u_prime = result.fitted_rows();
        // place reference for node 0 at distance exactly tgt from its center
        let c0 = u_prime.row(0).clone_owned();
        u_prime[(0, 0)] = c0[0] - tgt;
        let constants = Constants::from_empirical(2.0);
        let inputs = BoundInputs {
            n: 6,
            k: 2,
            alpha_n: 0.5,
            gamma_n: 1.0,
            lambda: None,
            n_min: 3,
            n_second_max: 3,
            epsilon: 0.5,
            d: 3.0,
            nu: Some(vec![1.0, 1.0]),
            n_tilde_min: Some(3.0),
            sum_nk_sq_nu: Some(18.0),
        };
        let proof = dcbm_proof_sets(&result, &u_prime, &sets, &inputs, &constants).unwrap();
        assert_eq!(proof.s, vec![0], "boundary distance 1/sqrt(2) is included");
        // a perfect run has an empty S
        let perfect = dcbm_proof_sets(&result, &result.fitted_rows(), &sets, &inputs, &constants)
            .unwrap();
        assert!(perfect.s.is_empty());
    }
}
