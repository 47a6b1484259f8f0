//! End-to-end replicate pipelines: sample → eigenvectors → cluster →
//! error metrics → bound reports.
//!
//! Each replicate is a pure function of (model, seed, config), so Monte
//! Carlo fan-out can run on any number of workers and still produce
//! identical outputs in (cell, replicate) order.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    dcbm_condition_and_bound, dcbm_proof_sets, lemma_hamming_check, lemma_zero_rows_check,
    mcsherry_reference, sbm_condition_and_bound, sbm_corollary_bounds, BoundInputs, BoundReport,
    Constants, HammingCheck,
};
use crate::cluster::{kmeans_approx, spherical_kmedian, ApproxConfig};
use crate::error::Result;
use crate::metrics::{default_delta, error_report, ErrorReport};
use crate::model::{HeterogeneityStats, ModelSpec, PopulationEigen};
use crate::rng::derive_seed;
use crate::sampler::{sample_adjacency, SeedSpec};
use crate::spectral::{
    davis_kahan_gap_bound, leading_eigenvectors, spectral_norm, DiffOp, EigenConfig,
};

/// Everything a replicate run needs besides the model and the seed.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub eigen: EigenConfig,
    pub cluster: ApproxConfig,
    /// Nominal ε fed to bound evaluation (the solvers are heuristic; ε is
    /// certified only on oracle-sized instances).
    pub epsilon: f64,
    pub constants: Constants,
    /// Relative tolerance for ‖A−P‖.
    pub norm_rtol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            eigen: EigenConfig::default(),
            cluster: ApproxConfig::default(),
            epsilon: 0.5,
            constants: Constants::from_empirical(2.5),
            norm_rtol: 1e-6,
        }
    }
}

/// Deterministic replicate stream: inserting new cells never perturbs the
/// streams of existing ones.
pub fn replicate_seed(master_seed: u64, cell_index: u64, replicate_index: u64) -> SeedSpec {
    SeedSpec::new(derive_seed(master_seed, &[0xce11, cell_index]), replicate_index)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Timings {
    pub sample_ms: f64,
    pub eigen_ms: f64,
    pub cluster_ms: f64,
    pub total_ms: f64,
}

/// A flattened inequality outcome for report rows.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl From<&BoundReport> for Check {
    fn from(r: &BoundReport) -> Self {
        Self {
            lhs: r.lhs,
            rhs: r.rhs,
            holds: r.holds,
        }
    }
}

/// One SBM replicate of Algorithm 1 plus every attached check.
#[derive(Debug, Clone)]
pub struct SbmReplicate {
    pub errors: ErrorReport,
    pub norm_a_minus_p: f64,
    /// ‖A−P‖ / √d.
    pub ratio_sqrt_d: f64,
    pub procrustes_distance: f64,
    pub davis_kahan: Check,
    pub sum_sk_over_nk: f64,
    pub condition: BoundReport,
    pub exception_bound: BoundReport,
    pub corollary: Option<(BoundReport, BoundReport)>,
    pub hamming: HammingCheck,
    /// Reference-only comparison ratio for the competing method; never
    /// verified as an inequality.
    pub mcsherry_reference: Option<f64>,
    pub tie_at_k: bool,
    pub num_edges: usize,
    pub timings: Timings,
}

/// Samples one adjacency matrix and runs spectral clustering with
/// approximate k-means, evaluating the subspace perturbation inequality,
/// the exception-set bound, and (for preset models) the corollary bounds.
pub fn run_sbm_replicate(
    spec: &ModelSpec,
    pop: &PopulationEigen,
    seed: SeedSpec,
    cfg: &PipelineConfig,
) -> Result<SbmReplicate> {
    let total_start = Instant::now();
    let truth = spec.membership();
    let k = spec.k();

    let t = Instant::now();
    let a = sample_adjacency(spec, seed);
    let sample_ms = ms(t);

    let t = Instant::now();
    let mut eigen_cfg = cfg.eigen.clone();
    eigen_cfg.seed = derive_seed(seed.master_seed, &[seed.replicate_index, 0xe16]);
    let emb = leading_eigenvectors(&a, k, &eigen_cfg)?;
    let diff = DiffOp::new(&a, spec)?;
    let norm_a_minus_p = spectral_norm(
        &diff,
        cfg.norm_rtol,
        derive_seed(seed.master_seed, &[seed.replicate_index, 0x4e]),
    )?;
    let eigen_ms = ms(t);

    let dk = davis_kahan_gap_bound(emb.u(), pop.u(), pop.gamma_n(), norm_a_minus_p)?;
    let u_aligned = pop.u() * dk.alignment.q();

    let t = Instant::now();
    let mut cluster_cfg = cfg.cluster.clone();
    cluster_cfg.seed = derive_seed(seed.master_seed, &[seed.replicate_index, 0xc1]);
    let result = kmeans_approx(emb.u(), k, &cluster_cfg)?;
    let cluster_ms = ms(t);

    let errors = error_report(result.labels(), truth)?;
    let delta = default_delta(truth)?;
    let hamming = lemma_hamming_check(
        emb.u(),
        &u_aligned,
        &result,
        truth,
        cfg.epsilon,
        &delta,
        false,
        &cfg.constants,
    )?;
    let sum_sk_over_nk = hamming.exception_sets.sum_relative(truth);

    let inputs = BoundInputs::from_spec(spec, pop, cfg.epsilon);
    let (condition, exception_bound) =
        sbm_condition_and_bound(&inputs, Some(sum_sk_over_nk), &cfg.constants)?;
    let exception_bound = exception_bound.expect("observed value supplied");
    let corollary = if inputs.lambda.is_some() {
        Some(sbm_corollary_bounds(
            &inputs,
            Some(errors.l_tilde),
            Some(errors.l),
            &cfg.constants,
        )?)
    } else {
        None
    };

    let mcsherry = mcsherry_reference(&inputs);
    Ok(SbmReplicate {
        errors,
        norm_a_minus_p,
        ratio_sqrt_d: norm_a_minus_p / spec.degree_scale().sqrt(),
        procrustes_distance: dk.alignment.frobenius_distance(),
        davis_kahan: Check {
            lhs: dk.lhs,
            rhs: dk.rhs,
            holds: dk.holds,
        },
        sum_sk_over_nk,
        condition,
        exception_bound,
        corollary,
        hamming,
        mcsherry_reference: mcsherry,
        tie_at_k: emb.tie_at_k(),
        num_edges: a.num_edges(),
        timings: Timings {
            sample_ms,
            eigen_ms,
            cluster_ms,
            total_ms: ms(total_start),
        },
    })
}

/// One DCBM replicate of the spherical k-median algorithm.
#[derive(Debug, Clone)]
pub struct DcbmReplicate {
    pub errors: ErrorReport,
    pub norm_a_minus_p: f64,
    pub ratio_sqrt_d: f64,
    pub procrustes_distance: f64,
    pub davis_kahan: Check,
    pub i_zero_count: usize,
    pub zero_rows: BoundReport,
    pub proof_sets: BoundReport,
    pub proof_set_size: usize,
    pub condition: BoundReport,
    pub l_bound: BoundReport,
    /// √ν_max/(ñ_min·λ·√(nα_n)) when λ is known.
    pub simplified_rate: Option<f64>,
    pub mcsherry_reference: Option<f64>,
    pub tie_at_k: bool,
    pub num_edges: usize,
    pub timings: Timings,
}

/// Samples one adjacency matrix and runs spherical k-median spectral
/// clustering, evaluating the zero-row bound, the proof-set inequality, and
/// the DCBM condition/error bound.
pub fn run_dcbm_replicate(
    spec: &ModelSpec,
    pop: &PopulationEigen,
    stats: &HeterogeneityStats,
    seed: SeedSpec,
    cfg: &PipelineConfig,
) -> Result<DcbmReplicate> {
    let total_start = Instant::now();
    let truth = spec.membership();
    let k = spec.k();

    let t = Instant::now();
    let a = sample_adjacency(spec, seed);
    let sample_ms = ms(t);

    let t = Instant::now();
    let mut eigen_cfg = cfg.eigen.clone();
    eigen_cfg.seed = derive_seed(seed.master_seed, &[seed.replicate_index, 0xe16]);
    let emb = leading_eigenvectors(&a, k, &eigen_cfg)?;
    let diff = DiffOp::new(&a, spec)?;
    let norm_a_minus_p = spectral_norm(
        &diff,
        cfg.norm_rtol,
        derive_seed(seed.master_seed, &[seed.replicate_index, 0x4e]),
    )?;
    let eigen_ms = ms(t);

    let dk = davis_kahan_gap_bound(emb.u(), pop.u(), pop.gamma_n(), norm_a_minus_p)?;
    let u_aligned = pop.u() * dk.alignment.q();
    let u_diff_frobenius = (emb.u() - &u_aligned).norm();

    let t = Instant::now();
    let mut cluster_cfg = cfg.cluster.clone();
    cluster_cfg.seed = derive_seed(seed.master_seed, &[seed.replicate_index, 0xc1]);
    let (result, sets) = spherical_kmedian(emb.u(), k, &cluster_cfg)?;
    let cluster_ms = ms(t);

    let errors = error_report(result.labels(), truth)?;
    let inputs =
        BoundInputs::from_spec(spec, pop, cfg.epsilon).with_heterogeneity(stats, truth.counts());
    let zero_rows =
        lemma_zero_rows_check(sets.i_zero.len(), u_diff_frobenius, &inputs, &cfg.constants)?;
    let u_aligned_normalized = normalize_rows(&u_aligned);
    let proof = dcbm_proof_sets(&result, &u_aligned_normalized, &sets, &inputs, &cfg.constants)?;
    let dcbm = dcbm_condition_and_bound(&inputs, Some(errors.l), &cfg.constants)?;

    Ok(DcbmReplicate {
        errors,
        norm_a_minus_p,
        ratio_sqrt_d: norm_a_minus_p / spec.degree_scale().sqrt(),
        procrustes_distance: dk.alignment.frobenius_distance(),
        davis_kahan: Check {
            lhs: dk.lhs,
            rhs: dk.rhs,
            holds: dk.holds,
        },
        i_zero_count: sets.i_zero.len(),
        zero_rows,
        proof_set_size: proof.s.len(),
        proof_sets: proof.report,
        condition: dcbm.condition,
        l_bound: dcbm.l_bound,
        simplified_rate: dcbm.simplified_rate,
        mcsherry_reference: mcsherry_reference(&inputs),
        tie_at_k: emb.tie_at_k(),
        num_edges: a.num_edges(),
        timings: Timings {
            sample_ms,
            eigen_ms,
            cluster_ms,
            total_ms: ms(total_start),
        },
    })
}

fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        let norm = m.row(i).norm();
        if norm > 0.0 {
            for j in 0..m.ncols() {
                out[(i, j)] /= norm;
            }
        }
    }
    out
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Median of a sample (average of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Ordinary least squares slope of y against x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}
