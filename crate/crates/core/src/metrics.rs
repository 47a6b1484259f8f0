//! Misclustering criteria with exact permutation minimization.
//!
//! `L` counts the overall fraction of mismatched nodes (each mismatched row
//! of the membership matrix contributes 2 to the ℓ₀ norm); it reduces to a
//! maximum-weight assignment on the K×K confusion matrix because the
//! objective is linear in matched counts. `L̃` is a bottleneck (min-max)
//! objective that is not assignment-reducible, so it enumerates all K!
//! permutations; the K ≤ 10 cap keeps that ≤ 3.6M evaluations. The optimal
//! permutation can differ between the two criteria and both are reported.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MembershipMatrix;

const L_TILDE_MAX_K: usize = 10;

/// Overall and worst-case-per-community relative error of an estimated
/// membership against the truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Overall relative error in [0, 2].
    pub l: f64,
    /// Worst-case per-community relative error in [0, 2]; L ≤ L̃.
    pub l_tilde: f64,
    /// L-optimal permutation: estimated label k (0-based) plays truth label
    /// `l_permutation[k]`.
    pub l_permutation: Vec<usize>,
    /// L̃-optimal permutation; may differ from `l_permutation`.
    pub l_tilde_permutation: Vec<usize>,
    /// Mismatch counts per true community, under the L-optimal permutation.
    pub per_community_errors: Vec<usize>,
    /// Nodes mismatched under the L-optimal permutation, ascending.
    pub misclustered_nodes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LResult {
    pub l: f64,
    pub permutation: Vec<usize>,
    pub mismatched_nodes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LTildeResult {
    pub l_tilde: f64,
    pub permutation: Vec<usize>,
}

fn confusion(pred: &[usize], truth: &MembershipMatrix) -> Result<Vec<Vec<usize>>> {
    let n = truth.n();
    let k = truth.k();
    if pred.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "estimate covers {} nodes, truth covers {n}",
            pred.len()
        )));
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (i, &p) in pred.iter().enumerate() {
        if p >= k {
            return Err(Error::InvalidParameter(format!(
                "estimated label {} at node {i} out of range for K = {k}",
                p + 1
            )));
        }
        counts[p][truth.label(i)] += 1;
    }
    Ok(counts)
}

/// Overall relative error L = n⁻¹·min_J ‖Θ̂J − Θ‖₀ via optimal assignment.
pub fn error_l(pred: &[usize], truth: &MembershipMatrix) -> Result<LResult> {
    let counts = confusion(pred, truth)?;
    let _k = truth.k();
    let n = truth.n();
    // maximize matched counts = minimize negated weights
    let cost: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| -(c as f64)).collect())
        .collect();
    let (permutation, neg_matched) = min_cost_assignment(&cost);
    let matched = -neg_matched;
    let l = 2.0 * (n as f64 - matched) / n as f64;
    let mismatched_nodes = pred
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| (permutation[p] != truth.label(i)).then_some(i))
        .collect();
    Ok(LResult {
        l,
        permutation,
        mismatched_nodes,
    })
}

/// Worst-case per-community error L̃ by exhaustive permutation search.
pub fn error_l_tilde(pred: &[usize], truth: &MembershipMatrix) -> Result<LTildeResult> {
    let k = truth.k();
    if k > L_TILDE_MAX_K {
        return Err(Error::InstanceTooLarge(format!(
            "L-tilde enumerates K! permutations; K = {k} exceeds the cap {L_TILDE_MAX_K}"
        )));
    }
    let counts = confusion(pred, truth)?;
    let sizes = truth.counts();
    let mut best = f64::INFINITY;
    let mut best_perm: Vec<usize> = (0..k).collect();
    let mut perm: Vec<usize> = (0..k).collect();
    permute_heap(&mut perm, 0, &mut |p: &[usize]| {
        let mut worst = 0.0f64;
        for (j, &target) in p.iter().enumerate() {
            let mismatches = sizes[target] - counts[j][target];
            let rel = 2.0 * mismatches as f64 / sizes[target] as f64;
            worst = worst.max(rel);
        }
        if worst < best {
            best = worst;
            best_perm = p.to_vec();
        }
    });
    Ok(LTildeResult {
        l_tilde: best,
        permutation: best_perm,
    })
}

fn permute_heap(arr: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == arr.len() {
        visit(arr);
        return;
    }
    for i in start..arr.len() {
        arr.swap(start, i);
        permute_heap(arr, start + 1, visit);
        arr.swap(start, i);
    }
}

/// Both criteria plus per-community diagnostics under the L-optimal
/// permutation.
pub fn error_report(pred: &[usize], truth: &MembershipMatrix) -> Result<ErrorReport> {
    let l = error_l(pred, truth)?;
    let lt = error_l_tilde(pred, truth)?;
    let mut per_community = vec![0usize; truth.k()];
    for &i in &l.mismatched_nodes {
        per_community[truth.label(i)] += 1;
    }
    Ok(ErrorReport {
        l: l.l,
        l_tilde: lt.l_tilde,
        l_permutation: l.permutation,
        l_tilde_permutation: lt.permutation,
        per_community_errors: per_community,
        misclustered_nodes: l.mismatched_nodes,
    })
}

/// Exception sets of the k-means performance lemma:
/// S_k = {i ∈ G_k : ‖Ū_{i*} − U_{i*}‖ ≥ δ_k/2} (boundary inclusive).
#[derive(Debug, Clone)]
pub struct ExceptionSets {
    pub sets: Vec<Vec<usize>>,
    /// Σ_k |S_k|·δ_k².
    pub weighted_count: f64,
}

impl ExceptionSets {
    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    /// Σ_k |S_k| / n_k.
    pub fn sum_relative(&self, truth: &MembershipMatrix) -> f64 {
        self.sets
            .iter()
            .zip(truth.counts())
            .map(|(s, &nk)| s.len() as f64 / nk as f64)
            .sum()
    }
}

/// The caller's δ_k must satisfy δ_k ≤ min_{ℓ≠k} ‖X_{ℓ*} − X_{k*}‖, where
/// the population row positions X are recovered as per-community means of
/// `u_pop` rows (exact for an SBM population matrix).
pub fn exception_sets(
    u_bar: &DMatrix<f64>,
    u_pop: &DMatrix<f64>,
    truth: &MembershipMatrix,
    delta: &[f64],
) -> Result<ExceptionSets> {
    let n = truth.n();
    let k = truth.k();
    if u_bar.shape() != u_pop.shape() || u_bar.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrices {:?} vs {:?}, truth n = {n}",
            u_bar.shape(),
            u_pop.shape()
        )));
    }
    if delta.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} radii for K = {k}",
            delta.len()
        )));
    }
    // recover X rows and validate the separation precondition (non-strict)
    let dim = u_pop.ncols();
    let mut x = vec![vec![0.0f64; dim]; k];
    for i in 0..n {
        let g = truth.label(i);
        for j in 0..dim {
            x[g][j] += u_pop[(i, j)];
        }
    }
    for (g, row) in x.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= truth.counts()[g] as f64;
        }
    }
    for a in 0..k {
        let min_sep = (0..k)
            .filter(|&b| b != a)
            .map(|b| {
                x[a].iter()
                    .zip(&x[b])
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        if delta[a] > min_sep + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "delta[{a}] = {} exceeds the minimum center separation {min_sep}",
                delta[a]
            )));
        }
    }
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..n {
        let g = truth.label(i);
        let dist = (u_bar.row(i) - u_pop.row(i)).norm();
        if dist >= delta[g] / 2.0 {
            sets[g].push(i);
        }
    }
    let weighted_count = sets
        .iter()
        .zip(delta)
        .map(|(s, &d)| s.len() as f64 * d * d)
        .sum();
    Ok(ExceptionSets {
        sets,
        weighted_count,
    })
}

/// The default radii of the SBM analysis: δ_k = √(1/n_k + 1/max_{ℓ≠k} n_ℓ).
pub fn default_delta(truth: &MembershipMatrix) -> Result<Vec<f64>> {
    let k = truth.k();
    if k < 2 {
        return Err(Error::InvalidParameter(
            "separation radii need K >= 2".into(),
        ));
    }
    let counts = truth.counts();
    Ok((0..k)
        .map(|a| {
            let other_max = (0..k)
                .filter(|&b| b != a)
                .map(|b| counts[b])
                .max()
                .expect("K >= 2");
            (1.0 / counts[a] as f64 + 1.0 / other_max as f64).sqrt()
        })
        .collect())
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm with potentials, O(K³)). Returns row→column assignment and the
/// attained cost. Costs may be negative.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    assert!(n > 0 && cost.iter().all(|r| r.len() == n));
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        let row = matched_row[j];
        assignment[row - 1] = j - 1;
        total += cost[row - 1][j - 1];
    }
    (assignment, total)
}
