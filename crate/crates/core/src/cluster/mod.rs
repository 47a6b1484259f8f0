//! Approximate k-means, spherical k-median, and exact brute-force oracles.
//!
//! The approximate solvers are the practical stand-ins for the certified
//! (1+ε) algorithms the theory assumes: distance-weighted seeding plus Lloyd
//! iteration for k-means, and seeding plus alternating assignment/Weiszfeld
//! updates with single-swap local search for the (2,1)-norm k-median. Each
//! runs `restarts` independent times and keeps the best objective. The
//! achieved approximation ratio is certified against the exact oracles on
//! instances small enough to enumerate; elsewhere ε is nominal input.

mod exact;
mod weiszfeld;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::{derive_seed, SplitMix64};

pub use weiszfeld::geometric_median;

/// Rows with norm at or below this threshold are treated as exactly zero
/// when forming I₀; eigenvector rows vanish only in degenerate graphs.
pub const ZERO_ROW_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seeding {
    /// k-means++-style: new centers sampled with probability proportional
    /// to distance^2 (k-means) or distance (k-median) to the chosen set.
    DistanceWeighted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxConfig {
    /// Nominal approximation slack ε; recorded in reports, certified only
    /// against the exact oracles on oracle-sized instances.
    pub epsilon_target: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seeding: Seeding,
    /// Improvement passes of single-swap local search (k-median only).
    pub local_search_swaps: usize,
    pub seed: u64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            epsilon_target: 0.5,
            restarts: 10,
            max_iterations: 100,
            seeding: Seeding::DistanceWeighted,
            local_search_swaps: 2,
            seed: 0,
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if self.epsilon_target < 0.0 {
            return Err(Error::InvalidParameter("epsilon_target must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A clustering with its centers and achieved objective.
///
/// `objective` is always recomputable from (labels, centers): squared
/// Frobenius for k-means, the (2,1)-norm for k-median (over I₊ rows for the
/// spherical variant).
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    labels: Vec<usize>,
    centers: DMatrix<f64>,
    objective: f64,
    restarts_used: usize,
    best_restart: usize,
    iterations: usize,
    empty_repairs: usize,
}

impl ClusteringResult {
    /// 0-based cluster labels, length n.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn one_based_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l + 1).collect()
    }

    /// K×dim center matrix.
    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn restarts_used(&self) -> usize {
        self.restarts_used
    }

    pub fn best_restart(&self) -> usize {
        self.best_restart
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn empty_repairs(&self) -> usize {
        self.empty_repairs
    }

    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    /// The fitted matrix Θ̂X̂: row i is the center of i's cluster.
    pub fn fitted_rows(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.labels.len(), self.centers.ncols(), |i, j| {
            self.centers[(self.labels[i], j)]
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ClusteringResultJson {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    objective: f64,
    restarts_used: usize,
}

impl Serialize for ClusteringResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ClusteringResultJson {
            labels: self.one_based_labels(),
            centers: (0..self.centers.nrows())
                .map(|r| self.centers.row(r).iter().cloned().collect())
                .collect(),
            objective: self.objective,
            restarts_used: self.restarts_used,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClusteringResult {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ClusteringResultJson::deserialize(deserializer)?;
        let k = raw.centers.len();
        let dim = raw.centers.first().map_or(0, Vec::len);
        if raw.centers.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom("ragged center matrix"));
        }
        let labels = raw
            .labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .filter(|&z| z < k.max(1))
                    .ok_or_else(|| serde::de::Error::custom(format!("bad 1-based label {l}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            labels,
            centers: DMatrix::from_fn(k, dim, |i, j| raw.centers[i][j]),
            objective: raw.objective,
            restarts_used: raw.restarts_used,
            best_restart: 0,
            iterations: 0,
            empty_repairs: 0,
        })
    }
}

/// Zero-row bookkeeping of the spherical algorithm.
#[derive(Debug, Clone)]
pub struct SphericalSets {
    /// Indices with ‖Û_{i*}‖ above the zero threshold, ascending.
    pub i_plus: Vec<usize>,
    /// Indices with (numerically) zero rows; assigned to cluster 1.
    pub i_zero: Vec<usize>,
}

/// Relabels clusters by order of first appearance, giving a canonical form
/// for partition comparisons.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = Vec::new();
    let mut next = 0usize;
    labels
        .iter()
        .map(|&l| {
            if l >= map.len() {
                map.resize(l + 1, None);
            }
            *map[l].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

// --- k-means --------------------------------------------------------------

/// Restarted k-means++/Lloyd on the rows of `rows`.
pub fn kmeans_approx(rows: &DMatrix<f64>, k: usize, cfg: &ApproxConfig) -> Result<ClusteringResult> {
    cfg.validate()?;
    let n = rows.nrows();
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!(
            "k-means needs 1 <= K <= n; got K = {k}, n = {n}"
        )));
    }
    let points = rows_to_vecs(rows);
    let outcomes = exec::map_indexed(cfg.restarts, |r| {
        let seed = derive_seed(cfg.seed, &[0x6b6d, r as u64]);
        kmeans_one_restart(&points, k, cfg.max_iterations, seed)
    });
    Ok(pick_best(outcomes, cfg.restarts, points[0].len()))
}

/// Exact k-means by exhaustive partition enumeration (oracle-sized inputs).
pub fn kmeans_exact(rows: &DMatrix<f64>, k: usize) -> Result<ClusteringResult> {
    let points = rows_to_vecs(rows);
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty input".into()));
    }
    let (labels, centers, objective) = exact::exact_partition_kmeans(&points, k)?;
    Ok(result_from_parts(labels, centers, objective))
}

struct RestartOutcome {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    objective: f64,
    iterations: usize,
    empty_repairs: usize,
}

fn kmeans_one_restart(
    points: &[Vec<f64>],
    k: usize,
    max_iterations: usize,
    seed: u64,
) -> RestartOutcome {
    let _n = points.len();
    let mut rng = SplitMix64::new(seed);
    let mut centers = seed_distance_weighted(points, k, &mut rng, true);
    let mut repairs = 0usize;
    let (mut labels, mut obj) = assign_and_repair(points, &mut centers, true, &mut repairs);
    let mut iterations = 0usize;
    for _ in 0..max_iterations {
        iterations += 1;
        update_means(points, &labels, k, &mut centers);
        let repairs_before = repairs;
        let (new_labels, new_obj) = assign_and_repair(points, &mut centers, true, &mut repairs);
        debug_assert!(
            new_obj <= obj * (1.0 + 1e-9) + 1e-12,
            "k-means objective increased: {obj} -> {new_obj}"
        );
        let stable = new_labels == labels && repairs == repairs_before;
        labels = new_labels;
        obj = new_obj;
        if stable {
            break;
        }
    }
    update_means(points, &labels, k, &mut centers);
    let objective = cost(points, &labels, &centers, true);
    RestartOutcome {
        labels,
        centers,
        objective,
        iterations,
        empty_repairs: repairs,
    }
}

// --- spherical k-median -----------------------------------------------------

/// Spherical k-median: drops zero rows into I₀ (assigned to cluster 1),
/// row-normalizes the rest, and solves the (2,1)-norm k-median there.
pub fn spherical_kmedian(
    u_hat: &DMatrix<f64>,
    k: usize,
    cfg: &ApproxConfig,
) -> Result<(ClusteringResult, SphericalSets)> {
    cfg.validate()?;
    let n = u_hat.nrows();
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!(
            "k-median needs 1 <= K <= n; got K = {k}, n = {n}"
        )));
    }
    let mut i_plus = Vec::new();
    let mut i_zero = Vec::new();
    for i in 0..n {
        if u_hat.row(i).norm() > ZERO_ROW_THRESHOLD {
            i_plus.push(i);
        } else {
            i_zero.push(i);
        }
    }
    if i_plus.is_empty() {
        return Err(Error::InvalidParameter(
            "all rows are zero; nothing to cluster".into(),
        ));
    }
    if i_plus.len() < k {
        return Err(Error::InvalidParameter(format!(
            "only {} nonzero rows for K = {k}",
            i_plus.len()
        )));
    }
    let points: Vec<Vec<f64>> = i_plus
        .iter()
        .map(|&i| {
            let norm = u_hat.row(i).norm();
            u_hat.row(i).iter().map(|&v| v / norm).collect()
        })
        .collect();

    let outcomes = exec::map_indexed(cfg.restarts, |r| {
        let seed = derive_seed(cfg.seed, &[0x6b6d65, r as u64]);
        kmedian_one_restart(
            &points,
            k,
            cfg.max_iterations,
            cfg.local_search_swaps,
            seed,
        )
    });
    let solved = pick_best(outcomes, cfg.restarts, points[0].len());

    let mut labels = vec![0usize; n];
    for (pos, &i) in i_plus.iter().enumerate() {
        labels[i] = solved.labels[pos];
    }
    // i ∉ I₊ keeps label 0: the membership row (1, 0, ..., 0)
    Ok((
        ClusteringResult {
            labels,
            ..solved
        },
        SphericalSets { i_plus, i_zero },
    ))
}

/// Exact (2,1)-norm k-median by exhaustive partition enumeration with
/// Weiszfeld centers (oracle-sized inputs).
pub fn kmedian_exact(rows: &DMatrix<f64>, k: usize) -> Result<ClusteringResult> {
    let points = rows_to_vecs(rows);
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty input".into()));
    }
    let (labels, centers, objective) = exact::exact_partition_kmedian(&points, k)?;
    Ok(result_from_parts(labels, centers, objective))
}

fn kmedian_one_restart(
    points: &[Vec<f64>],
    k: usize,
    max_iterations: usize,
    swap_passes: usize,
    seed: u64,
) -> RestartOutcome {
    let mut rng = SplitMix64::new(seed);
    let mut centers = seed_distance_weighted(points, k, &mut rng, false);
    let mut repairs = 0usize;
    let (mut labels, mut obj) = assign_and_repair(points, &mut centers, false, &mut repairs);
    let mut iterations = 0usize;

    let refine = |centers: &mut Vec<Vec<f64>>,
                      labels: &mut Vec<usize>,
                      obj: &mut f64,
                      iterations: &mut usize,
                      repairs: &mut usize| {
        for _ in 0..max_iterations {
            *iterations += 1;
            update_medians(points, labels, k, centers);
            let repairs_before = *repairs;
            let (new_labels, new_obj) = assign_and_repair(points, centers, false, repairs);
            debug_assert!(
                new_obj <= *obj * (1.0 + 1e-9) + 1e-12,
                "k-median objective increased: {} -> {new_obj}",
                *obj
            );
            let stable = new_labels == *labels && *repairs == repairs_before;
            *labels = new_labels;
            *obj = new_obj;
            if stable {
                break;
            }
        }
    };

    refine(&mut centers, &mut labels, &mut obj, &mut iterations, &mut repairs);

    for _ in 0..swap_passes {
        match best_single_swap(points, &centers, k) {
            Some((c, p, improved_obj)) if improved_obj < obj - 1e-12 => {
                centers[c] = points[p].clone();
                let (new_labels, new_obj) =
                    assign_and_repair(points, &mut centers, false, &mut repairs);
                labels = new_labels;
                obj = new_obj;
                refine(&mut centers, &mut labels, &mut obj, &mut iterations, &mut repairs);
            }
            _ => break,
        }
    }

    update_medians(points, &labels, k, &mut centers);
    let objective = cost(points, &labels, &centers, false);
    RestartOutcome {
        labels,
        centers,
        objective,
        iterations,
        empty_repairs: repairs,
    }
}

/// Evaluates every (center, point) swap against the current centers using
/// nearest/second-nearest distances; returns the best improving swap.
fn best_single_swap(
    points: &[Vec<f64>],
    centers: &[Vec<f64>],
    k: usize,
) -> Option<(usize, usize, f64)> {
    let n = points.len();
    let mut nearest = vec![0usize; n];
    let mut d1 = vec![0.0f64; n];
    let mut d2 = vec![0.0f64; n];
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut second = f64::INFINITY;
        let mut arg = 0usize;
        for (c, center) in centers.iter().enumerate() {
            let d = dist(&points[i], center);
            if d < best {
                second = best;
                best = d;
                arg = c;
            } else if d < second {
                second = d;
            }
        }
        nearest[i] = arg;
        d1[i] = best;
        d2[i] = second;
    }
    let base: f64 = d1.iter().sum();
    let mut best_swap: Option<(usize, usize, f64)> = None;
    for p in 0..n {
        let dp: Vec<f64> = (0..n).map(|i| dist(&points[i], &points[p])).collect();
        for c in 0..k {
            let mut obj = 0.0;
            for i in 0..n {
                let keep = if nearest[i] == c { d2[i] } else { d1[i] };
                obj += keep.min(dp[i]);
            }
            if obj < base - 1e-12 && best_swap.is_none_or(|(_, _, cur)| obj < cur - 1e-15) {
                best_swap = Some((c, p, obj));
            }
        }
    }
    best_swap
}

// --- shared machinery -------------------------------------------------------

fn rows_to_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

fn result_from_parts(labels: Vec<usize>, centers: Vec<Vec<f64>>, objective: f64) -> ClusteringResult {
    let k = centers.len();
    let dim = centers[0].len();
    ClusteringResult {
        labels,
        centers: DMatrix::from_fn(k, dim, |i, j| centers[i][j]),
        objective,
        restarts_used: 1,
        best_restart: 0,
        iterations: 0,
        empty_repairs: 0,
    }
}

fn pick_best(outcomes: Vec<RestartOutcome>, restarts: usize, dim: usize) -> ClusteringResult {
    let mut best_idx = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if o.objective < outcomes[best_idx].objective {
            best_idx = i;
        }
    }
    let best = &outcomes[best_idx];
    let k = best.centers.len();
    ClusteringResult {
        labels: best.labels.clone(),
        centers: DMatrix::from_fn(k, dim, |i, j| best.centers[i][j]),
        objective: best.objective,
        restarts_used: restarts,
        best_restart: best_idx,
        iterations: best.iterations,
        empty_repairs: best.empty_repairs,
    }
}

/// Distance-weighted seeding: probability ∝ d² (k-means) or d (k-median).
fn seed_distance_weighted(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut SplitMix64,
    squared: bool,
) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.next_below(n)].clone());
    let mut d_sq: Vec<f64> = points.iter().map(|p| dist_sq(p, &centers[0])).collect();
    while centers.len() < k {
        let weights: Vec<f64> = d_sq
            .iter()
            .map(|&d| if squared { d } else { d.sqrt() })
            .collect();
        let total: f64 = weights.iter().sum();
        let idx = if total <= 0.0 {
            rng.next_below(n)
        } else {
            let mut target = rng.next_f64() * total;
            let mut chosen = n - 1;
            for (i, &w) in weights.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            d_sq[i] = d_sq[i].min(dist_sq(p, centers.last().unwrap()));
        }
    }
    centers
}

/// Assigns each point to its nearest center (ties: lowest index), repairing
/// empty clusters by reseeding them at the point farthest from its own
/// center. Returns labels and the objective under the given metric.
fn assign_and_repair(
    points: &[Vec<f64>],
    centers: &mut [Vec<f64>],
    squared: bool,
    repairs: &mut usize,
) -> (Vec<usize>, f64) {
    let n = points.len();
    let k = centers.len();
    let mut labels = vec![0usize; n];
    let mut counts = vec![0usize; k];
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        for (c, center) in centers.iter().enumerate() {
            let d = dist_sq(&points[i], center);
            if d < best {
                best = d;
                arg = c;
            }
        }
        labels[i] = arg;
        counts[arg] += 1;
    }
    // keep all K clusters populated where attainable
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut far_idx = None;
        let mut far_d = -1.0f64;
        for i in 0..n {
            if counts[labels[i]] <= 1 {
                continue;
            }
            let d = dist_sq(&points[i], &centers[labels[i]]);
            if d > far_d {
                far_d = d;
                far_idx = Some(i);
            }
        }
        let Some(i) = far_idx else {
            break; // fewer distinct points than clusters; leave empty
        };
        if far_d <= 0.0 {
            break; // every point sits on its center; nothing to move
        }
        centers[empty] = points[i].clone();
        counts[labels[i]] -= 1;
        labels[i] = empty;
        counts[empty] += 1;
        *repairs += 1;
    }
    let obj = cost(points, &labels, centers, squared);
    (labels, obj)
}

fn update_means(points: &[Vec<f64>], labels: &[usize], k: usize, centers: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, &x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for (dst, s) in centers[c].iter_mut().zip(&sums[c]) {
                *dst = s / counts[c] as f64;
            }
        }
    }
}

fn update_medians(points: &[Vec<f64>], labels: &[usize], k: usize, centers: &mut [Vec<f64>]) {
    for c in 0..k {
        let cluster: Vec<Vec<f64>> = points
            .iter()
            .zip(labels)
            .filter_map(|(p, &l)| (l == c).then(|| p.clone()))
            .collect();
        if !cluster.is_empty() {
            // warm start at the incumbent center: Weiszfeld descends, so the
            // cluster cost never increases across the update
            let (median, _) =
                weiszfeld::geometric_median_from(&cluster, centers[c].clone(), 1e-10, 300);
            centers[c] = median;
        }
    }
}

fn cost(points: &[Vec<f64>], labels: &[usize], centers: &[Vec<f64>], squared: bool) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let d = dist_sq(p, &centers[l]);
            if squared {
                d
            } else {
                d.sqrt()
            }
        })
        .sum()
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}
