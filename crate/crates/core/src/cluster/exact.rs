//! Exhaustive clustering oracles for tiny instances.
//!
//! Both oracles enumerate all set partitions into at most K nonempty blocks.
//! Per-block costs are memoized over subset bitmasks first, so a partition's
//! cost is a table lookup per block; prefix costs are monotone, which makes
//! branch-and-bound pruning sound.

use crate::cluster::weiszfeld::geometric_median_oracle;
use crate::error::{Error, Result};

/// Global minimum of the k-means objective (sum of squared distances to the
/// block mean) over partitions into at most `k` blocks.
pub(crate) fn exact_partition_kmeans(
    points: &[Vec<f64>],
    k: usize,
) -> Result<(Vec<usize>, Vec<Vec<f64>>, f64)> {
    let n = points.len();
    let feasible = (n <= 14 && k <= 3) || (n <= 12 && k <= 4);
    if !feasible {
        return Err(Error::InstanceTooLarge(format!(
            "exact k-means limited to n <= 14 with K <= 3 or n <= 12 with K <= 4; \
             got n = {n}, K = {k}"
        )));
    }
    let costs = kmeans_mask_costs(points);
    let centers_of = |mask: usize| -> Vec<f64> { mask_mean(points, mask) };
    solve(points, k, &costs, centers_of)
}

/// Global minimum of the (2,1)-norm k-median objective (sum of Euclidean
/// distances to the block geometric median) over partitions into at most
/// `k` blocks.
pub(crate) fn exact_partition_kmedian(
    points: &[Vec<f64>],
    k: usize,
) -> Result<(Vec<usize>, Vec<Vec<f64>>, f64)> {
    let n = points.len();
    if n > 12 {
        return Err(Error::InstanceTooLarge(format!(
            "exact k-median limited to n <= 12; got n = {n}"
        )));
    }
    let full = 1usize << n;
    let mut costs = vec![0.0f64; full];
    let mut medians: Vec<Vec<f64>> = vec![Vec::new(); full];
    for mask in 1..full {
        let pts: Vec<Vec<f64>> = members(mask).map(|i| points[i].clone()).collect();
        // the oracle's reported optimum must not sit above a polished
        // heuristic solution, so its medians get the high-accuracy treatment
        let (median, cost) = geometric_median_oracle(&pts);
        costs[mask] = cost;
        medians[mask] = median;
    }
    let centers_of = move |mask: usize| -> Vec<f64> { medians[mask].clone() };
    solve(points, k, &costs, centers_of)
}

fn solve<F>(
    points: &[Vec<f64>],
    k: usize,
    costs: &[f64],
    centers_of: F,
) -> Result<(Vec<usize>, Vec<Vec<f64>>, f64)>
where
    F: Fn(usize) -> Vec<f64>,
{
    let n = points.len();
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(
            "exact clustering needs n >= 1 and K >= 1".into(),
        ));
    }
    let mut best_cost = f64::INFINITY;
    let mut best_blocks: Vec<usize> = Vec::new();
    let mut blocks: Vec<usize> = Vec::new();
    let full = (1usize << n) - 1;
    recurse(full, k, 0.0, costs, &mut blocks, &mut best_cost, &mut best_blocks);

    let dim = points[0].len();
    let mut labels = vec![0usize; n];
    let mut centers = vec![vec![0.0f64; dim]; k];
    for (c, &mask) in best_blocks.iter().enumerate() {
        for i in members(mask) {
            labels[i] = c;
        }
        centers[c] = centers_of(mask);
    }
    // clusters past the used blocks carry a copy of the first center;
    // no point is assigned to them
    for c in best_blocks.len()..k {
        centers[c] = centers[0].clone();
    }
    Ok((labels, centers, best_cost))
}

/// Enumerates partitions of `remaining` into at most `blocks_left` blocks.
/// The lowest remaining element anchors the next block, which makes each
/// partition appear exactly once.
fn recurse(
    remaining: usize,
    blocks_left: usize,
    cost_so_far: f64,
    costs: &[f64],
    blocks: &mut Vec<usize>,
    best_cost: &mut f64,
    best_blocks: &mut Vec<usize>,
) {
    if remaining == 0 {
        if cost_so_far < *best_cost {
            *best_cost = cost_so_far;
            *best_blocks = blocks.clone();
        }
        return;
    }
    if blocks_left == 0 || cost_so_far >= *best_cost {
        return;
    }
    let anchor = remaining & remaining.wrapping_neg();
    let rest = remaining & !anchor;
    // enumerate every subset s of `rest`; the block is anchor | s
    let mut s = rest;
    loop {
        let block = anchor | s;
        let c = costs[block];
        if cost_so_far + c < *best_cost {
            blocks.push(block);
            recurse(
                remaining & !block,
                blocks_left - 1,
                cost_so_far + c,
                costs,
                blocks,
                best_cost,
                best_blocks,
            );
            blocks.pop();
        }
        if s == 0 {
            break;
        }
        s = (s - 1) & rest;
    }
}

fn kmeans_mask_costs(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let dim = points[0].len();
    let full = 1usize << n;
    let mut costs = vec![0.0f64; full];
    for mask in 1..full {
        let mut sum = vec![0.0f64; dim];
        let mut sumsq = 0.0f64;
        let mut count = 0usize;
        for i in members(mask) {
            for (s, &x) in sum.iter_mut().zip(&points[i]) {
                *s += x;
            }
            sumsq += points[i].iter().map(|x| x * x).sum::<f64>();
            count += 1;
        }
        let mean_sq: f64 = sum.iter().map(|s| s * s).sum::<f64>() / count as f64;
        costs[mask] = (sumsq - mean_sq).max(0.0);
    }
    costs
}

fn mask_mean(points: &[Vec<f64>], mask: usize) -> Vec<f64> {
    let dim = points[0].len();
    let mut sum = vec![0.0f64; dim];
    let mut count = 0usize;
    for i in members(mask) {
        for (s, &x) in sum.iter_mut().zip(&points[i]) {
            *s += x;
        }
        count += 1;
    }
    for s in &mut sum {
        *s /= count as f64;
    }
    sum
}

fn members(mask: usize) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}
