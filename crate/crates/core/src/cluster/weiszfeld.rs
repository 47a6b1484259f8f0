//! Geometric median via Weiszfeld iteration.
//!
//! The update is the classic reweighted average, with the Vardi-Zhang
//! correction when the iterate lands on a data point (where the plain
//! Weiszfeld map is undefined). The k-median objective optimizes centers
//! over all of ℝ^d, so a continuous median is required rather than a medoid.

const COINCIDENCE_EPS: f64 = 1e-14;

/// Returns the geometric median and the attained cost Σ_i ‖x_i − y‖,
/// starting the iteration from the centroid.
pub fn geometric_median(points: &[Vec<f64>], tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    assert!(!points.is_empty());
    let dim = points[0].len();
    let mut centroid = vec![0.0f64; dim];
    for p in points {
        for (yi, pi) in centroid.iter_mut().zip(p) {
            *yi += pi;
        }
    }
    for yi in &mut centroid {
        *yi /= points.len() as f64;
    }
    geometric_median_from(points, centroid, tol, max_iter)
}

/// Weiszfeld iteration warm-started at `start`. Every step is a descent
/// step, so the returned cost never exceeds the cost at `start`.
pub fn geometric_median_from(
    points: &[Vec<f64>],
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    assert!(!points.is_empty());
    let dim = points[0].len();
    assert_eq!(start.len(), dim);
    if points.len() == 1 {
        return (points[0].clone(), 0.0);
    }
    let mut y = start;

    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);

    // Near-data-point medians make the step size a poor convergence signal,
    // so also stop when the cost itself stagnates.
    let mut prev_cost = f64::INFINITY;
    let mut stagnant = 0u32;

    for _ in 0..max_iter {
        let mut coincident = 0usize;
        let mut weight_sum = 0.0f64;
        let mut weighted = vec![0.0f64; dim];
        let mut pull = vec![0.0f64; dim];
        let mut cost_here = 0.0f64;
        for p in points {
            let d = dist(p, &y);
            cost_here += d;
            if d <= COINCIDENCE_EPS * scale {
                coincident += 1;
                continue;
            }
            let w = 1.0 / d;
            weight_sum += w;
            for i in 0..dim {
                weighted[i] += p[i] * w;
                pull[i] += (p[i] - y[i]) * w;
            }
        }
        if weight_sum == 0.0 {
            // all points coincide with y
            break;
        }
        if prev_cost - cost_here <= 1e-15 * cost_here.max(1e-300) {
            stagnant += 1;
            if stagnant >= 3 {
                break;
            }
        } else {
            stagnant = 0;
        }
        prev_cost = cost_here;
        let t: Vec<f64> = weighted.iter().map(|v| v / weight_sum).collect();
        let next = if coincident == 0 {
            t
        } else {
            // Vardi-Zhang step at a data point: optimal iff the pull of the
            // remaining points does not exceed the local multiplicity.
            let r = pull.iter().map(|v| v * v).sum::<f64>().sqrt();
            let eta = coincident as f64;
            if r <= eta {
                break;
            }
            let lambda = (1.0 - eta / r).max(0.0);
            t.iter()
                .zip(&y)
                .map(|(ti, yi)| lambda * ti + (1.0 - lambda) * yi)
                .collect()
        };
        let step = dist(&next, &y);
        y = next;
        if step <= tol * (1.0 + norm(&y)) {
            break;
        }
    }
    let cost = points.iter().map(|p| dist(p, &y)).sum();
    (y, cost)
}

/// High-accuracy geometric median for the exact oracles: Weiszfeld from the
/// centroid with a generous budget, floored by the best data point (whose
/// cost is exact) refined with a warm start.
pub(crate) fn geometric_median_oracle(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let (mut best_y, mut best_cost) = geometric_median(points, 1e-14, 100_000);
    let mut best_point: Option<usize> = None;
    for (i, candidate) in points.iter().enumerate() {
        let c: f64 = points.iter().map(|p| dist(p, candidate)).sum();
        if c < best_cost {
            best_cost = c;
            best_point = Some(i);
        }
    }
    if let Some(i) = best_point {
        let (y, c) = geometric_median_from(points, points[i].clone(), 1e-14, 100_000);
        if c < best_cost {
            return (y, c);
        }
        return (points[i].clone(), best_cost);
    }
    // polish once more from the incumbent
    let (y, c) = geometric_median_from(points, best_y.clone(), 1e-14, 100_000);
    if c < best_cost {
        best_y = y;
        best_cost = c;
    }
    (best_y, best_cost)
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
