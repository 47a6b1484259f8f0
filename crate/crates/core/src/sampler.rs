//! Reproducible adjacency sampling.
//!
//! Each upper-triangle entry is an independent Bernoulli draw whose uniform
//! variate is a pure function of (master seed, replicate index, i, j), so a
//! sample is identical no matter how the sweep is scheduled across threads.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::ModelSpec;
use crate::rng::EntryRng;

/// Largest n for which a dense adjacency view will be materialized.
pub const DENSE_ADJACENCY_LIMIT: usize = 4000;

/// Identifies one replicate's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replicate_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        Self {
            master_seed,
            replicate_index,
        }
    }
}

/// Symmetric hollow 0/1 matrix stored as a sorted upper-triangle edge list
/// plus a CSR view of the full symmetric pattern for matrix-vector products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    edges: Vec<(u32, u32)>,
    degrees: Vec<u32>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl AdjacencyMatrix {
    /// Builds from upper-triangle edges; rejects self-loops, out-of-range
    /// endpoints, and duplicate pairs. Edges are sorted lexicographically.
    pub fn from_edges(n: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph must have n >= 1".into()));
        }
        for &mut (ref mut i, ref mut j) in &mut edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
            }
            if *i > *j {
                std::mem::swap(i, j);
            }
            if *j as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge endpoint {j} out of range for n = {n}"
                )));
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate edge".into()));
        }
        Ok(Self::from_sorted_edges(n, edges))
    }

    fn from_sorted_edges(n: usize, edges: Vec<(u32, u32)>) -> Self {
        let mut degrees = vec![0u32; n];
        for &(i, j) in &edges {
            degrees[i as usize] += 1;
            degrees[j as usize] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for v in 0..n {
            row_ptr[v + 1] = row_ptr[v] + degrees[v] as usize;
        }
        let mut cursor = row_ptr.clone();
        let mut col_idx = vec![0u32; 2 * edges.len()];
        for &(i, j) in &edges {
            col_idx[cursor[i as usize]] = j;
            cursor[i as usize] += 1;
            col_idx[cursor[j as usize]] = i;
            cursor[j as usize] += 1;
        }
        // Neighbor lists come out sorted because edges are lexicographic in
        // (i, j): for a fixed row, smaller partners are appended first.
        Self {
            n,
            edges,
            degrees,
            row_ptr,
            col_idx,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted upper-triangle edge list, i < j.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degree(&self, node: usize) -> u32 {
        self.degrees[node]
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[node]..self.row_ptr[node + 1]]
    }

    /// a_{ij}; the diagonal is zero by construction.
    pub fn entry(&self, i: usize, j: usize) -> u8 {
        if i == j {
            return 0;
        }
        u8::from(self.neighbors(i).binary_search(&(j as u32)).is_ok())
    }

    /// y = A·x via the CSR pattern.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for v in 0..self.n {
            let mut acc = 0.0;
            for &w in self.neighbors(v) {
                acc += x[w as usize];
            }
            y[v] = acc;
        }
    }

    /// Dense symmetric view, limited to desk scale.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_ADJACENCY_LIMIT {
            return Err(Error::InstanceTooLarge(format!(
                "dense adjacency requested for n = {} > {DENSE_ADJACENCY_LIMIT}",
                self.n
            )));
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            m[(i as usize, j as usize)] = 1.0;
            m[(j as usize, i as usize)] = 1.0;
        }
        Ok(m)
    }

    /// Writes the edge-list format: header `n m`, then one `i j` line per
    /// edge (0-based, i < j, sorted lexicographically).
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.edges.len())?;
        for &(i, j) in &self.edges {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedEdgeList("empty file".into()))??;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedEdgeList("bad header".into()))?;
        let m: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedEdgeList("bad header".into()))?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let i: u32 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MalformedEdgeList(format!("bad edge line: {line}")))?;
            let j: u32 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MalformedEdgeList(format!("bad edge line: {line}")))?;
            edges.push((i, j));
        }
        if edges.len() != m {
            return Err(Error::MalformedEdgeList(format!(
                "header promises {m} edges, found {}",
                edges.len()
            )));
        }
        Self::from_edges(n, edges)
    }
}

/// Draws an adjacency matrix from the model: independent Bernoulli(P_ij)
/// above the diagonal, mirrored below, zero diagonal. Row sweeps fan out
/// across threads; the per-entry keyed draws make the result identical in
/// any execution order.
pub fn sample_adjacency(spec: &ModelSpec, seed: SeedSpec) -> AdjacencyMatrix {
    let n = spec.n();
    let rng = EntryRng::new(seed.master_seed, seed.replicate_index);
    let labels = spec.membership().labels();
    let b = spec.connectivity().matrix();
    let k = spec.k();
    let psi: Vec<f64> = (0..n).map(|i| spec.psi(i)).collect();

    let rows: Vec<Vec<(u32, u32)>> = exec::map_indexed(n.saturating_sub(1), |i| {
        let gi = labels[i];
        let psi_i = psi[i];
        let b_row: Vec<f64> = (0..k).map(|l| b[(gi, l)]).collect();
        let mut out = Vec::new();
        for j in (i + 1)..n {
            let p = psi_i * psi[j] * b_row[labels[j]];
            if rng.uniform(i as u32, j as u32) < p {
                out.push((i as u32, j as u32));
            }
        }
        out
    });
    let edges: Vec<(u32, u32)> = rows.into_iter().flatten().collect();
    AdjacencyMatrix::from_sorted_edges(n, edges)
}

/// Expected-degree summary of a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    /// max_i Σ_{j≠i} P_ij
    pub max_expected: f64,
    /// n⁻¹ Σ_i Σ_{j≠i} P_ij
    pub mean_expected: f64,
    /// d = n·α_n, the theoretical upper bound on both.
    pub degree_scale: f64,
}

/// Exact expected degrees in O(nK) using the block structure.
pub fn expected_degree_summary(spec: &ModelSpec) -> DegreeSummary {
    let n = spec.n();
    let k = spec.k();
    let labels = spec.membership().labels();
    let b = spec.connectivity().matrix();
    let mut psi_sums = vec![0.0f64; k];
    for i in 0..n {
        psi_sums[labels[i]] += spec.psi(i);
    }
    let mut max_expected = 0.0f64;
    let mut total = 0.0f64;
    for i in 0..n {
        let gi = labels[i];
        let psi_i = spec.psi(i);
        let mut row = 0.0;
        for l in 0..k {
            row += b[(gi, l)] * psi_sums[l];
        }
        // remove the j = i term
        row -= b[(gi, gi)] * psi_i;
        let expected = psi_i * row;
        max_expected = max_expected.max(expected);
        total += expected;
    }
    DegreeSummary {
        max_expected,
        mean_expected: total / n as f64,
        degree_scale: spec.degree_scale(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        preset_planted_partition, ConnectivityMatrix, DegreeParams, MembershipMatrix,
    };

    fn homogeneous(n: usize, p: f64) -> ModelSpec {
        let membership = MembershipMatrix::from_block_sizes(&[n]).unwrap();
        let b = ConnectivityMatrix::from_rows(&[vec![p]]).unwrap();
        ModelSpec::sbm(membership, b).unwrap()
    }

    #[test]
    fn zero_probability_gives_empty_graph() {
        let a = sample_adjacency(&homogeneous(20, 0.0), SeedSpec::new(1, 0));
        assert_eq!(a.num_edges(), 0);
    }

    #[test]
    fn probability_one_gives_complete_graph() {
        let n = 15;
        let a = sample_adjacency(&homogeneous(n, 1.0), SeedSpec::new(1, 0));
        assert_eq!(a.num_edges(), n * (n - 1) / 2);
        for v in 0..n {
            assert_eq!(a.degree(v) as usize, n - 1);
        }
    }

    #[test]
    fn mean_edge_count_matches_binomial() {
        // C(100,2)*0.1 = 495 expected edges, sd of a single draw ~21.1;
        // the mean over R replicates has standard error 21.1/sqrt(R).
        let spec = homogeneous(100, 0.1);
        let reps = 1000;
        let total: usize = (0..reps)
            .map(|r| sample_adjacency(&spec, SeedSpec::new(7, r as u64)).num_edges())
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (4950.0f64 * 0.1 * 0.9).sqrt() / (reps as f64).sqrt();
        assert!(
            (mean - 495.0).abs() < 4.0 * se,
            "mean {mean} expected 495 +- {}",
            4.0 * se
        );
    }

    #[test]
    fn same_seed_reproduces_bytes() {
        let spec = preset_planted_partition(60, 2, 0.3, 0.5, &[30, 30]).unwrap();
        let a = sample_adjacency(&spec, SeedSpec::new(11, 3));
        let b = sample_adjacency(&spec, SeedSpec::new(11, 3));
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_edge_list(&mut buf_a).unwrap();
        b.write_edge_list(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let c = sample_adjacency(&spec, SeedSpec::new(11, 4));
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn symmetry_and_hollowness_hold_on_random_queries() {
        let spec = preset_planted_partition(80, 2, 0.4, 0.5, &[40, 40]).unwrap();
        let a = sample_adjacency(&spec, SeedSpec::new(5, 0));
        let mut rng = crate::rng::SplitMix64::new(99);
        for _ in 0..10_000 {
            let i = rng.next_below(80);
            let j = rng.next_below(80);
            assert_eq!(a.entry(i, j), a.entry(j, i));
            if i == j {
                assert_eq!(a.entry(i, j), 0);
            }
        }
    }

    #[test]
    fn per_entry_marginal_frequency() {
        let spec = homogeneous(10, 0.35);
        let reps = 10_000u64;
        let hits: u32 = (0..reps)
            .map(|r| sample_adjacency(&spec, SeedSpec::new(17, r)).entry(2, 7) as u32)
            .sum();
        let freq = hits as f64 / reps as f64;
        let tol = 4.0 * (0.35f64 * 0.65 / reps as f64).sqrt();
        assert!((freq - 0.35).abs() < tol, "freq {freq}");
    }

    #[test]
    fn expected_degree_summary_homogeneous() {
        let spec = homogeneous(50, 0.2);
        let s = expected_degree_summary(&spec);
        assert!((s.max_expected - 49.0 * 0.2).abs() < 1e-12);
        assert!((s.mean_expected - 49.0 * 0.2).abs() < 1e-12);
        assert!((s.degree_scale - 10.0).abs() < 1e-12);
    }

    #[test]
    fn expected_degree_below_scale_on_planted_partition() {
        let spec = preset_planted_partition(100, 2, 0.3, 0.5, &[50, 50]).unwrap();
        let s = expected_degree_summary(&spec);
        assert!(s.mean_expected <= s.degree_scale);
        assert!(s.max_expected <= s.degree_scale);
    }

    #[test]
    fn dcbm_expected_degree_scales_with_psi() {
        // two nodes with identical membership, psi 1 and 0.5: expected degrees
        // differ by the factor 0.5 up to the self-term correction
        let membership = MembershipMatrix::from_block_sizes(&[40]).unwrap();
        let b = ConnectivityMatrix::from_rows(&[vec![0.4]]).unwrap();
        let mut psi = vec![1.0; 40];
        psi[1] = 0.5;
        let spec = ModelSpec::dcbm(membership, b, DegreeParams::new(psi).unwrap()).unwrap();
        let full: f64 = (0..40).filter(|&j| j != 0).map(|j| spec.edge_probability(0, j)).sum();
        let half: f64 = (0..40).filter(|&j| j != 1).map(|j| spec.edge_probability(1, j)).sum();
        let full_adj = full - spec.edge_probability(0, 1);
        let half_adj = half - spec.edge_probability(1, 0);
        assert!((half_adj - 0.5 * full_adj).abs() < 1e-12);
    }

    #[test]
    fn edge_list_round_trip() {
        let spec = preset_planted_partition(30, 3, 0.5, 0.4, &[10, 10, 10]).unwrap();
        let a = sample_adjacency(&spec, SeedSpec::new(2, 1));
        let mut buf = Vec::new();
        a.write_edge_list(&mut buf).unwrap();
        let back = AdjacencyMatrix::read_edge_list(&buf[..]).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(AdjacencyMatrix::from_edges(5, vec![(1, 1)]).is_err());
        assert!(AdjacencyMatrix::from_edges(5, vec![(0, 5)]).is_err());
        assert!(AdjacencyMatrix::from_edges(5, vec![(0, 1), (1, 0)]).is_err());
    }
}
