//! Symmetric Lanczos iteration with full reorthogonalization.
//!
//! One Krylov process delivers Ritz approximations at both ends of the
//! spectrum, which is exactly what absolute-value ordering needs: the
//! largest-|λ| eigenpairs are always extremal. The basis is kept fully
//! orthonormal (two-pass Gram-Schmidt per step), so the classical residual
//! estimate |β·s_last| stays trustworthy; the returned pairs carry true
//! residuals ‖M·x − θ·x‖ computed from scratch.
//!
//! Exact invariant subspaces (structured matrices with repeated eigenvalues)
//! cause breakdown; the iteration then restarts with a fresh random direction
//! in the orthogonal complement. Because a single Krylov process cannot see
//! an eigenvalue's multiplicity, convergence after any restart additionally
//! requires the top Ritz values to agree across two consecutive checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Matrix-free symmetric linear operator.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;
    /// y = M·x.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymOp for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let yv = self * xv;
        y.copy_from_slice(yv.as_slice());
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Number of eigenpairs wanted, ordered by decreasing |θ|.
    pub want: usize,
    /// Residual tolerance relative to the spectral scale.
    pub residual_tol: f64,
    /// Maximum Krylov dimension; 0 picks min(n, 600).
    pub max_dim: usize,
    /// Accept a stagnating extreme value at a looser residual. Appropriate
    /// when only the top eigenvalue (a norm) is needed and the edge of the
    /// spectrum is a cluster that no practical iteration count can split.
    pub value_mode: bool,
    /// Seed for the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            want: 1,
            residual_tol: 1e-8,
            max_dim: 0,
            value_mode: false,
            seed: 0x6c62_272e_07bb_0142,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: DVector<f64>,
    /// True residual ‖M·x − θ·x‖ of the returned pair.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct LanczosOutput {
    /// `want` pairs sorted by decreasing |θ| (ties: algebraically larger first).
    pub pairs: Vec<RitzPair>,
    /// Ritz estimate of the next absolute eigenvalue past the requested ones.
    pub next_abs: Option<f64>,
    /// Krylov dimension actually used.
    pub iterations: usize,
}

/// In value mode, acceptance requires the top values to move less than this
/// (relative to scale) between two consecutive convergence checks.
const VALUE_STAGNATION_TOL: f64 = 1e-9;
/// Loose residual gate that must still hold for stagnation acceptance.
const VALUE_MODE_RESIDUAL_GATE: f64 = 1e-4;
const BREAKDOWN_TOL: f64 = 1e-13;
/// Agreement required between consecutive checks once a restart occurred.
const RESTART_STABLE_TOL: f64 = 1e-11;

/// Computes the `want` eigenpairs of largest absolute eigenvalue.
pub fn lanczos_top_abs(op: &dyn SymOp, opts: &LanczosOptions) -> Result<LanczosOutput> {
    let n = op.dim();
    if opts.want == 0 || opts.want > n {
        return Err(Error::InvalidParameter(format!(
            "requested {} eigenpairs from an operator of dimension {n}",
            opts.want
        )));
    }
    let max_dim = if opts.max_dim == 0 {
        n.min(600)
    } else {
        n.min(opts.max_dim.max(opts.want))
    };

    let mut rng = SplitMix64::new(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim.min(1024));
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    basis.push(random_unit(n, &mut rng));

    let mut scale_est = 0.0f64;
    let mut restarted = false;
    let mut prev_top: Option<Vec<f64>> = None;
    let mut last_check = 0usize;
    let mut w = vec![0.0f64; n];

    loop {
        let j = basis.len() - 1;
        op.apply(&basis[j], &mut w);
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        axpy(&mut w, -alpha, &basis[j]);
        if j > 0 {
            axpy(&mut w, -betas[j - 1], &basis[j - 1]);
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                axpy(&mut w, -c, v);
            }
        }
        let beta = norm(&w);
        scale_est = scale_est.max(alpha.abs()).max(beta);
        let breakdown = beta <= BREAKDOWN_TOL * scale_est.max(1e-300);

        let dim = basis.len();
        let spanned_all = dim == n;
        let exhausted = dim == max_dim || spanned_all;
        let due = dim >= opts.want + 2 && (dim - last_check >= check_interval(dim) || breakdown);

        if due || exhausted {
            last_check = dim;
            let (theta, s) = ritz_decompose(&alphas, &betas);
            let order = order_by_abs(&theta);
            if dim >= opts.want {
                let scale = theta[order[0]].abs().max(1e-300);
                let top = &order[..opts.want];
                let beta_for_res = if breakdown { 0.0 } else { beta };
                let worst_res = top
                    .iter()
                    .map(|&i| (beta_for_res * s[(dim - 1, i)]).abs())
                    .fold(0.0f64, f64::max);
                let top_values: Vec<f64> = top.iter().map(|&i| theta[i]).collect();
                let stable = prev_top
                    .as_ref()
                    .map(|p| {
                        p.len() == top_values.len()
                            && p.iter()
                                .zip(&top_values)
                                .all(|(a, b)| (a - b).abs() <= RESTART_STABLE_TOL * scale)
                    })
                    .unwrap_or(false);
                let strict_ok =
                    worst_res <= opts.residual_tol * scale && (!restarted || stable);
                let value_ok = opts.value_mode
                    && worst_res <= VALUE_MODE_RESIDUAL_GATE * scale
                    && prev_top
                        .as_ref()
                        .map(|p| {
                            let prev_max = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                            let cur_max =
                                top_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                            (cur_max - prev_max).abs() <= VALUE_STAGNATION_TOL * scale
                        })
                        .unwrap_or(false);
                if strict_ok || value_ok || spanned_all {
                    return Ok(extract(op, &basis, &theta, &s, &order, opts.want, dim));
                }
                if exhausted {
                    return Err(Error::NonConvergence {
                        iterations: dim,
                        residual: worst_res,
                    });
                }
                prev_top = Some(top_values);
            } else if exhausted {
                return Err(Error::NonConvergence {
                    iterations: dim,
                    residual: beta,
                });
            }
        }

        if breakdown {
            // Invariant subspace found; continue in its orthogonal complement
            // with a fresh random direction.
            restarted = true;
            let mut v = random_unit(n, &mut rng);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&v, b);
                    axpy(&mut v, -c, b);
                }
            }
            let vn = norm(&v);
            if vn <= 1e-8 {
                // The whole space is spanned; the Ritz set is exact.
                let (theta, s) = ritz_decompose(&alphas, &betas);
                let order = order_by_abs(&theta);
                return Ok(extract(op, &basis, &theta, &s, &order, opts.want, basis.len()));
            }
            scale_inplace(&mut v, 1.0 / vn);
            betas.push(0.0);
            basis.push(v);
        } else {
            scale_inplace(&mut w, 1.0 / beta);
            betas.push(beta);
            basis.push(w.clone());
        }
    }
}

fn check_interval(dim: usize) -> usize {
    (dim / 8).clamp(8, 40)
}

fn ritz_decompose(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
}

fn order_by_abs(theta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        theta[b]
            .abs()
            .total_cmp(&theta[a].abs())
            .then_with(|| theta[b].total_cmp(&theta[a]))
    });
    order
}

fn extract(
    op: &dyn SymOp,
    basis: &[Vec<f64>],
    theta: &[f64],
    s: &DMatrix<f64>,
    order: &[usize],
    want: usize,
    iterations: usize,
) -> LanczosOutput {
    let n = basis[0].len();
    let mut pairs = Vec::with_capacity(want);
    let mut scratch = vec![0.0f64; n];
    for &idx in order.iter().take(want) {
        let mut x = vec![0.0f64; n];
        for (m, b) in basis.iter().enumerate() {
            axpy(&mut x, s[(m, idx)], b);
        }
        let xn = norm(&x);
        if xn > 0.0 {
            scale_inplace(&mut x, 1.0 / xn);
        }
        op.apply(&x, &mut scratch);
        let mut res_sq = 0.0;
        for i in 0..n {
            let r = scratch[i] - theta[idx] * x[i];
            res_sq += r * r;
        }
        pairs.push(RitzPair {
            value: theta[idx],
            vector: DVector::from_vec(x),
            residual: res_sq.sqrt(),
        });
    }
    let next_abs = order.get(want).map(|&i| theta[i].abs());
    LanczosOutput {
        pairs,
        next_abs,
        iterations,
    }
}

fn random_unit(n: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
    let nv = norm(&v);
    scale_inplace(&mut v, 1.0 / nv);
    v
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
fn scale_inplace(v: &mut [f64], c: f64) {
    for x in v {
        *x *= c;
    }
}
