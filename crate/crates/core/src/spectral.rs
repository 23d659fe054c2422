//! Second adjacency eigenvalue of regular graphs and the spectral-gap
//! quantities built on it.
//!
//! For a `D`-regular graph the top eigenpair is known in closed form
//! (`D`, all-ones vector), so both solvers work on the orthogonal
//! complement of the all-ones vector and `λ = max(|θ_max|, |θ_min|)` over
//! what remains.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::RngStream;
use crate::vertex_set::VertexSet;

/// Largest graph the dense solver accepts.
pub const DENSE_CAP: usize = 2000;
pub const DEFAULT_DENSE_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_ITERATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    ExactDense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct SpectralOptions {
    pub method: EigenMethod,
    /// Absolute error target; method default when `None`.
    pub tolerance: Option<f64>,
    /// Lanczos steps; defaults to `n - 1` (full Krylov space, exact up to rounding).
    pub max_iterations: Option<usize>,
    /// Seed of the Lanczos start vector.
    pub seed: u64,
}

impl SpectralOptions {
    pub fn dense() -> Self {
        SpectralOptions {
            method: EigenMethod::ExactDense,
            tolerance: None,
            max_iterations: None,
            seed: 0,
        }
    }

    pub fn iterative() -> Self {
        SpectralOptions {
            method: EigenMethod::Iterative,
            ..Self::dense()
        }
    }
}

/// `(n, D, λ)` for a regular graph, with the method used and an absolute
/// error bound on `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub n: usize,
    #[serde(rename = "D")]
    pub degree: usize,
    pub lambda: f64,
    pub method: EigenMethod,
    pub tolerance: f64,
}

fn require_regular(g: &Graph) -> Result<usize> {
    if g.vertex_count() < 2 {
        return Err(Error::Precondition("spectral profile needs n >= 2".into()));
    }
    g.regular_degree().ok_or_else(|| {
        let (lo, hi) = g.degree_extrema().unwrap_or((0, 0));
        Error::Precondition(format!("graph is not regular (degrees range over [{lo}, {hi}])"))
    })
}

/// All adjacency eigenvalues in decreasing order (dense solver).
pub fn dense_spectrum(g: &Graph) -> Result<Vec<f64>> {
    let n = g.vertex_count();
    if n > DENSE_CAP {
        return Err(Error::Refused(format!("dense eigensolver capped at n = {DENSE_CAP}, got {n}")));
    }
    let a = DMatrix::from_fn(n, n, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 });
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// `λ(G) = max_{i >= 2} |λ_i|` for a regular graph.
pub fn second_eigenvalue(g: &Graph, opts: &SpectralOptions) -> Result<SpectralProfile> {
    let degree = require_regular(g)?;
    let n = g.vertex_count();
    match opts.method {
        EigenMethod::ExactDense => {
            let ev = dense_spectrum(g)?;
            let lambda = ev[1..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(SpectralProfile {
                n,
                degree,
                lambda,
                method: EigenMethod::ExactDense,
                tolerance: opts.tolerance.unwrap_or(DEFAULT_DENSE_TOLERANCE),
            })
        }
        EigenMethod::Iterative => {
            let tol = opts.tolerance.unwrap_or(DEFAULT_ITERATIVE_TOLERANCE);
            let (lambda, residual) = lanczos_deflated(g, tol, opts.max_iterations, opts.seed)?;
            Ok(SpectralProfile {
                n,
                degree,
                lambda,
                method: EigenMethod::Iterative,
                tolerance: tol.max(residual),
            })
        }
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Projects `w` off `1` and every basis vector (two Gram-Schmidt passes).
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        remove_mean(w);
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Extreme Ritz values of the tridiagonal matrix and their residual bounds.
fn extreme_ritz(alpha: &[f64], beta: &[f64], beta_next: f64) -> (f64, f64, f64, f64) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (mut imax, mut imin) = (0, 0);
    for i in 0..m {
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
    }
    let res = |i: usize| (beta_next * eig.eigenvectors[(m - 1, i)]).abs();
    (eig.eigenvalues[imax], res(imax), eig.eigenvalues[imin], res(imin))
}

/// Lanczos with full reorthogonalisation on `A` restricted to `1^⊥`.
/// Returns `(λ, residual bound)`.
fn lanczos_deflated(g: &Graph, tol: f64, max_iterations: Option<usize>, seed: u64) -> Result<(f64, f64)> {
    let n = g.vertex_count();
    let dim = n - 1;
    let budget = max_iterations.unwrap_or(dim).min(dim).max(1);
    let mut rng = RngStream::new(seed, 0x1a2c).rng();
    let mut random_unit = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            orthogonalize(&mut v, basis);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = vec![random_unit(&[]).expect("n >= 2 leaves room off 1")];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut next_check = 8usize;
    let scale = g.degree_extrema().map(|(_, hi)| hi.max(1) as f64).unwrap_or(1.0);
    let mut best = (0.0, f64::INFINITY);

    for j in 0..budget {
        let q = &basis[j];
        let mut w = vec![0.0; n];
        for (v, wv) in w.iter_mut().enumerate() {
            *wv = g.neighbors(v).iter().map(|&u| q[u]).sum();
        }
        let a = dot(q, &w);
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        let exhausted = j + 1 == dim;
        let breakdown = b <= 1e-10 * scale;

        if exhausted || j + 1 >= next_check || j + 1 == budget || breakdown {
            // A breakdown makes T block-diagonal; the residual of the current block is 0.
            let link = if breakdown || exhausted { 0.0 } else { b };
            let (tmax, rmax, tmin, rmin) = extreme_ritz(&alpha, &beta, link);
            let lambda = tmax.abs().max(tmin.abs());
            let residual = rmax.max(rmin);
            best = (lambda, residual);
            let restart_possible = breakdown && !exhausted;
            if (residual <= tol && !restart_possible) || exhausted {
                return Ok((lambda, residual));
            }
            next_check = ((next_check as f64) * 1.5).ceil() as usize;
        }
        if j + 1 == budget {
            break;
        }
        if breakdown {
            // Invariant subspace found; continue in a fresh direction.
            match random_unit(&basis) {
                Some(v) => {
                    beta.push(0.0);
                    basis.push(v);
                }
                None => return Ok(best),
            }
        } else {
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
    }
    if best.1 <= tol {
        return Ok(best);
    }
    Err(Error::Convergence {
        best_estimate: best.0,
        residual: best.1,
        iterations: budget,
    })
}

/// One evaluation of the expander mixing inequality
/// `|e(B,C) - |B||C|D/n| <= λ·sqrt(|B||C|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingAudit {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the mixing inequality for `(B, C)`; the right-hand side uses
/// `λ + tolerance` so rounding in `λ` cannot flip the verdict.
pub fn mixing_bound_audit(g: &Graph, profile: &SpectralProfile, b: &VertexSet, c: &VertexSet) -> Result<MixingAudit> {
    let e = g.ordered_edge_count(b, c)? as f64;
    let (nb, nc) = (b.len() as f64, c.len() as f64);
    let lhs = (e - nb * nc * profile.degree as f64 / profile.n as f64).abs();
    let rhs = (profile.lambda + profile.tolerance) * (nb * nc).sqrt();
    // Absorb rounding in the lhs itself.
    let holds = lhs <= rhs + 1e-9 * (1.0 + nb * nc);
    Ok(MixingAudit { lhs, rhs, holds })
}

/// Minimum degree `2λ(d+1)/sqrt(d)` above which induced subgraphs of an
/// `(n, D, λ)`-graph are `(1/(2d+2), d+1)`-expanders.
pub fn fp_min_degree_threshold(d: usize, lambda: f64) -> f64 {
    2.0 * lambda * (d as f64 + 1.0) / (d as f64).sqrt()
}

/// Outcome of comparing the spectral gap `D/λ` against
/// `160 d^{5/2} ln(2/ε) / ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralGapPremise {
    pub holds: bool,
    pub required_ratio: f64,
    /// `D/λ`; infinite when `λ = 0`.
    pub actual_ratio: f64,
    /// `λ = 0`: the ratio is infinite.
    pub infinite_gap: bool,
    /// `λ >= D` up to tolerance (bipartite or disconnected): no gap at all.
    pub no_gap: bool,
}

pub fn required_spectral_ratio(d: usize, epsilon: f64) -> f64 {
    160.0 * (d as f64).powf(2.5) * (2.0 / epsilon).ln() / epsilon
}

pub fn check_theorem2_premise(profile: &SpectralProfile, d: usize, epsilon: f64) -> Result<SpectralGapPremise> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Precondition(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    if d < 2 {
        return Err(Error::Precondition(format!("d must be at least 2, got {d}")));
    }
    let required_ratio = required_spectral_ratio(d, epsilon);
    let degree = profile.degree as f64;
    let no_gap = profile.lambda + profile.tolerance >= degree;
    if profile.lambda == 0.0 {
        return Ok(SpectralGapPremise {
            holds: true,
            required_ratio,
            actual_ratio: f64::INFINITY,
            infinite_gap: true,
            no_gap,
        });
    }
    let actual_ratio = degree / profile.lambda;
    Ok(SpectralGapPremise {
        holds: actual_ratio >= required_ratio,
        required_ratio,
        actual_ratio,
        infinite_gap: false,
        no_gap,
    })
}
