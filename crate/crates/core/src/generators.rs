//! Random host graphs and statistical checks of their edge distribution.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::RngStream;
use crate::vertex_set::VertexSet;

/// Erdős–Rényi `G(n, p)`: every pair independently with probability `p`.
pub fn gnp(n: usize, p: f64, stream: RngStream) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = stream.rng();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    // Pairs are visited in lexicographic order, so lists are already sorted.
    Ok(Graph::from_adjacency_unchecked(adj))
}

/// Degrees at or below this use whole-pairing rejection; above it the
/// acceptance rate `~exp(-(D²-1)/4)` is hopeless and pairing proceeds one
/// admissible pair at a time instead.
pub const CONFIGURATION_MODEL_MAX_DEGREE: usize = 4;
const MAX_RESTARTS: usize = 10_000;

/// Random simple `D`-regular graph on `n` vertices.
///
/// Small `D` uses the configuration model with rejection of any pairing that
/// contains a loop or a repeated edge. Larger `D` uses sequential pairing
/// (Steger–Wormald): points are matched one pair at a time, only ever
/// choosing pairs that keep the graph simple, restarting on a dead end.
pub fn random_regular(n: usize, degree: usize, stream: RngStream) -> Result<Graph> {
    if (n * degree) % 2 == 1 {
        return Err(Error::Infeasible(format!("n·D = {} is odd", n * degree)));
    }
    if degree >= n.max(1) && !(n == 0 && degree == 0) {
        return Err(Error::Infeasible(format!("degree {degree} must be below n = {n}")));
    }
    let mut rng = stream.rng();
    for _ in 0..MAX_RESTARTS {
        let attempt = if degree <= CONFIGURATION_MODEL_MAX_DEGREE {
            configuration_pairing(n, degree, &mut rng)
        } else {
            sequential_pairing(n, degree, &mut rng)
        };
        if let Some(adj) = attempt {
            return Ok(Graph::from_adjacency_unchecked(adj));
        }
    }
    Err(Error::Infeasible(format!(
        "no simple {degree}-regular pairing on {n} vertices after {MAX_RESTARTS} attempts"
    )))
}

fn finish(mut adj: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    adj.iter_mut().for_each(|l| l.sort_unstable());
    adj
}

fn configuration_pairing<R: Rng>(n: usize, degree: usize, rng: &mut R) -> Option<Vec<Vec<usize>>> {
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    points.shuffle(rng);
    let mut adj = vec![Vec::with_capacity(degree); n];
    for pair in points.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v || adj[u].contains(&v) {
            return None;
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    Some(finish(adj))
}

fn sequential_pairing<R: Rng>(n: usize, degree: usize, rng: &mut R) -> Option<Vec<Vec<usize>>> {
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(degree); n];
    let mut misses = 0usize;
    while !points.is_empty() {
        let i = rng.gen_range(0..points.len());
        let j = rng.gen_range(0..points.len());
        let (u, v) = (points[i], points[j]);
        if i == j || u == v || adj[u].contains(&v) {
            misses += 1;
            if misses > 64 + 4 * points.len() && !has_admissible_pair(&points, &adj) {
                return None;
            }
            continue;
        }
        misses = 0;
        adj[u].push(v);
        adj[v].push(u);
        let (hi, lo) = (i.max(j), i.min(j));
        points.swap_remove(hi);
        points.swap_remove(lo);
    }
    Some(finish(adj))
}

fn has_admissible_pair(points: &[usize], adj: &[Vec<usize>]) -> bool {
    let mut vs: Vec<usize> = points.to_vec();
    vs.sort_unstable();
    vs.dedup();
    vs.iter()
        .enumerate()
        .any(|(a, &u)| vs[a + 1..].iter().any(|&v| !adj[u].contains(&v)))
}

/// Violation counts for the two edge-distribution properties of `G(n, p)`:
///
/// 1. disjoint `A`, `B` with `|A||B|p >= 32n` span between `abp/2` and
///    `3abp/2` edges;
/// 2. every set of `a <= n/4` vertices spans fewer than `anp/2` edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeDistributionReport {
    pub n: usize,
    pub p: f64,
    /// False when no disjoint pair can satisfy `abp >= 32n` (needs `np >= 128`).
    pub pair_condition_feasible: bool,
    pub pairs_checked: usize,
    pub pair_violations: usize,
    pub subsets_checked: usize,
    pub subset_violations: usize,
}

impl EdgeDistributionReport {
    pub fn violations(&self) -> usize {
        self.pair_violations + self.subset_violations
    }
}

fn random_subset<R: Rng>(n: usize, size: usize, rng: &mut R) -> Vec<usize> {
    rand::seq::index::sample(rng, n, size).into_vec()
}

/// Samples `samples` disjoint pairs and `samples` small subsets and counts
/// violations of the two properties above.
pub fn check_edge_distribution(g: &Graph, p: f64, samples: usize, stream: RngStream) -> Result<EdgeDistributionReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidInput(format!("edge probability {p} outside (0, 1]")));
    }
    let n = g.vertex_count();
    let mut rng = stream.rng();
    let need = 32.0 * n as f64;
    let half = n / 2;
    let pair_condition_feasible = n >= 2 && (half * (n - half)) as f64 * p >= need;
    let mut report = EdgeDistributionReport {
        n,
        p,
        pair_condition_feasible,
        pairs_checked: 0,
        pair_violations: 0,
        subsets_checked: 0,
        subset_violations: 0,
    };

    if pair_condition_feasible {
        // Smallest a for which some b <= n - a works: a(n-a)p >= 32n.
        let a_min = (1..=half).find(|&a| (a * (n - a)) as f64 * p >= need).unwrap();
        for _ in 0..samples {
            let a = rng.gen_range(a_min..=half);
            let b_min = (need / (a as f64 * p)).ceil() as usize;
            let b = rng.gen_range(b_min.min(n - a)..=n - a);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let sa = VertexSet::from_vertices(n, order[..a].iter().copied())?;
            let sb = VertexSet::from_vertices(n, order[a..a + b].iter().copied())?;
            let mean = (a * b) as f64 * p;
            let e = g.ordered_edge_count(&sa, &sb)? as f64;
            report.pairs_checked += 1;
            if e < mean / 2.0 || e > 1.5 * mean {
                report.pair_violations += 1;
            }
        }
    }

    let quarter = n / 4;
    if quarter >= 1 {
        for _ in 0..samples {
            let a = rng.gen_range(1..=quarter);
            let s = VertexSet::from_vertices(n, random_subset(n, a, &mut rng))?;
            let inside = g.ordered_edge_count(&s, &s)? / 2;
            report.subsets_checked += 1;
            if inside as f64 >= a as f64 * n as f64 * p / 2.0 {
                report.subset_violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::complete;

    #[test]
    fn gnp_extremes() {
        assert_eq!(gnp(30, 0.0, RngStream::new(1, 0)).unwrap().edge_count(), 0);
        assert_eq!(gnp(30, 1.0, RngStream::new(1, 0)).unwrap(), complete(30));
        assert!(gnp(5, 1.5, RngStream::new(1, 0)).is_err());
        assert!(gnp(5, -0.1, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn gnp_is_reproducible() {
        let a = gnp(200, 0.05, RngStream::new(9, 3)).unwrap();
        assert_eq!(a, gnp(200, 0.05, RngStream::new(9, 3)).unwrap());
        assert_ne!(a, gnp(200, 0.05, RngStream::new(9, 4)).unwrap());
    }

    #[test]
    fn gnp_edge_count_within_four_sigma() {
        let (n, p) = (1000usize, 0.01);
        let pairs = (n * (n - 1) / 2) as f64;
        let (mean, sd) = (pairs * p, (pairs * p * (1.0 - p)).sqrt());
        for seed in 0..100 {
            let m = gnp(n, p, RngStream::new(seed, 0)).unwrap().edge_count() as f64;
            assert!((m - mean).abs() <= 4.0 * sd, "seed {seed}: {m} edges");
        }
    }

    #[test]
    fn regular_small_cases() {
        let k4 = random_regular(4, 3, RngStream::new(0, 0)).unwrap();
        assert_eq!(k4, complete(4));
        for seed in 0..20 {
            let g = random_regular(10, 3, RngStream::new(seed, 0)).unwrap();
            assert_eq!(g.regular_degree(), Some(3));
        }
        assert!(matches!(random_regular(5, 3, RngStream::new(0, 0)), Err(Error::Infeasible(_))));
        assert!(random_regular(4, 4, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn regular_sequential_regime() {
        for (n, d) in [(100, 30), (40, 20), (12, 9), (300, 7)] {
            let g = random_regular(n, d, RngStream::new(n as u64, 1)).unwrap();
            assert_eq!(g.regular_degree(), Some(d));
            assert_eq!(g.edge_count(), n * d / 2);
        }
    }

    #[test]
    fn edge_distribution_on_gnp() {
        // np = 40 < 128: the pair property is vacuous at this size.
        let g = gnp(2000, 0.02, RngStream::new(11, 0)).unwrap();
        let r = check_edge_distribution(&g, 0.02, 500, RngStream::new(11, 1)).unwrap();
        assert!(!r.pair_condition_feasible);
        assert_eq!(r.pairs_checked, 0);
        assert_eq!(r.violations(), 0, "{r:?}");

        let g = gnp(1000, 0.2, RngStream::new(12, 0)).unwrap();
        let r = check_edge_distribution(&g, 0.2, 200, RngStream::new(12, 1)).unwrap();
        assert!(r.pair_condition_feasible);
        assert_eq!(r.pairs_checked, 200);
        assert_eq!(r.violations(), 0, "{r:?}");
    }

    #[test]
    fn degree_distribution_matches_binomial() {
        // Chi-squared over pooled degree bins against Binomial(n-1, p), 100 seeds.
        let (n, p) = (400usize, 0.05f64);
        let pmf = |k: usize| -> f64 {
            let m = n - 1;
            let lnc = (0..k).map(|i| ((m - i) as f64).ln() - ((i + 1) as f64).ln()).sum::<f64>();
            (lnc + k as f64 * p.ln() + (m - k) as f64 * (1.0 - p).ln()).exp()
        };
        // Bins: <=12, 13..=15, 16..=18, 19..=21, 22..=24, 25..=27, >=28.
        let edges = [12usize, 15, 18, 21, 24, 27];
        let bin = |k: usize| edges.iter().position(|&e| k <= e).unwrap_or(edges.len());
        let mut expected = vec![0.0; edges.len() + 1];
        for k in 0..n {
            expected[bin(k)] += pmf(k);
        }
        let mut observed = vec![0.0; edges.len() + 1];
        for seed in 0..100 {
            let g = gnp(n, p, RngStream::new(seed, 7)).unwrap();
            for v in 0..n {
                observed[bin(g.degree(v))] += 1.0;
            }
        }
        let total = (100 * n) as f64;
        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e * total).powi(2) / (e * total))
            .sum();
        // 6 degrees of freedom, upper 1e-3 quantile = 22.458.
        assert!(chi2 < 22.458, "chi2 = {chi2}");
    }
}
