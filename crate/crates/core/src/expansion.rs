//! Combinatorial vertex-expansion certification.
//!
//! A graph is an `(α, c)`-expander when every vertex set `X` with
//! `1 <= |X| <= αn` has `|N(X)| >= c|X|`, where `N(X)` is the union of the
//! neighborhoods of the members of `X` (and may meet `X`).
//!
//! Exact mode enumerates every candidate `X` and can certify or refute.
//! Sampled mode only looks for counterexamples; it never certifies.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::RngStream;
use crate::vertex_set::VertexSet;

pub const DEFAULT_EXACT_CAP: usize = 24;
/// Hard ceiling: exact enumeration packs vertex sets into one `u64`.
pub const MAX_EXACT_CAP: usize = 64;

const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Refuted,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionVerdict {
    pub alpha: f64,
    pub c: f64,
    /// Largest `|X|` examined (`floor(αn)` unless set directly).
    pub max_size: usize,
    pub mode: ExpansionMode,
    pub verdict: Verdict,
    /// Refuting set, present iff `verdict == Refuted`.
    pub witness: Option<Vec<usize>>,
    /// `|N(witness)|` (or `|N(witness) \ witness|` in Pósa mode).
    pub witness_neighborhood: Option<usize>,
    pub subsets_checked: u64,
    pub posa: bool,
}

impl ExpansionVerdict {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn is_refuted(&self) -> bool {
        self.verdict == Verdict::Refuted
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExpansionOptions {
    /// Largest `n` exact mode will enumerate (at most [`MAX_EXACT_CAP`]).
    pub exact_cap: usize,
    /// Measure `N(X) \ X` instead of `N(X)`.
    pub posa: bool,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            exact_cap: DEFAULT_EXACT_CAP,
            posa: false,
        }
    }
}

/// `floor(α n)`, tolerant of `α n` landing a hair below an integer.
pub fn max_set_size(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64) + SLACK).floor().max(0.0) as usize
}

fn violates(neighborhood: usize, size: usize, c: f64) -> bool {
    (neighborhood as f64) < c * size as f64 - SLACK
}

/// Independent re-check of a refutation witness.
pub fn witness_is_valid(g: &Graph, witness: &[usize], max_size: usize, c: f64, posa: bool) -> bool {
    let n = g.vertex_count();
    let Ok(x) = VertexSet::from_vertices(n, witness.iter().copied()) else {
        return false;
    };
    if x.is_empty() || x.len() != witness.len() || x.len() > max_size {
        return false;
    }
    let mut nx = g.neighborhood(&x).expect("same universe");
    if posa {
        nx.difference_with(&x);
    }
    violates(nx.len(), x.len(), c)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Lexicographic rank of a sorted combination among all `|x|`-subsets of `0..n`.
fn lex_rank(n: usize, x: &[usize]) -> u64 {
    let t = x.len();
    let mut rank = 0u64;
    let mut prev = 0usize;
    for (i, &v) in x.iter().enumerate() {
        for skipped in prev..v {
            rank += binomial((n - skipped - 1) as u64, (t - i - 1) as u64);
        }
        prev = v + 1;
    }
    rank
}

struct MaskGraph {
    n: usize,
    rows: Vec<u64>,
}

impl MaskGraph {
    fn new(g: &Graph) -> Self {
        let rows = (0..g.vertex_count())
            .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
            .collect();
        MaskGraph {
            n: g.vertex_count(),
            rows,
        }
    }

    /// Lexicographically first `t`-subset starting with `first` that violates.
    fn first_violation_from(&self, first: usize, t: usize, c: f64, posa: bool) -> Option<Vec<usize>> {
        let mut chosen = Vec::with_capacity(t);
        chosen.push(first);
        self.descend(&mut chosen, 1u64 << first, self.rows[first], t, c, posa)
            .then_some(chosen)
    }

    fn descend(&self, chosen: &mut Vec<usize>, xmask: u64, nmask: u64, t: usize, c: f64, posa: bool) -> bool {
        if chosen.len() == t {
            let nb = if posa { nmask & !xmask } else { nmask };
            return violates(nb.count_ones() as usize, t, c);
        }
        let need = t - chosen.len();
        let start = chosen.last().unwrap() + 1;
        for v in start..=self.n - need {
            chosen.push(v);
            if self.descend(chosen, xmask | 1 << v, nmask | self.rows[v], t, c, posa) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// Exhaustive check of `|N(X)| >= c|X|` over all `1 <= |X| <= max_size`,
/// smallest sizes first, lexicographic within a size.
fn exact_search(g: &Graph, max_size: usize, c: f64, opts: &ExpansionOptions) -> Result<(Option<(Vec<usize>, usize)>, u64)> {
    let n = g.vertex_count();
    let cap = opts.exact_cap.min(MAX_EXACT_CAP);
    if n > cap {
        return Err(Error::Refused(format!(
            "exact expansion check capped at {cap} vertices, graph has {n}; use sampled mode"
        )));
    }
    let mg = MaskGraph::new(g);
    let max_size = max_size.min(n);
    let mut checked = 0u64;
    for t in 1..=max_size {
        let hit = (0..=n - t)
            .into_par_iter()
            .find_map_first(|first| mg.first_violation_from(first, t, c, opts.posa));
        if let Some(x) = hit {
            checked += lex_rank(n, &x) + 1;
            let xs = VertexSet::from_vertices(n, x.iter().copied())?;
            let mut nx = g.neighborhood(&xs)?;
            if opts.posa {
                nx.difference_with(&xs);
            }
            return Ok((Some((x, nx.len())), checked));
        }
        checked += binomial(n as u64, t as u64);
    }
    Ok((None, checked))
}

fn exact_verdict(g: &Graph, alpha: f64, c: f64, max_size: usize, opts: &ExpansionOptions) -> Result<ExpansionVerdict> {
    let (hit, subsets_checked) = exact_search(g, max_size, c, opts)?;
    let (verdict, witness, witness_neighborhood) = match hit {
        Some((x, nb)) => (Verdict::Refuted, Some(x), Some(nb)),
        None => (Verdict::Certified, None, None),
    };
    Ok(ExpansionVerdict {
        alpha,
        c,
        max_size,
        mode: ExpansionMode::Exact,
        verdict,
        witness,
        witness_neighborhood,
        subsets_checked,
        posa: opts.posa,
    })
}

/// Exact `(α, c)`-expander check with default options.
pub fn verify_expander_exact(g: &Graph, alpha: f64, c: f64) -> Result<ExpansionVerdict> {
    verify_expander_exact_with(g, alpha, c, &ExpansionOptions::default())
}

pub fn verify_expander_exact_with(g: &Graph, alpha: f64, c: f64, opts: &ExpansionOptions) -> Result<ExpansionVerdict> {
    if !(alpha >= 0.0) || !(c >= 0.0) {
        return Err(Error::InvalidInput(format!("need alpha >= 0 and c >= 0, got ({alpha}, {c})")));
    }
    exact_verdict(g, alpha, c, max_set_size(alpha, g.vertex_count()), opts)
}

/// Exact check of the tree-embedding hypothesis: `|N(X)| >= (d+1)|X|` for
/// every `X` with `1 <= |X| <= 2k - 2`.
pub fn fp_condition_exact(h: &Graph, d: usize, k: usize) -> Result<ExpansionVerdict> {
    fp_condition_exact_with(h, d, k, &ExpansionOptions::default())
}

pub fn fp_condition_exact_with(h: &Graph, d: usize, k: usize, opts: &ExpansionOptions) -> Result<ExpansionVerdict> {
    let max_size = (2 * k).saturating_sub(2);
    let n = h.vertex_count().max(1);
    exact_verdict(h, max_size as f64 / n as f64, (d + 1) as f64, max_size, opts)
}

/// Randomised search for a set violating `(α, c)`-expansion.
///
/// Each trial builds one ordered candidate sequence and tests every prefix
/// of admissible size: a uniformly random vertex order, a BFS ball around a
/// random vertex, or a greedy cluster grown from a random low-degree vertex
/// by always adding the vertex that enlarges `N(X)` least. Returns
/// `Refuted` with the first witness found, else `Unresolved`.
pub fn refute_expander_sampled(g: &Graph, alpha: f64, c: f64, trials: usize, seed: u64) -> Result<ExpansionVerdict> {
    refute_expander_sampled_with(g, alpha, c, trials, seed, &ExpansionOptions::default())
}

pub fn refute_expander_sampled_with(
    g: &Graph,
    alpha: f64,
    c: f64,
    trials: usize,
    seed: u64,
    opts: &ExpansionOptions,
) -> Result<ExpansionVerdict> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let n = g.vertex_count();
    let max_size = max_set_size(alpha, n).min(n);
    let mut rng = RngStream::new(seed, 0x5a3d).rng();
    let mut checked = 0u64;
    let mut witness = None;
    if max_size > 0 {
        for trial in 0..trials {
            let start = rng.gen_range(0..n);
            let order = match trial % 3 {
                0 => {
                    let mut all: Vec<usize> = (0..n).collect();
                    all.shuffle(&mut rng);
                    all.truncate(max_size);
                    all
                }
                1 => bfs_ball(g, start, max_size),
                _ => {
                    // Bias towards low degree: best of a few random starts.
                    let s = (0..4)
                        .map(|_| rng.gen_range(0..n))
                        .chain([start])
                        .min_by_key(|&v| (g.degree(v), v))
                        .unwrap();
                    greedy_cluster(g, s, max_size, opts.posa)
                }
            };
            let (hit, tried) = first_bad_prefix(g, &order, c, opts.posa);
            checked += tried;
            if let Some(x) = hit {
                witness = Some(x);
                break;
            }
        }
    }
    let witness_neighborhood = witness.as_ref().map(|x: &Vec<usize>| {
        let xs = VertexSet::from_vertices(n, x.iter().copied()).unwrap();
        let mut nx = g.neighborhood(&xs).unwrap();
        if opts.posa {
            nx.difference_with(&xs);
        }
        nx.len()
    });
    if let Some(x) = &witness {
        debug_assert!(witness_is_valid(g, x, max_size, c, opts.posa));
    }
    Ok(ExpansionVerdict {
        alpha,
        c,
        max_size,
        mode: ExpansionMode::Sampled,
        verdict: if witness.is_some() { Verdict::Refuted } else { Verdict::Unresolved },
        witness,
        witness_neighborhood,
        subsets_checked: checked,
        posa: opts.posa,
    })
}

fn first_bad_prefix(g: &Graph, order: &[usize], c: f64, posa: bool) -> (Option<Vec<usize>>, u64) {
    let n = g.vertex_count();
    let mut x = VertexSet::empty(n);
    let mut nx = VertexSet::empty(n);
    for (i, &v) in order.iter().enumerate() {
        x.insert(v);
        for &w in g.neighbors(v) {
            nx.insert(w);
        }
        let size = if posa { nx.len() - nx.intersection_len(&x) } else { nx.len() };
        if violates(size, i + 1, c) {
            let mut w = order[..=i].to_vec();
            w.sort_unstable();
            return (Some(w), i as u64 + 1);
        }
    }
    (None, order.len() as u64)
}

fn bfs_ball(g: &Graph, start: usize, limit: usize) -> Vec<usize> {
    let mut seen = vec![false; g.vertex_count()];
    let mut out = vec![start];
    seen[start] = true;
    let mut head = 0;
    while head < out.len() && out.len() < limit {
        let v = out[head];
        head += 1;
        for &w in g.neighbors(v) {
            if !seen[w] && out.len() < limit {
                seen[w] = true;
                out.push(w);
            }
        }
    }
    out
}

fn greedy_cluster(g: &Graph, start: usize, limit: usize, posa: bool) -> Vec<usize> {
    let n = g.vertex_count();
    let mut in_x = vec![false; n];
    let mut in_n = vec![false; n];
    let mut order = Vec::with_capacity(limit);
    let add = |v: usize, in_x: &mut Vec<bool>, in_n: &mut Vec<bool>, order: &mut Vec<usize>| {
        in_x[v] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            in_n[w] = true;
        }
    };
    add(start, &mut in_x, &mut in_n, &mut order);
    while order.len() < limit {
        // Candidates: vertices already in N(X) but not in X.
        let best = (0..n)
            .filter(|&v| in_n[v] && !in_x[v])
            .min_by_key(|&v| {
                let fresh = g.neighbors(v).iter().filter(|&&w| !in_n[w]).count();
                // In Pósa mode absorbing v also removes it from N(X) \ X.
                (fresh + usize::from(!posa), v)
            });
        match best {
            Some(v) => add(v, &mut in_x, &mut in_n, &mut order),
            None => break,
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::generators::gnp;
    use proptest::prelude::*;

    /// Plain bitmask brute force, independent of the lexicographic DFS.
    fn brute(g: &Graph, max_size: usize, c: f64) -> Option<Vec<usize>> {
        let n = g.vertex_count();
        let mut best: Option<Vec<usize>> = None;
        for mask in 1u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size > max_size {
                continue;
            }
            let x: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let mut nx = vec![false; n];
            for &v in &x {
                for &w in g.neighbors(v) {
                    nx[w] = true;
                }
            }
            let nb = nx.iter().filter(|&&b| b).count();
            if (nb as f64) < c * size as f64 - 1e-9 {
                let better = match &best {
                    None => true,
                    Some(b) => (x.len(), &x) < (b.len(), b),
                };
                if better {
                    best = Some(x);
                }
            }
        }
        best
    }

    #[test]
    fn complete_graph_certified() {
        let v = verify_expander_exact(&complete(6), 0.5, 2.0).unwrap();
        assert!(v.is_certified());
        assert_eq!(v.subsets_checked, 6 + 15 + 20);
    }

    #[test]
    fn cycle_refuted_with_minimal_witness() {
        let v = verify_expander_exact(&cycle(8), 0.25, 2.0).unwrap();
        assert!(v.is_refuted());
        assert_eq!(v.witness.as_deref(), Some(&[0, 2][..]));
        assert_eq!(v.witness_neighborhood, Some(3));
        assert!(witness_is_valid(&cycle(8), &[0, 2], 2, 2.0, false));
    }

    #[test]
    fn vacuous_when_alpha_n_below_one() {
        let v = verify_expander_exact(&path(5), 0.1, 100.0).unwrap();
        assert!(v.is_certified());
        assert_eq!(v.subsets_checked, 0);
    }

    #[test]
    fn exact_cap_refuses() {
        assert!(matches!(verify_expander_exact(&cycle(30), 0.2, 2.0), Err(Error::Refused(_))));
        let opts = ExpansionOptions { exact_cap: 40, posa: false };
        assert!(verify_expander_exact_with(&cycle(30), 0.1, 2.0, &opts).unwrap().is_refuted());
    }

    #[test]
    fn posa_variant() {
        // K_4: N({0,1}) = V but N({0,1}) \ {0,1} has size 2.
        let opts = ExpansionOptions { posa: true, ..Default::default() };
        let v = verify_expander_exact_with(&complete(4), 0.5, 1.5, &opts).unwrap();
        assert!(v.is_refuted());
        assert!(verify_expander_exact(&complete(4), 0.5, 1.5).unwrap().is_certified());
    }

    #[test]
    fn fp_condition_examples() {
        assert!(fp_condition_exact(&complete(7), 2, 2).unwrap().is_certified());
        let c8 = fp_condition_exact(&cycle(8), 2, 2).unwrap();
        assert!(c8.is_refuted());
        assert_eq!(c8.witness.as_deref(), Some(&[0][..]));
        let vac = fp_condition_exact(&cycle(8), 2, 1).unwrap();
        assert!(vac.is_certified() && vac.subsets_checked == 0);
    }

    #[test]
    fn sampled_refutes_long_cycle() {
        let g = cycle(100);
        let v = refute_expander_sampled(&g, 0.25, 2.0, 1000, 1).unwrap();
        assert!(v.is_refuted());
        assert!(witness_is_valid(&g, v.witness.as_ref().unwrap(), 25, 2.0, false));
        // The three-vertex arc is the canonical example.
        assert!(witness_is_valid(&g, &[0, 1, 2], 25, 2.0, false));
    }

    #[test]
    fn sampled_never_certifies() {
        let v = refute_expander_sampled(&complete(50), 0.5, 2.0, 300, 4).unwrap();
        assert_eq!(v.verdict, Verdict::Unresolved);
        assert!(refute_expander_sampled(&complete(5), 0.5, 2.0, 0, 4).is_err());
    }

    #[test]
    fn lex_rank_counts() {
        assert_eq!(lex_rank(5, &[0, 1]), 0);
        assert_eq!(lex_rank(5, &[3, 4]), 9);
        assert_eq!(lex_rank(8, &[0, 2]), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn exact_matches_brute_force(n in 2usize..12, p in 0.1f64..0.9, seed in any::<u64>(), ai in 0usize..4, c in 0.5f64..4.0) {
            let g = gnp(n, p, RngStream::new(seed, 0)).unwrap();
            let alpha = [0.2, 0.25, 0.34, 0.5][ai];
            let v = verify_expander_exact(&g, alpha, c).unwrap();
            let b = brute(&g, max_set_size(alpha, n), c);
            prop_assert_eq!(v.witness.clone(), b);
            if let Some(w) = &v.witness {
                prop_assert!(witness_is_valid(&g, w, v.max_size, c, false));
            }
        }

        #[test]
        fn monotone_in_parameters(n in 2usize..12, p in 0.2f64..0.9, seed in any::<u64>(), c in 0.5f64..4.0, shrink_a in 0.0f64..1.0, shrink_c in 0.0f64..1.0) {
            let g = gnp(n, p, RngStream::new(seed, 1)).unwrap();
            let v = verify_expander_exact(&g, 0.5, c).unwrap();
            if v.is_certified() {
                prop_assert!(verify_expander_exact(&g, 0.5 * shrink_a, c * shrink_c).unwrap().is_certified());
            }
        }

        #[test]
        fn sampled_witnesses_recheck(n in 3usize..40, p in 0.05f64..0.5, seed in any::<u64>()) {
            let g = gnp(n, p, RngStream::new(seed, 2)).unwrap();
            let v = refute_expander_sampled(&g, 0.3, 2.0, 60, seed).unwrap();
            if let Some(w) = &v.witness {
                prop_assert!(witness_is_valid(&g, w, v.max_size, 2.0, false));
                if n <= 20 {
                    prop_assert!(verify_expander_exact(&g, 0.3, 2.0).unwrap().is_refuted());
                }
            }
        }
    }
}
