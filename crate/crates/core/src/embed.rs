//! Rooted tree embedding by backtracking search, and embedding validation.
//!
//! Guest vertices are placed parent-first. A vertex is mapped to an unused
//! host neighbor of its parent's image, chosen by a [`CandidateRule`]. Two
//! forward checks prune the search without losing completeness: a candidate
//! must have at least as many free neighbors as the guest vertex has
//! children, and placing it must not starve an already placed vertex of the
//! free neighbors its remaining children need.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::RngStream;
use crate::tree::RootedTree;
use crate::vertex_set::VertexSet;

pub const DEFAULT_MAX_BACKTRACKS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrder {
    #[default]
    Bfs,
    Dfs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// Fewest free neighbors first.
    #[default]
    MinResidualDegree,
    MaxResidualDegree,
    /// Seeded uniform shuffle.
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedBudget {
    /// `None` means unbounded: the search runs until it succeeds or has
    /// exhausted the whole space.
    pub max_backtracks: Option<u64>,
    pub node_order: NodeOrder,
    pub candidate_rule: CandidateRule,
}

impl Default for EmbedBudget {
    fn default() -> Self {
        EmbedBudget {
            max_backtracks: Some(DEFAULT_MAX_BACKTRACKS),
            node_order: NodeOrder::Bfs,
            candidate_rule: CandidateRule::MinResidualDegree,
        }
    }
}

impl EmbedBudget {
    pub fn unbounded() -> Self {
        EmbedBudget {
            max_backtracks: None,
            ..Default::default()
        }
    }
}

/// `map[guest vertex] = host vertex`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub map: Vec<usize>,
}

impl Embedding {
    pub fn image(&self, v: usize) -> usize {
        self.map[v]
    }

    /// The set of host vertices used.
    pub fn used(&self, host_n: usize) -> Result<VertexSet> {
        VertexSet::from_vertices(host_n, self.map.iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    WrongLength { expected: usize, found: usize },
    OutOfRange { guest: usize, host: usize },
    NotInjective { first: usize, second: usize, host: usize },
    MissingEdge { guest: (usize, usize), host: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddingCheck {
    pub valid: bool,
    pub violation: Option<Violation>,
}

/// Recompute injectivity and edge preservation from scratch.
pub fn verify_embedding(host: &Graph, guest: &RootedTree, e: &Embedding) -> EmbeddingCheck {
    let fail = |v| EmbeddingCheck { valid: false, violation: Some(v) };
    let k = guest.vertex_count();
    if e.map.len() != k {
        return fail(Violation::WrongLength { expected: k, found: e.map.len() });
    }
    let mut owner: Vec<Option<usize>> = vec![None; host.vertex_count()];
    for (g, &h) in e.map.iter().enumerate() {
        if h >= host.vertex_count() {
            return fail(Violation::OutOfRange { guest: g, host: h });
        }
        if let Some(first) = owner[h] {
            return fail(Violation::NotInjective { first, second: g, host: h });
        }
        owner[h] = Some(g);
    }
    for (p, c) in guest.edges() {
        if !host.has_edge(e.map[p], e.map[c]) {
            return fail(Violation::MissingEdge {
                guest: (p, c),
                host: (e.map[p], e.map[c]),
            });
        }
    }
    EmbeddingCheck { valid: true, violation: None }
}

/// Embed `t` into `h` with the root of `t` sent to `root_image`.
///
/// On failure the error reports the largest partial embedding reached and
/// whether the search space was exhausted (only possible with an unbounded
/// budget), which proves that no embedding exists.
pub fn embed_rooted_tree(h: &Graph, t: &RootedTree, root_image: usize, budget: &EmbedBudget) -> Result<Embedding> {
    if t.vertex_count() > h.vertex_count() {
        return Err(Error::Precondition(format!(
            "guest has {} vertices, host only {}",
            t.vertex_count(),
            h.vertex_count()
        )));
    }
    if root_image >= h.vertex_count() {
        return Err(Error::Precondition(format!(
            "root image {root_image} is not a host vertex (n = {})",
            h.vertex_count()
        )));
    }
    let plan = SearchPlan::for_tree(t, budget.node_order);
    let out = search(h, &plan, root_image, None, budget)?;
    let e = Embedding { map: out.map };
    debug_assert!(verify_embedding(h, t, &e).valid);
    Ok(e)
}

/// Guest-side description of one search: the placement order and per-vertex
/// constraints. Built from a tree, then optionally tightened by callers.
#[derive(Clone, Debug)]
pub(crate) struct SearchPlan {
    /// Guest vertices in placement order; `order[0]` is the root.
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    /// Free host neighbors the image of each guest vertex must have when
    /// placed.
    pub need: Vec<usize>,
    /// Children still to be placed once the vertex itself is placed.
    pub child_count: Vec<usize>,
    /// Rank candidates for this vertex by most free neighbors first,
    /// overriding the budget's rule.
    pub prefer_roomy: Vec<bool>,
    /// Host vertices this guest vertex may not use.
    pub avoid: Vec<Option<std::sync::Arc<VertexSet>>>,
}

impl SearchPlan {
    pub fn for_tree(t: &RootedTree, node_order: NodeOrder) -> Self {
        let k = t.vertex_count();
        let order = match node_order {
            NodeOrder::Bfs => t.bfs_order(),
            NodeOrder::Dfs => t.dfs_order(),
        };
        let child_count: Vec<usize> = (0..k).map(|v| t.children(v).len()).collect();
        SearchPlan {
            order,
            parent: t.parents().to_vec(),
            need: child_count.clone(),
            child_count,
            prefer_roomy: vec![false; k],
            avoid: vec![None; k],
        }
    }
}

#[derive(Debug)]
pub(crate) struct SearchOutcome {
    pub map: Vec<usize>,
    pub backtracks: u64,
}

struct Frame {
    candidates: Vec<usize>,
    next: usize,
}

/// Core backtracking search. `available` restricts the host vertices that
/// may be used (the root image included).
pub(crate) fn search(
    h: &Graph,
    plan: &SearchPlan,
    root_image: usize,
    available: Option<&VertexSet>,
    budget: &EmbedBudget,
) -> Result<SearchOutcome> {
    let n = h.vertex_count();
    let k = plan.order.len();
    let failure = |deepest: usize, backtracks: u64, exhaustive: bool| Error::SearchFailed {
        deepest,
        guest_size: k,
        backtracks,
        exhaustive,
    };

    let mut free: Vec<bool> = match available {
        Some(a) => (0..n).map(|v| a.contains(v)).collect(),
        None => vec![true; n],
    };
    let root = plan.order[0];
    let root_ok = free[root_image]
        && !plan.avoid[root].as_ref().is_some_and(|s| s.contains(root_image));
    if !root_ok {
        return Err(failure(0, 0, true));
    }
    let mut free_deg: Vec<usize> = (0..n)
        .map(|v| h.neighbors(v).iter().filter(|&&w| free[w]).count())
        .collect();
    if free_deg[root_image] < plan.need[root] {
        return Err(failure(0, 0, true));
    }

    let mut map = vec![usize::MAX; plan.parent.len()];
    let mut owner: Vec<usize> = vec![usize::MAX; n];
    let mut pending = plan.child_count.clone();
    let mut rng = match budget.candidate_rule {
        CandidateRule::Random(seed) => Some(RngStream::new(seed, 0xe3b).rng()),
        _ => None,
    };

    let place = |u: usize, c: usize, free: &mut Vec<bool>, free_deg: &mut Vec<usize>, map: &mut Vec<usize>, owner: &mut Vec<usize>, pending: &mut Vec<usize>| {
        free[c] = false;
        for &w in h.neighbors(c) {
            free_deg[w] -= 1;
        }
        map[u] = c;
        owner[c] = u;
        if let Some(p) = plan.parent[u] {
            pending[p] -= 1;
        }
    };
    let unplace = |u: usize, free: &mut Vec<bool>, free_deg: &mut Vec<usize>, map: &mut Vec<usize>, owner: &mut Vec<usize>, pending: &mut Vec<usize>| {
        let c = map[u];
        free[c] = true;
        for &w in h.neighbors(c) {
            free_deg[w] += 1;
        }
        map[u] = usize::MAX;
        owner[c] = usize::MAX;
        if let Some(p) = plan.parent[u] {
            pending[p] += 1;
        }
    };

    place(root, root_image, &mut free, &mut free_deg, &mut map, &mut owner, &mut pending);
    let mut frames: Vec<Frame> = Vec::with_capacity(k);
    let mut deepest = 1usize;
    let mut backtracks = 0u64;
    let mut level = 1usize;
    let mut need_frame = true;

    while level < k {
        let u = plan.order[level];
        if need_frame {
            let pimg = map[plan.parent[u].expect("non-root guest vertex has a parent")];
            let avoid = plan.avoid[u].as_deref();
            let mut candidates: Vec<usize> = h
                .neighbors(pimg)
                .iter()
                .copied()
                .filter(|&c| free[c] && !avoid.is_some_and(|s| s.contains(c)))
                .collect();
            if plan.prefer_roomy[u] {
                candidates.sort_by_key(|&c| (std::cmp::Reverse(free_deg[c]), c));
            } else {
                match budget.candidate_rule {
                    CandidateRule::MinResidualDegree => candidates.sort_by_key(|&c| (free_deg[c], c)),
                    CandidateRule::MaxResidualDegree => {
                        candidates.sort_by_key(|&c| (std::cmp::Reverse(free_deg[c]), c))
                    }
                    CandidateRule::Random(_) => candidates.shuffle(rng.as_mut().unwrap()),
                }
            }
            frames.push(Frame { candidates, next: 0 });
            need_frame = false;
        }

        let frame = frames.last_mut().unwrap();
        let mut placed = false;
        while frame.next < frame.candidates.len() {
            let c = frame.candidates[frame.next];
            frame.next += 1;
            if free_deg[c] < plan.need[u] {
                continue;
            }
            place(u, c, &mut free, &mut free_deg, &mut map, &mut owner, &mut pending);
            // Forward check: placed neighbors of c must still have room for
            // their remaining children.
            let starved = h.neighbors(c).iter().any(|&w| {
                let o = owner[w];
                o != usize::MAX && free_deg[w] < pending[o]
            });
            if starved {
                unplace(u, &mut free, &mut free_deg, &mut map, &mut owner, &mut pending);
                continue;
            }
            placed = true;
            break;
        }

        if placed {
            level += 1;
            deepest = deepest.max(level);
            need_frame = true;
            continue;
        }

        // Dead end: drop this frame and undo the previous placement.
        frames.pop();
        level -= 1;
        if level == 0 {
            return Err(failure(deepest, backtracks, true));
        }
        unplace(plan.order[level], &mut free, &mut free_deg, &mut map, &mut owner, &mut pending);
        backtracks += 1;
        if budget.max_backtracks.is_some_and(|m| backtracks > m) {
            return Err(failure(deepest, backtracks, false));
        }
    }
    Ok(SearchOutcome { map, backtracks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::tree::{make_special_tree, random_bounded_degree_tree, TreeKind};
    use proptest::prelude::*;

    fn path_tree(k: usize) -> RootedTree {
        make_special_tree(TreeKind::Path, k, 2).unwrap()
    }

    #[test]
    fn complete_host() {
        let e = embed_rooted_tree(&complete(10), &path_tree(4), 0, &EmbedBudget::default()).unwrap();
        assert_eq!(e.map[0], 0);
        assert!(verify_embedding(&complete(10), &path_tree(4), &e).valid);
    }

    #[test]
    fn cycle_host() {
        let e = embed_rooted_tree(&cycle(6), &path_tree(3), 0, &EmbedBudget::unbounded()).unwrap();
        assert_eq!(e.map[0], 0);
        assert!(verify_embedding(&cycle(6), &path_tree(3), &e).valid);
    }

    #[test]
    fn star_has_no_long_path() {
        for root in 0..6 {
            let err = embed_rooted_tree(&star(5), &path_tree(4), root, &EmbedBudget::unbounded()).unwrap_err();
            assert!(matches!(err, Error::SearchFailed { exhaustive: true, .. }), "{err:?}");
        }
    }

    #[test]
    fn preconditions() {
        assert!(embed_rooted_tree(&complete(3), &path_tree(4), 0, &EmbedBudget::default()).is_err());
        assert!(embed_rooted_tree(&complete(5), &path_tree(4), 5, &EmbedBudget::default()).is_err());
    }

    #[test]
    fn single_vertex_guest() {
        let t = path_tree(1);
        let e = embed_rooted_tree(&Graph::empty(3), &t, 2, &EmbedBudget::default()).unwrap();
        assert_eq!(e.map, vec![2]);
    }

    #[test]
    fn verify_examples() {
        let p4 = path(4);
        let t = path_tree(4);
        assert!(verify_embedding(&p4, &t, &Embedding { map: vec![0, 1, 2, 3] }).valid);
        let dup = verify_embedding(&p4, &t, &Embedding { map: vec![0, 1, 0, 3] });
        assert_eq!(dup.violation, Some(Violation::NotInjective { first: 0, second: 2, host: 0 }));
        let gap = verify_embedding(&p4, &t, &Embedding { map: vec![0, 1, 3, 2] });
        assert_eq!(gap.violation, Some(Violation::MissingEdge { guest: (1, 2), host: (1, 3) }));
        let short = verify_embedding(&p4, &t, &Embedding { map: vec![0] });
        assert!(!short.valid);
    }

    #[test]
    fn availability_mask_is_respected() {
        let h = complete(8);
        let avail = VertexSet::from_vertices(8, [1, 3, 5, 7]).unwrap();
        let t = path_tree(4);
        let plan = SearchPlan::for_tree(&t, NodeOrder::Bfs);
        let out = search(&h, &plan, 3, Some(&avail), &EmbedBudget::default()).unwrap();
        assert!(out.map.iter().all(|&v| avail.contains(v)));
        assert!(search(&h, &plan, 0, Some(&avail), &EmbedBudget::default()).is_err());
        let t5 = path_tree(5);
        let plan5 = SearchPlan::for_tree(&t5, NodeOrder::Bfs);
        assert!(matches!(
            search(&h, &plan5, 1, Some(&avail), &EmbedBudget::unbounded()),
            Err(Error::SearchFailed { exhaustive: true, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn every_rule_and_order_yields_valid_embeddings(k in 1usize..40, d in 2usize..5, seed in any::<u64>(), rule in 0usize..3, dfs in any::<bool>()) {
            let t = random_bounded_degree_tree(k, d, seed).unwrap();
            let h = complete(45);
            let budget = EmbedBudget {
                max_backtracks: Some(10_000),
                node_order: if dfs { NodeOrder::Dfs } else { NodeOrder::Bfs },
                candidate_rule: [CandidateRule::MinResidualDegree, CandidateRule::MaxResidualDegree, CandidateRule::Random(seed)][rule],
            };
            let e = embed_rooted_tree(&h, &t, 7, &budget).unwrap();
            prop_assert_eq!(e.map[t.root()], 7);
            prop_assert!(verify_embedding(&h, &t, &e).valid);
        }
    }
}
