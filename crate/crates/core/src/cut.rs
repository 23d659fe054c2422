//! Cutting a bounded-degree tree into pieces of controlled size.
//!
//! [`cut_once`] finds an edge whose removal splits off a component with
//! between `k` and `(d-1)(k-1)+1` vertices. [`partition_tree`] applies it
//! repeatedly, peeling pieces from the back, so that the resulting ordered
//! pieces `T_1, ..., T_s` each hang off the union of their predecessors by a
//! single edge and satisfy, for `i > 1`,
//!
//! ```text
//! (εn/2 + Σ_{j>i} |T_j|) / (8d²)  <=  |T_i|  <=  (εn/2 + Σ_{j>i} |T_j|) / (8d)
//! ```
//!
//! All threshold comparisons are done in exact integer arithmetic: `ε` is
//! converted once to a reduced fraction `p/q` and every inequality is
//! cross-multiplied.

use std::collections::VecDeque;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::RootedTree;

/// Result of a single cut: deleting `(parent_vertex, child_vertex)` leaves a
/// component of `subtree_size` vertices containing `child_vertex`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeCut {
    pub parent_vertex: usize,
    pub child_vertex: usize,
    pub subtree_size: usize,
}

/// `ε` as an exact fraction `num/den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExactEpsilon {
    pub num: u64,
    pub den: u64,
}

impl ExactEpsilon {
    /// Closest small fraction to `eps` (continued-fraction expansion), so
    /// that `0.3` becomes exactly `3/10`. Requires `0 < eps < 1/2`.
    pub fn from_f64(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Precondition(format!("epsilon must lie in (0, 1/2), got {eps}")));
        }
        let r: Ratio<i64> = Ratio::approximate_float(eps)
            .ok_or_else(|| Error::InvalidInput(format!("cannot represent epsilon {eps} as a fraction")))?;
        let (num, den) = (*r.numer() as u64, *r.denom() as u64);
        if num == 0 || 2 * num >= den {
            return Err(Error::Precondition(format!("epsilon must lie in (0, 1/2), got {eps}")));
        }
        Ok(ExactEpsilon { num, den })
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// The running quantity `a = εn/2 + removed`, kept as `2·den·a` (an integer).
#[derive(Clone, Copy, Debug)]
struct Budget {
    eps: ExactEpsilon,
    d: u128,
    scaled_a: u128,
}

impl Budget {
    fn new(eps: ExactEpsilon, n: usize, d: usize) -> Self {
        Budget {
            eps,
            d: d as u128,
            scaled_a: eps.num as u128 * n as u128,
        }
    }

    fn add(&mut self, removed: usize) {
        self.scaled_a += 2 * self.eps.den as u128 * removed as u128;
    }

    fn two_den(&self) -> u128 {
        2 * self.eps.den as u128
    }

    /// `size >= a / (8d²)`
    fn above_lower(&self, size: usize) -> bool {
        size as u128 * 8 * self.d * self.d * self.two_den() >= self.scaled_a
    }

    /// `size <= a / (8d)`
    fn below_upper(&self, size: usize) -> bool {
        size as u128 * 8 * self.d * self.two_den() <= self.scaled_a
    }

    /// `ceil(a / (8d²))`, at least 1.
    fn min_cut_size(&self) -> usize {
        let den = 8 * self.d * self.d * self.two_den();
        (self.scaled_a.div_ceil(den).max(1)) as usize
    }

    fn as_f64(&self) -> f64 {
        self.scaled_a as f64 / self.two_den() as f64
    }
}

/// Undirected view of a tree with some vertices already deleted.
struct Remainder {
    adj: Vec<Vec<usize>>,
    alive: Vec<bool>,
    alive_count: usize,
}

impl Remainder {
    fn new(t: &RootedTree) -> Self {
        let k = t.vertex_count();
        let adj = (0..k).map(|v| t.neighbors(v).collect()).collect();
        Remainder {
            adj,
            alive: vec![true; k],
            alive_count: k,
        }
    }

    fn alive_degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&w| self.alive[w]).count()
    }

    /// One application of the cutting argument on the live component.
    /// Returns the cut and the vertices of the split-off component.
    fn cut(&self, k: usize, d: usize) -> Result<(TreeCut, Vec<usize>)> {
        if k == 0 {
            return Err(Error::Precondition("k must be at least 1".into()));
        }
        if self.alive_count < k + 1 {
            return Err(Error::Precondition(format!(
                "tree has {} vertices, cutting needs at least k + 1 = {}",
                self.alive_count,
                k + 1
            )));
        }
        // Lowest-index leaf becomes the root.
        let r = (0..self.adj.len())
            .find(|&v| self.alive[v] && self.alive_degree(v) <= 1)
            .expect("a tree with >= 2 vertices has a leaf");
        let n = self.adj.len();
        let mut parent = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        let mut order = Vec::with_capacity(self.alive_count);
        let mut queue = VecDeque::from([r]);
        parent[r] = r;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &self.adj[v] {
                if self.alive[w] && parent[w] == usize::MAX {
                    parent[w] = v;
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut size = vec![1usize; n];
        for &v in order.iter().rev() {
            if v != r {
                size[parent[v]] += size[v];
            }
        }
        // Deepest level holding a vertex with subtree size >= k, lowest index on ties.
        let u = order
            .iter()
            .copied()
            .filter(|&v| size[v] >= k)
            .max_by(|&a, &b| depth[a].cmp(&depth[b]).then(b.cmp(&a)))
            .expect("root subtree has size >= k");
        if u == r {
            return Err(Error::InvariantViolation("cut landed on the root leaf".into()));
        }
        let upper = (d - 1) * (k - 1) + 1;
        if size[u] < k || size[u] > upper {
            return Err(Error::InvariantViolation(format!(
                "cut size {} outside [{k}, {upper}]; is the degree bound {d} respected?",
                size[u]
            )));
        }
        let mut component = Vec::with_capacity(size[u]);
        let mut stack = vec![u];
        while let Some(v) = stack.pop() {
            component.push(v);
            for &w in &self.adj[v] {
                if self.alive[w] && w != parent[v] {
                    stack.push(w);
                }
            }
        }
        component.sort_unstable();
        Ok((
            TreeCut {
                parent_vertex: parent[u],
                child_vertex: u,
                subtree_size: size[u],
            },
            component,
        ))
    }

    fn remove(&mut self, vertices: &[usize]) {
        for &v in vertices {
            if self.alive[v] {
                self.alive[v] = false;
                self.alive_count -= 1;
            }
        }
    }
}

/// Finds an edge of `t` whose deletion leaves a component with between `k`
/// and `(d-1)(k-1)+1` vertices, where `d` is the tree's degree bound.
///
/// The tree is re-rooted at its lowest-index leaf; the returned component is
/// the subtree below `child_vertex` in that orientation.
pub fn cut_once(t: &RootedTree, k: usize) -> Result<TreeCut> {
    Remainder::new(t).cut(k, t.degree_bound()).map(|(cut, _)| cut)
}

/// One piece `T_i` of a [`TreePartition`].
#[derive(Clone, Debug, Serialize)]
pub struct TreePiece {
    /// Global vertex ids, sorted; the local id of `vertices[j]` is `j`.
    pub vertices: Vec<usize>,
    /// The piece re-indexed locally and rooted at the local id of `root`.
    #[serde(skip)]
    pub tree: RootedTree,
    /// Global id of the piece root.
    pub root: usize,
    /// `(vertex in an earlier piece, root)`; `None` for the first piece.
    pub connect_edge: Option<(usize, usize)>,
}

impl TreePiece {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn local_of(&self, global: usize) -> Option<usize> {
        self.vertices.binary_search(&global).ok()
    }
}

/// Ordered pieces `T_1..T_s` of a tree.
#[derive(Clone, Debug, Serialize)]
pub struct TreePartition {
    pub pieces: Vec<TreePiece>,
    /// `piece_of[v]` is the index (0-based) of the piece holding global vertex `v`.
    pub piece_of: Vec<usize>,
    pub epsilon: ExactEpsilon,
    pub ambient_n: usize,
    pub degree_bound: usize,
}

impl TreePartition {
    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// `εn/2 + Σ_{j>i} |T_j|` for 0-based piece index `i`, as a float (for reports).
    pub fn budget_before(&self, i: usize) -> f64 {
        let mut b = Budget::new(self.epsilon, self.ambient_n, self.degree_bound);
        b.add(self.pieces[i + 1..].iter().map(TreePiece::len).sum());
        b.as_f64()
    }

    /// Cross edges leaving piece `i` towards later pieces, as `(vertex in T_i, root of T_j, j)`.
    pub fn outgoing_edges(&self, i: usize) -> Vec<(usize, usize, usize)> {
        self.pieces
            .iter()
            .enumerate()
            .skip(i + 1)
            .filter_map(|(j, p)| {
                let (x, r) = p.connect_edge?;
                (self.piece_of[x] == i).then_some((x, r, j))
            })
            .collect()
    }
}

/// Upper bound `10 d² ln(2/ε)` on the number of pieces.
pub fn piece_count_bound(d: usize, eps: f64) -> f64 {
    10.0 * (d * d) as f64 * (2.0 / eps).ln()
}

/// Cuts `t` into ordered pieces obeying the size bounds above.
///
/// Preconditions: `0 < ε < 1/2`, `|V(t)| <= (1-ε)·ambient_n`, and
/// `ε·ambient_n/2 >= 8d`. The last condition is what makes the size window
/// `[a/(8d²), a/(8d)]` contain an integer reachable by a single cut; below it
/// no partition with the required bounds need exist.
pub fn partition_tree(t: &RootedTree, epsilon: f64, ambient_n: usize) -> Result<TreePartition> {
    let eps = ExactEpsilon::from_f64(epsilon)?;
    let d = t.degree_bound();
    let k = t.vertex_count();
    if k as u128 * eps.den as u128 > (eps.den - eps.num) as u128 * ambient_n as u128 {
        return Err(Error::Precondition(format!(
            "tree has {k} vertices, more than (1 - {epsilon})·{ambient_n}"
        )));
    }
    if (eps.num as u128) * (ambient_n as u128) < 16 * d as u128 * eps.den as u128 {
        return Err(Error::Precondition(format!(
            "ε·n/2 = {} is below 8d = {}: no cut size fits the window",
            epsilon * ambient_n as f64 / 2.0,
            8 * d
        )));
    }

    let mut rem = Remainder::new(t);
    let mut budget = Budget::new(eps, ambient_n, d);
    // Pieces in peeling order (T'_1, T'_2, ...), each with its cut edge.
    let mut peeled: Vec<(Vec<usize>, TreeCut)> = Vec::new();
    while !budget.below_upper(rem.alive_count) {
        let (cut, component) = rem.cut(budget.min_cut_size(), d)?;
        if !budget.above_lower(cut.subtree_size) || !budget.below_upper(cut.subtree_size) {
            return Err(Error::InvariantViolation(format!(
                "cut of size {} misses the window around a = {}",
                cut.subtree_size,
                budget.as_f64()
            )));
        }
        rem.remove(&component);
        budget.add(component.len());
        peeled.push((component, cut));
    }
    let first: Vec<usize> = (0..k).filter(|&v| rem.alive[v]).collect();

    let mut pieces = Vec::with_capacity(peeled.len() + 1);
    pieces.push(build_piece(t, first.clone(), first[0], None)?);
    for (verts, cut) in peeled.into_iter().rev() {
        pieces.push(build_piece(
            t,
            verts,
            cut.child_vertex,
            Some((cut.parent_vertex, cut.child_vertex)),
        )?);
    }
    let mut piece_of = vec![usize::MAX; k];
    for (i, p) in pieces.iter().enumerate() {
        for &v in &p.vertices {
            piece_of[v] = i;
        }
    }
    let partition = TreePartition {
        pieces,
        piece_of,
        epsilon: eps,
        ambient_n,
        degree_bound: d,
    };
    validate_partition(t, &partition)?;
    Ok(partition)
}

/// The trivial partition: `t` as its only piece, rooted at its own root.
/// Used where the size window of [`partition_tree`] is empty.
pub fn single_piece(t: &RootedTree, epsilon: f64, ambient_n: usize) -> Result<TreePartition> {
    let eps = ExactEpsilon::from_f64(epsilon)?;
    let k = t.vertex_count();
    let piece = build_piece(t, (0..k).collect(), t.root(), None)?;
    Ok(TreePartition {
        pieces: vec![piece],
        piece_of: vec![0; k],
        epsilon: eps,
        ambient_n,
        degree_bound: t.degree_bound(),
    })
}

fn build_piece(
    t: &RootedTree,
    vertices: Vec<usize>,
    root: usize,
    connect_edge: Option<(usize, usize)>,
) -> Result<TreePiece> {
    let local = |v: usize| vertices.binary_search(&v).ok();
    let edges: Vec<(usize, usize)> = t
        .edges()
        .filter_map(|(a, b)| Some((local(a)?, local(b)?)))
        .collect();
    let tree = RootedTree::from_edges(
        vertices.len(),
        &edges,
        local(root).expect("root lies in its piece"),
        t.degree_bound(),
    )
    .map_err(|e| Error::InvariantViolation(format!("piece is not a subtree: {e}")))?;
    Ok(TreePiece {
        vertices,
        tree,
        root,
        connect_edge,
    })
}

/// Re-checks every structural and size property of a partition.
pub fn validate_partition(t: &RootedTree, p: &TreePartition) -> Result<()> {
    let fail = |m: String| Err(Error::InvariantViolation(m));
    let k = t.vertex_count();
    let mut owner = vec![usize::MAX; k];
    for (i, piece) in p.pieces.iter().enumerate() {
        for &v in &piece.vertices {
            if v >= k || owner[v] != usize::MAX {
                return fail(format!("vertex {v} missing from the tree or in two pieces"));
            }
            owner[v] = i;
        }
    }
    if owner.contains(&usize::MAX) {
        return fail("pieces do not cover the tree".into());
    }
    let d = p.degree_bound;
    let s = p.pieces.len();
    if s as f64 > piece_count_bound(d, p.epsilon.as_f64()) {
        return fail(format!("{s} pieces exceed 10d²·ln(2/ε)"));
    }
    let mut budget = Budget::new(p.epsilon, p.ambient_n, d);
    for i in (0..s).rev() {
        let piece = &p.pieces[i];
        let back: Vec<(usize, usize)> = t
            .edges()
            .filter(|&(a, b)| {
                let (oa, ob) = (owner[a], owner[b]);
                (oa == i && ob < i) || (ob == i && oa < i)
            })
            .collect();
        if i == 0 {
            if !back.is_empty() || piece.connect_edge.is_some() {
                return fail("first piece has a connecting edge".into());
            }
        } else {
            let &[(a, b)] = back.as_slice() else {
                return fail(format!("piece {} has {} edges to earlier pieces", i + 1, back.len()));
            };
            let expected = if owner[a] == i { (b, a) } else { (a, b) };
            if piece.connect_edge != Some(expected) || piece.root != expected.1 {
                return fail(format!("piece {} records the wrong connecting edge or root", i + 1));
            }
            if !budget.above_lower(piece.len()) {
                return fail(format!("piece {} below its lower size bound", i + 1));
            }
        }
        if !budget.below_upper(piece.len()) {
            return fail(format!("piece {} above its upper size bound", i + 1));
        }
        budget.add(piece.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{make_special_tree, random_bounded_degree_tree, TreeKind};
    use proptest::prelude::*;

    /// Component size on `child`'s side when deleting each edge, by brute force.
    fn brute_cut_sizes(t: &RootedTree) -> Vec<(usize, usize, usize)> {
        let k = t.vertex_count();
        t.edges()
            .flat_map(|(a, b)| {
                let side = |start: usize, blocked: usize| {
                    let mut seen = vec![false; k];
                    seen[start] = true;
                    seen[blocked] = true;
                    let mut stack = vec![start];
                    let mut n = 0;
                    while let Some(v) = stack.pop() {
                        n += 1;
                        for w in t.neighbors(v) {
                            if !seen[w] {
                                seen[w] = true;
                                stack.push(w);
                            }
                        }
                    }
                    n
                };
                [(a, b, side(b, a)), (b, a, side(a, b))]
            })
            .collect()
    }

    #[test]
    fn cut_path_of_seven() {
        let p7 = make_special_tree(TreeKind::Path, 7, 2).unwrap();
        let cut = cut_once(&p7, 3).unwrap();
        assert_eq!(cut.subtree_size, 3);
        assert!(brute_cut_sizes(&p7).contains(&(cut.parent_vertex, cut.child_vertex, 3)));
    }

    #[test]
    fn cut_star() {
        let star = RootedTree::from_parents(vec![None, Some(0), Some(0), Some(0)], 3).unwrap();
        let cut = cut_once(&star, 2).unwrap();
        assert_eq!(cut.subtree_size, 3);
    }

    #[test]
    fn cut_k1_is_a_leaf() {
        let t = random_bounded_degree_tree(40, 2, 3).unwrap();
        let cut = cut_once(&t, 1).unwrap();
        assert_eq!(cut.subtree_size, 1);
        assert_eq!(t.degree(cut.child_vertex), 1);
    }

    #[test]
    fn cut_too_small() {
        let p3 = make_special_tree(TreeKind::Path, 3, 2).unwrap();
        assert!(matches!(cut_once(&p3, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn small_tree_is_one_piece() {
        // |V(T)| <= εn/(16d): 0.3·1000/32 = 9.375.
        let t = random_bounded_degree_tree(9, 2, 1).unwrap();
        let p = partition_tree(&t, 0.3, 1000).unwrap();
        assert_eq!(p.piece_count(), 1);
        assert!(p.pieces[0].connect_edge.is_none());
    }

    #[test]
    fn piece_bound_value() {
        assert!((piece_count_bound(2, 0.3) - 75.88).abs() < 0.01);
    }

    #[test]
    fn path_of_seventy() {
        let t = make_special_tree(TreeKind::Path, 70, 2).unwrap();
        // a_0 = 15: the first window [15/32, 15/16] holds no integer.
        assert!(matches!(partition_tree(&t, 0.3, 100), Err(Error::Precondition(_))));
        let p = partition_tree(&t, 0.3, 400).unwrap();
        assert!(p.piece_count() as f64 <= 75.88);
        // a_{i-1} replayed with plain rationals.
        let mut a = Ratio::new(60i64, 1);
        for piece in p.pieces.iter().skip(1).rev() {
            let size = Ratio::from_integer(piece.len() as i64);
            assert!(size >= a / 32 && size <= a / 16, "size {} vs a {}", piece.len(), a);
            a += size;
        }
        assert!(Ratio::from_integer(p.pieces[0].len() as i64) <= a / 16);
    }

    #[test]
    fn partition_preconditions() {
        let t = random_bounded_degree_tree(80, 3, 1).unwrap();
        assert!(partition_tree(&t, 0.3, 100).is_err(), "80 > 0.7·100");
        assert!(partition_tree(&t, 0.6, 1000).is_err());
        assert!(partition_tree(&t, 0.3, 120).is_err(), "0.3·120/2 = 18 < 24");
    }

    #[test]
    fn exact_epsilon() {
        assert_eq!(ExactEpsilon::from_f64(0.3).unwrap(), ExactEpsilon { num: 3, den: 10 });
        assert!(ExactEpsilon::from_f64(0.5).is_err());
        assert!(ExactEpsilon::from_f64(0.0).is_err());
    }

    proptest! {
        #[test]
        fn cut_once_within_bounds(k in 2usize..200, d in 2usize..6, seed in any::<u64>(), frac in 0.0f64..0.5) {
            let t = random_bounded_degree_tree(k, d, seed).unwrap();
            let target = ((k as f64 * frac) as usize).max(1);
            let cut = cut_once(&t, target).unwrap();
            prop_assert!(cut.subtree_size >= target);
            prop_assert!(cut.subtree_size <= (d - 1) * (target - 1) + 1);
            prop_assert!(brute_cut_sizes(&t).contains(&(cut.parent_vertex, cut.child_vertex, cut.subtree_size)));
        }

        #[test]
        fn partitions_validate(k in 1usize..400, d in 2usize..6, seed in any::<u64>(), ei in 0usize..3, slack in 0usize..200) {
            let eps = [0.1, 0.3, 0.45][ei];
            let t = random_bounded_degree_tree(k, d, seed).unwrap();
            let n = ((k as f64 / (1.0 - eps)).ceil() as usize).max((16.0 * d as f64 / eps).ceil() as usize) + slack;
            let p = partition_tree(&t, eps, n).unwrap();
            prop_assert!(validate_partition(&t, &p).is_ok());
            for (i, piece) in p.pieces.iter().enumerate() {
                prop_assert_eq!(piece.tree.vertex_count(), piece.len());
                prop_assert_eq!(piece.vertices[piece.tree.root()], piece.root);
                for (j, &v) in piece.vertices.iter().enumerate() {
                    prop_assert_eq!(p.piece_of[v], i);
                    prop_assert_eq!(piece.local_of(v), Some(j));
                }
            }
        }
    }
}
