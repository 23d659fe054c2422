//! Rooted guest trees with a degree bound, their text format and generators.

use std::collections::{BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A tree on `0..k` stored as a parent array, with a degree bound `d >= 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    degree_bound: usize,
}

impl RootedTree {
    /// Validates a parent array: exactly one root, every vertex reaches it,
    /// and no vertex has degree above `degree_bound`.
    pub fn from_parents(parent: Vec<Option<usize>>, degree_bound: usize) -> Result<Self> {
        let k = parent.len();
        if k == 0 {
            return Err(Error::InvalidInput("tree must have at least one vertex".into()));
        }
        if degree_bound < 2 {
            return Err(Error::InvalidInput(format!(
                "degree bound must be at least 2, got {degree_bound}"
            )));
        }
        let roots: Vec<usize> = (0..k).filter(|&v| parent[v].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "expected exactly one root, found {}",
                    roots.len()
                )))
            }
        };
        let mut children = vec![Vec::new(); k];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= k || p == v {
                    return Err(Error::InvalidInput(format!("vertex {v} has invalid parent {p}")));
                }
                children[p].push(v);
            }
        }
        // k - 1 parent pointers reaching the root from every vertex means a tree.
        let mut seen = vec![false; k];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &c in &children[v] {
                if !seen[c] {
                    seen[c] = true;
                    reached += 1;
                    queue.push_back(c);
                }
            }
        }
        if reached != k {
            return Err(Error::InvalidInput(format!(
                "parent array has a cycle: only {reached} of {k} vertices reach the root"
            )));
        }
        let tree = RootedTree {
            parent,
            children,
            root,
            degree_bound,
        };
        if let Some(v) = (0..k).find(|&v| tree.degree(v) > degree_bound) {
            return Err(Error::InvalidInput(format!(
                "vertex {v} has degree {} above the bound {degree_bound}",
                tree.degree(v)
            )));
        }
        Ok(tree)
    }

    /// Orients an undirected edge list away from `root`.
    pub fn from_edges(k: usize, edges: &[(usize, usize)], root: usize, degree_bound: usize) -> Result<Self> {
        if root >= k {
            return Err(Error::InvalidInput(format!("root {root} out of range for k = {k}")));
        }
        if edges.len() + 1 != k {
            return Err(Error::InvalidInput(format!(
                "a tree on {k} vertices has {} edges, got {}",
                k - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); k];
        for &(u, v) in edges {
            if u >= k || v >= k || u == v {
                return Err(Error::InvalidInput(format!("bad tree edge ({u}, {v})")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut parent = vec![None; k];
        let mut seen = vec![false; k];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("edge list is not connected".into()));
        }
        Self::from_parents(parent, degree_bound)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.root
    }

    #[inline]
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    #[inline]
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    #[inline]
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Tree neighbors of `v` (parent first, then children).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[v].into_iter().chain(self.children[v].iter().copied())
    }

    /// `(parent, child)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
    }

    /// Breadth-first order from the root; children visited in stored order.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.vertex_count());
        let mut queue = VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            queue.extend(self.children[v].iter().copied());
        }
        order
    }

    /// Depth-first preorder from the root.
    pub fn dfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.vertex_count());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.children[v].iter().rev().copied());
        }
        order
    }

    /// Same tree rooted at `new_root`.
    pub fn rerooted(&self, new_root: usize) -> Result<Self> {
        let edges: Vec<_> = self.edges().collect();
        Self::from_edges(self.vertex_count(), &edges, new_root, self.degree_bound)
    }

    /// Same tree with a different degree bound (validated).
    pub fn with_degree_bound(&self, degree_bound: usize) -> Result<Self> {
        Self::from_parents(self.parent.clone(), degree_bound)
    }

    /// Parses `k root` followed by `k` lines `v parent_of_v` (`-1` for the
    /// root). The degree bound is set to `max(2, max degree)`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("missing `k root` header".into()))?;
        let head = parse_ints(header, ln)?;
        let (k, root) = match head.as_slice() {
            [k, r] if *k >= 1 && *r >= 0 => (*k as usize, *r as usize),
            _ => return Err(Error::InvalidInput(format!("line {ln}: bad header"))),
        };
        let mut parent: Vec<Option<Option<usize>>> = vec![None; k];
        let mut count = 0;
        for (ln, line) in lines {
            let vals = parse_ints(line, ln)?;
            let (v, p) = match vals.as_slice() {
                [v, p] if *v >= 0 && (*v as usize) < k && *p >= -1 => (*v as usize, *p),
                _ => return Err(Error::InvalidInput(format!("line {ln}: bad `v parent` line"))),
            };
            if parent[v].is_some() {
                return Err(Error::InvalidInput(format!("line {ln}: vertex {v} listed twice")));
            }
            parent[v] = Some(if p < 0 { None } else { Some(p as usize) });
            count += 1;
        }
        if count != k {
            return Err(Error::InvalidInput(format!("expected {k} vertex lines, got {count}")));
        }
        let parent: Vec<Option<usize>> = parent.into_iter().map(|p| p.unwrap()).collect();
        if root >= k || parent[root].is_some() {
            return Err(Error::InvalidInput(format!("declared root {root} has a parent")));
        }
        let mut degree = vec![0usize; k];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p < k {
                    degree[v] += 1;
                    degree[p] += 1;
                }
            }
        }
        let d = degree.iter().copied().max().unwrap_or(0).max(2);
        Self::from_parents(parent, d)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.vertex_count(), self.root).unwrap();
        for (v, p) in self.parent.iter().enumerate() {
            match p {
                Some(p) => writeln!(out, "{v} {p}").unwrap(),
                None => writeln!(out, "{v} -1").unwrap(),
            }
        }
        out
    }
}

fn parse_ints(line: &str, ln: usize) -> Result<Vec<i64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|e| Error::InvalidInput(format!("line {ln}: {e}")))
        })
        .collect()
}

/// Random labelled tree on `k` vertices with maximum degree at most `d`,
/// rooted at 0.
///
/// Built from a random Prüfer sequence in which no label is used more than
/// `d - 1` times; each position draws uniformly among labels that still have
/// room.
pub fn random_bounded_degree_tree(k: usize, d: usize, seed: u64) -> Result<RootedTree> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if d < 2 {
        return Err(Error::Infeasible(format!("no tree on {k} vertices has maximum degree {d} < 2 in this model")));
    }
    if k <= 2 {
        let parent = (0..k).map(|v| if v == 0 { None } else { Some(0) }).collect();
        return RootedTree::from_parents(parent, d);
    }
    let mut rng = RngStream::new(seed, 0).rng();
    let mut uses = vec![0usize; k];
    let mut open: Vec<usize> = (0..k).collect();
    let mut seq = Vec::with_capacity(k - 2);
    for _ in 0..k - 2 {
        let i = rng.gen_range(0..open.len());
        let label = open[i];
        seq.push(label);
        uses[label] += 1;
        if uses[label] == d - 1 {
            open.swap_remove(i);
        }
    }
    let edges = prufer_decode(k, &seq);
    RootedTree::from_edges(k, &edges, 0, d)
}

/// Decodes a Prüfer sequence of length `k - 2` into the edges of a tree on `k` vertices.
pub fn prufer_decode(k: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len() + 2, k);
    let mut degree = vec![1usize; k];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..k).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(k - 1);
    for &s in seq {
        let Reverse(leaf) = leaves.pop().expect("Prüfer decoding always has a leaf");
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().unwrap();
    let Reverse(b) = leaves.pop().unwrap();
    edges.push((a, b));
    edges
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    Path,
    Spider,
    CompleteDAry,
    Caterpillar,
}

impl FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(TreeKind::Path),
            "spider" => Ok(TreeKind::Spider),
            "complete_d_ary" | "complete-d-ary" => Ok(TreeKind::CompleteDAry),
            "caterpillar" => Ok(TreeKind::Caterpillar),
            _ => Err(Error::InvalidInput(format!("unknown tree kind `{s}`"))),
        }
    }
}

/// Deterministic tree families, all rooted at vertex 0.
///
/// * `Path`: `0 - 1 - ... - (k-1)`.
/// * `Spider`: a centre with `min(d, k-1)` legs of near-equal length.
/// * `CompleteDAry`: heap-ordered tree with `d - 1` children per node
///   (every vertex, the root included, has degree at most `d`).
/// * `Caterpillar`: a spine where every spine vertex carries `d - 2` leaves.
pub fn make_special_tree(kind: TreeKind, k: usize, d: usize) -> Result<RootedTree> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if d < 2 {
        return Err(Error::Infeasible(format!("degree bound {d} < 2")));
    }
    let parent: Vec<Option<usize>> = match kind {
        TreeKind::Path => (0..k).map(|v| v.checked_sub(1)).collect(),
        TreeKind::Spider => {
            let mut parent = vec![None; k];
            if k > 1 {
                let legs = d.min(k - 1);
                let (base, extra) = ((k - 1) / legs, (k - 1) % legs);
                let mut next = 1;
                for leg in 0..legs {
                    let len = base + usize::from(leg < extra);
                    let mut prev = 0;
                    for _ in 0..len {
                        parent[next] = Some(prev);
                        prev = next;
                        next += 1;
                    }
                }
            }
            parent
        }
        TreeKind::CompleteDAry => (0..k)
            .map(|v| if v == 0 { None } else { Some((v - 1) / (d - 1)) })
            .collect(),
        TreeKind::Caterpillar => {
            let mut parent = vec![None; k];
            let mut spine = 0;
            let mut legs = 0;
            for v in 1..k {
                if legs < d - 2 {
                    parent[v] = Some(spine);
                    legs += 1;
                } else {
                    parent[v] = Some(spine);
                    spine = v;
                    legs = 0;
                }
            }
            parent
        }
    };
    RootedTree::from_parents(parent, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent check: k - 1 distinct edges, connected by union-find, degrees within d.
    fn independent_tree_check(t: &RootedTree, d: usize) -> bool {
        let k = t.vertex_count();
        let edges: Vec<_> = t.edges().collect();
        if edges.len() + 1 != k {
            return false;
        }
        let mut uf: Vec<usize> = (0..k).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut deg = vec![0; k];
        for (a, b) in edges {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            if ra == rb {
                return false;
            }
            uf[ra] = rb;
            deg[a] += 1;
            deg[b] += 1;
        }
        deg.iter().all(|&x| x <= d)
    }

    #[test]
    fn random_tree_small_cases() {
        let t = random_bounded_degree_tree(1, 3, 9).unwrap();
        assert_eq!(t.vertex_count(), 1);
        let p = random_bounded_degree_tree(5, 2, 9).unwrap();
        assert_eq!(p.max_degree(), 2);
        let leaves = (0..5).filter(|&v| p.degree(v) == 1).count();
        assert_eq!(leaves, 2, "only degree-2 tree on 5 vertices is a path");
        assert!(random_bounded_degree_tree(5, 1, 0).is_err());
    }

    #[test]
    fn random_tree_reproducible() {
        let a = random_bounded_degree_tree(100, 3, 7).unwrap();
        let b = random_bounded_degree_tree(100, 3, 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(a.max_degree() <= 3);
        assert!(independent_tree_check(&a, 3));
        assert_ne!(a, random_bounded_degree_tree(100, 3, 8).unwrap());
    }

    #[test]
    fn special_trees() {
        let p4 = make_special_tree(TreeKind::Path, 4, 2).unwrap();
        assert_eq!(p4.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);

        let t = make_special_tree(TreeKind::CompleteDAry, 13, 4).unwrap();
        assert_eq!(t.children(0).len(), 3);
        assert!((1..4).all(|v| t.children(v).len() == 3));
        assert!((4..13).all(|v| t.children(v).is_empty()));

        let s = make_special_tree(TreeKind::Spider, 7, 3).unwrap();
        assert_eq!(s.degree(0), 3);
        for &c in s.children(0) {
            assert_eq!(s.children(c).len(), 1);
            assert!(s.children(s.children(c)[0]).is_empty());
        }

        let c = make_special_tree(TreeKind::Caterpillar, 20, 4).unwrap();
        assert!(c.max_degree() <= 4);
        assert!(make_special_tree(TreeKind::Path, 4, 1).is_err());
    }

    #[test]
    fn rejects_bad_parent_arrays() {
        assert!(RootedTree::from_parents(vec![None, None], 2).is_err());
        assert!(RootedTree::from_parents(vec![Some(1), Some(0)], 2).is_err());
        assert!(RootedTree::from_parents(vec![None, Some(2), Some(1)], 2).is_err());
        assert!(RootedTree::from_parents(vec![None, Some(0), Some(0), Some(0)], 2).is_err());
    }

    #[test]
    fn text_format() {
        let t = make_special_tree(TreeKind::Spider, 7, 3).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("7 0\n0 -1\n"));
        let back = RootedTree::parse(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert!(RootedTree::parse("2 0\n0 -1\n").is_err());
        assert!(RootedTree::parse("2 1\n0 -1\n1 0\n").is_err());
    }

    #[test]
    fn reroot_keeps_edges() {
        let t = make_special_tree(TreeKind::Path, 5, 2).unwrap();
        let r = t.rerooted(2).unwrap();
        assert_eq!(r.root(), 2);
        assert_eq!(r.children(2).len(), 2);
    }

    proptest! {
        #[test]
        fn random_trees_are_trees(k in 1usize..300, d in 2usize..6, seed in any::<u64>()) {
            let t = random_bounded_degree_tree(k, d, seed).unwrap();
            prop_assert_eq!(t.vertex_count(), k);
            prop_assert!(independent_tree_check(&t, d));
        }
    }
}
