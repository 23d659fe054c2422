//! Simple undirected host graphs over dense vertex indices `0..n`.
//!
//! Adjacency is kept twice: as sorted neighbor lists for iteration and, for
//! graphs with at most [`DEFAULT_BITSET_THRESHOLD`] vertices, as one
//! [`VertexSet`] row per vertex so that `N(X)` is a word-parallel union.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

pub const DEFAULT_BITSET_THRESHOLD: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    rows: Option<Vec<VertexSet>>,
}

/// An induced subgraph together with the map back into the host.
#[derive(Clone, Debug)]
pub struct InducedSubgraph {
    pub graph: Graph,
    /// `to_host[local] = host vertex`.
    pub to_host: Vec<usize>,
    /// `to_local[host] = Some(local)` for kept vertices.
    pub to_local: Vec<Option<usize>>,
}

impl Graph {
    /// Graph with `n` isolated vertices.
    pub fn empty(n: usize) -> Self {
        Self::from_adjacency_unchecked(vec![Vec::new(); n])
    }

    /// Builds a simple graph from an edge list. Self-loops, repeated edges
    /// (in either orientation) and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({}, {})",
                    u.min(w[0]),
                    u.max(w[0])
                )));
            }
        }
        Ok(Self::from_adjacency_unchecked(adj))
    }

    /// `adj` must be symmetric, sorted, loop-free and duplicate-free.
    pub(crate) fn from_adjacency_unchecked(adj: Vec<Vec<usize>>) -> Self {
        let mut g = Graph {
            n: adj.len(),
            adj,
            rows: None,
        };
        g.build_rows(DEFAULT_BITSET_THRESHOLD);
        g
    }

    /// Rebuilds (or drops) the bitset rows for a different size threshold.
    pub fn with_bitset_threshold(mut self, threshold: usize) -> Self {
        self.rows = None;
        self.build_rows(threshold);
        self
    }

    fn build_rows(&mut self, threshold: usize) {
        if self.n > threshold {
            return;
        }
        let rows = self
            .adj
            .iter()
            .map(|list| {
                let mut s = VertexSet::empty(self.n);
                for &v in list {
                    s.insert(v);
                }
                s
            })
            .collect();
        self.rows = Some(rows);
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u >= self.n || v >= self.n {
            return false;
        }
        match &self.rows {
            Some(rows) => rows[u].contains(v),
            None => self.adj[u].binary_search(&v).is_ok(),
        }
    }

    /// Bitset adjacency row, when the graph is small enough to carry them.
    pub fn row(&self, v: usize) -> Option<&VertexSet> {
        self.rows.as_ref().map(|r| &r[v])
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    fn check_universe(&self, s: &VertexSet, what: &str) -> Result<()> {
        if s.universe() != self.n {
            return Err(Error::InvalidInput(format!(
                "{what} is over {} vertices but the graph has {}",
                s.universe(),
                self.n
            )));
        }
        Ok(())
    }

    /// `N(X)`: every vertex adjacent to some member of `x`. May intersect `x`.
    pub fn neighborhood(&self, x: &VertexSet) -> Result<VertexSet> {
        self.check_universe(x, "X")?;
        let mut out = VertexSet::empty(self.n);
        match &self.rows {
            Some(rows) => {
                for v in x {
                    out.union_with(&rows[v]);
                }
            }
            None => {
                for v in x {
                    for &w in &self.adj[v] {
                        out.insert(w);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The subgraph induced on `u`, relabelled to `0..|u|` in increasing
    /// host-index order.
    pub fn induced_subgraph(&self, u: &VertexSet) -> Result<InducedSubgraph> {
        self.check_universe(u, "U")?;
        let to_host = u.to_vec();
        let mut to_local = vec![None; self.n];
        for (i, &v) in to_host.iter().enumerate() {
            to_local[v] = Some(i);
        }
        let adj = to_host
            .iter()
            .map(|&v| {
                self.adj[v]
                    .iter()
                    .filter_map(|&w| to_local[w])
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(InducedSubgraph {
            graph: Graph::from_adjacency_unchecked(adj),
            to_host,
            to_local,
        })
    }

    /// `e(B, C)`: ordered pairs `(u, v)` with `u ∈ B`, `v ∈ C` and `uv ∈ E`.
    /// An edge inside `B ∩ C` is counted twice.
    pub fn ordered_edge_count(&self, b: &VertexSet, c: &VertexSet) -> Result<usize> {
        self.check_universe(b, "B")?;
        self.check_universe(c, "C")?;
        let count = match &self.rows {
            Some(rows) => b.iter().map(|u| rows[u].intersection_len(c)).sum(),
            None => b
                .iter()
                .map(|u| self.adj[u].iter().filter(|&&v| c.contains(v)).count())
                .sum(),
        };
        Ok(count)
    }

    /// `(δ, Δ)`, the minimum and maximum degree.
    pub fn degree_extrema(&self) -> Result<(usize, usize)> {
        if self.n == 0 {
            return Err(Error::InvalidInput("degree extrema of the empty graph".into()));
        }
        let min = self.adj.iter().map(Vec::len).min().unwrap_or(0);
        let max = self.adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok((min, max))
    }

    /// `Some(D)` when every vertex has degree `D`.
    pub fn regular_degree(&self) -> Option<usize> {
        let (lo, hi) = self.degree_extrema().ok()?;
        (lo == hi).then_some(lo)
    }

    /// Parses the edge-list text format:
    ///
    /// ```text
    /// # comment
    /// n m
    /// u v      (m lines, 0 <= u < v < n)
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("missing `n m` header".into()))?;
        let (n, m) = parse_pair(header, ln)?;
        let mut edges = Vec::with_capacity(m);
        for (ln, line) in lines {
            let (u, v) = parse_pair(line, ln)?;
            if u >= v {
                return Err(Error::InvalidInput(format!(
                    "line {ln}: edge must satisfy u < v, got ({u}, {v})"
                )));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::InvalidInput(format!(
                "header declares {m} edges but {} were listed",
                edges.len()
            )));
        }
        Self::from_edges(n, &edges)
    }

    /// Canonical text form: header, then edges in lexicographic order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.n, self.edge_count()).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}

fn parse_pair(line: &str, ln: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::InvalidInput(format!("line {ln}: expected two integers")))?
            .parse::<usize>()
            .map_err(|e| Error::InvalidInput(format!("line {ln}: {e}")))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(Error::InvalidInput(format!("line {ln}: trailing tokens")));
    }
    Ok(pair)
}

/// Named deterministic graph families.
pub mod families {
    use super::Graph;

    pub fn complete(n: usize) -> Graph {
        let adj = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).collect())
            .collect();
        Graph::from_adjacency_unchecked(adj)
    }

    /// `C_n` for `n >= 3`.
    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("cycle is simple")
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("path is simple")
    }

    /// `K_{1,leaves}` with centre 0.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &edges).expect("star is simple")
    }

    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, &edges).expect("Petersen graph is simple")
    }

    /// `K_{2m}` minus a perfect matching `{2i, 2i+1}`.
    pub fn cocktail_party(m: usize) -> Graph {
        let n = 2 * m;
        let adj = (0..n)
            .map(|u| (0..n).filter(|&v| v != u && v != (u ^ 1)).collect())
            .collect();
        Graph::from_adjacency_unchecked(adj)
    }
}
