//! Alignment graph over the sets and maximum-spanning-tree edge orders.
//!
//! Equal weights are broken by (smaller i, smaller j) on the normalized pair
//! i < j; Prim's order always grows from vertex 0.

use rayon::prelude::*;

use crate::assignment::f_score;
use crate::error::{bad_param, invalid, Result};
use crate::model::{EtaGraph, SimilarityTensor};

/// Complete graph on the sets with weights[i][j] = f(Tᵢⱼ).
#[derive(Debug, Clone, PartialEq)]
pub struct AlignGraph {
    n: usize,
    weights: Vec<f64>,
}

impl AlignGraph {
    pub fn from_fn(n: usize, mut w: impl FnMut(usize, usize) -> f64) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = w(i, j);
                weights[i * n + j] = v;
                weights[j * n + i] = v;
            }
        }
        Self { n, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }
}

/// Evaluates f(Tᵢⱼ) for every block, in parallel.
pub fn build_align_graph(t: &SimilarityTensor) -> Result<AlignGraph> {
    let blocks: Vec<_> = t.upper_blocks().collect();
    let scores = blocks
        .par_iter()
        .map(|(_, b)| f_score(b))
        .collect::<Result<Vec<f64>>>()?;
    let mut it = scores.into_iter();
    Ok(AlignGraph::from_fn(t.n(), |_, _| {
        it.next().expect("one score per block")
    }))
}

/// Tree edges in processing order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeOrder {
    pub edges: Vec<(usize, usize)>,
}

impl EdgeOrder {
    /// True when the edges form a spanning tree of `n` vertices.
    pub fn is_spanning_tree(&self, n: usize) -> bool {
        if n == 0 {
            return self.edges.is_empty();
        }
        if self.edges.len() != n - 1 {
            return false;
        }
        let mut dsu = DisjointSets::new(n);
        self.edges
            .iter()
            .all(|&(i, j)| i < n && j < n && dsu.union(i, j).is_some())
    }

    pub fn total_weight(&self, g: &AlignGraph) -> f64 {
        self.edges.iter().map(|&(i, j)| g.weight(i, j)).sum()
    }

    /// Sorted normalized edges, for comparing edge sets.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut set: Vec<_> = self
            .edges
            .iter()
            .map(|&(i, j)| (i.min(j), i.max(j)))
            .collect();
        set.sort_unstable();
        set
    }
}

/// Union-find with path compression and union by rank. Each root also keeps
/// its member list and smallest member.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u32>,
    members: Vec<Vec<usize>>,
    smallest: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            members: (0..n).map(|v| vec![v]).collect(),
            smallest: (0..n).collect(),
        }
    }

    pub fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = v;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns the new root, or `None` if they
    /// were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (root, child) = match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => (rb, ra),
            std::cmp::Ordering::Greater => (ra, rb),
            std::cmp::Ordering::Equal => {
                self.rank[ra] += 1;
                (ra, rb)
            }
        };
        self.parent[child] = root;
        let moved = std::mem::take(&mut self.members[child]);
        self.members[root].extend(moved);
        self.smallest[root] = self.smallest[root].min(self.smallest[child]);
        Some(root)
    }

    /// Members of the set containing `v` (unordered).
    pub fn members(&mut self, v: usize) -> &[usize] {
        let r = self.find(v);
        &self.members[r]
    }

    pub fn smallest(&mut self, v: usize) -> usize {
        let r = self.find(v);
        self.smallest[r]
    }
}

fn sorted_edges(
    n: usize,
    weight: impl Fn(usize, usize) -> f64,
    descending: bool,
) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    edges.sort_by(|&(a, b), &(c, d)| {
        let ord = weight(a, b).total_cmp(&weight(c, d));
        let ord = if descending { ord.reverse() } else { ord };
        ord.then((a, b).cmp(&(c, d)))
    });
    edges
}

fn kruskal(n: usize, edges: Vec<(usize, usize)>) -> EdgeOrder {
    let mut dsu = DisjointSets::new(n);
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for (i, j) in edges {
        if out.len() + 1 == n {
            break;
        }
        if dsu.union(i, j).is_some() {
            out.push((i, j));
        }
    }
    EdgeOrder { edges: out }
}

/// Maximum spanning tree by Kruskal; edges come out in descending weight.
pub fn max_spanning_tree(g: &AlignGraph) -> EdgeOrder {
    kruskal(g.n, sorted_edges(g.n, |i, j| g.weight(i, j), true))
}

/// The maximum spanning tree's edges listed by (i, j) rather than weight.
pub fn basic_order(g: &AlignGraph) -> EdgeOrder {
    let mut order = max_spanning_tree(g);
    order.edges.sort_unstable();
    order
}

/// Prim's algorithm from vertex 0. Each edge is (tree vertex, new vertex).
pub fn prim_order(g: &AlignGraph) -> EdgeOrder {
    let n = g.n;
    if n <= 1 {
        return EdgeOrder::default();
    }
    let key = |u: usize, v: usize| (g.weight(u, v), u.min(v), u.max(v));
    // better(a, b): a has larger weight, then smaller normalized pair
    let better = |a: (f64, usize, usize), b: (f64, usize, usize)| {
        a.0.total_cmp(&b.0)
            .reverse()
            .then((a.1, a.2).cmp(&(b.1, b.2)))
            .is_lt()
    };
    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    let mut link: Vec<usize> = vec![0; n];
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if pick.is_none_or(|p| better(key(link[v], v), key(link[p], p))) {
                pick = Some(v);
            }
        }
        let v = pick.expect("a vertex remains outside the tree");
        in_tree[v] = true;
        edges.push((link[v], v));
        for u in 0..n {
            if !in_tree[u] && better(key(v, u), key(link[u], u)) {
                link[u] = v;
            }
        }
    }
    EdgeOrder { edges }
}

/// Smallest possible largest η over spanning trees (the bottleneck of a
/// minimum spanning tree on η).
pub fn min_bottleneck_weight(etas: &EtaGraph) -> Result<f64> {
    let n = etas.n();
    if n < 2 {
        return Err(bad_param!("bottleneck weight needs at least two vertices"));
    }
    let tree = kruskal(n, sorted_edges(n, |i, j| etas.get(i, j), false));
    tree.edges
        .iter()
        .map(|&(i, j)| etas.get(i, j))
        .reduce(f64::max)
        .ok_or_else(|| invalid!("empty spanning tree"))
}
