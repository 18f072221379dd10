//! Simple undirected graphs with binary opinions, and the measurements that
//! connect them to the heterogeneous description.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::AklGrid;

pub type NodeId = u32;
pub type EdgeId = usize;

/// Deterministic random stream for a `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Undirected simple graph. Edges are addressed by a stable id so that a
/// rewiring can move one endpoint without renumbering anything else.
#[derive(Clone, Debug)]
pub struct Graph {
    edges: Vec<[NodeId; 2]>,
    incident: Vec<Vec<EdgeId>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { edges: Vec::new(), incident: vec![Vec::new(); n] }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut graph = Graph::empty(n);
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::invalid("edges", format!("endpoint of ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::invalid("edges", format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid("edges", format!("duplicate edge ({u}, {v})")));
            }
            graph.push_edge(u, v);
        }
        Ok(graph)
    }

    fn push_edge(&mut self, u: NodeId, v: NodeId) {
        let id = self.edges.len();
        self.edges.push([u, v]);
        self.incident[u as usize].push(id);
        self.incident[v as usize].push(id);
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.incident.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn endpoints(&self, edge: EdgeId) -> [NodeId; 2] {
        self.edges[edge]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().map(|&[u, v]| (u, v))
    }

    #[inline]
    pub fn incident_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.incident[node as usize]
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        self.incident[node as usize].len()
    }

    #[inline]
    pub fn other_end(&self, edge: EdgeId, node: NodeId) -> NodeId {
        let [u, v] = self.edges[edge];
        if u == node {
            v
        } else {
            u
        }
    }

    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.incident[node as usize].iter().map(move |&e| self.other_end(e, node))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).any(|w| w == b)
    }

    /// Moves the `from` endpoint of `edge` to `to`. The caller guarantees the
    /// result is still simple.
    pub(crate) fn move_endpoint(&mut self, edge: EdgeId, from: NodeId, to: NodeId) {
        let list = &mut self.incident[from as usize];
        let pos = list.iter().position(|&e| e == edge).expect("edge not incident to node");
        list.swap_remove(pos);
        self.incident[to as usize].push(edge);
        let ends = &mut self.edges[edge];
        if ends[0] == from {
            ends[0] = to;
        } else {
            ends[1] = to;
        }
    }

    /// Checks simplicity and that incidence lists agree with the edge table.
    pub fn is_consistent(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.edges.len());
        for (id, &[u, v]) in self.edges.iter().enumerate() {
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                return false;
            }
            if !self.incident[u as usize].contains(&id) || !self.incident[v as usize].contains(&id) {
                return false;
            }
        }
        let total: usize = self.incident.iter().map(Vec::len).sum();
        total == 2 * self.edges.len()
    }
}

/// Erdős–Rényi graph in the fixed-edge-count ensemble G(n, K) with
/// `K = round(n · mean_degree / 2)` edges drawn uniformly without replacement.
pub fn generate_er(n: usize, mean_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 nodes, got {n}")));
    }
    if !(mean_degree > 0.0 && mean_degree.is_finite()) {
        return Err(Error::invalid("mean_degree", format!("must be positive, got {mean_degree}")));
    }
    let pairs = n * (n - 1) / 2;
    let k = (n as f64 * mean_degree / 2.0).round() as usize;
    if k > pairs {
        return Err(Error::invalid(
            "mean_degree",
            format!("{mean_degree} needs {k} edges but only {pairs} node pairs exist"),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let mut picked = index::sample(&mut rng, pairs, k).into_vec();
    picked.sort_unstable();

    let mut graph = Graph::empty(n);
    for m in picked {
        let (i, j) = unrank_pair(m);
        graph.push_edge(j as NodeId, i as NodeId);
    }
    Ok(graph)
}

/// Inverse of `m = i(i-1)/2 + j` for `0 <= j < i`.
fn unrank_pair(m: usize) -> (usize, usize) {
    let mut i = ((1.0 + (1.0 + 8.0 * m as f64).sqrt()) / 2.0) as usize;
    while i * (i - 1) / 2 > m {
        i -= 1;
    }
    while (i + 1) * i / 2 <= m {
        i += 1;
    }
    (i, m - i * (i - 1) / 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Opinion {
    A,
    B,
}

impl Opinion {
    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Opinion::A => Opinion::B,
            Opinion::B => Opinion::A,
        }
    }

    #[inline]
    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpinionState {
    opinions: Vec<Opinion>,
}

impl OpinionState {
    pub fn uniform(n: usize, opinion: Opinion) -> Self {
        OpinionState { opinions: vec![opinion; n] }
    }

    pub fn from_vec(opinions: Vec<Opinion>) -> Self {
        OpinionState { opinions }
    }

    #[inline]
    pub fn get(&self, node: NodeId) -> Opinion {
        self.opinions[node as usize]
    }

    #[inline]
    pub(crate) fn set(&mut self, node: NodeId, opinion: Opinion) {
        self.opinions[node as usize] = opinion;
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    pub fn count(&self, opinion: Opinion) -> usize {
        self.opinions.iter().filter(|&&o| o == opinion).count()
    }

    pub fn as_slice(&self) -> &[Opinion] {
        &self.opinions
    }
}

/// Balanced random opinions: exactly `floor(N/2)` nodes hold A.
pub fn assign_opinions(graph: &Graph, seed: u64) -> OpinionState {
    assign_opinions_with_count(graph, graph.node_count() / 2, seed)
}

/// Opinion A on a uniformly random subset of `a_count` nodes. Used for
/// deliberately unbalanced starts.
pub fn assign_opinions_with_count(graph: &Graph, a_count: usize, seed: u64) -> OpinionState {
    let n = graph.node_count();
    assert!(a_count <= n, "cannot assign {a_count} A opinions among {n} nodes");
    let mut rng = stream_rng(seed, 1);
    let mut opinions = vec![Opinion::B; n];
    for i in index::sample(&mut rng, n, a_count) {
        opinions[i] = Opinion::A;
    }
    OpinionState { opinions }
}

#[inline]
pub fn is_active(graph: &Graph, opinions: &OpinionState, edge: EdgeId) -> bool {
    let [u, v] = graph.endpoints(edge);
    opinions.get(u) != opinions.get(v)
}

pub fn count_active_links(graph: &Graph, opinions: &OpinionState) -> usize {
    (0..graph.edge_count()).filter(|&e| is_active(graph, opinions, e)).count()
}

/// Normalised `A[k][l]` histogram of opinion-A nodes together with the
/// integer counts it was built from.
#[derive(Clone, Debug)]
pub struct AklHistogram {
    pub grid: AklGrid,
    /// Row-major `(k_max+1)²` node counts.
    pub counts: Vec<u64>,
    pub a_nodes: u64,
    /// A-nodes with inert or active degree above `k_max`.
    pub overflow_nodes: u64,
}

impl AklHistogram {
    pub fn overflow_mass(&self) -> f64 {
        if self.a_nodes == 0 {
            0.0
        } else {
            self.overflow_nodes as f64 / self.a_nodes as f64
        }
    }
}

pub fn akl_histogram(graph: &Graph, opinions: &OpinionState, k_max: usize) -> AklHistogram {
    let side = k_max + 1;
    let mut counts = vec![0u64; side * side];
    let (mut a_nodes, mut overflow_nodes) = (0u64, 0u64);
    for node in 0..graph.node_count() as NodeId {
        let own = opinions.get(node);
        if own != Opinion::A {
            continue;
        }
        a_nodes += 1;
        let active = graph.neighbors(node).filter(|&w| opinions.get(w) != own).count();
        let inert = graph.degree(node) - active;
        if inert > k_max || active > k_max {
            overflow_nodes += 1;
        } else {
            counts[inert * side + active] += 1;
        }
    }
    if overflow_nodes > 0 {
        log::warn!("{overflow_nodes} of {a_nodes} A-nodes exceed k_max = {k_max}");
    }
    let norm = if a_nodes == 0 { 0.0 } else { 1.0 / a_nodes as f64 };
    let grid = AklGrid::from_fn(k_max, |k, l| counts[k * side + l] as f64 * norm);
    AklHistogram { grid, counts, a_nodes, overflow_nodes }
}
