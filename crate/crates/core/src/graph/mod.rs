//! Public topology, private weights, and the exact MST oracle.

mod edgelist;

use std::collections::HashSet;
use std::fmt;
use std::time::Duration;

use petgraph::unionfind::UnionFind;

use crate::noise::{self, RngStream};
use crate::{Error, Result};

pub use edgelist::{read_edge_list, write_edge_list};

/// Dense edge identifier, stable for the lifetime of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Undirected simple graph. Edges are stored once as `(min, max)` and
/// referenced everywhere else by [`EdgeId`].
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<[u32; 2]>,
    // CSR adjacency: incident edges of v are incident[offsets[v]..offsets[v + 1]].
    offsets: Vec<usize>,
    incident: Vec<EdgeId>,
}

impl Graph {
    /// Builds a graph on `n` vertices. Rejects self-loops, parallel edges and
    /// out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("need at least 2 vertices, got {n}")));
        }
        if n > u32::MAX as usize {
            return Err(Error::param("too many vertices"));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::param(format!("self-loop at vertex {u}")));
            }
            let key = [u.min(v) as u32, u.max(v) as u32];
            if !seen.insert(key) {
                return Err(Error::param(format!("parallel edge ({u},{v})")));
            }
            list.push(key);
        }
        if list.len() > u32::MAX as usize {
            return Err(Error::param("too many edges"));
        }
        Ok(Self::from_canonical(n, list))
    }

    /// Complete graph `K_n`, edges in lexicographic `(u, v)` order.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("need at least 2 vertices, got {n}")));
        }
        let mut list = Vec::with_capacity(n * (n - 1) / 2);
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                list.push([u, v]);
            }
        }
        Ok(Self::from_canonical(n, list))
    }

    fn from_canonical(n: usize, edges: Vec<[u32; 2]>) -> Self {
        let mut degree = vec![0usize; n + 1];
        for &[u, v] in &edges {
            degree[u as usize + 1] += 1;
            degree[v as usize + 1] += 1;
        }
        for i in 1..=n {
            degree[i] += degree[i - 1];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut incident = vec![EdgeId(0); 2 * edges.len()];
        for (id, &[u, v]) in edges.iter().enumerate() {
            for x in [u, v] {
                incident[fill[x as usize]] = EdgeId(id as u32);
                fill[x as usize] += 1;
            }
        }
        Self {
            n,
            edges,
            offsets,
            incident,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    /// Endpoints `(min, max)` of an edge.
    pub fn endpoints(&self, e: EdgeId) -> (usize, usize) {
        let [u, v] = self.edges[e.index()];
        (u as usize, v as usize)
    }

    /// The endpoint of `e` that is not `v`.
    pub fn opposite(&self, e: EdgeId, v: usize) -> usize {
        let (a, b) = self.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn incident_edges(&self, v: usize) -> &[EdgeId] {
        &self.incident[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        e.index() < self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &e in self.incident_edges(v) {
                let u = self.opposite(e, v);
                if !seen[u] {
                    seen[u] = true;
                    reached += 1;
                    stack.push(u);
                }
            }
        }
        reached == self.n
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::DisconnectedGraph)
        }
    }
}

/// Private per-edge weights together with their `ℓ∞` sensitivity.
#[derive(Debug, Clone)]
pub struct WeightAssignment {
    weights: Vec<f64>,
    sensitivity: f64,
}

impl WeightAssignment {
    pub fn new(graph: &Graph, weights: Vec<f64>, sensitivity: f64) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::param(format!(
                "{} weights for {} edges",
                weights.len(),
                graph.edge_count()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::param(format!("weight of edge #{i} is not finite")));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(Error::param(format!("sensitivity must be > 0, got {sensitivity}")));
        }
        Ok(Self {
            weights,
            sensitivity,
        })
    }

    #[inline]
    pub fn weight(&self, e: EdgeId) -> f64 {
        self.weights[e.index()]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Work counters reported alongside a released tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunCounters {
    /// Random noise values drawn by the selection steps.
    pub samples_drawn: u64,
    /// Largest number of block reads spent by a single max lookup.
    pub max_lookup_comparisons: u64,
    /// Block reads summed over the whole run.
    pub comparisons: u64,
    /// Candidates drawn from the binomial tail across all steps.
    pub bottom_hits: u64,
    pub elapsed: Duration,
}

/// A released spanning tree evaluated against the true weights.
#[derive(Debug, Clone)]
pub struct TreeResult {
    /// Edge ids sorted ascending.
    pub tree_edges: Vec<EdgeId>,
    pub true_weight: f64,
    pub opt_weight: f64,
    pub error: f64,
    pub counters: RunCounters,
}

impl TreeResult {
    pub(crate) fn evaluate(
        w: &WeightAssignment,
        mut tree_edges: Vec<EdgeId>,
        opt_weight: f64,
        counters: RunCounters,
    ) -> Self {
        tree_edges.sort_unstable();
        let true_weight = tree_edges.iter().map(|&e| w.weight(e)).sum::<f64>();
        Self {
            tree_edges,
            true_weight,
            opt_weight,
            error: true_weight - opt_weight,
            counters,
        }
    }
}

/// Kruskal over arbitrary per-edge values; ties go to the lower edge id.
pub(crate) fn kruskal(g: &Graph, values: &[f64]) -> Result<Vec<EdgeId>> {
    let mut order: Vec<EdgeId> = g.edge_ids().collect();
    order.sort_unstable_by(|&a, &b| {
        values[a.index()]
            .total_cmp(&values[b.index()])
            .then(a.cmp(&b))
    });
    let mut uf = UnionFind::<u32>::new(g.vertex_count());
    let mut tree = Vec::with_capacity(g.vertex_count() - 1);
    for e in order {
        let (u, v) = g.endpoints(e);
        if uf.union(u as u32, v as u32) {
            tree.push(e);
            if tree.len() == g.vertex_count() - 1 {
                return Ok(tree);
            }
        }
    }
    Err(Error::DisconnectedGraph)
}

/// Exact minimum spanning tree; the error field is zero by construction.
pub fn exact_mst(g: &Graph, w: &WeightAssignment) -> Result<TreeResult> {
    let tree = kruskal(g, w.weights())?;
    let mut result = TreeResult::evaluate(w, tree, 0.0, RunCounters::default());
    result.opt_weight = result.true_weight;
    result.error = 0.0;
    Ok(result)
}

/// Sum of the weights of `edge_ids`.
pub fn tree_weight(w: &WeightAssignment, edge_ids: &[EdgeId]) -> Result<f64> {
    edge_ids.iter().try_fold(0.0, |acc, &e| {
        if e.index() < w.len() {
            Ok(acc + w.weight(e))
        } else {
            Err(Error::UnknownEdge(e))
        }
    })
}

/// True iff the edges are `n - 1` distinct valid ids forming an acyclic
/// set that touches every vertex.
pub fn is_spanning_tree(g: &Graph, edge_ids: &[EdgeId]) -> bool {
    if edge_ids.len() != g.vertex_count() - 1 {
        return false;
    }
    let mut uf = UnionFind::<u32>::new(g.vertex_count());
    edge_ids.iter().all(|&e| {
        if !g.contains_edge(e) {
            return false;
        }
        let (u, v) = g.endpoints(e);
        uf.union(u as u32, v as u32)
    })
}

/// Weight distributions available to the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightDist {
    /// i.i.d. `U(0, 1)`.
    Uniform01,
}

impl std::str::FromStr for WeightDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(WeightDist::Uniform01),
            other => Err(Error::param(format!("unknown weight distribution '{other}'"))),
        }
    }
}

/// Complete graph on `n` vertices with i.i.d. weights drawn from a stream
/// seeded by `seed`. The returned assignment has unit sensitivity; use
/// [`WeightAssignment::new`] to attach another one.
pub fn gen_complete_graph(n: usize, seed: u64, dist: WeightDist) -> Result<(Graph, WeightAssignment)> {
    let g = Graph::complete(n)?;
    let mut rng = RngStream::new(seed).substream("weights");
    let weights = match dist {
        WeightDist::Uniform01 => (0..g.edge_count())
            .map(|_| noise::sample_uniform01(&mut rng))
            .collect(),
    };
    let w = WeightAssignment::new(&g, weights, 1.0)?;
    Ok((g, w))
}

impl WeightAssignment {
    /// Same weights, different sensitivity.
    pub fn with_sensitivity(self, sensitivity: f64) -> Result<Self> {
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(Error::param(format!("sensitivity must be > 0, got {sensitivity}")));
        }
        Ok(Self {
            sensitivity,
            ..self
        })
    }
}
