//! Directed graphs, incidence matrices, subgraphs, and the metric helpers
//! (balls, boundaries, set distances) the localized solver is built on.
//!
//! Graphs here are simple and connected by construction: no self-loops, at
//! most one directed edge per unordered vertex pair, and the underlying
//! undirected graph must be connected (the flow constraint `A x = b` only
//! pins down a unique optimizer in that case). Vertices and edges are
//! indexed by dense `usize` ids assigned at construction; every matrix in
//! the crate is indexed by these ids.
//!
//! Graphs are immutable after construction. Breadth-first distances are
//! computed per source on demand and memoized behind a lock, since balls and
//! boundary distances are evaluated repeatedly by the analysis layer.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Errors from graph construction and graph queries.
#[derive(Debug, Error)]
pub enum GraphError {
    /// An edge references a vertex id outside `0..n_vertices`.
    #[error("edge ({tail}, {head}) references a vertex outside 0..{n_vertices}")]
    VertexOutOfRange {
        /// Edge tail id.
        tail: usize,
        /// Edge head id.
        head: usize,
        /// Number of vertices in the graph.
        n_vertices: usize,
    },
    /// An edge with equal endpoints.
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    /// Two edges share the same unordered endpoint pair.
    #[error("duplicate edge between vertices {0} and {1}")]
    DuplicateEdge(usize, usize),
    /// The underlying undirected graph is not connected.
    #[error("graph is not connected ({reachable} of {n_vertices} vertices reachable from 0)")]
    Disconnected {
        /// Vertices reachable from vertex 0.
        reachable: usize,
        /// Total vertex count.
        n_vertices: usize,
    },
    /// A subgraph edge has an endpoint outside the subgraph vertex set.
    #[error("subgraph edge {edge} has an endpoint outside the subgraph vertex set")]
    NotInduced {
        /// Offending edge id.
        edge: usize,
    },
    /// A subgraph's underlying undirected graph is not connected.
    #[error("subgraph is not connected")]
    SubgraphDisconnected,
    /// A vertex or edge id outside the graph was passed to a query.
    #[error("{kind} id {id} out of range (graph has {len})")]
    IdOutOfRange {
        /// "vertex" or "edge".
        kind: &'static str,
        /// The offending id.
        id: usize,
        /// Size of the valid range.
        len: usize,
    },
    /// A set operation received an empty vertex set.
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
}

/// A directed edge, stored as (tail, head) vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Vertex the edge leaves.
    pub tail: usize,
    /// Vertex the edge enters.
    pub head: usize,
}

/// A simple, connected directed graph with dense integer ids.
///
/// Immutable after construction; cheap to share behind a reference across
/// threads (the internal BFS cache is lock-guarded).
#[derive(Debug)]
pub struct DirectedGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
    /// Undirected neighbor lists, sorted ascending.
    neighbors: Vec<Vec<usize>>,
    /// BFS hop distances memoized per source vertex.
    distance_cache: RwLock<HashMap<usize, Vec<usize>>>,
}

impl Clone for DirectedGraph {
    fn clone(&self) -> Self {
        DirectedGraph {
            n_vertices: self.n_vertices,
            edges: self.edges.clone(),
            neighbors: self.neighbors.clone(),
            distance_cache: RwLock::new(HashMap::new()),
        }
    }
}

impl DirectedGraph {
    /// Builds a graph on vertices `0..n_vertices` from directed edges.
    ///
    /// Rejects self-loops, repeated unordered pairs (the weighted-graph
    /// machinery needs at most one edge per pair), out-of-range endpoints,
    /// and graphs whose undirected skeleton is disconnected.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let mut neighbors = vec![Vec::new(); n_vertices];
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(tail, head)| Edge { tail, head })
            .collect();
        for e in &edges {
            if e.tail >= n_vertices || e.head >= n_vertices {
                return Err(GraphError::VertexOutOfRange {
                    tail: e.tail,
                    head: e.head,
                    n_vertices,
                });
            }
            if e.tail == e.head {
                return Err(GraphError::SelfLoop(e.tail));
            }
            let key = (e.tail.min(e.head), e.tail.max(e.head));
            if seen.insert(key, ()).is_some() {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            neighbors[e.tail].push(e.head);
            neighbors[e.head].push(e.tail);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let graph = DirectedGraph {
            n_vertices,
            edges,
            neighbors,
            distance_cache: RwLock::new(HashMap::new()),
        };
        if n_vertices > 0 {
            let reachable = graph.distances_from(0).iter().filter(|&&d| d != usize::MAX).count();
            if reachable != n_vertices {
                return Err(GraphError::Disconnected {
                    reachable,
                    n_vertices,
                });
            }
        }
        Ok(graph)
    }

    /// Number of vertices.
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of directed edges.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// The edge list, indexed by edge id.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Undirected neighbors of `v`, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Undirected degree of `v`.
    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Minimum and maximum undirected degree over all vertices.
    pub fn degree_bounds(&self) -> (usize, usize) {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for v in 0..self.n_vertices {
            lo = lo.min(self.degree(v));
            hi = hi.max(self.degree(v));
        }
        (lo, hi)
    }

    /// BFS hop distances from `source` to every vertex (memoized).
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        assert!(source < self.n_vertices, "source vertex out of range");
        if let Some(d) = self.distance_cache.read().unwrap().get(&source) {
            return d.clone();
        }
        let dist = self.bfs(&[source]);
        self.distance_cache
            .write()
            .unwrap()
            .insert(source, dist.clone());
        dist
    }

    /// Multi-source BFS hop distances (`usize::MAX` where unreachable).
    fn bfs(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_vertices];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// The vertex/edge incidence matrix of the graph.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut a = DMatrix::zeros(self.n_vertices, self.edges.len());
        for (j, e) in self.edges.iter().enumerate() {
            a[(e.tail, j)] = 1.0;
            a[(e.head, j)] = -1.0;
        }
        IncidenceMatrix { matrix: a }
    }

    /// Eigenvalues of the (symmetric, 0/1) undirected adjacency matrix,
    /// sorted descending, together with `mu = max(|mu_2|, |mu_n|)`.
    ///
    /// `mu` is the adjacency analogue of the walk's spectral gap and feeds
    /// the degree-based eigenvalue bounds in [`crate::spectral`].
    pub fn adjacency_spectrum(&self) -> (Vec<f64>, f64) {
        let n = self.n_vertices;
        let mut b = DMatrix::zeros(n, n);
        for e in &self.edges {
            b[(e.tail, e.head)] = 1.0;
            b[(e.head, e.tail)] = 1.0;
        }
        let mut eigs: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let mu = if n >= 2 {
            eigs[1].abs().max(eigs[n - 1].abs())
        } else {
            0.0
        };
        (eigs, mu)
    }

    /// The ball of hop radius `r` around `center`: the induced subgraph on
    /// all vertices within distance `r`.
    pub fn ball(&self, center: usize, r: usize) -> Subgraph<'_> {
        assert!(center < self.n_vertices, "ball center out of range");
        let dist = self.distances_from(center);
        let vertices: Vec<usize> = (0..self.n_vertices).filter(|&v| dist[v] <= r).collect();
        Subgraph::induced(self, vertices).expect("a ball is induced and connected")
    }

    /// Minimum hop distance between the vertex sets `u` and `z`.
    ///
    /// Zero when the sets intersect. Errors if either set is empty or
    /// references a vertex outside the graph.
    pub fn set_distance(&self, u: &[usize], z: &[usize]) -> Result<usize, GraphError> {
        if u.is_empty() {
            return Err(GraphError::EmptySet("source vertex set"));
        }
        if z.is_empty() {
            return Err(GraphError::EmptySet("target vertex set"));
        }
        for &v in u.iter().chain(z.iter()) {
            if v >= self.n_vertices {
                return Err(GraphError::IdOutOfRange {
                    kind: "vertex",
                    id: v,
                    len: self.n_vertices,
                });
            }
        }
        let dist = self.bfs(u);
        Ok(z.iter().map(|&v| dist[v]).min().unwrap())
    }
}

/// The vertex/edge incidence matrix `A`: column `e` has `+1` at the tail of
/// edge `e` and `-1` at its head, so `A x` is the net outflow at each vertex
/// and the all-ones row vector annihilates `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    matrix: DMatrix<f64>,
}

impl IncidenceMatrix {
    /// The dense matrix, vertices by edges.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of vertex rows.
    pub fn n_vertices(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of edge columns.
    pub fn n_edges(&self) -> usize {
        self.matrix.ncols()
    }

    /// Net outflow `A x` for an edge-flow vector.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// Adjoint application `Aᵀ y` (per-edge potential differences).
    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(y)
    }
}

/// A connected, induced-consistent subgraph: a vertex subset `V'` plus a
/// subset of the edges with both endpoints in `V'`.
///
/// Subgraphs borrow their parent; they are index sets, not copies. The edge
/// subset need not contain every induced edge (a localized solve may freeze
/// some interior edges), but the undirected skeleton of `(V', E')` must be
/// connected so the reduced flow problem keeps a unique optimizer (a single
/// isolated vertex with no edges is allowed as the degenerate case).
#[derive(Debug, Clone)]
pub struct Subgraph<'a> {
    parent: &'a DirectedGraph,
    vertices: Vec<usize>,
    edges: Vec<usize>,
    in_vertices: Vec<bool>,
    in_edges: Vec<bool>,
}

impl<'a> Subgraph<'a> {
    /// Builds a subgraph from explicit vertex and edge id sets.
    pub fn new(
        parent: &'a DirectedGraph,
        mut vertices: Vec<usize>,
        mut edges: Vec<usize>,
    ) -> Result<Self, GraphError> {
        vertices.sort_unstable();
        vertices.dedup();
        edges.sort_unstable();
        edges.dedup();
        if vertices.is_empty() {
            return Err(GraphError::EmptySet("subgraph vertex set"));
        }
        let mut in_vertices = vec![false; parent.n_vertices()];
        for &v in &vertices {
            if v >= parent.n_vertices() {
                return Err(GraphError::IdOutOfRange {
                    kind: "vertex",
                    id: v,
                    len: parent.n_vertices(),
                });
            }
            in_vertices[v] = true;
        }
        let mut in_edges = vec![false; parent.n_edges()];
        for &e in &edges {
            if e >= parent.n_edges() {
                return Err(GraphError::IdOutOfRange {
                    kind: "edge",
                    id: e,
                    len: parent.n_edges(),
                });
            }
            let edge = parent.edges()[e];
            if !in_vertices[edge.tail] || !in_vertices[edge.head] {
                return Err(GraphError::NotInduced { edge: e });
            }
            in_edges[e] = true;
        }
        let sub = Subgraph {
            parent,
            vertices,
            edges,
            in_vertices,
            in_edges,
        };
        if !sub.is_connected() {
            return Err(GraphError::SubgraphDisconnected);
        }
        Ok(sub)
    }

    /// The induced subgraph on a vertex set: takes every parent edge with
    /// both endpoints inside.
    pub fn induced(parent: &'a DirectedGraph, vertices: Vec<usize>) -> Result<Self, GraphError> {
        let mut inside = vec![false; parent.n_vertices()];
        for &v in &vertices {
            if v >= parent.n_vertices() {
                return Err(GraphError::IdOutOfRange {
                    kind: "vertex",
                    id: v,
                    len: parent.n_vertices(),
                });
            }
            inside[v] = true;
        }
        let edges = parent
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| inside[e.tail] && inside[e.head])
            .map(|(i, _)| i)
            .collect();
        Subgraph::new(parent, vertices, edges)
    }

    /// The whole parent graph viewed as a subgraph.
    pub fn whole(parent: &'a DirectedGraph) -> Self {
        Subgraph::induced(parent, (0..parent.n_vertices()).collect())
            .expect("the whole graph is a valid subgraph")
    }

    fn is_connected(&self) -> bool {
        if self.vertices.len() <= 1 {
            return true;
        }
        // BFS restricted to the subgraph's own edges.
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for &e in &self.edges {
            let edge = self.parent.edges()[e];
            adj.entry(edge.tail).or_default().push(edge.head);
            adj.entry(edge.head).or_default().push(edge.tail);
        }
        let mut seen: HashMap<usize, ()> = HashMap::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert(self.vertices[0], ());
        queue.push_back(self.vertices[0]);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(&v).map(|v| v.as_slice()).unwrap_or(&[]) {
                if seen.insert(w, ()).is_none() {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// The parent graph.
    pub fn parent(&self) -> &'a DirectedGraph {
        self.parent
    }

    /// Subgraph vertex ids, sorted ascending.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Subgraph edge ids, sorted ascending.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// Whether vertex `v` belongs to the subgraph.
    pub fn contains_vertex(&self, v: usize) -> bool {
        self.in_vertices[v]
    }

    /// Whether edge `e` belongs to the subgraph.
    pub fn contains_edge(&self, e: usize) -> bool {
        self.in_edges[e]
    }

    /// Parent edge ids outside the subgraph (the frozen set in a localized
    /// solve), sorted ascending.
    pub fn complement_edges(&self) -> Vec<usize> {
        (0..self.parent.n_edges())
            .filter(|&e| !self.in_edges[e])
            .collect()
    }

    /// Parent vertex ids outside the subgraph, sorted ascending.
    pub fn complement_vertices(&self) -> Vec<usize> {
        (0..self.parent.n_vertices())
            .filter(|&v| !self.in_vertices[v])
            .collect()
    }

    /// Whether the subgraph is the whole parent graph.
    pub fn is_whole(&self) -> bool {
        self.vertices.len() == self.parent.n_vertices()
            && self.edges.len() == self.parent.n_edges()
    }

    /// The inner boundary: subgraph vertices with at least one parent
    /// neighbor outside the subgraph. Empty exactly when the subgraph
    /// covers every vertex.
    pub fn inner_boundary(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .copied()
            .filter(|&v| {
                self.parent
                    .neighbors(v)
                    .iter()
                    .any(|&w| !self.in_vertices[w])
            })
            .collect()
    }

    /// Degree of `v` counting only subgraph edges.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&e| {
                let edge = self.parent.edges()[e];
                edge.tail == v || edge.head == v
            })
            .count()
    }

    /// Minimum and maximum degree within the subgraph.
    pub fn degree_bounds(&self) -> (usize, usize) {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for &v in &self.vertices {
            let d = self.degree(v);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// The incidence matrix of the subgraph problem: rows are subgraph
    /// vertices (in sorted order), columns are subgraph edges (in sorted
    /// order).
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let vpos: HashMap<usize, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let mut a = DMatrix::zeros(self.vertices.len(), self.edges.len());
        for (j, &e) in self.edges.iter().enumerate() {
            let edge = self.parent.edges()[e];
            a[(vpos[&edge.tail], j)] = 1.0;
            a[(vpos[&edge.head], j)] = -1.0;
        }
        IncidenceMatrix { matrix: a }
    }
}
