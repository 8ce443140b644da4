//! JSON file formats for graphs, solutions, and reports.
//!
//! A graph file lists vertex ids, edges (each with an id, endpoints, and a
//! cost model), and a sparse `external_flow` map; vertices absent from the
//! map have zero external flow. Ids are arbitrary `u64`s — internally they
//! are mapped to dense indices in listing order, and all output maps are
//! `BTreeMap`s so serialization is deterministic.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::CostModel;
use crate::graph::GraphError;
use crate::sensitivity::{FlowProblem, Solution, SolveError};
use crate::spectral::SpectralReport;

/// Errors reading or writing problem files.
#[derive(Debug, Error)]
pub enum IoError {
    /// Filesystem failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed JSON.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    /// A vertex id appears twice in the `vertices` list.
    #[error("vertex id {id} is listed twice")]
    DuplicateVertex {
        /// Offending id.
        id: u64,
    },
    /// An edge id appears twice in the `edges` list.
    #[error("edge id {id} is listed twice")]
    DuplicateEdgeId {
        /// Offending id.
        id: u64,
    },
    /// An edge endpoint or flow key references an unlisted vertex.
    #[error("{what} references vertex id {id}, which is not in the vertices list")]
    UnknownVertex {
        /// Where the reference occurred.
        what: &'static str,
        /// Offending id.
        id: u64,
    },
    /// An `external_flow` key is not a decimal vertex id.
    #[error("external_flow key {key:?} is not a vertex id")]
    BadFlowKey {
        /// Offending key.
        key: String,
    },
    /// Forwarded graph construction error.
    #[error(transparent)]
    Graph(#[from] GraphError),
    /// Forwarded problem construction error.
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// One edge of a graph file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeFile {
    /// Edge id, used to key per-edge outputs.
    pub id: u64,
    /// Tail vertex id (flow leaves here when positive).
    pub tail: u64,
    /// Head vertex id.
    pub head: u64,
    /// Cost model on this edge.
    pub cost: CostModel,
}

/// On-disk graph description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    /// Vertex ids; listing order defines the dense internal indexing.
    pub vertices: Vec<u64>,
    /// Edges; listing order defines the dense edge indexing.
    pub edges: Vec<EdgeFile>,
    /// Sparse external flow, keyed by decimal vertex id. Missing = 0.
    #[serde(default)]
    pub external_flow: BTreeMap<String, f64>,
}

impl GraphFile {
    /// Build the in-memory problem, validating ids, connectivity, and flow
    /// balance. Returns the problem together with the dense-index → vertex-id
    /// and edge-id tables needed to key outputs.
    pub fn to_problem(&self) -> Result<(FlowProblem, IdTables), IoError> {
        let mut index_of = BTreeMap::new();
        for (i, &id) in self.vertices.iter().enumerate() {
            if index_of.insert(id, i).is_some() {
                return Err(IoError::DuplicateVertex { id });
            }
        }
        let mut edge_ids = Vec::with_capacity(self.edges.len());
        let mut seen_edges = std::collections::HashSet::new();
        let mut pairs = Vec::with_capacity(self.edges.len());
        let mut costs = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if !seen_edges.insert(e.id) {
                return Err(IoError::DuplicateEdgeId { id: e.id });
            }
            let tail = *index_of.get(&e.tail).ok_or(IoError::UnknownVertex {
                what: "edge tail",
                id: e.tail,
            })?;
            let head = *index_of.get(&e.head).ok_or(IoError::UnknownVertex {
                what: "edge head",
                id: e.head,
            })?;
            pairs.push((tail, head));
            costs.push(e.cost.clone());
            edge_ids.push(e.id);
        }
        let mut b = DVector::zeros(self.vertices.len());
        for (key, &value) in &self.external_flow {
            let id: u64 = key
                .parse()
                .map_err(|_| IoError::BadFlowKey { key: key.clone() })?;
            let idx = *index_of.get(&id).ok_or(IoError::UnknownVertex {
                what: "external_flow",
                id,
            })?;
            b[idx] = value;
        }
        let graph = crate::graph::DirectedGraph::new(self.vertices.len(), pairs)?;
        let problem = FlowProblem::new(graph, costs, b)?;
        Ok((
            problem,
            IdTables {
                vertex_ids: self.vertices.clone(),
                edge_ids,
            },
        ))
    }

    /// Describe an in-memory problem with identity ids (`vertex i` → id `i`,
    /// `edge j` → id `j`); only nonzero external flows are written.
    pub fn from_problem(problem: &FlowProblem) -> GraphFile {
        let vertices: Vec<u64> = (0..problem.graph().n_vertices() as u64).collect();
        let edges = problem
            .graph()
            .edges()
            .iter()
            .zip(problem.costs())
            .enumerate()
            .map(|(j, (e, cost))| EdgeFile {
                id: j as u64,
                tail: e.tail as u64,
                head: e.head as u64,
                cost: cost.clone(),
            })
            .collect();
        let mut external_flow = BTreeMap::new();
        for (v, &bv) in problem.b().iter().enumerate() {
            if bv != 0.0 {
                external_flow.insert(v.to_string(), bv);
            }
        }
        GraphFile {
            vertices,
            edges,
            external_flow,
        }
    }
}

/// Dense-index → id tables recovered from a graph file.
#[derive(Debug, Clone)]
pub struct IdTables {
    /// `vertex_ids[i]` is the file id of dense vertex `i`.
    pub vertex_ids: Vec<u64>,
    /// `edge_ids[j]` is the file id of dense edge `j`.
    pub edge_ids: Vec<u64>,
}

impl IdTables {
    /// Key a per-vertex vector by vertex id.
    pub fn vertex_map(&self, values: &DVector<f64>) -> BTreeMap<String, f64> {
        self.vertex_ids
            .iter()
            .zip(values.iter())
            .map(|(id, &v)| (id.to_string(), v))
            .collect()
    }

    /// Key a per-edge vector by edge id.
    pub fn edge_map(&self, values: &DVector<f64>) -> BTreeMap<String, f64> {
        self.edge_ids
            .iter()
            .zip(values.iter())
            .map(|(id, &v)| (id.to_string(), v))
            .collect()
    }

    /// Dense index of a vertex id, if listed.
    pub fn vertex_index(&self, id: u64) -> Option<usize> {
        self.vertex_ids.iter().position(|&v| v == id)
    }
}

/// Solve output: optimal flows and duals keyed by file ids, KKT residuals,
/// the fixed-point cross-check, and the spectral report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    /// Optimal flow per edge id.
    pub flows: BTreeMap<String, f64>,
    /// Optimal dual (potential) per vertex id, centered to mean zero.
    pub duals: BTreeMap<String, f64>,
    /// Max-norm of the balance residual `A x - b`.
    pub residual: f64,
    /// Max-norm of the stationarity residual `∇f(x) - Aᵀν`.
    pub stationarity: f64,
    /// Newton iterations used.
    pub iterations: usize,
    /// Distance between the Newton solution and an independent
    /// projected-gradient solve of the same problem.
    pub cross_check: f64,
    /// Walk spectrum, decay rate, and (optionally) identity residuals.
    pub spectral: SpectralReport,
}

impl SolutionFile {
    /// Assemble from a solution and its report.
    pub fn new(
        tables: &IdTables,
        solution: &Solution,
        cross_check: f64,
        spectral: SpectralReport,
    ) -> SolutionFile {
        SolutionFile {
            flows: tables.edge_map(&solution.x),
            duals: tables.vertex_map(&solution.dual),
            residual: solution.residual,
            stationarity: solution.stationarity,
            iterations: solution.iterations,
            cross_check,
            spectral,
        }
    }
}

/// Read and parse a graph file.
pub fn read_graph(path: &Path) -> Result<GraphFile, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Serialize any report as pretty JSON with a trailing newline — the byte
/// format every command writes.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Write pretty JSON to a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}
