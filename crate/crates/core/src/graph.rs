//! Lattice graph ingestion, validation, and per-node views.
//!
//! The JSON format is
//!
//! ```json
//! {
//!   "default_radius": 1.0,
//!   "nodes": [{"id": 0, "x": 0.0, "y": 0.0, "z": 0.0}],
//!   "edges": [{"id": 0, "a": 0, "b": 1, "radius": 0.5}]
//! }
//! ```
//!
//! `radius` is optional per edge. All lengths are millimeters.

use crate::error::{Error, Result};
use crate::geom::{angle_between, CircleId, Point, Vector};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::io::Read;

/// Two incident strut directions closer than this (radians) are rejected.
pub const COINCIDENT_DIRECTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: u64,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub id: u64,
    pub endpoints: (u64, u64),
    pub radius: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawNode {
    id: u64,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEdge {
    id: u64,
    a: u64,
    b: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawGraph {
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
    default_radius: f64,
}

/// Validated lattice graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct LatticeGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    default_radius: f64,
    node_index: HashMap<u64, usize>,
    incidence: Vec<Vec<usize>>,
}

/// One strut as seen from a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incident {
    pub edge_id: u64,
    pub edge_index: usize,
    /// Which end of the edge this node is (0 for `a`, 1 for `b`).
    pub end: usize,
    pub other_node: u64,
    /// Unit direction from this node toward the other endpoint.
    pub direction: Vector,
    pub length: f64,
    pub radius: f64,
}

impl Incident {
    pub fn circle_id(&self) -> CircleId {
        CircleId::new(self.edge_index, self.end)
    }
}

/// The struts around one node, sorted by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStar {
    pub node: Node,
    pub incident: Vec<Incident>,
}

impl NodeStar {
    pub fn valence(&self) -> usize {
        self.incident.len()
    }

    /// Common strut radius of the star.
    pub fn radius(&self) -> f64 {
        self.incident[0].radius
    }

    /// Builds a star from raw directions, for single-node experiments. All
    /// struts get `length` and `radius`; edge ids are the list positions.
    pub fn from_directions(
        node: Node,
        directions: &[Vector],
        length: f64,
        radius: f64,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::invalid_node(node.id, "star has no struts"));
        }
        let incident = directions
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let n = d.norm();
                if !n.is_finite() || n == 0.0 {
                    return Err(Error::invalid_node(node.id, format!("direction {i} is zero")));
                }
                Ok(Incident {
                    edge_id: i as u64,
                    edge_index: i,
                    end: 0,
                    other_node: i as u64 + 1,
                    direction: d / n,
                    length,
                    radius,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let star = NodeStar { node, incident };
        star.check()?;
        Ok(star)
    }

    fn check(&self) -> Result<()> {
        let r0 = self.incident[0].radius;
        for inc in &self.incident[1..] {
            if inc.radius != r0 {
                return Err(Error::invalid_node(
                    self.node.id,
                    format!(
                        "mixed strut radii at one node ({} on edge {} vs {} on edge {})",
                        r0, self.incident[0].edge_id, inc.radius, inc.edge_id
                    ),
                ));
            }
        }
        for (i, a) in self.incident.iter().enumerate() {
            for b in &self.incident[i + 1..] {
                if angle_between(&a.direction, &b.direction) < COINCIDENT_DIRECTION_TOLERANCE {
                    return Err(Error::Validation {
                        message: format!(
                            "edges {} and {} leave node {} in the same direction",
                            a.edge_id, b.edge_id, self.node.id
                        ),
                        node: Some(self.node.id),
                        edge: Some(b.edge_id),
                    });
                }
            }
        }
        Ok(())
    }
}

impl LatticeGraph {
    /// Validates and indexes a graph.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, default_radius: f64) -> Result<Self> {
        if !(default_radius.is_finite() && default_radius > 0.0) {
            return Err(Error::validation(format!(
                "default_radius must be positive, got {default_radius}"
            )));
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(n.position.x.is_finite() && n.position.y.is_finite() && n.position.z.is_finite())
            {
                return Err(Error::invalid_node(n.id, "non-finite coordinates"));
            }
            if node_index.insert(n.id, i).is_some() {
                return Err(Error::invalid_node(n.id, format!("duplicate node id {}", n.id)));
            }
        }
        let mut incidence = vec![Vec::new(); nodes.len()];
        let mut edge_ids = HashSet::with_capacity(edges.len());
        let mut pairs = HashSet::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            if !edge_ids.insert(e.id) {
                return Err(Error::invalid_edge(e.id, format!("duplicate edge id {}", e.id)));
            }
            let (a, b) = e.endpoints;
            for end in [a, b] {
                if !node_index.contains_key(&end) {
                    return Err(Error::Validation {
                        message: format!("edge {} references missing node id {}", e.id, end),
                        node: Some(end),
                        edge: Some(e.id),
                    });
                }
            }
            if a == b {
                return Err(Error::invalid_edge(e.id, format!("edge {} is a self-loop", e.id)));
            }
            if !pairs.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid_edge(
                    e.id,
                    format!("edge {} duplicates another edge between {} and {}", e.id, a, b),
                ));
            }
            if let Some(r) = e.radius {
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::invalid_edge(
                        e.id,
                        format!("edge {} has nonpositive radius {}", e.id, r),
                    ));
                }
            }
            let (ia, ib) = (node_index[&a], node_index[&b]);
            let len = (nodes[ib].position - nodes[ia].position).norm();
            if !(len > 0.0) {
                return Err(Error::invalid_edge(e.id, format!("edge {} has zero length", e.id)));
            }
            incidence[ia].push(ei);
            incidence[ib].push(ei);
        }
        for inc in &mut incidence {
            inc.sort_by_key(|&ei| edges[ei].id);
        }
        let graph = LatticeGraph {
            nodes,
            edges,
            default_radius,
            node_index,
            incidence,
        };
        for n in &graph.nodes {
            if !graph.incidence[graph.node_index[&n.id]].is_empty() {
                graph.node_star(n.id)?;
            }
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn default_radius(&self) -> f64 {
        self.default_radius
    }

    pub fn node(&self, id: u64) -> Option<&Node> {
        self.node_index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn node_position_index(&self, id: u64) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub fn edge_radius(&self, edge: &Edge) -> f64 {
        edge.radius.unwrap_or(self.default_radius)
    }

    pub fn edge_length(&self, edge: &Edge) -> f64 {
        let a = self.node(edge.endpoints.0).expect("validated");
        let b = self.node(edge.endpoints.1).expect("validated");
        (b.position - a.position).norm()
    }

    pub fn valence(&self, id: u64) -> Option<usize> {
        self.node_index.get(&id).map(|&i| self.incidence[i].len())
    }

    pub fn max_degree(&self) -> usize {
        self.incidence.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Same graph with every strut radius replaced by `radius`.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                radius: None,
                ..*e
            })
            .collect();
        LatticeGraph::new(self.nodes.clone(), edges, radius)
    }

    /// Per-node view of the incident struts, sorted by edge id.
    pub fn node_star(&self, node_id: u64) -> Result<NodeStar> {
        let &ni = self
            .node_index
            .get(&node_id)
            .ok_or(Error::UnknownNode(node_id))?;
        let node = self.nodes[ni];
        if self.incidence[ni].is_empty() {
            return Err(Error::invalid_node(node_id, format!("node {node_id} is isolated")));
        }
        let incident = self.incidence[ni]
            .iter()
            .map(|&ei| {
                let e = &self.edges[ei];
                let (end, other) = if e.endpoints.0 == node_id {
                    (0, e.endpoints.1)
                } else {
                    (1, e.endpoints.0)
                };
                let d = self.nodes[self.node_index[&other]].position - node.position;
                let length = d.norm();
                Incident {
                    edge_id: e.id,
                    edge_index: ei,
                    end,
                    other_node: other,
                    direction: d / length,
                    length,
                    radius: self.edge_radius(e),
                }
            })
            .collect();
        let star = NodeStar { node, incident };
        star.check()?;
        Ok(star)
    }

    pub fn to_json(&self) -> String {
        let raw = RawGraph {
            nodes: self
                .nodes
                .iter()
                .map(|n| RawNode {
                    id: n.id,
                    x: n.position.x,
                    y: n.position.y,
                    z: n.position.z,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    id: e.id,
                    a: e.endpoints.0,
                    b: e.endpoints.1,
                    radius: e.radius,
                })
                .collect(),
            default_radius: self.default_radius,
        };
        serde_json::to_string_pretty(&raw).expect("graph serializes")
    }
}

/// Reads and validates a graph.
pub fn load_graph<R: Read>(source: R, format: GraphFormat) -> Result<LatticeGraph> {
    match format {
        GraphFormat::Json => {
            let raw: RawGraph =
                serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
            let nodes = raw
                .nodes
                .into_iter()
                .map(|n| Node {
                    id: n.id,
                    position: Point::new(n.x, n.y, n.z),
                })
                .collect();
            let edges = raw
                .edges
                .into_iter()
                .map(|e| Edge {
                    id: e.id,
                    endpoints: (e.a, e.b),
                    radius: e.radius,
                })
                .collect();
            LatticeGraph::new(nodes, edges, raw.default_radius)
        }
    }
}
