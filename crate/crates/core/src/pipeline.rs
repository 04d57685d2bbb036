//! Per-node construction (cut, film, smooth, subdivide) and whole-graph
//! builds.

use crate::assemble::{assemble, AssembleInput, LatticeMesh};
use crate::cut::{check_edge_cuts, node_cuts_with_floor, StrutCut, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::fair::{self, DEFAULT_LAYERS};
use crate::film::film_geometry;
use crate::graph::{LatticeGraph, NodeStar};
use crate::mesh::ControlMesh;
use crate::metrics::{timing_report, NodeTiming, TimingReport};
use crate::par::{map_slice, Parallelism};
use crate::subdiv::{subdivide, SubdividedPatch, DEFAULT_ITERATIONS};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub lambda: f64,
    pub iterations: usize,
    pub layers: usize,
    /// Longitudinal segments per strut sleeve.
    pub segments: usize,
    pub parallelism: Parallelism,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            lambda: DEFAULT_LAMBDA,
            iterations: DEFAULT_ITERATIONS,
            layers: DEFAULT_LAYERS,
            segments: 1,
            parallelism: Parallelism::Parallel,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 0.5), got {}",
                self.lambda
            )));
        }
        if self.layers == 0 {
            return Err(Error::InvalidArgument("layers must be at least 1".into()));
        }
        if self.segments == 0 {
            return Err(Error::InvalidArgument("segments must be at least 1".into()));
        }
        if self.iterations > 8 {
            return Err(Error::InvalidArgument(format!(
                "iterations above 8 are not supported, got {}",
                self.iterations
            )));
        }
        Ok(())
    }

    /// Vertices on the end circle of a valence-1 strut.
    pub fn cap_ring_count(&self) -> usize {
        4 << self.iterations
    }
}

/// Which intermediate meshes of a node to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Keep {
    pub film: bool,
    pub faired: bool,
    pub patch: bool,
}

impl Keep {
    pub const PATCH: Keep = Keep {
        film: false,
        faired: false,
        patch: true,
    };
    pub const ALL: Keep = Keep {
        film: true,
        faired: true,
        patch: true,
    };
    pub const NONE: Keep = Keep {
        film: false,
        faired: false,
        patch: false,
    };
}

#[derive(Debug, Clone)]
pub struct NodeOutput {
    pub node_id: u64,
    pub valence: usize,
    pub cuts: Vec<StrutCut>,
    /// Film geometry after vertex adjustment and point insertion.
    pub film: Option<ControlMesh>,
    pub faired: Option<ControlMesh>,
    pub patch: Option<SubdividedPatch>,
    pub timing: NodeTiming,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs the node pipeline on one star. Valence-1 stars are only cut.
pub fn process_star(star: &NodeStar, settings: &Settings, keep: Keep) -> Result<NodeOutput> {
    let start = Instant::now();
    let floor = settings.lambda * star.radius();
    let cuts = node_cuts_with_floor(star, settings.lambda, floor)?;
    let cutting_ms = ms(start);
    let mut timing = NodeTiming {
        node_id: star.node.id,
        valence: star.valence(),
        cutting_ms,
        film_ms: 0.0,
        smoothing_ms: 0.0,
        subdivision_ms: 0.0,
        total_ms: cutting_ms,
    };
    let mut out = NodeOutput {
        node_id: star.node.id,
        valence: star.valence(),
        cuts,
        film: None,
        faired: None,
        patch: None,
        timing,
    };
    if star.valence() < 2 {
        return Ok(out);
    }
    let t = Instant::now();
    let film = film_geometry(&out.cuts, star)?;
    timing.film_ms = ms(t);
    let t = Instant::now();
    let faired = fair::smooth(&film, star, settings.layers)?;
    timing.smoothing_ms = ms(t);
    let t = Instant::now();
    let patch = subdivide(&faired, star, settings.iterations)?;
    timing.subdivision_ms = ms(t);
    timing.total_ms = ms(start);
    out.timing = timing;
    out.film = keep.film.then_some(film);
    out.faired = keep.faired.then_some(faired);
    out.patch = keep.patch.then_some(patch);
    Ok(out)
}

/// Runs the node pipeline on every non-isolated node, in node order. The
/// first failing node (in node order) determines the error.
pub fn process_nodes(graph: &LatticeGraph, settings: &Settings, keep: Keep) -> Result<Vec<NodeOutput>> {
    settings.validate()?;
    let ids: Vec<u64> = graph
        .nodes()
        .iter()
        .filter(|n| graph.valence(n.id).unwrap_or(0) > 0)
        .map(|n| n.id)
        .collect();
    let results = map_slice(settings.parallelism, &ids, |&id| {
        let star = graph.node_star(id)?;
        process_star(&star, settings, keep)
    });
    let outputs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut at = vec![(0.0, 0.0); graph.edges().len()];
    for o in &outputs {
        for c in &o.cuts {
            let slot = &mut at[c.circle_id.edge_index()];
            if c.circle_id.end() == 0 {
                slot.0 = c.cut_length;
            } else {
                slot.1 = c.cut_length;
            }
        }
    }
    check_edge_cuts(graph, |e| at[e])?;
    Ok(outputs)
}

/// Per-node timings over a whole graph without assembling a mesh.
pub fn time_nodes(graph: &LatticeGraph, settings: &Settings) -> Result<TimingReport> {
    let outputs = process_nodes(graph, settings, Keep::NONE)?;
    Ok(timing_report(
        graph.edges().len(),
        graph.nodes().len(),
        graph.max_degree(),
        outputs.iter().filter(|o| o.valence >= 2).map(|o| o.timing).collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub mesh: LatticeMesh,
    pub nodes: Vec<NodeOutput>,
    pub timing: TimingReport,
}

/// Full build: node pipelines, then assembly into one watertight mesh.
pub fn build(graph: &LatticeGraph, settings: &Settings, keep: Keep) -> Result<BuildOutput> {
    if graph.edges().is_empty() {
        return Err(Error::NothingToExport);
    }
    let keep = Keep { patch: true, ..keep };
    let nodes = process_nodes(graph, settings, keep)?;
    let mesh = assemble(&AssembleInput {
        graph,
        nodes: &nodes,
        settings,
    })?;
    let timing = timing_report(
        graph.edges().len(),
        graph.nodes().len(),
        graph.max_degree(),
        nodes.iter().filter(|o| o.valence >= 2).map(|o| o.timing).collect(),
    );
    Ok(BuildOutput { mesh, nodes, timing })
}
