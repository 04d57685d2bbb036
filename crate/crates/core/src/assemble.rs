//! Stitching nodal patches, strut sleeves and end caps into one mesh.
//!
//! Vertices on end circles are identified by `(circle, parameter)` rather
//! than by position, so a sleeve and the patch it meets share their ring
//! vertices exactly.

use crate::error::{Error, Result};
use crate::geom::{Circle3, CircleId, Point};
use crate::graph::LatticeGraph;
use crate::mesh::{check_closed, ClosedCheck};
use crate::par::map_indices;
use crate::pipeline::{NodeOutput, Settings};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::TAU;

/// Where a triangle of the assembled mesh came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum FaceSource {
    Strut(u64),
    Node(u64),
    Cap(u64),
}

impl FaceSource {
    pub fn kind_code(self) -> u8 {
        match self {
            FaceSource::Strut(_) => 0,
            FaceSource::Node(_) => 1,
            FaceSource::Cap(_) => 2,
        }
    }

    pub fn id(self) -> u64 {
        match self {
            FaceSource::Strut(i) | FaceSource::Node(i) | FaceSource::Cap(i) => i,
        }
    }

    pub fn label(self) -> String {
        match self {
            FaceSource::Strut(i) => format!("strut_{i}"),
            FaceSource::Node(i) => format!("node_{i}"),
            FaceSource::Cap(i) => format!("cap_{i}"),
        }
    }
}

/// Boundary-representation element counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Census {
    pub cylindrical_faces: usize,
    pub subdivision_faces: usize,
    pub planar_caps: usize,
    pub boundary_curves: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LatticeMesh {
    pub positions: Vec<Point>,
    pub triangles: Vec<[u32; 3]>,
    pub provenance: Vec<FaceSource>,
    pub census: Census,
}

impl LatticeMesh {
    pub fn check(&self) -> ClosedCheck {
        check_closed(self.positions.len(), &self.triangles)
    }
}

/// A vertex of a mesh fragment: either on an end circle, or free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FragmentVertex {
    Ring(CircleId, f64),
    Free(Point),
}

#[derive(Debug, Clone, Default)]
pub struct Fragment {
    pub vertices: Vec<FragmentVertex>,
    pub triangles: Vec<[u32; 3]>,
}

/// Angle of `p` about `circle`'s axis in `circle`'s frame.
fn angle_in(circle: &Circle3, p: &Point) -> f64 {
    let d = p - circle.center;
    d.dot(&circle.e2).atan2(d.dot(&circle.e1)).rem_euclid(TAU)
}

/// Triangulates the band between two closed rings around a common axis.
/// Ring angles are measured about that axis, and each ring runs in
/// increasing angle. Produces `a.len() + b.len()` triangles facing away from
/// the axis when `a` lies behind `b` along the axis.
fn zipper(a: &[(f64, u32)], b: &[(f64, u32)], out: &mut Vec<[u32; 3]>) {
    let (na, nb) = (a.len(), b.len());
    let a0 = a[0].0;
    let unwrap = |x: f64| (x - a0).rem_euclid(TAU);
    // Start B at the vertex closest to A's first vertex.
    let j0 = (0..nb)
        .min_by(|&i, &j| {
            let d = |k: usize| {
                let g = unwrap(b[k].0);
                g.min(TAU - g)
            };
            d(i).total_cmp(&d(j))
        })
        .unwrap();
    let g0 = unwrap(b[j0].0);
    let b_start = if g0 > std::f64::consts::PI { g0 - TAU } else { g0 };
    let b_angle = |j: usize| {
        if j == nb {
            b_start + TAU
        } else {
            b_start + (b[(j0 + j) % nb].0 - b[j0].0).rem_euclid(TAU)
        }
    };
    let a_angle = |i: usize| if i == na { TAU } else { unwrap(a[i].0) };
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_a = j == nb || (i < na && a_angle(i + 1) < b_angle(j + 1));
        let ai = a[i % na].1;
        let bj = b[(j0 + j) % nb].1;
        if advance_a {
            out.push([ai, a[(i + 1) % na].1, bj]);
            i += 1;
        } else {
            out.push([ai, b[(j0 + j + 1) % nb].1, bj]);
            j += 1;
        }
    }
}

/// Cylinder sleeve between end circle `a` (axis pointing toward `b`) and end
/// circle `b` (axis pointing back toward `a`), sampled at the given ring
/// parameters. Intermediate rings reuse `a`'s parameters.
pub fn tessellate_strut(
    a: (CircleId, &Circle3, &[f64]),
    b: (CircleId, &Circle3, &[f64]),
    segments: usize,
) -> Result<Fragment> {
    let (ida, ca, ua) = a;
    let (idb, cb, ub) = b;
    let span = cb.center - ca.center;
    let length = span.dot(&ca.axis);
    if !(length > 0.0) {
        return Err(Error::Degenerate {
            node: None,
            message: format!("strut sleeve for circles {} and {} has no length", ida.0, idb.0),
        });
    }
    if ua.len() < 3 || ub.len() < 3 || segments == 0 {
        return Err(Error::SeamMismatch(format!(
            "rings of circles {} and {} are too coarse",
            ida.0, idb.0
        )));
    }
    let mut frag = Fragment::default();
    let mut rings: Vec<Vec<(f64, u32)>> = Vec::with_capacity(segments + 1);
    let first: Vec<(f64, u32)> = ua
        .iter()
        .map(|&u| {
            frag.vertices.push(FragmentVertex::Ring(ida, u));
            (u, frag.vertices.len() as u32 - 1)
        })
        .collect();
    rings.push(first);
    for s in 1..segments {
        let offset = ca.axis * (length * s as f64 / segments as f64);
        let ring = ua
            .iter()
            .map(|&u| {
                frag.vertices.push(FragmentVertex::Free(ca.point(u) + offset));
                (u, frag.vertices.len() as u32 - 1)
            })
            .collect();
        rings.push(ring);
    }
    let mut last: Vec<(f64, u32)> = ub
        .iter()
        .map(|&u| {
            frag.vertices.push(FragmentVertex::Ring(idb, u));
            (angle_in(ca, &(cb.point(u) - span)), frag.vertices.len() as u32 - 1)
        })
        .collect();
    last.sort_by(|x, y| x.0.total_cmp(&y.0));
    rings.push(last);
    for pair in rings.windows(2) {
        zipper(&pair[0], &pair[1], &mut frag.triangles);
    }
    Ok(frag)
}

/// Flat disk closing `ring` on `circle`, facing against the circle's axis.
pub fn cap_valence_one(id: CircleId, circle: &Circle3, ring: &[f64]) -> Fragment {
    let mut frag = Fragment::default();
    frag.vertices.push(FragmentVertex::Free(circle.center));
    for &u in ring {
        frag.vertices.push(FragmentVertex::Ring(id, u));
    }
    let n = ring.len() as u32;
    for k in 0..n {
        frag.triangles.push([0, 1 + (k + 1) % n, 1 + k]);
    }
    frag
}

/// Evenly spaced parameters for a ring of `count` vertices.
pub fn uniform_ring(count: usize) -> Vec<f64> {
    (0..count).map(|k| TAU * k as f64 / count as f64).collect()
}

pub struct AssembleInput<'a> {
    pub graph: &'a LatticeGraph,
    pub nodes: &'a [NodeOutput],
    pub settings: &'a Settings,
}

struct Builder<'a> {
    circles: &'a HashMap<CircleId, Circle3>,
    keys: HashMap<(u32, u64), u32>,
    mesh: LatticeMesh,
}

impl Builder<'_> {
    fn ring_vertex(&mut self, id: CircleId, u: f64) -> Result<u32> {
        let key = (id.0, u.to_bits());
        if let Some(&v) = self.keys.get(&key) {
            return Ok(v);
        }
        let circle = self
            .circles
            .get(&id)
            .ok_or_else(|| Error::SeamMismatch(format!("no end circle {}", id.0)))?;
        let v = self.mesh.positions.len() as u32;
        self.mesh.positions.push(circle.point(u));
        self.keys.insert(key, v);
        Ok(v)
    }

    fn add(&mut self, frag: &Fragment, source: FaceSource) -> Result<()> {
        let mut map = Vec::with_capacity(frag.vertices.len());
        for v in &frag.vertices {
            map.push(match *v {
                FragmentVertex::Ring(id, u) => self.ring_vertex(id, u)?,
                FragmentVertex::Free(p) => {
                    self.mesh.positions.push(p);
                    self.mesh.positions.len() as u32 - 1
                }
            });
        }
        for t in &frag.triangles {
            self.mesh.triangles.push(t.map(|i| map[i as usize]));
            self.mesh.provenance.push(source);
        }
        Ok(())
    }
}

/// Assembles node patches, strut sleeves and valence-1 caps.
pub fn assemble(input: &AssembleInput) -> Result<LatticeMesh> {
    let graph = input.graph;
    if graph.edges().is_empty() {
        return Err(Error::NothingToExport);
    }
    let mut circles = HashMap::new();
    for node in input.nodes {
        for c in &node.cuts {
            circles.insert(c.circle_id, c.end_circle);
        }
    }
    let mut rings: HashMap<CircleId, Vec<f64>> = HashMap::new();
    let mut fragments: Vec<(Fragment, FaceSource)> = Vec::new();
    let mut census = Census {
        cylindrical_faces: graph.edges().len(),
        boundary_curves: 2 * graph.edges().len(),
        ..Census::default()
    };
    for node in input.nodes {
        match &node.patch {
            Some(patch) => {
                census.subdivision_faces += 1;
                let mut frag = Fragment {
                    vertices: Vec::with_capacity(patch.vertices.len()),
                    triangles: patch.triangles.clone(),
                };
                for v in &patch.vertices {
                    frag.vertices.push(match v.boundary {
                        Some(b) => FragmentVertex::Ring(b.circle, b.u),
                        None => FragmentVertex::Free(v.position),
                    });
                }
                for c in &node.cuts {
                    let ring: Vec<f64> = patch.boundary_ring(c.circle_id).iter().map(|r| r.0).collect();
                    if ring.is_empty() {
                        return Err(Error::SeamMismatch(format!(
                            "node {} patch does not reach the end circle of edge {}",
                            node.node_id, c.edge_id
                        )));
                    }
                    rings.insert(c.circle_id, ring);
                }
                fragments.push((frag, FaceSource::Node(node.node_id)));
            }
            None if node.valence == 1 => {
                census.planar_caps += 1;
                let c = &node.cuts[0];
                let ring = uniform_ring(input.settings.cap_ring_count());
                fragments.push((
                    cap_valence_one(c.circle_id, &c.end_circle, &ring),
                    FaceSource::Cap(node.node_id),
                ));
                rings.insert(c.circle_id, ring);
            }
            None => {
                return Err(Error::InvalidArgument(format!(
                    "node {} has no subdivided patch",
                    node.node_id
                )))
            }
        }
    }

    let edges = graph.edges();
    let sleeves = map_indices(input.settings.parallelism, edges.len(), |ei| {
        let ida = CircleId::new(ei, 0);
        let idb = CircleId::new(ei, 1);
        let lookup = |id: CircleId| -> Result<(&Circle3, &[f64])> {
            match (circles.get(&id), rings.get(&id)) {
                (Some(c), Some(r)) => Ok((c, r.as_slice())),
                _ => Err(Error::SeamMismatch(format!(
                    "edge {} has no ring at end {}",
                    edges[ei].id,
                    id.end()
                ))),
            }
        };
        let (ca, ra) = lookup(ida)?;
        let (cb, rb) = lookup(idb)?;
        tessellate_strut((ida, ca, ra), (idb, cb, rb), input.settings.segments)
    });

    let mut builder = Builder {
        circles: &circles,
        keys: HashMap::new(),
        mesh: LatticeMesh::default(),
    };
    for (frag, source) in &fragments {
        builder.add(frag, *source)?;
    }
    for (ei, sleeve) in sleeves.into_iter().enumerate() {
        let sleeve = sleeve.map_err(|e| match e {
            Error::Degenerate { message, .. } => Error::Validation {
                message,
                node: None,
                edge: Some(edges[ei].id),
            },
            other => other,
        })?;
        builder.add(&sleeve, FaceSource::Strut(edges[ei].id))?;
    }
    let mut mesh = builder.mesh;
    mesh.census = census;
    let check = mesh.check();
    if !check.closed || !check.oriented {
        return Err(Error::NonManifold(format!(
            "assembled mesh is not watertight (closed: {}, oriented: {})",
            check.closed, check.oriented
        )));
    }
    Ok(mesh)
}
