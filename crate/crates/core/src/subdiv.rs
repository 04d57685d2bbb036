//! Combined PN-Loop subdivision of nodal films.
//!
//! Boundary edges are refined by sampling the exact end circle, boundary
//! vertices are kept, and everything else follows the point-normal Loop
//! rules. Every new point is a weighted average displaced along the new
//! normal, which makes cylinder-sampled stencils stay on their cylinder.

use crate::error::{Error, Result};
use crate::geom::{angle_between, triangle_normal, Circle3, CircleId, Point, Vector};
use crate::graph::NodeStar;
use crate::mesh::{vertex_normals, BoundaryParam, ControlMesh, EdgeTable, VertexRole};
use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

pub const DEFAULT_ITERATIONS: usize = 3;

/// Denominators of the displacement terms below this magnitude drop the term.
const DENOMINATOR_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNVertex {
    pub position: Point,
    pub normal: Vector,
    pub boundary: Option<BoundaryParam>,
}

/// How a vertex of the current level was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    Control,
    Vertex,
    Edge,
}

#[derive(Debug, Clone)]
pub struct SubdividedPatch {
    pub node_id: u64,
    pub center: Point,
    pub vertices: Vec<PNVertex>,
    pub triangles: Vec<[u32; 3]>,
    pub iterations: usize,
    pub origin: Vec<VertexOrigin>,
    /// Normal displacement `h` applied to each vertex at the last level.
    pub displacement: Vec<f64>,
    pub circles: Vec<(CircleId, Circle3)>,
}

impl SubdividedPatch {
    pub fn circle(&self, id: CircleId) -> Option<&Circle3> {
        self.circles.iter().find(|(c, _)| *c == id).map(|(_, c)| c)
    }

    pub fn positions(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| v.position).collect()
    }

    /// Boundary vertices of one circle, sorted by parameter.
    pub fn boundary_ring(&self, id: CircleId) -> Vec<(f64, u32)> {
        let mut ring: Vec<(f64, u32)> = self
            .vertices
            .iter()
            .enumerate()
            .filter_map(|(i, v)| match v.boundary {
                Some(b) if b.circle == id => Some((b.u, i as u32)),
                _ => None,
            })
            .collect();
        ring.sort_by(|a, b| a.0.total_cmp(&b.0));
        ring
    }

    pub fn write_obj<W: Write>(&self, out: W) -> io::Result<()> {
        crate::mesh::write_obj(out, &self.positions(), &self.triangles)
    }
}

/// Loop's vertex weight for valence `n`.
pub fn loop_beta(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "Loop weights need valence >= 3, got {n}"
        )));
    }
    let c = 0.375 + 0.25 * (TAU / n as f64).cos();
    Ok((0.625 - c * c) / n as f64)
}

fn unit(v: Vector, what: &str) -> Result<Vector> {
    let len = v.norm();
    if !(len > 1e-300) || !len.is_finite() {
        return Err(Error::Degenerate {
            node: None,
            message: format!("{what} normal average vanishes"),
        });
    }
    Ok(v / len)
}

/// Weighted point-normal average of a stencil.
fn pn_combine(stencil: &[(f64, &PNVertex)]) -> Result<(PNVertex, f64)> {
    let mut t = Vector::zeros();
    let mut nsum = Vector::zeros();
    for &(w, v) in stencil {
        t += v.position.coords * w;
        nsum += v.normal * w;
    }
    let n = unit(nsum, "stencil")?;
    let mut h = 0.0;
    for &(w, v) in stencil {
        let m = v.normal + n;
        let den = m.dot(&n);
        if den.abs() < DENOMINATOR_GUARD {
            log::warn!("PN displacement term dropped: opposed normals");
            continue;
        }
        h += w * m.dot(&(v.position.coords - t)) / den;
    }
    Ok((
        PNVertex {
            position: Point::from(t + n * h),
            normal: n,
            boundary: None,
        },
        h,
    ))
}

/// New position and normal of an interior vertex from its one-ring.
pub fn pn_vertex_rule(center: &PNVertex, ring: &[PNVertex]) -> Result<PNVertex> {
    Ok(pn_vertex_rule_h(center, ring)?.0)
}

fn pn_vertex_rule_h(center: &PNVertex, ring: &[PNVertex]) -> Result<(PNVertex, f64)> {
    let n = ring.len();
    let beta = loop_beta(n)?;
    let mut stencil = Vec::with_capacity(n + 1);
    stencil.push((1.0 - n as f64 * beta, center));
    stencil.extend(ring.iter().map(|v| (beta, v)));
    pn_combine(&stencil)
}

/// New point on the interior edge `(vi, vj)` with opposite vertices `vp`
/// and `vq`.
pub fn pn_edge_rule(vi: &PNVertex, vj: &PNVertex, vp: &PNVertex, vq: &PNVertex) -> Result<PNVertex> {
    Ok(pn_edge_rule_h(vi, vj, vp, vq)?.0)
}

fn pn_edge_rule_h(
    vi: &PNVertex,
    vj: &PNVertex,
    vp: &PNVertex,
    vq: &PNVertex,
) -> Result<(PNVertex, f64)> {
    pn_combine(&[(0.375, vi), (0.375, vj), (0.125, vp), (0.125, vq)])
}

/// Circle point halfway along the counterclockwise arc from `u_i` to `u_j`.
pub fn boundary_sample(circle: &Circle3, id: CircleId, u_i: f64, u_j: f64) -> PNVertex {
    let gap = (u_j - u_i).rem_euclid(TAU);
    let u = (u_i + 0.5 * gap).rem_euclid(TAU);
    PNVertex {
        position: circle.point(u),
        normal: circle.normal(u),
        boundary: Some(BoundaryParam { circle: id, u }),
    }
}

/// Level-0 vertices: boundary and first collar ring take the cylinder
/// normal of their strut, everything else area-weighted face normals.
pub fn initial_vertices(mesh: &ControlMesh) -> Result<Vec<PNVertex>> {
    let face = vertex_normals(&mesh.positions(), &mesh.triangles);
    mesh.vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let cylinder = matches!(v.role, VertexRole::Boundary | VertexRole::Collar1);
            let normal = match (cylinder, v.strut) {
                (true, Some(id)) => {
                    let circle = mesh.circle(id).ok_or_else(|| {
                        Error::NonManifold(format!("vertex {i} refers to unknown circle"))
                    })?;
                    match v.boundary {
                        Some(b) => circle.normal(b.u),
                        None => circle.cylinder_normal_at(&v.position).unwrap_or(face[i]),
                    }
                }
                _ => face[i],
            };
            if !(normal.norm() > 0.5) {
                return Err(Error::Degenerate {
                    node: Some(mesh.node_id),
                    message: format!("vertex {i} has no normal"),
                });
            }
            Ok(PNVertex {
                position: v.position,
                normal,
                boundary: v.boundary,
            })
        })
        .collect()
}

/// `iterations` rounds of combined PN-Loop refinement.
pub fn subdivide(mesh: &ControlMesh, star: &NodeStar, iterations: usize) -> Result<SubdividedPatch> {
    if star.node.id != mesh.node_id {
        return Err(Error::InvalidArgument(format!(
            "star of node {} does not match film of node {}",
            star.node.id, mesh.node_id
        )));
    }
    let vertices = initial_vertices(mesh)?;
    let mut patch = SubdividedPatch {
        node_id: mesh.node_id,
        center: mesh.center,
        origin: vec![VertexOrigin::Control; vertices.len()],
        displacement: vec![0.0; vertices.len()],
        vertices,
        triangles: mesh.triangles.clone(),
        iterations: 0,
        circles: mesh.circles.clone(),
    };
    for _ in 0..iterations {
        patch = refine(&patch).map_err(|e| match e {
            Error::Degenerate { node: None, message } => Error::Degenerate {
                node: Some(mesh.node_id),
                message,
            },
            other => other,
        })?;
    }
    Ok(patch)
}

/// One level of refinement; every rule reads only level-k data.
pub fn refine(patch: &SubdividedPatch) -> Result<SubdividedPatch> {
    let nv = patch.vertices.len();
    let table = EdgeTable::build(&patch.triangles);
    table.check_manifold()?;
    let mut ring: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for &(a, b) in &table.edges {
        ring[a as usize].push(b);
        ring[b as usize].push(a);
    }

    let mut vertices = Vec::with_capacity(nv + table.edges.len());
    let mut origin = Vec::with_capacity(vertices.capacity());
    let mut displacement = Vec::with_capacity(vertices.capacity());
    for (i, v) in patch.vertices.iter().enumerate() {
        if v.boundary.is_some() {
            vertices.push(*v);
            displacement.push(0.0);
        } else {
            let nbrs: Vec<PNVertex> = ring[i].iter().map(|&j| patch.vertices[j as usize]).collect();
            let (p, h) = pn_vertex_rule_h(v, &nbrs)?;
            vertices.push(p);
            displacement.push(h);
        }
        origin.push(VertexOrigin::Vertex);
    }

    for (e, &(a, b)) in table.edges.iter().enumerate() {
        let faces = &table.faces[e];
        let (va, vb) = (&patch.vertices[a as usize], &patch.vertices[b as usize]);
        let (p, h) = if faces.len() == 1 {
            let (ba, bb) = match (va.boundary, vb.boundary) {
                (Some(x), Some(y)) if x.circle == y.circle => (x, y),
                _ => {
                    return Err(Error::NonManifold(format!(
                        "open edge ({a}, {b}) does not lie on one end circle"
                    )))
                }
            };
            // Boundary edges run against the circle parameter in their
            // triangle, so the arc goes from the edge's head to its tail.
            let tri = patch.triangles[faces[0].0 as usize];
            let k = tri.iter().position(|&x| x == a).unwrap();
            let (from, to) = if tri[(k + 1) % 3] == b { (bb, ba) } else { (ba, bb) };
            let circle = patch.circle(ba.circle).ok_or_else(|| {
                Error::NonManifold(format!("edge ({a}, {b}) refers to unknown circle"))
            })?;
            (boundary_sample(circle, ba.circle, from.u, to.u), 0.0)
        } else {
            let vp = &patch.vertices[faces[0].1 as usize];
            let vq = &patch.vertices[faces[1].1 as usize];
            pn_edge_rule_h(va, vb, vp, vq)?
        };
        vertices.push(p);
        origin.push(VertexOrigin::Edge);
        displacement.push(h);
    }

    let mid = |x: u32, y: u32| nv as u32 + table.get(x, y).expect("edge");
    let mut triangles = Vec::with_capacity(patch.triangles.len() * 4);
    for &[a, b, c] in &patch.triangles {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Ok(SubdividedPatch {
        node_id: patch.node_id,
        center: patch.center,
        vertices,
        triangles,
        iterations: patch.iterations + 1,
        origin,
        displacement,
        circles: patch.circles.clone(),
    })
}

/// Largest angle, in degrees, between the facet normal of a triangle
/// touching an end circle and the cylinder normal at the triangle's
/// centroid.
pub fn seam_normal_deviation(patch: &SubdividedPatch) -> f64 {
    let mut worst = 0.0f64;
    for t in &patch.triangles {
        let Some(b) = t.iter().find_map(|&i| patch.vertices[i as usize].boundary) else {
            continue;
        };
        let circle = match patch.circle(b.circle) {
            Some(c) => c,
            None => return PI.to_degrees(),
        };
        let p = t.map(|i| patch.vertices[i as usize].position);
        let centroid = Point::from((p[0].coords + p[1].coords + p[2].coords) / 3.0);
        let Some(n) = circle.cylinder_normal_at(&centroid) else {
            return PI.to_degrees();
        };
        worst = worst.max(angle_between(&triangle_normal(&p[0], &p[1], &p[2]), &n).to_degrees());
    }
    worst
}

/// Longest edge of the patch.
pub fn max_edge_length(patch: &SubdividedPatch) -> f64 {
    let mut worst = 0.0f64;
    for t in &patch.triangles {
        for k in 0..3 {
            let (a, b) = (t[k] as usize, t[(k + 1) % 3] as usize);
            worst = worst.max((patch.vertices[a].position - patch.vertices[b].position).norm());
        }
    }
    worst
}
