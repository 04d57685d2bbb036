//! Nodal film geometry: the initial control mesh spanning a node's end
//! circles.
//!
//! Each end circle owns one Voronoi cell of the strut directions. The cell's
//! straightened vertex loop is joined to the loop's projection onto the
//! circle by a band of triangles; neighbouring bands share the Voronoi
//! vertices, so the union is a sphere with one hole per strut.

pub mod voronoi;

use crate::cut::StrutCut;
use crate::error::{Error, Result};
use crate::geom::{angle_between, strut_exit_distance, wrap_angle, Circle3, CircleId, Point, Vector};
use crate::graph::{Node, NodeStar};
use crate::mesh::{BoundaryParam, ControlMesh, FilmVertex, Strip, VertexRole};
use std::collections::HashMap;
use std::f64::consts::TAU;

pub use voronoi::{spherical_voronoi, SphericalVoronoi, VoronoiEdge};

/// Smallest parameter gap between neighbouring boundary vertices.
const MIN_PARAM_GAP: f64 = 1e-9;
/// Smallest share of an arc between neighboring inserted boundary points.
const MIN_ARC_SHARE: f64 = 0.1;

fn param_of_direction(circle: &Circle3, dir: &Vector) -> Option<f64> {
    let x = dir.dot(&circle.e1);
    let y = dir.dot(&circle.e2);
    if x.hypot(y) < 1e-12 {
        return None;
    }
    let u = y.atan2(x);
    Some(if u < 0.0 { u + TAU } else { u })
}

/// Counterclockwise parameter distance from `from` to `to`, in `[0, 2pi)`.
fn ccw_gap(from: f64, to: f64) -> f64 {
    (to - from).rem_euclid(TAU)
}

fn boundary_vertex(id: CircleId, circle: &Circle3, u: f64) -> FilmVertex {
    FilmVertex {
        position: circle.point(u),
        normal: circle.normal(u),
        role: VertexRole::Boundary,
        boundary: Some(BoundaryParam { circle: id, u }),
        strut: Some(id),
    }
}

/// Initial film geometry from a node's cuts (two or more struts).
pub fn build_film(cuts: &[StrutCut], node: &Node) -> Result<ControlMesh> {
    if cuts.len() < 2 {
        return Err(Error::Degenerate {
            node: Some(node.id),
            message: "film geometry needs at least two struts".into(),
        });
    }
    let o = node.position;
    let radius = cuts[0].radius;
    let dirs: Vec<Vector> = cuts.iter().map(|c| c.direction).collect();
    let vd = spherical_voronoi(&dirs).map_err(|e| match e {
        Error::Degenerate { message, .. } => Error::Degenerate {
            node: Some(node.id),
            message,
        },
        other => other,
    })?;

    let mut vertices: Vec<FilmVertex> = vd
        .vertices
        .iter()
        .map(|w| FilmVertex::interior(o + w * radius))
        .collect();
    let mut strips = Vec::with_capacity(cuts.len());
    let mut circles = Vec::with_capacity(cuts.len());
    for (i, cut) in cuts.iter().enumerate() {
        let circle = cut.end_circle;
        let mut keyed = Vec::with_capacity(vd.cells[i].len());
        for &v in &vd.cells[i] {
            let u = param_of_direction(&circle, &vd.vertices[v]).ok_or(Error::ProjectionFold {
                node: node.id,
                edge: cut.edge_id,
            })?;
            keyed.push((u, v as u32));
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = keyed.len();
        for k in 0..m {
            let gap = ccw_gap(keyed[k].0, keyed[(k + 1) % m].0);
            if m < 2 || gap <= MIN_PARAM_GAP || (m > 1 && gap >= TAU - MIN_PARAM_GAP) {
                return Err(Error::ProjectionFold {
                    node: node.id,
                    edge: cut.edge_id,
                });
            }
        }
        let mut outer = Vec::with_capacity(m);
        let mut inner = Vec::with_capacity(m);
        for &(u, v) in &keyed {
            outer.push(vertices.len() as u32);
            vertices.push(boundary_vertex(cut.circle_id, &circle, u));
            inner.push(v);
        }
        strips.push(Strip {
            circle: cut.circle_id,
            rings: vec![outer, inner],
        });
        circles.push((cut.circle_id, circle));
    }
    let mut mesh = ControlMesh {
        node_id: node.id,
        center: o,
        vertices,
        triangles: Vec::new(),
        circles,
        strips,
    };
    mesh.triangulate_strips();
    mesh.recompute_normals();
    Ok(mesh)
}

/// Exit point of the ray from the node center along `dir` through the strut
/// of star entry `site`.
fn strut_point(star: &NodeStar, site: usize, dir: &Vector) -> Result<Point> {
    let inc = &star.incident[site];
    let dir = dir.normalize();
    let t = strut_exit_distance(&dir, &inc.direction, inc.radius).ok_or(Error::NoIntersection {
        node: star.node.id,
        edge: inc.edge_id,
    })?;
    Ok(star.node.position + dir * t)
}

fn star_directions(star: &NodeStar) -> Vec<Vector> {
    star.incident.iter().map(|i| i.direction).collect()
}

/// Moves every Voronoi vertex along its ray from the node center onto the
/// surface of the nearest strut, where the struts' intersection curves meet.
pub fn adjust_vertices(mesh: &ControlMesh, star: &NodeStar) -> Result<ControlMesh> {
    let mut out = mesh.clone();
    let o = star.node.position;
    let dirs = star_directions(star);
    for v in out.vertices.iter_mut() {
        if v.role != VertexRole::Interior {
            continue;
        }
        let d = v.position - o;
        let site = voronoi::nearest(&dirs, &d.normalize());
        v.position = strut_point(star, site, &d)?;
    }
    out.recompute_normals();
    Ok(out)
}

/// Whether the intersection curve between `v1` and `v2` bulges past the
/// direction `toward` (the sum of the two strut directions).
pub fn is_non_monotonic(v1: &Vector, v2: &Vector, toward: &Vector) -> bool {
    let theta = angle_between(v1, v2);
    angle_between(v1, toward) < theta && angle_between(v2, toward) < theta
}

/// Inserts three points along every Voronoi edge whose strut intersection
/// curve is non-monotonic, and splits the adjacent bands accordingly. Each
/// inserted point also gets a projected partner on both adjacent circles.
pub fn insert_curve_points(mesh: &ControlMesh, star: &NodeStar) -> Result<ControlMesh> {
    let o = star.node.position;
    let site_of: HashMap<CircleId, usize> = star
        .incident
        .iter()
        .enumerate()
        .map(|(i, inc)| (inc.circle_id(), i))
        .collect();
    let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
    for (s, strip) in mesh.strips.iter().enumerate() {
        let inner = strip.inner();
        for k in 0..inner.len() {
            directed.insert((inner[k], inner[(k + 1) % inner.len()]), s);
        }
    }

    let mut out = mesh.clone();
    // Per strip: inner vertex after which new points go, and the points.
    let mut pending: Vec<HashMap<u32, Vec<u32>>> = vec![HashMap::new(); mesh.strips.len()];
    let mut pending_outer: Vec<HashMap<u32, Vec<u32>>> = vec![HashMap::new(); mesh.strips.len()];

    for (s, strip) in mesh.strips.iter().enumerate() {
        let inner = strip.inner();
        let outer = strip.outer();
        let m = inner.len();
        for k in 0..m {
            let (a, b) = (inner[k], inner[(k + 1) % m]);
            if a > b && directed.contains_key(&(b, a)) {
                continue; // handled from the other side
            }
            let Some(&t) = directed.get(&(b, a)) else {
                return Err(Error::NonManifold(format!(
                    "film edge ({a}, {b}) of node {} has no twin",
                    mesh.node_id
                )));
            };
            let (si, sj) = (site_of[&strip.circle], site_of[&mesh.strips[t].circle]);
            let (di, dj) = (star.incident[si].direction, star.incident[sj].direction);
            let sum = di + dj;
            if sum.norm() < 1e-9 {
                continue;
            }
            let n2 = sum.normalize();
            let v1 = (mesh.vertices[a as usize].position - o).normalize();
            let v2 = (mesh.vertices[b as usize].position - o).normalize();
            if !is_non_monotonic(&v1, &v2, &n2) {
                continue;
            }
            // A peak at an existing vertex needs no extra points.
            let span = angle_between(&v1, &v2);
            if angle_between(&v1, &n2).min(angle_between(&v2, &n2)) < MIN_ARC_SHARE * span {
                continue;
            }
            let p2 = strut_point(star, si, &n2)?;
            let p1 = strut_point(star, si, &(v1 + n2))?;
            let p3 = strut_point(star, si, &(v2 + n2))?;
            let new_dirs = [p1 - o, p2 - o, p3 - o];

            // Parameters on both circles must fall strictly inside the arcs.
            let ci = mesh.circle(strip.circle).expect("strip circle");
            let other = &mesh.strips[t];
            let cj = mesh.circle(other.circle).expect("strip circle");
            let ua = out.vertices[outer[k] as usize].boundary.unwrap().u;
            let ub = out.vertices[outer[(k + 1) % m] as usize].boundary.unwrap().u;
            let kj = other.inner().iter().position(|&x| x == b).expect("twin edge");
            let mj = other.inner().len();
            let ub_j = out.vertices[other.outer()[kj] as usize].boundary.unwrap().u;
            let ua_j = out.vertices[other.outer()[(kj + 1) % mj] as usize]
                .boundary
                .unwrap()
                .u;
            let params_i: Option<Vec<f64>> =
                new_dirs.iter().map(|d| param_of_direction(ci, d)).collect();
            let params_j: Option<Vec<f64>> = new_dirs
                .iter()
                .rev()
                .map(|d| param_of_direction(cj, d))
                .collect();
            let (Some(pi), Some(pj)) = (params_i, params_j) else {
                log::warn!("node {}: skipped insertion on an axis-parallel ray", mesh.node_id);
                continue;
            };
            let (Some(pi), Some(pj)) = (arc_params(ua, ub, &pi), arc_params(ub_j, ua_j, &pj)) else {
                log::warn!(
                    "node {}: skipped insertion that would fold a boundary ring",
                    mesh.node_id
                );
                continue;
            };

            let base = out.vertices.len() as u32;
            for p in [p1, p2, p3] {
                out.vertices.push(FilmVertex::interior(p));
            }
            let ids = [base, base + 1, base + 2];
            let mut ring_i = Vec::with_capacity(3);
            for &u in &pi {
                ring_i.push(out.vertices.len() as u32);
                out.vertices.push(boundary_vertex(strip.circle, ci, u));
            }
            let mut ring_j = Vec::with_capacity(3);
            for &u in &pj {
                ring_j.push(out.vertices.len() as u32);
                out.vertices.push(boundary_vertex(other.circle, cj, u));
            }
            pending[s].insert(a, ids.to_vec());
            pending_outer[s].insert(a, ring_i);
            pending[t].insert(b, ids.iter().rev().copied().collect());
            pending_outer[t].insert(b, ring_j);
        }
    }

    for (s, strip) in out.strips.iter_mut().enumerate() {
        if pending[s].is_empty() {
            continue;
        }
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for (k, &v) in strip.inner().iter().enumerate() {
            inner.push(v);
            outer.push(strip.outer()[k]);
            if let Some(extra) = pending[s].get(&v) {
                inner.extend_from_slice(extra);
                outer.extend_from_slice(&pending_outer[s][&v]);
            }
        }
        strip.rings = vec![outer, inner];
    }
    out.triangulate_strips();
    out.recompute_normals();
    Ok(out)
}

/// Boundary parameters for points inserted on the arc from `from` to `to`
/// (counterclockwise). Projected parameters are kept when they are in order
/// and well separated; parameters that crowd a neighbor are replaced by
/// evenly spaced ones. `None` if the projections are out of order.
fn arc_params(from: f64, to: f64, ps: &[f64]) -> Option<Vec<f64>> {
    let total = ccw_gap(from, to);
    let gaps: Vec<f64> = ps.iter().map(|&p| ccw_gap(from, p)).collect();
    let mut last = 0.0;
    for &g in &gaps {
        if g <= last + MIN_PARAM_GAP || g >= total - MIN_PARAM_GAP {
            return None;
        }
        last = g;
    }
    let min_sep = MIN_ARC_SHARE * total;
    let crowded = gaps
        .iter()
        .chain(std::iter::once(&total))
        .scan(0.0, |prev, &g| {
            let d = g - *prev;
            *prev = g;
            Some(d)
        })
        .any(|d| d < min_sep);
    if !crowded {
        return Some(ps.to_vec());
    }
    let n = ps.len() as f64;
    Some(
        (1..=ps.len())
            .map(|k| wrap_angle(from + total * k as f64 / (n + 1.0)))
            .collect(),
    )
}

/// Film geometry with vertex adjustment and point insertion applied.
pub fn film_geometry(cuts: &[StrutCut], star: &NodeStar) -> Result<ControlMesh> {
    let film = build_film(cuts, &star.node)?;
    let film = adjust_vertices(&film, star)?;
    insert_curve_points(&film, star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::node_cuts;
    use crate::mesh::EdgeTable;

    fn star(dirs: &[Vector]) -> NodeStar {
        NodeStar::from_directions(
            Node {
                id: 0,
                position: Point::origin(),
            },
            dirs,
            10.0,
            1.0,
        )
        .unwrap()
    }

    fn octa() -> NodeStar {
        star(&[
            Vector::x(),
            -Vector::x(),
            Vector::y(),
            -Vector::y(),
            Vector::z(),
            -Vector::z(),
        ])
    }

    fn boundary_loops(mesh: &ControlMesh) -> usize {
        let t = EdgeTable::build(&mesh.triangles);
        let n = (0..t.edges.len() as u32).filter(|&e| t.is_boundary(e)).count();
        let ring: usize = mesh.strips.iter().map(|s| s.outer().len()).sum();
        assert_eq!(n, ring);
        mesh.strips.len()
    }

    #[test]
    fn octahedron_film_counts() {
        let s = octa();
        let cuts = node_cuts(&s, 0.3).unwrap();
        let film = build_film(&cuts, &s.node).unwrap();
        let interior = film
            .vertices
            .iter()
            .filter(|v| v.role == VertexRole::Interior)
            .count();
        assert_eq!(interior, 8);
        assert_eq!(film.vertices.len() - interior, 24);
        assert!(film.strips.iter().all(|st| st.outer().len() == 4));
        assert_eq!(film.triangles.len(), 48);
        assert_eq!(film.euler_characteristic(), 2 - 6);
        assert_eq!(boundary_loops(&film), 6);
        for v in &film.vertices {
            if let Some(bp) = v.boundary {
                let c = film.circle(bp.circle).unwrap();
                assert!((c.point(bp.u) - v.position).norm() == 0.0);
            }
            assert!((v.normal.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn film_faces_point_outward() {
        let s = octa();
        let film = build_film(&node_cuts(&s, 0.3).unwrap(), &s.node).unwrap();
        for t in &film.triangles {
            let [a, b, c] = t.map(|i| film.vertices[i as usize].position);
            let n = (b - a).cross(&(c - a));
            let centroid = Point::from((a.coords + b.coords + c.coords) / 3.0);
            assert!(n.dot(&centroid.coords) > 0.0);
        }
    }

    #[test]
    fn adjusted_vertex_on_octant_diagonal() {
        let s = octa();
        let film = build_film(&node_cuts(&s, 0.3).unwrap(), &s.node).unwrap();
        let adj = adjust_vertices(&film, &s).unwrap();
        let h = 0.5f64.sqrt();
        for (before, after) in film.vertices.iter().zip(&adj.vertices) {
            if after.role == VertexRole::Interior {
                for c in after.position.iter() {
                    assert!((c.abs() - h).abs() < 1e-12);
                }
                for inc in &s.incident {
                    let d = after.position.coords;
                    if d.dot(&inc.direction) > 0.0 {
                        let radial = (d - inc.direction * d.dot(&inc.direction)).norm();
                        assert!((radial - 1.0).abs() < 1e-9);
                    }
                }
            } else {
                assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn octahedron_edges_get_insertions() {
        let s = octa();
        let film = film_geometry(&node_cuts(&s, 0.3).unwrap(), &s).unwrap();
        // 12 Voronoi edges, three points each.
        let interior = film
            .vertices
            .iter()
            .filter(|v| v.role == VertexRole::Interior)
            .count();
        assert_eq!(interior, 8 + 36);
        assert!(film
            .vertices
            .iter()
            .any(|v| (v.position - Point::new(1.0, 1.0, 0.0)).norm() < 1e-12));
        assert_eq!(film.euler_characteristic(), -4);
        EdgeTable::build(&film.triangles).check_manifold().unwrap();
    }

    #[test]
    fn monotonic_predicate_boundaries() {
        let v1 = Vector::new(1.0, 1.0, 1.0).normalize();
        let v2 = Vector::new(1.0, 1.0, -1.0).normalize();
        assert!(is_non_monotonic(&v1, &v2, &Vector::new(1.0, 1.0, 0.0).normalize()));
        // Target coincides with an endpoint: theta2 == theta.
        assert!(!is_non_monotonic(&v1, &v2, &v1));
        // Target outside the arc.
        assert!(!is_non_monotonic(&v1, &v2, &Vector::new(-1.0, 0.0, 0.0)));
    }

    #[test]
    fn antipodal_pair_band() {
        let s = star(&[Vector::z(), -Vector::z()]);
        let cuts = crate::cut::node_cuts_with_floor(&s, 0.3, 0.3).unwrap();
        let film = film_geometry(&cuts, &s).unwrap();
        assert_eq!(film.strips.len(), 2);
        assert_eq!(film.strips[0].outer().len(), 13);
        assert_eq!(film.euler_characteristic(), 0);
    }

    #[test]
    fn valence_three_lunes() {
        let s = star(&[Vector::x(), Vector::y(), Vector::z()]);
        let film = build_film(&node_cuts(&s, 0.3).unwrap(), &s.node).unwrap();
        assert!(film.strips.iter().all(|st| st.outer().len() == 4));
        assert_eq!(film.euler_characteristic(), -1);
        let full = film_geometry(&node_cuts(&s, 0.3).unwrap(), &s).unwrap();
        assert_eq!(full.euler_characteristic(), -1);
    }

    #[test]
    fn single_strut_is_rejected() {
        let s = star(&[Vector::x()]);
        assert!(build_film(&node_cuts(&s, 0.3).unwrap(), &s.node).is_err());
    }
}
