//! Spherical Voronoi diagrams of strut directions.
//!
//! Sites live on the unit sphere, so their Delaunay triangulation is the
//! convex hull and each supporting plane of the hull yields one Voronoi vertex
//! (the plane's outward normal). Cocircular sites share a single supporting
//! plane and therefore a single vertex of higher valence, which removes the
//! ambiguity of triangulating them. Sites that are all coplanar degenerate to
//! lunes; a pair of sites degenerates to one bisecting great circle.

use crate::error::{Error, Result};
use crate::geom::{angle_between, frame_for_axis, Vector};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// Tolerance on plane membership when detecting hull facets.
const PLANE_EPS: f64 = 1e-9;
/// Voronoi vertices closer than this angle are merged.
const MERGE_ANGLE: f64 = 1e-3;
/// Angular step of the discretized bisector for two sites.
const BISECTOR_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoronoiEdge {
    pub vertices: (usize, usize),
    /// The two sites separated by this edge.
    pub sites: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SphericalVoronoi {
    pub sites: Vec<Vector>,
    /// Unit vertex directions.
    pub vertices: Vec<Vector>,
    /// Sites each vertex is equidistant from.
    pub vertex_sites: Vec<Vec<usize>>,
    /// Per-site vertex loop, counterclockwise about the site direction.
    pub cells: Vec<Vec<usize>>,
    pub edges: Vec<VoronoiEdge>,
}

impl SphericalVoronoi {
    /// Index of the site nearest to `dir` (ties go to the lowest index).
    pub fn nearest_site(&self, dir: &Vector) -> usize {
        nearest(&self.sites, dir)
    }
}

pub(crate) fn nearest(sites: &[Vector], dir: &Vector) -> usize {
    let mut best = 0;
    for (i, s) in sites.iter().enumerate().skip(1) {
        if s.dot(dir) > sites[best].dot(dir) {
            best = i;
        }
    }
    best
}

fn degenerate(message: impl Into<String>) -> Error {
    Error::Degenerate {
        node: None,
        message: message.into(),
    }
}

/// Angle of `v` about `axis` in the frame used for that axis' end circle.
pub(crate) fn angle_about(axis: &Vector, v: &Vector) -> f64 {
    let (e1, e2) = frame_for_axis(axis);
    let a = v.dot(&e2).atan2(v.dot(&e1));
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Spherical Voronoi diagram of unit directions.
pub fn spherical_voronoi(directions: &[Vector]) -> Result<SphericalVoronoi> {
    if directions.is_empty() {
        return Err(degenerate("no sites"));
    }
    let sites: Vec<Vector> = directions.iter().map(|d| d.normalize()).collect();
    for (i, a) in sites.iter().enumerate() {
        if !a.iter().all(|c| c.is_finite()) {
            return Err(degenerate(format!("site {i} is not a finite direction")));
        }
        for b in &sites[i + 1..] {
            if angle_between(a, b) < crate::graph::COINCIDENT_DIRECTION_TOLERANCE {
                return Err(degenerate("duplicate sites"));
            }
        }
    }
    let (vertices, vertex_sites) = match sites.len() {
        1 => (Vec::new(), Vec::new()),
        2 => bisector_vertices(&sites),
        _ => match common_plane(&sites) {
            Some(normal) => lune_vertices(&sites, normal),
            None => hull_vertices(&sites)?,
        },
    };
    let (vertices, vertex_sites) = merge_close(vertices, vertex_sites);
    let mut cells = vec![Vec::new(); sites.len()];
    for (v, ss) in vertex_sites.iter().enumerate() {
        for &s in ss {
            cells[s].push(v);
        }
    }
    for (s, cell) in cells.iter_mut().enumerate() {
        let mut keyed: Vec<(f64, usize)> = cell
            .iter()
            .map(|&v| (angle_about(&sites[s], &vertices[v]), v))
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        *cell = keyed.into_iter().map(|(_, v)| v).collect();
    }
    let mut edges = Vec::new();
    let mut seen = BTreeMap::new();
    for (s, cell) in cells.iter().enumerate() {
        let m = cell.len();
        if m < 2 {
            continue;
        }
        for k in 0..m {
            let (a, b) = (cell[k], cell[(k + 1) % m]);
            if m == 2 && k == 1 {
                break;
            }
            let key = (a.min(b), a.max(b));
            if seen.contains_key(&key) {
                continue;
            }
            let common: Vec<usize> = vertex_sites[a]
                .iter()
                .copied()
                .filter(|t| *t != s && vertex_sites[b].contains(t))
                .collect();
            if common.len() != 1 {
                return Err(degenerate(format!(
                    "vertices {a} and {b} of cell {s} share {} other sites",
                    common.len()
                )));
            }
            let other = common[0];
            seen.insert(key, edges.len());
            edges.push(VoronoiEdge {
                vertices: (a, b),
                sites: (s.min(other), s.max(other)),
            });
        }
    }
    Ok(SphericalVoronoi {
        sites,
        vertices,
        vertex_sites,
        cells,
        edges,
    })
}

fn bisector_vertices(sites: &[Vector]) -> (Vec<Vector>, Vec<Vec<usize>>) {
    let normal = (sites[0] - sites[1]).normalize();
    // Start the bisector between the sites so it turns with them.
    let mid = sites[0] + sites[1];
    let (e1, e2) = if mid.norm() > 1e-9 {
        let e1 = mid.normalize();
        (e1, normal.cross(&e1))
    } else {
        frame_for_axis(&normal)
    };
    let count = ((TAU / BISECTOR_STEP).ceil() as usize).max(8);
    let vertices = (0..count)
        .map(|k| {
            let t = TAU * k as f64 / count as f64;
            e1 * t.cos() + e2 * t.sin()
        })
        .collect();
    (vertices, vec![vec![0, 1]; count])
}

/// Normal of the plane containing every site, if there is one.
fn common_plane(sites: &[Vector]) -> Option<Vector> {
    let n = (sites[1] - sites[0]).cross(&(sites[2] - sites[0]));
    let n = n.normalize();
    let d = n.dot(&sites[0]);
    sites
        .iter()
        .all(|p| (n.dot(p) - d).abs() <= PLANE_EPS)
        .then(|| if d < 0.0 { -n } else { n })
}

/// Coplanar sites: the two poles of the common plane plus one vertex in the
/// middle of every lune edge, so that each cell loop has four vertices.
fn lune_vertices(sites: &[Vector], normal: Vector) -> (Vec<Vector>, Vec<Vec<usize>>) {
    let (e1, e2) = frame_for_axis(&normal);
    let mut order: Vec<(f64, usize)> = sites
        .iter()
        .enumerate()
        .map(|(i, s)| (angle_about(&normal, s), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let all: Vec<usize> = (0..sites.len()).collect();
    let mut vertices = vec![normal, -normal];
    let mut vertex_sites = vec![all.clone(), all];
    let n = order.len();
    for k in 0..n {
        let (a0, sa) = order[k];
        let (mut b0, sb) = order[(k + 1) % n];
        if b0 <= a0 {
            b0 += TAU;
        }
        let mid = 0.5 * (a0 + b0);
        vertices.push(e1 * mid.cos() + e2 * mid.sin());
        vertex_sites.push(vec![sa.min(sb), sa.max(sb)]);
    }
    (vertices, vertex_sites)
}

fn hull_vertices(sites: &[Vector]) -> Result<(Vec<Vector>, Vec<Vec<usize>>)> {
    let n = sites.len();
    let mut facets: BTreeMap<Vec<usize>, Vector> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let raw = (sites[j] - sites[i]).cross(&(sites[k] - sites[i]));
                let len = raw.norm();
                if len < 1e-14 {
                    continue;
                }
                let mut normal = raw / len;
                let d = normal.dot(&sites[i]);
                let (mut above, mut below) = (false, false);
                let mut on = Vec::new();
                for (l, p) in sites.iter().enumerate() {
                    let s = normal.dot(p) - d;
                    if s > PLANE_EPS {
                        above = true;
                    } else if s < -PLANE_EPS {
                        below = true;
                    } else {
                        on.push(l);
                    }
                }
                if above && below {
                    continue;
                }
                if above {
                    normal = -normal;
                }
                facets.entry(on).or_insert(normal);
            }
        }
    }
    if facets.len() < 2 {
        return Err(degenerate("hull has fewer than two facets"));
    }
    let mut vertices = Vec::with_capacity(facets.len());
    let mut vertex_sites = Vec::with_capacity(facets.len());
    for (on, normal) in facets {
        vertices.push(normal);
        vertex_sites.push(on);
    }
    Ok((vertices, vertex_sites))
}

/// Merges nearly coincident vertices (nearly cocircular sites) into one
/// vertex carrying the union of their sites.
fn merge_close(
    vertices: Vec<Vector>,
    vertex_sites: Vec<Vec<usize>>,
) -> (Vec<Vector>, Vec<Vec<usize>>) {
    let mut out_v: Vec<Vector> = Vec::with_capacity(vertices.len());
    let mut out_s: Vec<Vec<usize>> = Vec::with_capacity(vertices.len());
    for (v, ss) in vertices.into_iter().zip(vertex_sites) {
        match out_v
            .iter()
            .position(|w| angle_between(&w.normalize(), &v) < MERGE_ANGLE)
        {
            Some(i) => {
                out_v[i] += v;
                for s in ss {
                    if !out_s[i].contains(&s) {
                        out_s[i].push(s);
                    }
                }
                out_s[i].sort_unstable();
            }
            None => {
                out_v.push(v);
                out_s.push(ss);
            }
        }
    }
    for v in &mut out_v {
        *v = v.normalize();
    }
    (out_v, out_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Vec<Vector> {
        vec![
            Vector::x(),
            -Vector::x(),
            Vector::y(),
            -Vector::y(),
            Vector::z(),
            -Vector::z(),
        ]
    }

    #[test]
    fn octahedral_sites_give_cube_vertices() {
        let vd = spherical_voronoi(&axes()).unwrap();
        assert_eq!(vd.vertices.len(), 8);
        let s = 1.0 / 3f64.sqrt();
        for v in &vd.vertices {
            for c in v.iter() {
                assert!((c.abs() - s).abs() < 1e-14);
            }
        }
        assert!(vd.cells.iter().all(|c| c.len() == 4));
        assert_eq!(vd.edges.len(), 12);
    }

    #[test]
    fn antipodal_pair_gives_equator() {
        let vd = spherical_voronoi(&[Vector::z(), -Vector::z()]).unwrap();
        assert_eq!(vd.vertices.len(), 13);
        for v in &vd.vertices {
            assert!(v.z.abs() < 1e-15);
        }
        assert_eq!(vd.cells[0].len(), 13);
        assert_eq!(vd.edges.len(), 13);
    }

    #[test]
    fn three_sites_make_lunes() {
        let vd = spherical_voronoi(&[Vector::x(), Vector::y(), Vector::z()]).unwrap();
        // Two poles plus one midpoint per lune edge.
        assert_eq!(vd.vertices.len(), 5);
        assert!(vd.cells.iter().all(|c| c.len() == 4));
        let pole = Vector::new(1.0, 1.0, 1.0).normalize();
        assert!((vd.vertices[0] - pole).norm() < 1e-14);
        assert_eq!(vd.edges.len(), 6);
    }

    #[test]
    fn cocircular_sites_share_a_vertex() {
        // Cube-corner directions: hull faces are squares.
        let mut sites = Vec::new();
        for x in [-1.0, 1.0] {
            for y in [-1.0, 1.0] {
                for z in [-1.0, 1.0] {
                    sites.push(Vector::new(x, y, z).normalize());
                }
            }
        }
        let vd = spherical_voronoi(&sites).unwrap();
        assert_eq!(vd.vertices.len(), 6);
        assert!(vd.vertex_sites.iter().all(|s| s.len() == 4));
        assert!(vd.cells.iter().all(|c| c.len() == 3));
    }

    #[test]
    fn hemisphere_sites_have_a_far_vertex() {
        let sites = vec![
            Vector::new(1.0, 0.0, 1.0).normalize(),
            Vector::new(0.0, 1.0, 1.0).normalize(),
            Vector::new(-0.6, 0.8, 1.0).normalize(),
            Vector::new(0.0, -1.0, 1.0).normalize(),
        ];
        let vd = spherical_voronoi(&sites).unwrap();
        let far = vd
            .vertices
            .iter()
            .position(|v| v.z < -0.5)
            .expect("vertex below the sites");
        assert_eq!(vd.vertex_sites[far].len(), 4);
        assert!((vd.vertices[far] + Vector::z()).norm() < 1e-12);
    }
}
