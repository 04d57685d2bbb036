//! Nodal control meshes and generic triangle-mesh helpers.

use crate::error::{Error, Result};
use crate::geom::{triangle_normal, Circle3, CircleId, Point, Vector};
use serde::Serialize;
use std::collections::HashMap;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VertexRole {
    Boundary,
    Collar1,
    Collar2,
    Interior,
}

impl VertexRole {
    pub fn is_fixed(self) -> bool {
        !matches!(self, VertexRole::Interior)
    }
}

/// Position of a boundary vertex on its end circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryParam {
    pub circle: CircleId,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmVertex {
    pub position: Point,
    pub normal: Vector,
    pub role: VertexRole,
    pub boundary: Option<BoundaryParam>,
    /// Strut whose cylinder carries this vertex (boundary and collar rings).
    pub strut: Option<CircleId>,
}

impl FilmVertex {
    pub fn interior(position: Point) -> Self {
        FilmVertex {
            position,
            normal: Vector::zeros(),
            role: VertexRole::Interior,
            boundary: None,
            strut: None,
        }
    }
}

/// Concentric vertex rings between one end circle and the node's Voronoi
/// loop. `rings[0]` is the boundary ring and the last ring is the loop; all
/// rings have the same length and run counterclockwise about the strut axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub circle: CircleId,
    pub rings: Vec<Vec<u32>>,
}

impl Strip {
    pub fn inner(&self) -> &[u32] {
        self.rings.last().expect("strip has rings")
    }

    pub fn outer(&self) -> &[u32] {
        &self.rings[0]
    }
}

/// Film geometry of one node: a triangle mesh whose boundary loops are the
/// node's end circles.
#[derive(Debug, Clone)]
pub struct ControlMesh {
    pub node_id: u64,
    pub center: Point,
    pub vertices: Vec<FilmVertex>,
    pub triangles: Vec<[u32; 3]>,
    pub circles: Vec<(CircleId, Circle3)>,
    pub strips: Vec<Strip>,
}

impl ControlMesh {
    pub fn circle(&self, id: CircleId) -> Option<&Circle3> {
        self.circles.iter().find(|(c, _)| *c == id).map(|(_, c)| c)
    }

    pub fn positions(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| v.position).collect()
    }

    /// Rebuilds the triangle list from the strips: each pair of consecutive
    /// rings becomes a band of `2m` outward-facing triangles.
    pub fn triangulate_strips(&mut self) {
        self.triangles.clear();
        for strip in &self.strips {
            for pair in strip.rings.windows(2) {
                let (outer, inner) = (&pair[0], &pair[1]);
                let m = outer.len();
                for k in 0..m {
                    let k1 = (k + 1) % m;
                    self.triangles.push([outer[k], inner[k], outer[k1]]);
                    self.triangles.push([outer[k1], inner[k], inner[k1]]);
                }
            }
        }
    }

    /// Boundary and collar vertices get their strut's cylinder normal, all
    /// others the normalized area-weighted sum of incident face normals.
    pub fn recompute_normals(&mut self) {
        let positions = self.positions();
        let face = vertex_normals(&positions, &self.triangles);
        for (i, v) in self.vertices.iter_mut().enumerate() {
            let cyl = v
                .strut
                .and_then(|c| self.circles.iter().find(|(id, _)| *id == c))
                .and_then(|(_, circle)| circle.cylinder_normal_at(&v.position));
            v.normal = match (v.role, cyl) {
                (VertexRole::Interior, _) | (_, None) => face[i],
                (_, Some(n)) => n,
            };
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        euler_characteristic(self.vertices.len(), &self.triangles)
    }

    pub fn write_obj<W: Write>(&self, out: W) -> io::Result<()> {
        write_obj(out, &self.positions(), &self.triangles)
    }
}

/// Normalized area-weighted vertex normals; isolated vertices get zero.
pub fn vertex_normals(positions: &[Point], triangles: &[[u32; 3]]) -> Vec<Vector> {
    let mut acc = vec![Vector::zeros(); positions.len()];
    for t in triangles {
        let n = triangle_normal(
            &positions[t[0] as usize],
            &positions[t[1] as usize],
            &positions[t[2] as usize],
        );
        for &v in t {
            acc[v as usize] += n;
        }
    }
    for n in &mut acc {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        }
    }
    acc
}

/// Triangles incident to one edge: the first two are stored, the count
/// keeps going so non-manifold edges can be detected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeFaces {
    slots: [(u32, u32); 2],
    count: u32,
}

impl EdgeFaces {
    fn push(&mut self, entry: (u32, u32)) {
        if (self.count as usize) < 2 {
            self.slots[self.count as usize] = entry;
        }
        self.count += 1;
    }

    pub fn len(&self) -> usize {
        self.count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Stored `(triangle, opposite vertex)` entries.
    pub fn iter(&self) -> impl Iterator<Item = &(u32, u32)> {
        self.slots[..self.len().min(2)].iter()
    }
}

impl std::ops::Index<usize> for EdgeFaces {
    type Output = (u32, u32);

    fn index(&self, i: usize) -> &(u32, u32) {
        assert!(i < self.len().min(2), "edge face {i} out of range");
        &self.slots[i]
    }
}

/// Undirected edges in first-encounter order with their incident triangles.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub edges: Vec<(u32, u32)>,
    /// `(triangle, opposite vertex)` entries per edge.
    pub faces: Vec<EdgeFaces>,
    pub index: HashMap<(u32, u32), u32>,
}

impl EdgeTable {
    pub fn build(triangles: &[[u32; 3]]) -> Self {
        let mut index = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut faces: Vec<EdgeFaces> = Vec::with_capacity(edges.capacity());
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b, opp) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    faces.push(EdgeFaces::default());
                    (edges.len() - 1) as u32
                });
                faces[e as usize].push((ti as u32, opp));
            }
        }
        EdgeTable {
            edges,
            faces,
            index,
        }
    }

    pub fn get(&self, a: u32, b: u32) -> Option<u32> {
        self.index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn is_boundary(&self, e: u32) -> bool {
        self.faces[e as usize].len() == 1
    }

    /// Fails if any edge has more than two incident triangles.
    pub fn check_manifold(&self) -> Result<()> {
        if let Some(i) = self.faces.iter().position(|f| f.len() > 2) {
            let (a, b) = self.edges[i];
            return Err(Error::NonManifold(format!(
                "edge ({a}, {b}) has {} incident triangles",
                self.faces[i].len()
            )));
        }
        Ok(())
    }
}

/// `V - E + F` over the vertices referenced by `triangles` plus any isolated
/// ones counted in `vertex_count`.
pub fn euler_characteristic(vertex_count: usize, triangles: &[[u32; 3]]) -> i64 {
    let e = EdgeTable::build(triangles).edges.len();
    vertex_count as i64 - e as i64 + triangles.len() as i64
}

/// Watertightness report for a triangle soup over shared vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosedCheck {
    /// Every edge has exactly two incident triangles.
    pub closed: bool,
    /// Every edge is traversed once in each direction.
    pub oriented: bool,
    pub euler: i64,
}

pub fn check_closed(vertex_count: usize, triangles: &[[u32; 3]]) -> ClosedCheck {
    // Half-edges keyed by their undirected edge, flagged with direction.
    let mut half: Vec<(u64, bool)> = Vec::with_capacity(triangles.len() * 3);
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (u64::from(a.min(b)) << 32) | u64::from(a.max(b));
            half.push((key, a < b));
        }
    }
    half.sort_unstable();
    let (mut closed, mut oriented, mut edges) = (true, true, 0i64);
    for group in half.chunk_by(|x, y| x.0 == y.0) {
        edges += 1;
        if group.len() != 2 {
            closed = false;
            oriented = false;
        } else if group[0].1 == group[1].1 {
            oriented = false;
        }
    }
    ClosedCheck {
        closed,
        oriented,
        euler: vertex_count as i64 - edges + triangles.len() as i64,
    }
}

pub fn write_obj<W: Write>(mut out: W, positions: &[Point], triangles: &[[u32; 3]]) -> io::Result<()> {
    for p in positions {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for t in triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> (Vec<Point>, Vec<[u32; 3]>) {
        (
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
    }

    #[test]
    fn closed_tetrahedron() {
        let (p, t) = tetrahedron();
        let c = check_closed(p.len(), &t);
        assert!(c.closed && c.oriented);
        assert_eq!(c.euler, 2);
        let n = vertex_normals(&p, &t);
        assert!(n[0].dot(&Vector::new(-1.0, -1.0, -1.0)) > 0.0);
    }

    #[test]
    fn open_and_flipped_detected() {
        let (p, mut t) = tetrahedron();
        t[0] = [0, 1, 2];
        let c = check_closed(p.len(), &t);
        assert!(c.closed && !c.oriented);
        t.pop();
        assert!(!check_closed(p.len(), &t).closed);
    }

    #[test]
    fn non_manifold_edge_rejected() {
        let t = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        assert!(EdgeTable::build(&t).check_manifold().is_err());
    }
}
