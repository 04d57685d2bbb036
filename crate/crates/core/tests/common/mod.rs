#![allow(dead_code)]

use lattice_film::geom::{Circle3, CircleId, Point, Vector};
use lattice_film::graph::{Node, NodeStar};
use lattice_film::mesh::{BoundaryParam, ControlMesh, FilmVertex, VertexRole};
use lattice_film::subdiv::{PNVertex, SubdividedPatch, VertexOrigin};
use nalgebra::{Rotation3, Unit};
use std::collections::HashMap;
use std::f64::consts::TAU;

pub fn origin_node() -> Node {
    Node {
        id: 0,
        position: Point::origin(),
    }
}

/// Star at the origin with struts long enough for any cut used in tests.
pub fn star(dirs: &[Vector], radius: f64) -> NodeStar {
    NodeStar::from_directions(origin_node(), dirs, 40.0 * radius, radius).unwrap()
}

pub fn rotation(axis: Vector, angle: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
}

/// Unit vector from spherical coordinates.
pub fn spherical(polar: f64, azimuth: f64) -> Vector {
    Vector::new(polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos())
}

/// Keeps directions (in order) that are at least `min_angle` from every
/// direction already kept.
pub fn spread(candidates: &[Vector], min_angle: f64) -> Vec<Vector> {
    let mut kept: Vec<Vector> = Vec::new();
    for c in candidates {
        let c = c.normalize();
        if kept.iter().all(|k| k.dot(&c).clamp(-1.0, 1.0).acos() >= min_angle) {
            kept.push(c);
        }
    }
    kept
}

/// Random cylinder (axis, center of the bottom circle, radius) tessellated as
/// a tube of `rings` rings with `per_ring` jittered vertices each. The end
/// rings are boundary vertices on their circles; every vertex carries the
/// exact cylinder normal. Quad diagonals are chosen by `flip`.
pub struct CylinderCase {
    pub axis: Vector,
    pub base: Point,
    pub radius: f64,
    pub patch: SubdividedPatch,
}

impl CylinderCase {
    pub fn distance(&self, p: &Point) -> f64 {
        let d = p - self.base;
        let radial = d - self.axis * d.dot(&self.axis);
        (radial.norm() - self.radius).abs()
    }

    pub fn normal_error(&self, v: &PNVertex) -> f64 {
        let d = v.position - self.base;
        let radial = (d - self.axis * d.dot(&self.axis)).normalize();
        (v.normal - radial).norm()
    }
}

pub struct CylinderParams {
    pub axis: Vector,
    pub base: Point,
    pub radius: f64,
    pub height: f64,
    pub rings: usize,
    pub per_ring: usize,
    /// Angular jitter per vertex, as a fraction of the angular spacing.
    pub jitter: Vec<f64>,
    /// Relative height jitter per interior ring.
    pub heights: Vec<f64>,
    pub flip: Vec<bool>,
}

pub fn cylinder_case(p: &CylinderParams) -> CylinderCase {
    let axis = p.axis.normalize();
    let (e1, e2) = lattice_film::geom::frame_for_axis(&axis);
    let bottom = Circle3::new(p.base, -axis, p.radius);
    let top = Circle3::new(p.base + axis * p.height, axis, p.radius);
    let (bid, tid) = (CircleId(0), CircleId(1));
    let m = p.per_ring;
    let mut vertices = Vec::new();
    let mut idx = vec![vec![0u32; m]; p.rings];
    for k in 0..p.rings {
        let mut z = p.height * k as f64 / (p.rings - 1) as f64;
        if k > 0 && k + 1 < p.rings {
            z += p.heights[k % p.heights.len()] * 0.3 * p.height / (p.rings - 1) as f64;
        }
        for i in 0..m {
            let jitter = p.jitter[(k * m + i) % p.jitter.len()] * 0.3;
            let phi = TAU * (i as f64 + jitter) / m as f64;
            let radial = e1 * phi.cos() + e2 * phi.sin();
            let position = p.base + axis * z + radial * p.radius;
            let boundary = if k == 0 {
                Some(BoundaryParam {
                    circle: bid,
                    u: bottom.param_of(&position).unwrap(),
                })
            } else if k + 1 == p.rings {
                Some(BoundaryParam {
                    circle: tid,
                    u: top.param_of(&position).unwrap(),
                })
            } else {
                None
            };
            idx[k][i] = vertices.len() as u32;
            vertices.push(PNVertex {
                position,
                normal: radial,
                boundary,
            });
        }
    }
    let mut triangles = Vec::new();
    for k in 0..p.rings - 1 {
        for i in 0..m {
            let i1 = (i + 1) % m;
            let (a, b, c, d) = (idx[k][i], idx[k][i1], idx[k + 1][i], idx[k + 1][i1]);
            if p.flip[(k * m + i) % p.flip.len()] {
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            } else {
                triangles.push([a, b, c]);
                triangles.push([b, d, c]);
            }
        }
    }
    let n = vertices.len();
    CylinderCase {
        axis,
        base: p.base,
        radius: p.radius,
        patch: SubdividedPatch {
            node_id: 0,
            center: p.base,
            vertices,
            triangles,
            iterations: 0,
            origin: vec![VertexOrigin::Control; n],
            displacement: vec![0.0; n],
            circles: vec![(bid, bottom), (tid, top)],
        },
    }
}

/// Outward-facing triangles of the convex hull of points in general position,
/// found by brute force over all triples.
pub fn hull_triangles(points: &[Point]) -> Vec<[u32; 3]> {
    let n = points.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let nrm = (points[b] - points[a]).cross(&(points[c] - points[a]));
                let side: Vec<f64> = (0..n)
                    .filter(|&k| k != a && k != b && k != c)
                    .map(|k| nrm.dot(&(points[k] - points[a])))
                    .collect();
                if side.iter().all(|&s| s < -1e-9) {
                    out.push([a as u32, b as u32, c as u32]);
                } else if side.iter().all(|&s| s > 1e-9) {
                    out.push([a as u32, c as u32, b as u32]);
                }
            }
        }
    }
    out
}

/// Unit icosphere after `levels` rounds of midpoint splitting.
pub fn icosphere(levels: usize) -> (Vec<Point>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts = Vec::new();
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            pts.push(Point::new(0.0, s1, s2 * phi));
            pts.push(Point::new(s1, s2 * phi, 0.0));
            pts.push(Point::new(s2 * phi, 0.0, s1));
        }
    }
    let mut pts: Vec<Point> = pts.iter().map(|p| Point::from(p.coords.normalize())).collect();
    let mut tris = hull_triangles(&pts);
    for _ in 0..levels {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut get = |a: u32, b: u32, pts: &mut Vec<Point>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (pts[a as usize].coords + pts[b as usize].coords).normalize();
                pts.push(Point::from(m));
                pts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = get(a, b, &mut pts);
            let bc = get(b, c, &mut pts);
            let ca = get(c, a, &mut pts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    (pts, tris)
}

/// Open tube of radius `r` around the z axis with near-equilateral
/// triangles, outward facing.
pub fn tube(r: f64, per_ring: usize, rings: usize) -> (Vec<Point>, Vec<[u32; 3]>) {
    let dz = r * TAU / per_ring as f64 * 3f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    for k in 0..rings {
        let shift = if k % 2 == 0 { 0.0 } else { 0.5 };
        for i in 0..per_ring {
            let phi = TAU * (i as f64 + shift) / per_ring as f64;
            pts.push(Point::new(r * phi.cos(), r * phi.sin(), k as f64 * dz));
        }
    }
    let id = |k: usize, i: usize| (k * per_ring + i % per_ring) as u32;
    let mut tris = Vec::new();
    for k in 0..rings - 1 {
        for i in 0..per_ring {
            if k % 2 == 0 {
                tris.push([id(k, i), id(k, i + 1), id(k + 1, i)]);
                tris.push([id(k, i + 1), id(k + 1, i + 1), id(k + 1, i)]);
            } else {
                tris.push([id(k, i), id(k, i + 1), id(k + 1, i + 1)]);
                tris.push([id(k, i), id(k + 1, i + 1), id(k + 1, i)]);
            }
        }
    }
    (pts, tris)
}

/// Jittered triangulated grid in the plane through `origin` spanned by
/// `u` and `v`.
pub fn planar_grid(n: usize, origin: Point, u: Vector, v: Vector, jitter: f64) -> (Vec<Point>, Vec<[u32; 3]>) {
    let mut pts = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let interior = i > 0 && j > 0 && i < n && j < n;
            let (dx, dy) = if interior {
                let h = ((i * 7919 + j * 104_729) % 1000) as f64 / 1000.0 - 0.5;
                let g = ((i * 104_729 + j * 7919) % 997) as f64 / 997.0 - 0.5;
                (jitter * h, jitter * g)
            } else {
                (0.0, 0.0)
            };
            pts.push(origin + u * (i as f64 + dx) + v * (j as f64 + dy));
        }
    }
    let id = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut tris = Vec::new();
    for j in 0..n {
        for i in 0..n {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (pts, tris)
}

/// Flat control mesh: a jittered grid whose outer frame is fixed boundary
/// and whose next ring is a fixed collar.
pub fn planar_control_mesh(n: usize, origin: Point, u: Vector, v: Vector) -> ControlMesh {
    let (pts, tris) = planar_grid(n, origin, u, v, 0.4);
    let vertices = pts
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (i, j) = (k % (n + 1), k / (n + 1));
            let ring = i.min(j).min(n - i).min(n - j);
            let role = match ring {
                0 => VertexRole::Boundary,
                1 => VertexRole::Collar1,
                _ => VertexRole::Interior,
            };
            FilmVertex {
                role,
                ..FilmVertex::interior(*p)
            }
        })
        .collect();
    ControlMesh {
        node_id: 0,
        center: origin,
        vertices,
        triangles: tris,
        circles: Vec::new(),
        strips: Vec::new(),
    }
}

/// Solves a dense linear system by Gaussian elimination with partial
/// pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}
