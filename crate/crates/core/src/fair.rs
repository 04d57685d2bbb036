//! Upsampling near the end circles and Laplacian fairing of nodal films.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::graph::NodeStar;
use crate::mesh::{ControlMesh, EdgeTable, FilmVertex, VertexRole};
use crate::sparse::{CsrMatrix, EnvelopeCholesky};
use std::collections::VecDeque;

pub const DEFAULT_LAYERS: usize = 3;

const COT_CLAMP: f64 = 1e4;
/// Triangles with `2 * area < DEGENERATE_RATIO * longest_edge^2` use uniform
/// weights.
const DEGENERATE_RATIO: f64 = 1e-12;
/// Allowed fairing residual relative to the bounding-box diagonal.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

const MAX_REFINEMENT_STEPS: usize = 6;

/// Inserts `layers` vertex rings between every end circle and the film's
/// interior loop, each projected onto the strut cylinder.
pub fn upsample(mesh: &ControlMesh, star: &NodeStar, layers: usize) -> Result<ControlMesh> {
    if star.node.id != mesh.node_id {
        return Err(Error::InvalidArgument(format!(
            "star of node {} does not match film of node {}",
            star.node.id, mesh.node_id
        )));
    }
    let mut out = mesh.clone();
    if layers == 0 {
        return Ok(out);
    }
    for s in 0..out.strips.len() {
        let strip = out.strips[s].clone();
        if strip.rings.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "node {}: film is already upsampled",
                mesh.node_id
            )));
        }
        let circle = *out.circle(strip.circle).expect("strip circle");
        let (outer, inner) = (strip.outer(), strip.inner());
        let mut rings = vec![outer.to_vec()];
        for l in 1..=layers {
            let t = l as f64 / (layers + 1) as f64;
            let role = match l {
                1 => VertexRole::Collar1,
                2 => VertexRole::Collar2,
                _ => VertexRole::Interior,
            };
            let mut ring = Vec::with_capacity(outer.len());
            for (&a, &b) in outer.iter().zip(inner) {
                let pa = out.vertices[a as usize].position;
                let pb = out.vertices[b as usize].position;
                let p = Point::from(pa.coords.lerp(&pb.coords, t));
                let p = circle.project_to_cylinder(&p).ok_or_else(|| Error::Degenerate {
                    node: Some(mesh.node_id),
                    message: "upsampled vertex lies on a strut axis".into(),
                })?;
                ring.push(out.vertices.len() as u32);
                out.vertices.push(FilmVertex {
                    role,
                    strut: Some(strip.circle),
                    ..FilmVertex::interior(p)
                });
            }
            rings.push(ring);
        }
        rings.push(inner.to_vec());
        out.strips[s].rings = rings;
    }
    out.triangulate_strips();
    out.recompute_normals();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianOrder {
    First,
    Second,
}

/// Constrained fairing system of one mesh.
#[derive(Debug, Clone)]
pub struct FairingSystem {
    /// Symmetric cotangent Laplacian; off-diagonal entries are the edge
    /// weights and each diagonal entry is minus its row's off-diagonal sum.
    pub laplacian: CsrMatrix,
    pub order: LaplacianOrder,
    pub fixed: Vec<bool>,
    pub free: Vec<usize>,
    /// `L` or `L * L`.
    operator: CsrMatrix,
}

impl FairingSystem {
    pub fn operator(&self) -> &CsrMatrix {
        &self.operator
    }

    /// Free-by-free block of the system, sign-adjusted to be positive
    /// definite.
    pub fn system_matrix(&self) -> CsrMatrix {
        let a = self.operator.select(&self.free, &self.free);
        match self.order {
            LaplacianOrder::Second => a,
            LaplacianOrder::First => {
                let mut t = Vec::with_capacity(a.nnz());
                for i in 0..a.rows() {
                    for (j, v) in a.row(i) {
                        t.push((i, j, -v));
                    }
                }
                CsrMatrix::from_triplets(a.rows(), a.cols(), &t)
            }
        }
    }
}

fn cot(a: &Point, b: &Point, c: &Point) -> f64 {
    // Cotangent of the angle at `a`.
    let u = b - a;
    let v = c - a;
    let cross = u.cross(&v).norm();
    (u.dot(&v) / cross).clamp(-COT_CLAMP, COT_CLAMP)
}

/// Cotangent Laplacian of a triangle mesh.
pub fn cotangent_laplacian(positions: &[Point], triangles: &[[u32; 3]]) -> CsrMatrix {
    let n = positions.len();
    let mut t = Vec::with_capacity(triangles.len() * 12);
    for tri in triangles {
        let p = tri.map(|i| positions[i as usize]);
        let longest = (0..3)
            .map(|k| (p[(k + 1) % 3] - p[k]).norm_squared())
            .fold(0.0, f64::max);
        let twice_area = (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let degenerate = !(twice_area > DEGENERATE_RATIO * longest);
        for k in 0..3 {
            // Edge opposite corner k.
            let (i, j) = (tri[(k + 1) % 3] as usize, tri[(k + 2) % 3] as usize);
            let w = if degenerate {
                0.5
            } else {
                0.5 * cot(&p[k], &p[(k + 1) % 3], &p[(k + 2) % 3])
            };
            t.push((i, j, w));
            t.push((j, i, w));
            t.push((i, i, -w));
            t.push((j, j, -w));
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Vertices within two edges of a boundary vertex, plus all vertices whose
/// role is fixed.
fn fixed_set(mesh: &ControlMesh, table: &EdgeTable) -> Vec<bool> {
    let n = mesh.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &table.edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        if v.role == VertexRole::Boundary {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] == 2 {
            continue;
        }
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    mesh.vertices
        .iter()
        .zip(&dist)
        .map(|(v, &d)| v.role.is_fixed() || d <= 2)
        .collect()
}

pub fn build_laplacian(mesh: &ControlMesh, order: LaplacianOrder) -> Result<FairingSystem> {
    let table = EdgeTable::build(&mesh.triangles);
    table.check_manifold()?;
    let laplacian = cotangent_laplacian(&mesh.positions(), &mesh.triangles);
    let fixed = fixed_set(mesh, &table);
    let free = (0..fixed.len()).filter(|&i| !fixed[i]).collect();
    let operator = match order {
        LaplacianOrder::First => laplacian.clone(),
        LaplacianOrder::Second => laplacian.matmul(&laplacian),
    };
    Ok(FairingSystem {
        laplacian,
        order,
        fixed,
        free,
        operator,
    })
}

fn coordinate(positions: &[Point], axis: usize) -> Vec<f64> {
    positions.iter().map(|p| p[axis]).collect()
}

pub fn bounding_box_diagonal(positions: &[Point]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let mut lo = positions[0];
    let mut hi = positions[0];
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Largest absolute entry of the operator applied to the positions, over
/// free rows.
pub fn residual(mesh: &ControlMesh, system: &FairingSystem) -> f64 {
    let positions = mesh.positions();
    let mut worst = 0.0f64;
    for axis in 0..3 {
        let r = system.operator.mul_vec(&coordinate(&positions, axis));
        for &f in &system.free {
            worst = worst.max(r[f].abs());
        }
    }
    worst
}

/// `sum ||(L V)_v||^2` over free vertices.
pub fn fairing_energy(mesh: &ControlMesh, system: &FairingSystem) -> f64 {
    let positions = mesh.positions();
    let mut e = 0.0;
    for axis in 0..3 {
        let lv = system.laplacian.mul_vec(&coordinate(&positions, axis));
        e += system.free.iter().map(|&f| lv[f] * lv[f]).sum::<f64>();
    }
    e
}

/// Replaces free positions with the solution of the constrained system.
pub fn fair(mesh: &ControlMesh, system: &FairingSystem) -> Result<ControlMesh> {
    let n = mesh.vertices.len();
    if system.fixed.len() != n {
        return Err(Error::InvalidArgument(format!(
            "fairing system has {} vertices, mesh has {n}",
            system.fixed.len()
        )));
    }
    let mut out = mesh.clone();
    if system.free.is_empty() {
        return Ok(out);
    }
    let factor = EnvelopeCholesky::factor(&system.system_matrix())
        .map_err(|e| Error::Solver(format!("node {}: {e}", mesh.node_id)))?;
    let sign = match system.order {
        LaplacianOrder::Second => -1.0,
        LaplacianOrder::First => 1.0,
    };
    let positions = mesh.positions();
    let mut solution = positions.clone();
    for axis in 0..3 {
        let mut x = coordinate(&positions, axis);
        for &f in &system.free {
            x[f] = 0.0;
        }
        let coupled = system.operator.mul_vec(&x);
        let b: Vec<f64> = system.free.iter().map(|&f| sign * coupled[f]).collect();
        let mut xf = factor.solve(&b);
        // Iterative refinement against the full operator, while it helps.
        let mut best = (f64::INFINITY, xf.clone());
        for _ in 0..=MAX_REFINEMENT_STEPS {
            for (k, &f) in system.free.iter().enumerate() {
                x[f] = xf[k];
            }
            let r = system.operator.mul_vec(&x);
            let rf: Vec<f64> = system.free.iter().map(|&f| sign * r[f]).collect();
            let worst = rf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if worst >= best.0 {
                break;
            }
            best = (worst, xf.clone());
            if worst == 0.0 {
                break;
            }
            let dx = factor.solve(&rf);
            for (k, d) in dx.iter().enumerate() {
                xf[k] += d;
            }
        }
        for (k, &f) in system.free.iter().enumerate() {
            solution[f][axis] = best.1[k];
        }
    }
    for &f in &system.free {
        out.vertices[f].position = solution[f];
    }
    let tol = RESIDUAL_TOLERANCE * bounding_box_diagonal(&positions).max(f64::MIN_POSITIVE);
    let res = residual(&out, system);
    if !(res <= tol) {
        return Err(Error::Solver(format!(
            "node {}: fairing residual {res:e} exceeds {tol:e}",
            mesh.node_id
        )));
    }
    out.recompute_normals();
    Ok(out)
}

/// Upsampling followed by second-order fairing.
pub fn smooth(mesh: &ControlMesh, star: &NodeStar, layers: usize) -> Result<ControlMesh> {
    let up = upsample(mesh, star, layers)?;
    let system = build_laplacian(&up, LaplacianOrder::Second)?;
    fair(&up, &system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::node_cuts;
    use crate::film::film_geometry;
    use crate::geom::Vector;
    use crate::graph::Node;

    fn octa_star() -> NodeStar {
        NodeStar::from_directions(
            Node {
                id: 0,
                position: Point::origin(),
            },
            &[
                Vector::x(),
                -Vector::x(),
                Vector::y(),
                -Vector::y(),
                Vector::z(),
                -Vector::z(),
            ],
            10.0,
            1.0,
        )
        .unwrap()
    }

    fn plain_octa_film(star: &NodeStar) -> ControlMesh {
        let cuts = node_cuts(star, 0.3).unwrap();
        crate::film::build_film(&cuts, &star.node).unwrap()
    }

    #[test]
    fn upsample_counts_and_projection() {
        let star = octa_star();
        let film = plain_octa_film(&star);
        let up = upsample(&film, &star, 3).unwrap();
        assert_eq!(up.triangles.len(), 192);
        for v in &up.vertices {
            if matches!(v.role, VertexRole::Collar1 | VertexRole::Collar2) {
                let c = up.circle(v.strut.unwrap()).unwrap();
                assert!(c.cylinder_distance(&v.position) <= 1e-9);
            }
        }
        let same = upsample(&film, &star, 0).unwrap();
        assert_eq!(same.triangles, film.triangles);
    }

    #[test]
    fn flat_fan_annihilates_linear_functions() {
        let mut positions = vec![Point::origin()];
        let mut triangles = Vec::new();
        for k in 0..6 {
            let a = k as f64 * std::f64::consts::FRAC_PI_3;
            positions.push(Point::new(a.cos(), a.sin(), 0.0));
            triangles.push([0, 1 + k, 1 + (k + 1) % 6]);
        }
        let l = cotangent_laplacian(&positions, &triangles);
        for axis in 0..3 {
            let lx = l.mul_vec(&coordinate(&positions, axis));
            assert!(lx[0].abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_triangle_falls_back_to_uniform() {
        let positions = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
        ];
        let l = cotangent_laplacian(&positions, &[[0, 1, 2]]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(i, j), l.get(j, i));
            }
        }
        assert_eq!(l.get(0, 1), 0.5);
    }

    #[test]
    fn rows_sum_to_zero() {
        let star = octa_star();
        let film = film_geometry(&node_cuts(&star, 0.3).unwrap(), &star).unwrap();
        let l = cotangent_laplacian(&film.positions(), &film.triangles);
        for i in 0..l.rows() {
            let s: f64 = l.row(i).map(|(_, v)| v).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn octahedron_fairing_meets_contract() {
        let star = octa_star();
        let film = film_geometry(&node_cuts(&star, 0.3).unwrap(), &star).unwrap();
        let up = upsample(&film, &star, 3).unwrap();
        let system = build_laplacian(&up, LaplacianOrder::Second).unwrap();
        assert!(!system.free.is_empty());
        let faired = fair(&up, &system).unwrap();
        let diag = bounding_box_diagonal(&up.positions());
        assert!(residual(&faired, &system) <= 1e-8 * diag);
        for (a, b) in up.vertices.iter().zip(&faired.vertices) {
            if a.role.is_fixed() {
                assert_eq!(a.position, b.position);
                assert_eq!(a.boundary, b.boundary);
            }
        }
        assert!(fairing_energy(&faired, &system) < fairing_energy(&up, &system));
    }
}
