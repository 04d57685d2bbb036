//! Benchmark nodes and direction-file parsing for single-node runs.

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};
use crate::graph::{Edge, LatticeGraph, Node};
use std::str::FromStr;

/// Placeholder strut length of single-node stars, in radii.
pub const STAR_LENGTH_RADII: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularNode {
    /// Octahedron vertex directions.
    Regular6,
    /// Icosahedron vertex directions.
    Regular12,
    /// Dodecahedron vertex directions.
    Regular20,
}

impl RegularNode {
    pub const ALL: [RegularNode; 3] = [
        RegularNode::Regular6,
        RegularNode::Regular12,
        RegularNode::Regular20,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegularNode::Regular6 => "regular6",
            RegularNode::Regular12 => "regular12",
            RegularNode::Regular20 => "regular20",
        }
    }

    pub fn directions(self) -> Vec<Vector> {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw: Vec<Vector> = match self {
            RegularNode::Regular6 => vec![
                Vector::x(),
                -Vector::x(),
                Vector::y(),
                -Vector::y(),
                Vector::z(),
                -Vector::z(),
            ],
            RegularNode::Regular12 => {
                let mut v = Vec::with_capacity(12);
                for s1 in [-1.0, 1.0] {
                    for s2 in [-1.0, 1.0] {
                        v.push(Vector::new(0.0, s1, s2 * phi));
                        v.push(Vector::new(s1, s2 * phi, 0.0));
                        v.push(Vector::new(s2 * phi, 0.0, s1));
                    }
                }
                v
            }
            RegularNode::Regular20 => {
                let mut v = Vec::with_capacity(20);
                for x in [-1.0, 1.0] {
                    for y in [-1.0, 1.0] {
                        for z in [-1.0, 1.0] {
                            v.push(Vector::new(x, y, z));
                        }
                    }
                }
                let a = 1.0 / phi;
                for s1 in [-1.0, 1.0] {
                    for s2 in [-1.0, 1.0] {
                        v.push(Vector::new(0.0, s1 * a, s2 * phi));
                        v.push(Vector::new(s1 * a, s2 * phi, 0.0));
                        v.push(Vector::new(s2 * phi, 0.0, s1 * a));
                    }
                }
                v
            }
        };
        raw.into_iter().map(|d| d.normalize()).collect()
    }
}

impl FromStr for RegularNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regular6" | "regular-6" => Ok(RegularNode::Regular6),
            "regular12" | "regular-12" => Ok(RegularNode::Regular12),
            "regular20" | "regular-20" => Ok(RegularNode::Regular20),
            other => Err(Error::InvalidArgument(format!("unknown node preset '{other}'"))),
        }
    }
}

/// Parses one direction per line as three numbers separated by whitespace
/// or commas. Blank lines and lines starting with `#` are skipped.
pub fn parse_directions(text: &str) -> Result<Vec<Vector>> {
    let mut dirs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let bad = || Error::Parse(format!("line {}: expected three numbers", lineno + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut c = [0.0; 3];
        for (k, p) in parts.iter().enumerate() {
            c[k] = p.parse::<f64>().map_err(|_| bad())?;
        }
        let d = Vector::new(c[0], c[1], c[2]);
        if !(d.norm() > 0.0) || !d.norm().is_finite() {
            return Err(Error::validation(format!(
                "line {}: direction must be finite and nonzero",
                lineno + 1
            )));
        }
        dirs.push(d.normalize());
    }
    if dirs.is_empty() {
        return Err(Error::validation("direction file is empty"));
    }
    Ok(dirs)
}

/// Graph with one center node (id 0) at the origin and one leaf per
/// direction at distance `STAR_LENGTH_RADII * radius`. Edge `i` joins the
/// center to leaf `i + 1`.
pub fn star_graph(directions: &[Vector], radius: f64) -> Result<LatticeGraph> {
    let length = STAR_LENGTH_RADII * radius;
    let mut nodes = vec![Node {
        id: 0,
        position: Point::origin(),
    }];
    let mut edges = Vec::with_capacity(directions.len());
    for (i, d) in directions.iter().enumerate() {
        nodes.push(Node {
            id: i as u64 + 1,
            position: Point::from(d.normalize() * length),
        });
        edges.push(Edge {
            id: i as u64,
            endpoints: (0, i as u64 + 1),
            radius: None,
        });
    }
    LatticeGraph::new(nodes, edges, radius)
}

/// Axis-aligned grid of `nx * ny * nz` unit cells with spacing `pitch`:
/// nodes at lattice points, edges along the three axes.
pub fn grid_graph(nx: usize, ny: usize, nz: usize, pitch: f64, radius: f64) -> Result<LatticeGraph> {
    let id = |i: usize, j: usize, k: usize| ((k * (ny + 1) + j) * (nx + 1) + i) as u64;
    let mut nodes = Vec::new();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(Node {
                    id: id(i, j, k),
                    position: Point::new(i as f64 * pitch, j as f64 * pitch, k as f64 * pitch),
                });
            }
        }
    }
    let mut edges = Vec::new();
    let mut push = |a: u64, b: u64| {
        edges.push(Edge {
            id: edges.len() as u64,
            endpoints: (a, b),
            radius: None,
        })
    };
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                if i < nx {
                    push(id(i, j, k), id(i + 1, j, k));
                }
                if j < ny {
                    push(id(i, j, k), id(i, j + 1, k));
                }
                if k < nz {
                    push(id(i, j, k), id(i, j, k + 1));
                }
            }
        }
    }
    LatticeGraph::new(nodes, edges, radius)
}

/// Grid of `n^3` cubes, each split into six tetrahedra around its main
/// diagonal. Besides the axis edges every node connects along
/// `(1,1,0)`, `(1,0,1)`, `(0,1,1)` and `(1,1,1)`, so interior nodes have
/// degree 14.
pub fn tet_grid_graph(n: usize, pitch: f64, radius: f64) -> Result<LatticeGraph> {
    let id = |i: usize, j: usize, k: usize| ((k * (n + 1) + j) * (n + 1) + i) as u64;
    let mut nodes = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                nodes.push(Node {
                    id: id(i, j, k),
                    position: Point::new(i as f64 * pitch, j as f64 * pitch, k as f64 * pitch),
                });
            }
        }
    }
    const STEPS: [[usize; 3]; 7] = [
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 1, 0],
        [1, 0, 1],
        [0, 1, 1],
        [1, 1, 1],
    ];
    let mut edges = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                for [di, dj, dk] in STEPS {
                    let (a, b, c) = (i + di, j + dj, k + dk);
                    if a <= n && b <= n && c <= n {
                        edges.push(Edge {
                            id: edges.len() as u64,
                            endpoints: (id(i, j, k), id(a, b, c)),
                            radius: None,
                        });
                    }
                }
            }
        }
    }
    LatticeGraph::new(nodes, edges, radius)
}

/// Single cube cell with edge length `size`.
pub fn cube_graph(size: f64, radius: f64) -> Result<LatticeGraph> {
    grid_graph(1, 1, 1, size, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::angle_between;

    fn min_angle(dirs: &[Vector]) -> f64 {
        let mut m = f64::MAX;
        for (i, a) in dirs.iter().enumerate() {
            for b in &dirs[i + 1..] {
                m = m.min(angle_between(a, b));
            }
        }
        m
    }

    #[test]
    fn regular_sets_are_uniform() {
        for (node, count, angle_deg) in [
            (RegularNode::Regular6, 6, 90.0),
            (RegularNode::Regular12, 12, 63.43494882292201),
            (RegularNode::Regular20, 20, 41.810314895778596),
        ] {
            let d = node.directions();
            assert_eq!(d.len(), count);
            assert!((min_angle(&d).to_degrees() - angle_deg).abs() < 1e-9);
            let sum: Vector = d.iter().sum();
            assert!(sum.norm() < 1e-12);
        }
    }

    #[test]
    fn tet_grid_counts() {
        let g = tet_grid_graph(3, 1.0, 0.1).unwrap();
        assert_eq!(g.nodes().len(), 64);
        // 3 axis families, 3 face-diagonal families, 1 body-diagonal family.
        assert_eq!(g.edges().len(), 3 * 16 * 3 + 3 * 4 * 9 + 27);
        assert_eq!(g.max_degree(), 14);
    }

    #[test]
    fn parse_direction_lines() {
        let d = parse_directions("# three struts\n1 0 0\n0,1,0\n\n0 0 2\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d[2], Vector::z());
        assert!(parse_directions("1 0\n").is_err());
        assert!(parse_directions("0 0 0\n").is_err());
        assert!(parse_directions("").is_err());
    }

    #[test]
    fn generated_graphs() {
        let cube = cube_graph(10.0, 1.0).unwrap();
        assert_eq!((cube.nodes().len(), cube.edges().len()), (8, 12));
        let grid = grid_graph(2, 3, 4, 5.0, 0.5).unwrap();
        assert_eq!(grid.nodes().len(), 3 * 4 * 5);
        assert_eq!(grid.edges().len(), 2 * 4 * 5 + 3 * 3 * 5 + 4 * 3 * 4);
        let star = star_graph(&RegularNode::Regular6.directions(), 1.0).unwrap();
        assert_eq!(star.valence(0), Some(6));
    }
}
