mod common;

use common::*;
use lattice_film::export::{export, read_mesh, MeshFormat};
use lattice_film::film::spherical_voronoi;
use lattice_film::geom::{Point, Vector};
use lattice_film::graph::NodeStar;
use lattice_film::mesh::check_closed;
use lattice_film::metrics::{self, oracle_distance, OriginalNodeOracle};
use lattice_film::pipeline::{self, Keep, Settings};
use lattice_film::presets::{cube_graph, RegularNode};
use lattice_film::subdiv::{max_edge_length, refine, subdivide, SubdividedPatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn random_unit(rng: &mut impl Rng) -> Vector {
    let z: f64 = rng.random_range(-1.0..1.0);
    let a: f64 = rng.random_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    Vector::new(r * a.cos(), r * a.sin(), z)
}

fn random_dirs(rng: &mut impl Rng, count: usize, min_deg: f64) -> Vec<Vector> {
    let candidates: Vec<Vector> = (0..count * 20).map(|_| random_unit(rng)).collect();
    spread(&candidates, min_deg.to_radians()).into_iter().take(count).collect()
}

/// Cell membership from the computed cell loop: inside every great-circle
/// edge of the loop.
fn in_cell(vertices: &[Vector], cell: &[usize], p: &Vector) -> bool {
    let m = cell.len();
    (0..m).all(|k| {
        let (a, b) = (vertices[cell[k]], vertices[cell[(k + 1) % m]]);
        p.dot(&a.cross(&b)) >= -1e-12
    })
}

#[test]
fn voronoi_cells_match_nearest_site_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut stars: Vec<Vec<Vector>> = RegularNode::ALL.iter().map(|n| n.directions()).collect();
    stars.push(vec![Vector::x(), Vector::new(-0.3, 0.9, 0.0).normalize()]);
    stars.push(vec![Vector::x(), Vector::y(), -Vector::x(), Vector::new(0.0, -1.0, 0.0)]);
    for count in [3, 5, 8, 12] {
        stars.push(random_dirs(&mut rng, count, 15.0));
    }
    for dirs in &stars {
        let vor = spherical_voronoi(dirs).unwrap();
        let samples = 100_000;
        let mut disagree = 0;
        for _ in 0..samples {
            let p = random_unit(&mut rng);
            let nearest = vor.nearest_site(&p);
            if !in_cell(&vor.vertices, &vor.cells[nearest], &p) {
                disagree += 1;
            }
        }
        let frac = disagree as f64 / samples as f64;
        assert!(frac < 0.01, "{} sites: {frac} of samples disagree", dirs.len());
    }
}

#[test]
fn voronoi_vertices_are_equidistant_from_their_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for count in 3..12 {
        let dirs = random_dirs(&mut rng, count, 15.0);
        let vor = spherical_voronoi(&dirs).unwrap();
        for (v, sites) in vor.vertices.iter().zip(&vor.vertex_sites) {
            let best = vor.sites.iter().map(|s| s.dot(v)).fold(f64::MIN, f64::max);
            // Vertices closer than a milliradian are merged into one.
            for &s in sites {
                assert!((vor.sites[s].dot(v) - best).abs() < 1e-3);
            }
        }
    }
}

/// Points on the boundary of the union of sphere and struts, truncated at
/// `reach` from the node, with spacing about `h`.
fn union_boundary_samples(oracle: &OriginalNodeOracle, reach: f64, h: f64) -> Vec<Point> {
    let mut pts = Vec::new();
    let r = oracle.sphere_radius;
    for s in &oracle.struts {
        let (e1, e2) = lattice_film::geom::frame_for_axis(&s.axis);
        let around = (TAU * s.radius / h).ceil() as usize;
        let along = (reach / h).ceil() as usize;
        for i in 0..=along {
            let t = reach * i as f64 / along as f64;
            for j in 0..around {
                let a = TAU * j as f64 / around as f64;
                pts.push(oracle.center + s.axis * t + (e1 * a.cos() + e2 * a.sin()) * s.radius);
            }
        }
    }
    let rings = (std::f64::consts::PI * r / h).ceil() as usize;
    for i in 0..=rings {
        let polar = std::f64::consts::PI * i as f64 / rings as f64;
        let around = ((TAU * r * polar.sin() / h).ceil() as usize).max(1);
        for j in 0..around {
            let d = spherical(polar, TAU * j as f64 / around as f64);
            pts.push(oracle.center + d * r);
        }
    }
    pts.retain(|p| oracle.signed_distance(p) > -1e-9);
    pts
}

fn check_deviation_against_brute_force(star: &NodeStar, patch: &SubdividedPatch) {
    let oracle = OriginalNodeOracle::from_star(star);
    let h = 0.03 * star.radius();
    let boundary = union_boundary_samples(&oracle, 5.0 * star.radius(), h);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let positions = patch.positions();
    let sampler = metrics::SurfaceSampler::new(&positions, &patch.triangles);
    let (mut sum_fast, mut sum_brute) = (0.0, 0.0);
    let n = 300;
    for _ in 0..n {
        let p = sampler.sample(&mut rng);
        let fast = oracle_distance(&oracle, &p);
        let brute = boundary.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
        // The field never overstates the true distance, and is exact outside.
        assert!(fast <= brute + 1e-9, "field {fast} above boundary distance {brute}");
        if oracle.signed_distance(&p) >= 0.0 {
            assert!(brute - fast <= h, "outside point: field {fast}, boundary {brute}");
        }
        sum_fast += fast;
        sum_brute += brute;
    }
    assert!((sum_brute - sum_fast) / n as f64 <= h);
}

#[test]
fn deviation_field_agrees_with_dense_boundary_sampling() {
    let settings = Settings {
        iterations: 2,
        ..Settings::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut stars: Vec<NodeStar> = RegularNode::ALL.iter().map(|n| star(&n.directions(), 1.0)).collect();
    stars.push(star(&random_dirs(&mut rng, 5, 30.0), 1.0));
    for s in &stars {
        let patch = pipeline::process_star(s, &settings, Keep::PATCH).unwrap().patch.unwrap();
        check_deviation_against_brute_force(s, &patch);
    }
}

#[test]
fn points_on_the_original_surface_have_zero_deviation() {
    let s = star(&RegularNode::Regular6.directions(), 0.8);
    let oracle = OriginalNodeOracle::from_star(&s);
    for inc in &s.incident {
        let (e1, _) = lattice_film::geom::frame_for_axis(&inc.direction);
        let p = s.node.position + inc.direction * 3.0 + e1 * inc.radius;
        assert!(oracle_distance(&oracle, &p) < 1e-12);
    }
}

#[test]
fn edges_halve_per_subdivision_level() {
    for node in RegularNode::ALL {
        let s = star(&node.directions(), 1.0);
        let out = pipeline::process_star(&s, &Settings::default(), Keep::ALL).unwrap();
        let mut patch = subdivide(&out.faired.unwrap(), &s, 0).unwrap();
        let mut prev = max_edge_length(&patch);
        for _ in 0..3 {
            patch = refine(&patch).unwrap();
            let cur = max_edge_length(&patch);
            let ratio = cur / prev;
            assert!((0.4..=0.6).contains(&ratio), "{}: ratio {ratio}", node.name());
            prev = cur;
        }
    }
}

#[test]
fn curvature_scales_and_flips_with_orientation() {
    let (pts, tris) = icosphere(3);
    let radius = 2.5;
    let scaled: Vec<Point> = pts.iter().map(|p| Point::from(p.coords * radius)).collect();
    let h = metrics::mean_curvature(&scaled, &tris);
    let flipped: Vec<[u32; 3]> = tris.iter().map(|t| [t[0], t[2], t[1]]).collect();
    let hf = metrics::mean_curvature(&scaled, &flipped);
    for (a, b) in h.iter().zip(&hf) {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a.abs() - 1.0 / radius).abs() < 0.01 / radius);
        assert!((a + b).abs() < 1e-12);
    }
}

#[test]
fn exported_lattice_reads_back_closed() {
    let g = cube_graph(10.0, 1.0).unwrap();
    let settings = Settings {
        iterations: 1,
        ..Settings::default()
    };
    let mesh = pipeline::build(&g, &settings, Keep::PATCH).unwrap().mesh;
    for format in [MeshFormat::Obj, MeshFormat::StlBinary, MeshFormat::Ply] {
        let mut bytes = Vec::new();
        export(&mesh, format, &mut bytes).unwrap();
        let back = read_mesh(bytes.as_slice(), format).unwrap();
        assert_eq!(back.triangles.len(), mesh.triangles.len());
        assert_eq!(back.positions.len(), mesh.positions.len(), "{format:?}");
        let check = check_closed(back.positions.len(), &back.triangles);
        assert!(check.closed && check.oriented, "{format:?}");
        assert_eq!(check.euler, -8);
        if format != MeshFormat::StlBinary {
            assert_eq!(back.positions, mesh.positions);
            assert_eq!(back.triangles, mesh.triangles);
        }
    }
}

#[test]
fn exported_faces_match_in_every_format() {
    let g = cube_graph(10.0, 1.0).unwrap();
    let settings = Settings {
        iterations: 0,
        ..Settings::default()
    };
    let mesh = pipeline::build(&g, &settings, Keep::PATCH).unwrap().mesh;
    let mut bytes = Vec::new();
    export(&mesh, MeshFormat::StlBinary, &mut bytes).unwrap();
    let back = read_mesh(bytes.as_slice(), MeshFormat::StlBinary).unwrap();
    for (t, u) in mesh.triangles.iter().zip(&back.triangles) {
        for k in 0..3 {
            let (p, q) = (mesh.positions[t[k] as usize], back.positions[u[k] as usize]);
            assert!((p - q).norm() <= 1e-5 * p.coords.norm().max(1.0));
        }
    }
}
