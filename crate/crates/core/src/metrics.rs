//! Shape deviation against the original strut union, discrete mean
//! curvature, and per-node timing statistics.

use crate::fair::cotangent_laplacian;
use crate::geom::{Point, Vector};
use crate::graph::NodeStar;
use crate::mesh::{vertex_normals, EdgeTable};
use crate::par::{map_indices, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;

pub const DEFAULT_SAMPLES: usize = 800_000;
pub const DEFAULT_SEED: u64 = 0x5eed_1a77_1ce5;
/// Samples per independently seeded stream; fixes the result regardless of
/// thread count.
const CHUNK: usize = 8192;

/// One uncut strut, from the node center along `axis` for `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleStrut {
    pub axis: Vector,
    pub radius: f64,
    pub length: f64,
}

/// Union of the uncut struts at a node plus a ball of the strut radius.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginalNodeOracle {
    pub center: Point,
    pub struts: Vec<OracleStrut>,
    pub sphere_radius: f64,
}

impl OriginalNodeOracle {
    pub fn from_star(star: &NodeStar) -> Self {
        OriginalNodeOracle {
            center: star.node.position,
            struts: star
                .incident
                .iter()
                .map(|i| OracleStrut {
                    axis: i.direction,
                    radius: i.radius,
                    length: i.length,
                })
                .collect(),
            sphere_radius: star.radius(),
        }
    }

    /// Signed distance to the union; negative inside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        let d = p - self.center;
        let mut best = d.norm() - self.sphere_radius;
        for s in &self.struts {
            best = best.min(capped_cylinder_sdf(&d, s));
        }
        best
    }
}

fn capped_cylinder_sdf(d: &Vector, s: &OracleStrut) -> f64 {
    let t = d.dot(&s.axis);
    let radial = (d - s.axis * t).norm() - s.radius;
    let half = 0.5 * s.length;
    let along = (t - half).abs() - half;
    let outside = radial.max(0.0).hypot(along.max(0.0));
    radial.max(along).min(0.0) + outside
}

/// Unsigned distance from `p` to the original nodal shape, estimated as the
/// magnitude of the union's signed distance.
pub fn oracle_distance(oracle: &OriginalNodeOracle, p: &Point) -> f64 {
    oracle.signed_distance(p).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub samples: usize,
    pub max: f64,
    pub avg: f64,
    pub std: f64,
    #[serde(skip)]
    pub values: Option<Vec<f64>>,
}

impl DeviationReport {
    pub fn csv_header() -> &'static str {
        "samples,max,avg,std"
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.samples, self.max, self.avg, self.std)
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
    max: f64,
}

impl Moments {
    const EMPTY: Moments = Moments {
        count: 0,
        mean: 0.0,
        m2: 0.0,
        max: 0.0,
    };

    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.max = self.max.max(x);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + delta * other.count as f64 / n,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * other.count as f64 / n,
            max: self.max.max(other.max),
        }
    }
}

/// Area-weighted random point sampler over a triangle mesh.
pub struct SurfaceSampler<'a> {
    positions: &'a [Point],
    triangles: &'a [[u32; 3]],
    cumulative: Vec<f64>,
}

impl<'a> SurfaceSampler<'a> {
    pub fn new(positions: &'a [Point], triangles: &'a [[u32; 3]]) -> Self {
        let mut total = 0.0;
        let cumulative = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| positions[i as usize]);
                total += 0.5 * (b - a).cross(&(c - a)).norm();
                total
            })
            .collect();
        SurfaceSampler {
            positions,
            triangles,
            cumulative,
        }
    }

    pub fn area(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let x = rng.random::<f64>() * self.area();
        let k = self
            .cumulative
            .partition_point(|&c| c <= x)
            .min(self.triangles.len() - 1);
        let [a, b, c] = self.triangles[k].map(|i| self.positions[i as usize]);
        let s = rng.random::<f64>().sqrt();
        let t = rng.random::<f64>();
        Point::from(a.coords * (1.0 - s) + b.coords * (s * (1.0 - t)) + c.coords * (s * t))
    }
}

/// Deviation statistics over `samples` area-weighted random surface points.
pub fn deviation(
    positions: &[Point],
    triangles: &[[u32; 3]],
    oracle: &OriginalNodeOracle,
    samples: usize,
    seed: u64,
    mode: Parallelism,
) -> DeviationReport {
    deviation_with(positions, triangles, samples, seed, mode, false, |p| {
        oracle_distance(oracle, p)
    })
}

/// Like [`deviation`] with an arbitrary distance function, optionally keeping
/// every sample value.
pub fn deviation_with<F>(
    positions: &[Point],
    triangles: &[[u32; 3]],
    samples: usize,
    seed: u64,
    mode: Parallelism,
    keep_values: bool,
    distance: F,
) -> DeviationReport
where
    F: Fn(&Point) -> f64 + Sync + Send,
{
    let sampler = SurfaceSampler::new(positions, triangles);
    if triangles.is_empty() || samples == 0 || !(sampler.area() > 0.0) {
        return DeviationReport {
            samples: 0,
            max: 0.0,
            avg: 0.0,
            std: 0.0,
            values: keep_values.then(Vec::new),
        };
    }
    let chunks = samples.div_ceil(CHUNK);
    let parts = map_indices(mode, chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let n = CHUNK.min(samples - c * CHUNK);
        let mut m = Moments::EMPTY;
        let mut vals = Vec::with_capacity(if keep_values { n } else { 0 });
        for _ in 0..n {
            let d = distance(&sampler.sample(&mut rng));
            m.push(d);
            if keep_values {
                vals.push(d);
            }
        }
        (m, vals)
    });
    let mut total = Moments::EMPTY;
    let mut values = keep_values.then(|| Vec::with_capacity(samples));
    for (m, v) in parts {
        total = total.merge(m);
        if let Some(all) = values.as_mut() {
            all.extend(v);
        }
    }
    DeviationReport {
        samples: total.count,
        max: total.max,
        avg: total.mean,
        std: (total.m2 / total.count as f64).sqrt(),
        values,
    }
}

/// Signed discrete mean curvature per vertex; `None` on boundary vertices
/// and degenerate one-rings. Positive where the surface bends away from its
/// outward normal like a sphere.
pub fn mean_curvature(positions: &[Point], triangles: &[[u32; 3]]) -> Vec<Option<f64>> {
    let n = positions.len();
    let table = EdgeTable::build(triangles);
    let mut on_boundary = vec![false; n];
    let mut used = vec![false; n];
    for (e, &(a, b)) in table.edges.iter().enumerate() {
        if table.faces[e].len() != 2 {
            on_boundary[a as usize] = true;
            on_boundary[b as usize] = true;
        }
    }
    let mut area = vec![0.0; n];
    for t in triangles {
        let p = t.map(|i| positions[i as usize]);
        let twice = (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        for k in 0..3 {
            used[t[k] as usize] = true;
            let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let (ab, ac, bc) = (b - a, c - a, c - b);
            let obtuse_a = ab.dot(&ac) < 0.0;
            let obtuse_other = (a - b).dot(&bc) < 0.0 || (a - c).dot(&(b - c)) < 0.0;
            area[t[k] as usize] += if obtuse_a {
                0.25 * twice
            } else if obtuse_other {
                0.125 * twice
            } else if twice > 0.0 {
                // Voronoi region: |ab|^2 cot(C) + |ac|^2 cot(B), over 8.
                let cot_c = (a - c).dot(&(b - c)) / twice;
                let cot_b = (a - b).dot(&(c - b)) / twice;
                0.125 * (ab.norm_squared() * cot_c + ac.norm_squared() * cot_b)
            } else {
                0.0
            };
        }
    }
    let l = cotangent_laplacian(positions, triangles);
    let normals = vertex_normals(positions, triangles);
    (0..n)
        .map(|i| {
            if on_boundary[i] || !used[i] || !(area[i] > 0.0) {
                return None;
            }
            // Rows of L are sum_j w_ij (x_j - x_i).
            let mut k = Vector::zeros();
            for (j, w) in l.row(i) {
                k -= positions[j].coords * w;
            }
            let h = k.norm() / (2.0 * area[i]);
            let sign = if k.dot(&normals[i]) < 0.0 { -1.0 } else { 1.0 };
            Some(sign * h).filter(|x| x.is_finite())
        })
        .collect()
}

/// Stage timings of one node, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeTiming {
    pub node_id: u64,
    pub valence: usize,
    pub cutting_ms: f64,
    pub film_ms: f64,
    pub smoothing_ms: f64,
    pub subdivision_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stats> {
        let mut count = 0usize;
        let mut s = Stats {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            avg: 0.0,
        };
        for v in values {
            count += 1;
            s.min = s.min.min(v);
            s.max = s.max.max(v);
            s.avg += v;
        }
        (count > 0).then(|| {
            s.avg /= count as f64;
            s.avg = s.avg.clamp(s.min, s.max);
            s
        })
    }
}

/// Per-run timing summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub edges: usize,
    pub nodes: usize,
    pub max_degree: usize,
    pub smoothing: Option<Stats>,
    pub construction: Option<Stats>,
    pub rows: Vec<NodeTiming>,
}

pub fn timing_report(edges: usize, nodes: usize, max_degree: usize, rows: Vec<NodeTiming>) -> TimingReport {
    TimingReport {
        edges,
        nodes,
        max_degree,
        smoothing: Stats::of(rows.iter().map(|r| r.smoothing_ms)),
        construction: Stats::of(rows.iter().map(|r| r.total_ms)),
        rows,
    }
}

impl TimingReport {
    /// Fraction of total per-node time spent smoothing.
    pub fn smoothing_share(&self) -> f64 {
        let total: f64 = self.rows.iter().map(|r| r.total_ms).sum();
        let smooth: f64 = self.rows.iter().map(|r| r.smoothing_ms).sum();
        if total > 0.0 {
            smooth / total
        } else {
            0.0
        }
    }

    /// Summary CSV: one row per run.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "edges,nodes,max_degree,smoothing_min_ms,smoothing_max_ms,smoothing_avg_ms,\
             construction_min_ms,construction_max_ms,construction_avg_ms\n",
        );
        let f = |x: Option<Stats>| match x {
            Some(st) => format!("{},{},{}", st.min, st.max, st.avg),
            None => ",,".to_string(),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            self.edges,
            self.nodes,
            self.max_degree,
            f(self.smoothing),
            f(self.construction)
        );
        s
    }

    /// Per-node CSV.
    pub fn nodes_csv(&self) -> String {
        let mut s = String::from(
            "node_id,valence,cutting_ms,film_ms,smoothing_ms,subdivision_ms,total_ms\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.node_id, r.valence, r.cutting_ms, r.film_ms, r.smoothing_ms, r.subdivision_ms, r.total_ms
            );
        }
        s
    }
}
