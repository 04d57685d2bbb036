//! Minimum intersection-free strut cutting.
//!
//! Every pair of struts at a node forces a cut of `r / tan(theta / 2)` on both
//! members; each strut takes the largest of its pairwise lengths, scaled by
//! `1 + lambda` so that neighbouring end circles never touch.

use crate::error::{Error, Result};
use crate::geom::{Circle3, CircleId, Vector};
use crate::graph::{LatticeGraph, NodeStar};
use serde::Serialize;
use std::f64::consts::{PI, TAU};

pub const DEFAULT_LAMBDA: f64 = 0.3;

/// Cut record for one strut at one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrutCut {
    pub edge_id: u64,
    pub node_id: u64,
    pub circle_id: CircleId,
    pub direction: Vector,
    pub radius: f64,
    /// Final cut length `(1 + lambda) * min_length`.
    pub cut_length: f64,
    /// Largest pairwise candidate.
    pub min_length: f64,
    /// Pairwise candidates `(other edge id, length)`, in star order.
    pub candidates: Vec<(u64, f64)>,
    pub end_circle: Circle3,
    /// Full edge length.
    pub edge_length: f64,
}

/// Pairwise minimum cut length for two struts of radius `radius` whose axes
/// meet at angle `theta`.
pub fn pairwise_min_cut(theta: f64, radius: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::InvalidArgument(format!(
            "strut angle must lie in (0, pi], got {theta}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if theta == PI {
        return Ok(0.0);
    }
    // Half-angle form of r / tan(theta / 2).
    Ok(radius * (1.0 + theta.cos()) / theta.sin())
}

/// [`pairwise_min_cut`] evaluated from the two unit strut directions, which
/// avoids the round trip through an angle.
pub fn pairwise_min_cut_dirs(a: &Vector, b: &Vector, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let cos = a.dot(b);
    let sin = a.cross(b).norm();
    if sin == 0.0 {
        if cos < 0.0 {
            return Ok(0.0);
        }
        return Err(Error::InvalidArgument("coincident strut directions".into()));
    }
    Ok(radius * (1.0 + cos) / sin)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in (0, 0.5), got {lambda}"
        )));
    }
    Ok(())
}

/// Cuts for every strut of a star.
pub fn node_cuts(star: &NodeStar, lambda: f64) -> Result<Vec<StrutCut>> {
    check_lambda(lambda)?;
    cuts_with_scale(star, 1.0 + lambda, 0.0)
}

/// Like [`node_cuts`], but no strut of a star with two or more struts is cut
/// shorter than `floor`. Nearly collinear valence-2 stars otherwise produce
/// coincident end circles.
pub fn node_cuts_with_floor(star: &NodeStar, lambda: f64, floor: f64) -> Result<Vec<StrutCut>> {
    check_lambda(lambda)?;
    cuts_with_scale(star, 1.0 + lambda, floor)
}

/// Same as [`node_cuts`] without the lambda range check; `scale = 1` gives the
/// tangent-contact configuration.
pub fn node_cuts_scaled(star: &NodeStar, scale: f64) -> Result<Vec<StrutCut>> {
    cuts_with_scale(star, scale, 0.0)
}

fn cuts_with_scale(star: &NodeStar, scale: f64, floor: f64) -> Result<Vec<StrutCut>> {
    let r = star.radius();
    let o = star.node.position;
    let mut out = Vec::with_capacity(star.valence());
    for (i, si) in star.incident.iter().enumerate() {
        let mut candidates = Vec::with_capacity(star.valence().saturating_sub(1));
        for (j, sj) in star.incident.iter().enumerate() {
            if i == j {
                continue;
            }
            candidates.push((sj.edge_id, pairwise_min_cut_dirs(&si.direction, &sj.direction, r)?));
        }
        let min_length = candidates.iter().map(|c| c.1).fold(0.0, f64::max);
        let mut cut_length = scale * min_length;
        if star.valence() >= 2 {
            cut_length = cut_length.max(floor);
        }
        if cut_length >= si.length {
            return Err(Error::InvalidCut {
                edge: si.edge_id,
                node: star.node.id,
                cut_length,
                available: si.length,
            });
        }
        out.push(StrutCut {
            edge_id: si.edge_id,
            node_id: star.node.id,
            circle_id: si.circle_id(),
            direction: si.direction,
            radius: r,
            cut_length,
            min_length,
            candidates,
            end_circle: Circle3::new(o + si.direction * cut_length, si.direction, r),
            edge_length: si.length,
        });
    }
    Ok(out)
}

/// Checks that both cuts of every edge leave a strut of positive length.
/// `cuts_at` yields the cut length of an edge index at its first and second
/// endpoint.
pub fn check_edge_cuts(
    graph: &LatticeGraph,
    mut cuts_at: impl FnMut(usize) -> (f64, f64),
) -> Result<()> {
    for (ei, e) in graph.edges().iter().enumerate() {
        let (ca, cb) = cuts_at(ei);
        let len = graph.edge_length(e);
        if ca + cb >= len {
            let (node, cut_length, available) = if ca >= cb {
                (e.endpoints.0, ca, len - cb)
            } else {
                (e.endpoints.1, cb, len - ca)
            };
            return Err(Error::InvalidCut {
                edge: e.id,
                node,
                cut_length,
                available,
            });
        }
    }
    Ok(())
}

/// Minimum distance between two circles, found by dense sampling of the first
/// circle followed by golden-section refinement around the best samples.
pub fn circle_distance(a: &Circle3, b: &Circle3) -> f64 {
    const SAMPLES: usize = 720;
    let f = |u: f64| b.distance_to(&a.point(u));
    let step = TAU / SAMPLES as f64;
    let mut samples: Vec<(f64, f64)> = (0..SAMPLES)
        .map(|k| {
            let u = k as f64 * step;
            (f(u), u)
        })
        .collect();
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = samples[0].0;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for &(_, u0) in samples.iter().take(4) {
        let (mut lo, mut hi) = (u0 - step, u0 + step);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            }
        }
        best = best.min(f1).min(f2);
    }
    best
}

/// True iff every pair of end circles is separated by a positive gap.
pub fn verify_disjoint(cuts: &[StrutCut]) -> bool {
    for (i, a) in cuts.iter().enumerate() {
        for b in &cuts[i + 1..] {
            let tol = 1e-9 * a.radius.max(b.radius);
            if circle_distance(&a.end_circle, &b.end_circle) <= tol {
                return false;
            }
        }
    }
    true
}
