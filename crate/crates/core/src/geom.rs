//! Small geometric primitives shared by the pipeline stages.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Identifies one end circle of one strut: `2 * edge_index + end`, where
/// `end` is 0 at the edge's first endpoint and 1 at its second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CircleId(pub u32);

impl CircleId {
    pub fn new(edge_index: usize, end: usize) -> Self {
        debug_assert!(end < 2);
        CircleId((edge_index * 2 + end) as u32)
    }

    pub fn edge_index(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn end(self) -> usize {
        (self.0 % 2) as usize
    }
}

/// Angle between two vectors, computed as `atan2(|a x b|, a . b)` so it stays
/// accurate near 0 and pi.
pub fn angle_between(a: &Vector, b: &Vector) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(u: f64) -> f64 {
    let w = u.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Deterministic orthonormal frame `(e1, e2)` such that `(e1, e2, axis)` is
/// right-handed. `e1` is the projection of the global axis least aligned with
/// `axis`; ties go to x, then y, then z.
pub fn frame_for_axis(axis: &Vector) -> (Vector, Vector) {
    let globals = [Vector::x(), Vector::y(), Vector::z()];
    let mut best = 0;
    for (i, g) in globals.iter().enumerate().skip(1) {
        if g.dot(axis).abs() < globals[best].dot(axis).abs() {
            best = i;
        }
    }
    let g = globals[best];
    let e1 = (g - axis * g.dot(axis)).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Oriented circle `c(u) = center + radius (cos u e1 + sin u e2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle3 {
    pub center: Point,
    /// Unit axis, pointing from the node outward along the strut.
    pub axis: Vector,
    pub radius: f64,
    pub e1: Vector,
    pub e2: Vector,
}

impl Circle3 {
    /// Circle with the deterministic frame from [`frame_for_axis`]. `axis`
    /// must be unit length.
    pub fn new(center: Point, axis: Vector, radius: f64) -> Self {
        let (e1, e2) = frame_for_axis(&axis);
        Circle3 {
            center,
            axis,
            radius,
            e1,
            e2,
        }
    }

    pub fn point(&self, u: f64) -> Point {
        let (s, c) = u.sin_cos();
        self.center + (self.e1 * c + self.e2 * s) * self.radius
    }

    /// Outward normal of the strut cylinder along the circle.
    pub fn normal(&self, u: f64) -> Vector {
        let (s, c) = u.sin_cos();
        self.e1 * c + self.e2 * s
    }

    /// Parameter of the circle point closest to `p`, or `None` when `p` lies
    /// on the axis line.
    pub fn param_of(&self, p: &Point) -> Option<f64> {
        let d = p - self.center;
        let x = d.dot(&self.e1);
        let y = d.dot(&self.e2);
        if x.hypot(y) <= 1e-14 * (1.0 + d.norm()) {
            return None;
        }
        Some(wrap_angle(y.atan2(x)))
    }

    /// Distance from `p` to the circle curve.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let d = p - self.center;
        let axial = d.dot(&self.axis);
        let radial = (d - self.axis * axial).norm();
        axial.hypot(radial - self.radius)
    }

    /// Distance from `p` to the infinite cylinder through this circle.
    pub fn cylinder_distance(&self, p: &Point) -> f64 {
        let d = p - self.center;
        let radial = (d - self.axis * d.dot(&self.axis)).norm();
        (radial - self.radius).abs()
    }

    /// Outward cylinder normal at the radial position of `p`.
    pub fn cylinder_normal_at(&self, p: &Point) -> Option<Vector> {
        let d = p - self.center;
        let radial = d - self.axis * d.dot(&self.axis);
        let n = radial.norm();
        (n > 1e-14 * self.radius).then(|| radial / n)
    }

    /// Moves `p` perpendicular to the axis onto the cylinder surface.
    pub fn project_to_cylinder(&self, p: &Point) -> Option<Point> {
        let d = p - self.center;
        let axial = d.dot(&self.axis);
        let n = self.cylinder_normal_at(p)?;
        Some(self.center + self.axis * axial + n * self.radius)
    }
}

/// Distance along the unit ray `dir` from the node center to the exit point
/// of a half-infinite strut of the given radius whose axis starts at the node.
///
/// Rays pointing backwards (`dir . axis <= 0`) leave through the node sphere of
/// the same radius instead. Returns `None` for a ray along the axis.
pub fn strut_exit_distance(dir: &Vector, axis: &Vector, radius: f64) -> Option<f64> {
    let along = dir.dot(axis);
    if along <= 0.0 {
        return Some(radius);
    }
    let sin = dir.cross(axis).norm();
    if sin < 1e-12 {
        return None;
    }
    Some(radius / sin)
}

/// Unnormalized face normal (twice the area vector).
pub fn triangle_normal(a: &Point, b: &Point, c: &Point) -> Vector {
    (b - a).cross(&(c - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn frame_is_right_handed_and_orthonormal() {
        for axis in [
            Vector::x(),
            -Vector::y(),
            Vector::new(1.0, 2.0, -3.0).normalize(),
            Vector::new(1.0, 1.0, 1.0).normalize(),
        ] {
            let (e1, e2) = frame_for_axis(&axis);
            assert!((e1.norm() - 1.0).abs() < 1e-15);
            assert!(e1.dot(&axis).abs() < 1e-15);
            assert!(e2.dot(&e1).abs() < 1e-15);
            assert!((e1.cross(&e2) - axis).norm() < 1e-15);
        }
    }

    #[test]
    fn circle_points_sit_on_cylinder() {
        let c = Circle3::new(Point::new(1.0, 2.0, 3.0), Vector::new(0.0, 0.6, 0.8), 0.7);
        for k in 0..16 {
            let u = k as f64 * 0.4;
            let p = c.point(u);
            assert!(c.distance_to(&p) < 1e-14);
            assert!((c.param_of(&p).unwrap() - wrap_angle(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_sample_on_unit_circle() {
        let c = Circle3 {
            center: Point::origin(),
            axis: Vector::z(),
            radius: 1.0,
            e1: Vector::x(),
            e2: Vector::y(),
        };
        let p = c.point(FRAC_PI_4);
        assert!((p - Point::new(0.5f64.sqrt(), 0.5f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((c.point(FRAC_PI_2) - Point::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn strut_exit_on_octant_diagonal() {
        let dir = Vector::new(1.0, 1.0, 1.0).normalize();
        let t = strut_exit_distance(&dir, &Vector::x(), 1.0).unwrap();
        assert!((t - 1.5f64.sqrt()).abs() < 1e-14);
        let p = dir * t;
        assert!((p.y.hypot(p.z) - 1.0).abs() < 1e-14);
        assert!(strut_exit_distance(&Vector::x(), &Vector::x(), 1.0).is_none());
        assert_eq!(strut_exit_distance(&-Vector::x(), &Vector::x(), 1.0), Some(1.0));
    }

    #[test]
    fn angle_between_is_accurate_at_extremes() {
        let a = Vector::x();
        assert_eq!(angle_between(&a, &a), 0.0);
        assert!((angle_between(&a, &-a) - PI).abs() < 1e-15);
        let tiny = Vector::new(1.0, 1e-9, 0.0);
        assert!((angle_between(&a, &tiny) - 1e-9).abs() < 1e-20);
    }
}
