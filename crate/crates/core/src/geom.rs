//! Planar geometry primitives: vectors, poses, oriented rectangles and the
//! polygon helpers used by collision and drivable-area checks.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Normalize an angle to the half-open interval (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// 2D vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product; positive when `o` is to the left.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn unit_from_angle(a: f64) -> Vec2 {
        Vec2::new(a.cos(), a.sin())
    }

    /// Counter-clockwise rotation by `a` radians.
    pub fn rotated(self, a: f64) -> Vec2 {
        let (s, c) = a.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Position plus heading. The heading is always kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn direction(self) -> Vec2 {
        Vec2::unit_from_angle(self.heading)
    }

    /// Map a point given in this pose's local frame into the world frame.
    pub fn to_world(self, local: Vec2) -> Vec2 {
        self.position() + local.rotated(self.heading)
    }

    /// Map a world point into this pose's local frame (x forward, y left).
    pub fn to_local(self, world: Vec2) -> Vec2 {
        (world - self.position()).rotated(-self.heading)
    }

    /// Advance by a relative motion (dx, dy in the local frame, dheading).
    pub fn compose(self, dx: f64, dy: f64, dheading: f64) -> Pose2D {
        let p = self.to_world(Vec2::new(dx, dy));
        Pose2D::new(p.x, p.y, self.heading + dheading)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// Oriented rectangle: center, heading, full length (along heading) and
/// full width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            length,
            width,
        }
    }

    /// Corners in counter-clockwise order starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let fwd = Vec2::unit_from_angle(self.heading) * (self.length / 2.0);
        let left = Vec2::unit_from_angle(self.heading).perp() * (self.width / 2.0);
        [
            self.center + fwd + left,
            self.center - fwd + left,
            self.center - fwd - left,
            self.center + fwd - left,
        ]
    }

    /// Point containment, boundary inclusive.
    pub fn contains(&self, p: Vec2) -> bool {
        let d = (p - self.center).rotated(-self.heading);
        d.x.abs() <= self.length / 2.0 && d.y.abs() <= self.width / 2.0
    }

    fn project_radius(&self, axis: Vec2) -> f64 {
        let fwd = Vec2::unit_from_angle(self.heading);
        self.length / 2.0 * fwd.dot(axis).abs() + self.width / 2.0 * fwd.perp().dot(axis).abs()
    }

    /// Loose bounding radius (half diagonal), used for cheap pre-filters.
    pub fn bounding_radius(&self) -> f64 {
        0.5 * (self.length * self.length + self.width * self.width).sqrt()
    }
}

/// Separating-axis overlap test for two oriented rectangles. Touching
/// rectangles count as overlapping.
pub fn obb_overlap(a: &OrientedRect, b: &OrientedRect) -> bool {
    let d = b.center - a.center;
    // Cheap reject: centers further apart than the bounding radii.
    let r = a.bounding_radius() + b.bounding_radius();
    if d.norm2() > r * r {
        return false;
    }
    let axes = [
        Vec2::unit_from_angle(a.heading),
        Vec2::unit_from_angle(a.heading).perp(),
        Vec2::unit_from_angle(b.heading),
        Vec2::unit_from_angle(b.heading).perp(),
    ];
    for axis in axes {
        let dist = d.dot(axis).abs();
        if dist > a.project_radius(axis) + b.project_radius(axis) {
            return false;
        }
    }
    true
}

/// Minimum distance between the boundaries of two rectangles: the smallest
/// vertex-to-edge distance in either direction. For disjoint rectangles this
/// is the separation gap; for overlapping ones it is small near touching
/// configurations, which is what the 2 mm exclusion band in the oracle
/// comparisons relies on.
pub fn rect_boundary_distance(a: &OrientedRect, b: &OrientedRect) -> f64 {
    let ca = a.corners();
    let cb = b.corners();
    let mut best = f64::INFINITY;
    for i in 0..4 {
        for j in 0..4 {
            let d1 = dist_point_segment(ca[i], cb[j], cb[(j + 1) % 4]);
            let d2 = dist_point_segment(cb[i], ca[j], ca[(j + 1) % 4]);
            best = best.min(d1).min(d2);
        }
    }
    best
}

/// Distance from point `p` to segment `ab`.
pub fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Even-odd point-in-polygon test. Points on the boundary may fall on
/// either side; callers that care use tolerance bands.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from a point to the closest edge of a polygon.
pub fn dist_point_polygon_boundary(p: Vec2, poly: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        best = best.min(dist_point_segment(p, poly[i], poly[j]));
    }
    best
}

/// Clip a convex polygon by another convex polygon (Sutherland-Hodgman).
/// Both inputs must be counter-clockwise. Returns the intersection polygon,
/// possibly empty.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output: Vec<Vec2> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b - a;
        let input = std::mem::take(&mut output);
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            let cur_in = edge.cross(cur - a) >= 0.0;
            let prev_in = edge.cross(prev - a) >= 0.0;
            if cur_in {
                if !prev_in {
                    if let Some(x) = line_intersection(prev, cur, a, b) {
                        output.push(x);
                    }
                }
                output.push(cur);
            } else if prev_in {
                if let Some(x) = line_intersection(prev, cur, a, b) {
                    output.push(x);
                }
            }
        }
    }
    output
}

fn line_intersection(p1: Vec2, p2: Vec2, a: Vec2, b: Vec2) -> Option<Vec2> {
    let r = p2 - p1;
    let s = b - a;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let t = (a - p1).cross(s) / denom;
    Some(p1 + r * t)
}

/// Area-weighted centroid of a polygon. Degenerate (near-zero-area)
/// polygons fall back to the vertex mean.
pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    if poly.is_empty() {
        return Vec2::ZERO;
    }
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        let w = poly[i].cross(poly[j]);
        area2 += w;
        cx += (poly[i].x + poly[j].x) * w;
        cy += (poly[i].y + poly[j].y) * w;
    }
    if area2.abs() < 1e-12 {
        let n = poly.len() as f64;
        let sum = poly.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
        return sum * (1.0 / n);
    }
    Vec2::new(cx / (3.0 * area2), cy / (3.0 * area2))
}

/// True if any two non-adjacent edges of the polygon intersect.
pub fn polygon_self_intersects(poly: &[Vec2]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (they share an endpoint).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}
