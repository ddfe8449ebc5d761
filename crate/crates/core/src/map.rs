//! Lane-graph map representation: centerline polylines, lane corridors,
//! neighbor/successor connectivity and ego routes.

use crate::geom::{
    dist_point_segment, normalize_angle, point_in_polygon, polygon_self_intersects, Pose2D, Vec2,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct LaneId(pub u32);

impl std::fmt::Display for LaneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("lane {0}: centerline needs at least 2 points")]
    TooFewPoints(LaneId),
    #[error("lane {0}: consecutive centerline points coincide at index {1}")]
    DuplicatePoint(LaneId, usize),
    #[error("lane {0}: width must be positive")]
    BadWidth(LaneId),
    #[error("lane {0}: speed limit must be positive")]
    BadSpeedLimit(LaneId),
    #[error("lane {0}: unresolved {1} id {2}")]
    UnresolvedId(LaneId, &'static str, LaneId),
    #[error("lanes {0} and {1}: neighbor relation not symmetric")]
    AsymmetricNeighbors(LaneId, LaneId),
    #[error("lane {0}: corridor polygon self-intersects")]
    BadPolygon(LaneId),
    #[error("duplicate lane id {0}")]
    DuplicateLane(LaneId),
    #[error("route is empty")]
    EmptyRoute,
    #[error("route lane {0} not in lane graph")]
    RouteUnknownLane(LaneId),
    #[error("route lanes {0} -> {1} are not connected by successor or neighbor links")]
    RouteDisconnected(LaneId, LaneId),
}

/// Polyline with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<Vec2>,
    cum: Vec<f64>,
}

/// Projection of a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point, in [0, length].
    pub arc: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub lateral: f64,
    /// Heading of the polyline tangent at the closest point.
    pub tangent_heading: f64,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Self {
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in points.windows(2) {
            acc += (w[1] - w[0]).norm();
            cum.push(acc);
        }
        Self { points, cum }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    /// Point at arc length `s`, clamped to the polyline extent.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let seg_len = self.cum[i + 1] - self.cum[i];
        let t = if seg_len > 0.0 {
            (s - self.cum[i]) / seg_len
        } else {
            0.0
        };
        self.points[i] + (self.points[i + 1] - self.points[i]) * t
    }

    /// Tangent heading at arc length `s` (heading of the containing segment).
    pub fn tangent_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let d = self.points[i + 1] - self.points[i];
        d.y.atan2(d.x)
    }

    /// Discrete curvature at arc length `s`: tangent angle change per meter
    /// around the nearest interior vertex; zero for straight segments.
    pub fn curvature_at(&self, s: f64) -> f64 {
        if self.points.len() < 3 {
            return 0.0;
        }
        let s = s.clamp(0.0, self.length());
        // Nearest interior vertex.
        let mut best = 1;
        let mut best_d = f64::INFINITY;
        for i in 1..self.points.len() - 1 {
            let d = (self.cum[i] - s).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let h0 = self.tangent_at((self.cum[best] - 1e-6).max(0.0));
        let h1 = self.tangent_at(self.cum[best] + 1e-6);
        let ds = 0.5 * (self.cum[best + 1] - self.cum[best - 1]);
        if ds <= 0.0 {
            0.0
        } else {
            normalize_angle(h1 - h0) / ds
        }
    }

    fn segment_index(&self, s: f64) -> usize {
        // Last segment whose start arc is <= s.
        match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => (i - 1).min(self.points.len() - 2),
        }
    }

    /// Closest-point projection. Endpoints clamp; ties between segments
    /// resolve to the smaller arc length.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best_d2 = f64::INFINITY;
        let mut best = Projection {
            arc: 0.0,
            lateral: 0.0,
            tangent_heading: 0.0,
        };
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = b - a;
            let len2 = ab.norm2();
            let t = if len2 > 0.0 {
                ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let foot = a + ab * t;
            let d2 = (p - foot).norm2();
            if d2 < best_d2 - 1e-15 {
                best_d2 = d2;
                let tangent = ab * (1.0 / len2.sqrt().max(1e-12));
                best = Projection {
                    arc: self.cum[i] + t * len2.sqrt(),
                    lateral: tangent.cross(p - foot),
                    tangent_heading: ab.y.atan2(ab.x),
                };
            }
        }
        best
    }
}

/// A single lane: centerline, corridor width, speed limit and connectivity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub centerline: Polyline,
    pub width: f64,
    pub speed_limit: f64,
    pub successors: Vec<LaneId>,
    pub left_neighbor: Option<LaneId>,
    pub right_neighbor: Option<LaneId>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    /// Corridor polygon: centerline offset by +-width/2 with miter joins.
    pub fn corridor_polygon(&self) -> Vec<Vec2> {
        offset_polygon(&self.centerline, self.width / 2.0)
    }
}

fn offset_polygon(line: &Polyline, half_width: f64) -> Vec<Vec2> {
    let pts = line.points();
    let n = pts.len();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let dir_in = if i > 0 {
            pts[i] - pts[i - 1]
        } else {
            pts[1] - pts[0]
        };
        let dir_out = if i + 1 < n {
            pts[i + 1] - pts[i]
        } else {
            pts[n - 1] - pts[n - 2]
        };
        let t_in = dir_in * (1.0 / dir_in.norm().max(1e-12));
        let t_out = dir_out * (1.0 / dir_out.norm().max(1e-12));
        let bisector = t_in + t_out;
        let bis = if bisector.norm() < 1e-9 {
            t_in.perp()
        } else {
            bisector * (1.0 / bisector.norm())
        };
        let normal = bis.perp();
        // Miter scale: project the join normal onto the segment normal.
        let cos_half = normal.dot(t_in.perp()).abs().max(0.5);
        let off = normal * (half_width / cos_half);
        left.push(pts[i] + off);
        right.push(pts[i] - off);
    }
    right.reverse();
    left.extend(right);
    left
}

/// Immutable lane-graph map. All ids are validated to resolve, neighbor
/// relations to be symmetric, and corridor polygons to be simple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaneGraph {
    lanes: BTreeMap<LaneId, Lane>,
    polygons: BTreeMap<LaneId, Vec<Vec2>>,
}

impl LaneGraph {
    pub fn new(lane_list: Vec<Lane>) -> Result<Self, MapError> {
        let mut lanes = BTreeMap::new();
        for lane in lane_list {
            if lane.centerline.points().len() < 2 {
                return Err(MapError::TooFewPoints(lane.id));
            }
            for (i, w) in lane.centerline.points().windows(2).enumerate() {
                if (w[1] - w[0]).norm() <= 1e-9 {
                    return Err(MapError::DuplicatePoint(lane.id, i));
                }
            }
            if lane.width <= 0.0 {
                return Err(MapError::BadWidth(lane.id));
            }
            if lane.speed_limit <= 0.0 {
                return Err(MapError::BadSpeedLimit(lane.id));
            }
            if lanes.insert(lane.id, lane.clone()).is_some() {
                return Err(MapError::DuplicateLane(lane.id));
            }
        }
        for lane in lanes.values() {
            for s in &lane.successors {
                if !lanes.contains_key(s) {
                    return Err(MapError::UnresolvedId(lane.id, "successor", *s));
                }
            }
            for (label, n) in [
                ("left_neighbor", lane.left_neighbor),
                ("right_neighbor", lane.right_neighbor),
            ] {
                if let Some(n) = n {
                    if !lanes.contains_key(&n) {
                        return Err(MapError::UnresolvedId(lane.id, label, n));
                    }
                }
            }
            if let Some(l) = lane.left_neighbor {
                if lanes[&l].right_neighbor != Some(lane.id) {
                    return Err(MapError::AsymmetricNeighbors(lane.id, l));
                }
            }
            if let Some(r) = lane.right_neighbor {
                if lanes[&r].left_neighbor != Some(lane.id) {
                    return Err(MapError::AsymmetricNeighbors(lane.id, r));
                }
            }
        }
        let mut polygons = BTreeMap::new();
        for lane in lanes.values() {
            let poly = lane.corridor_polygon();
            if polygon_self_intersects(&poly) {
                return Err(MapError::BadPolygon(lane.id));
            }
            polygons.insert(lane.id, poly);
        }
        Ok(Self { lanes, polygons })
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.lanes.get(&id)
    }

    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.values()
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Drivable-area polygons (one corridor polygon per lane).
    pub fn drivable_polygons(&self) -> impl Iterator<Item = (&LaneId, &Vec<Vec2>)> {
        self.polygons.iter()
    }

    pub fn polygon(&self, id: LaneId) -> Option<&Vec<Vec2>> {
        self.polygons.get(&id)
    }

    /// True if the point lies in any lane corridor polygon.
    pub fn contains_point(&self, p: Vec2) -> bool {
        self.polygons.values().any(|poly| point_in_polygon(p, poly))
    }

    /// Distance from a point to the drivable area (0 inside).
    pub fn distance_outside(&self, p: Vec2) -> f64 {
        if self.contains_point(p) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for poly in self.polygons.values() {
            for i in 0..poly.len() {
                let j = (i + 1) % poly.len();
                best = best.min(dist_point_segment(p, poly[i], poly[j]));
            }
        }
        best
    }

    /// Lane whose corridor the pose lies in, preferring alignment with the
    /// pose heading, then the smallest lateral offset, then the lower id.
    /// Falls back to the laterally closest lane within 1.5 widths.
    pub fn locate(&self, pose: Pose2D) -> Option<(LaneId, Projection)> {
        let mut best: Option<(LaneId, Projection, bool, f64)> = None;
        for lane in self.lanes.values() {
            let proj = lane.centerline.project(pose.position());
            let within = proj.lateral.abs() <= lane.width / 2.0 + 1e-9;
            let loose = proj.lateral.abs() <= lane.width * 1.5;
            if !loose {
                continue;
            }
            let aligned = normalize_angle(pose.heading - proj.tangent_heading).abs()
                < std::f64::consts::FRAC_PI_2;
            let key = (
                !within,
                !aligned,
                proj.lateral.abs(),
            );
            let better = match &best {
                None => true,
                Some((bid, bproj, bwithin, _)) => {
                    let baligned = normalize_angle(pose.heading - bproj.tangent_heading).abs()
                        < std::f64::consts::FRAC_PI_2;
                    let bkey = (!bwithin, !baligned, bproj.lateral.abs());
                    (key.0, key.1, key.2, lane.id) < (bkey.0, bkey.1, bkey.2, *bid)
                }
            };
            if better {
                best = Some((lane.id, proj, within, proj.lateral.abs()));
            }
        }
        best.map(|(id, proj, _, _)| (id, proj))
    }
}

/// Project a pose onto a lane centerline: (arc length, signed lateral
/// offset, heading error). Lateral offset is positive left of travel;
/// endpoints clamp.
pub fn project_to_centerline(p: Pose2D, lane: &Lane) -> (f64, f64, f64) {
    let proj = lane.centerline.project(p.position());
    (
        proj.arc,
        proj.lateral,
        normalize_angle(p.heading - proj.tangent_heading),
    )
}

/// Ordered lane sequence for the ego. Consecutive lanes must be connected
/// via successor or neighbor links. Each lane carries a progress offset:
/// successor transitions accumulate length, neighbor transitions run in
/// parallel and share their predecessor's offset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Route {
    lanes: Vec<LaneId>,
    offsets: Vec<f64>,
    total_length: f64,
}

impl Route {
    pub fn new(lanes: Vec<LaneId>, graph: &LaneGraph) -> Result<Self, MapError> {
        if lanes.is_empty() {
            return Err(MapError::EmptyRoute);
        }
        for id in &lanes {
            if graph.lane(*id).is_none() {
                return Err(MapError::RouteUnknownLane(*id));
            }
        }
        let mut offsets = vec![0.0];
        for w in lanes.windows(2) {
            let cur = graph.lane(w[0]).unwrap();
            let prev_off = *offsets.last().unwrap();
            if cur.successors.contains(&w[1]) {
                offsets.push(prev_off + cur.length());
            } else if cur.left_neighbor == Some(w[1]) || cur.right_neighbor == Some(w[1]) {
                offsets.push(prev_off);
            } else {
                return Err(MapError::RouteDisconnected(w[0], w[1]));
            }
        }
        let last = graph.lane(*lanes.last().unwrap()).unwrap();
        let total_length = offsets.last().unwrap() + last.length();
        Ok(Self {
            lanes,
            offsets,
            total_length,
        })
    }

    pub fn lanes(&self) -> &[LaneId] {
        &self.lanes
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn contains(&self, id: LaneId) -> bool {
        self.lanes.contains(&id)
    }

    /// Progress of a position along the route in meters: projection onto
    /// the closest route lane (by distance to the projected centerline
    /// point) plus that lane's offset.
    pub fn progress_of(&self, p: Vec2, graph: &LaneGraph) -> f64 {
        let mut best_dist = f64::INFINITY;
        let mut progress = 0.0;
        for (id, off) in self.lanes.iter().zip(&self.offsets) {
            let lane = graph.lane(*id).unwrap();
            let proj = lane.centerline.project(p);
            let d = (lane.centerline.point_at(proj.arc) - p).norm();
            if d < best_dist {
                best_dist = d;
                progress = off + proj.arc;
            }
        }
        progress
    }

    /// True if the point lies within any route lane corridor polygon.
    pub fn corridor_contains(&self, p: Vec2, graph: &LaneGraph) -> bool {
        self.lanes
            .iter()
            .any(|id| point_in_polygon(p, graph.polygon(*id).unwrap()))
    }

    /// The lane the planner should steer toward at the given position: of
    /// all route lanes, the final lane of the parallel (neighbor-linked)
    /// group nearest to the position.
    pub fn target_lane_at(&self, p: Vec2, graph: &LaneGraph) -> LaneId {
        // Nearest route lane by lateral distance.
        let mut nearest_idx = 0;
        let mut best = f64::INFINITY;
        for (i, id) in self.lanes.iter().enumerate() {
            let lane = graph.lane(*id).unwrap();
            let proj = lane.centerline.project(p);
            // Penalize lanes whose projection clamps far away.
            let d = (lane.centerline.point_at(proj.arc) - p).norm();
            if d < best {
                best = d;
                nearest_idx = i;
            }
        }
        // Walk forward through neighbor transitions (a parallel group).
        let mut idx = nearest_idx;
        while idx + 1 < self.lanes.len() {
            let cur = graph.lane(self.lanes[idx]).unwrap();
            let next = self.lanes[idx + 1];
            if cur.left_neighbor == Some(next) || cur.right_neighbor == Some(next) {
                idx += 1;
            } else {
                break;
            }
        }
        self.lanes[idx]
    }

    /// Concatenated centerline of the route from `lane_id` onward,
    /// following successor links within the route.
    pub fn path_from(&self, lane_id: LaneId, graph: &LaneGraph) -> Polyline {
        let mut pts: Vec<Vec2> = Vec::new();
        let mut idx = self.lanes.iter().position(|l| *l == lane_id).unwrap_or(0);
        loop {
            let lane = graph.lane(self.lanes[idx]).unwrap();
            for p in lane.centerline.points() {
                if pts.last().map_or(true, |l| (*l - *p).norm() > 1e-9) {
                    pts.push(*p);
                }
            }
            // Continue only across successor transitions.
            if idx + 1 < self.lanes.len() {
                let next = self.lanes[idx + 1];
                if lane.successors.contains(&next) {
                    idx += 1;
                    continue;
                }
            }
            break;
        }
        Polyline::new(pts)
    }
}
