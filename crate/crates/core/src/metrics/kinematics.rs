//! Progress, comfort and speed-limit soft metrics.

use crate::engine::Snapshot;
use crate::geom::{normalize_angle, Vec2};
use crate::map::{LaneGraph, Route};
use serde::{Deserialize, Serialize};

/// nuPlan-style comfort bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortLimits {
    pub lon_accel_min: f64,
    pub lon_accel_max: f64,
    pub lat_accel_max: f64,
    pub jerk_max: f64,
    pub yaw_rate_max: f64,
}

impl Default for ComfortLimits {
    fn default() -> Self {
        Self {
            lon_accel_min: -4.05,
            lon_accel_max: 2.40,
            lat_accel_max: 4.89,
            jerk_max: 8.37,
            yaw_rate_max: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortReport {
    pub ok: bool,
    pub max_lon_accel: f64,
    pub min_lon_accel: f64,
    pub max_lat_accel: f64,
    pub max_jerk: f64,
    pub max_yaw_rate: f64,
}

/// Central finite differences over a position sequence; one-sided at the
/// ends. Returns per-sample derivative vectors.
pub(crate) fn finite_diff(values: &[Vec2], dt: f64) -> Vec<Vec2> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            (values[1] - values[0]) * (1.0 / dt)
        } else if i == n - 1 {
            (values[n - 1] - values[n - 2]) * (1.0 / dt)
        } else {
            (values[i + 1] - values[i - 1]) * (1.0 / (2.0 * dt))
        };
        out.push(d);
    }
    out
}

fn finite_diff_scalar(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / dt
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / dt
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Comfort check on the tracked ego poses: longitudinal/lateral
/// acceleration, jerk magnitude and yaw rate, all from finite differences.
pub fn comfort_score(snapshots: &[Snapshot], dt: f64, limits: &ComfortLimits) -> ComfortReport {
    if snapshots.len() < 3 {
        return ComfortReport {
            ok: true,
            max_lon_accel: 0.0,
            min_lon_accel: 0.0,
            max_lat_accel: 0.0,
            max_jerk: 0.0,
            max_yaw_rate: 0.0,
        };
    }
    let pos: Vec<Vec2> = snapshots.iter().map(|s| s.ego.pose.position()).collect();
    // Unwrap headings for differentiable yaw.
    let mut headings = Vec::with_capacity(snapshots.len());
    let mut acc = snapshots[0].ego.pose.heading;
    headings.push(acc);
    for s in snapshots.iter().skip(1) {
        acc += normalize_angle(s.ego.pose.heading - acc);
        headings.push(acc);
    }

    let vel = finite_diff(&pos, dt);
    let accel = finite_diff(&vel, dt);
    let jerk = finite_diff(&accel, dt);
    let yaw_rate = finite_diff_scalar(&headings, dt);

    let mut report = ComfortReport {
        ok: true,
        max_lon_accel: f64::NEG_INFINITY,
        min_lon_accel: f64::INFINITY,
        max_lat_accel: 0.0,
        max_jerk: 0.0,
        max_yaw_rate: 0.0,
    };
    for i in 0..snapshots.len() {
        let dir = Vec2::unit_from_angle(snapshots[i].ego.pose.heading);
        let lon = accel[i].dot(dir);
        let lat = accel[i].dot(dir.perp());
        report.max_lon_accel = report.max_lon_accel.max(lon);
        report.min_lon_accel = report.min_lon_accel.min(lon);
        report.max_lat_accel = report.max_lat_accel.max(lat.abs());
        report.max_jerk = report.max_jerk.max(jerk[i].norm());
        report.max_yaw_rate = report.max_yaw_rate.max(yaw_rate[i].abs());
    }
    report.ok = report.max_lon_accel <= limits.lon_accel_max
        && report.min_lon_accel >= limits.lon_accel_min
        && report.max_lat_accel <= limits.lat_accel_max
        && report.max_jerk <= limits.jerk_max
        && report.max_yaw_rate <= limits.yaw_rate_max;
    report
}

/// Route progress score: monotone arc-length progress (backward motion
/// never subtracts) normalized by the reference, clamped to [0, 1].
/// Returns (score, progress in meters).
pub fn progress_score(
    snapshots: &[Snapshot],
    route: &Route,
    graph: &LaneGraph,
    reference: f64,
) -> (f64, f64) {
    if snapshots.is_empty() {
        return (0.0, 0.0);
    }
    let start = route.progress_of(snapshots[0].ego.pose.position(), graph);
    let mut max_progress = 0.0f64;
    let mut running = start;
    for s in snapshots {
        let p = route.progress_of(s.ego.pose.position(), graph);
        running = running.max(p);
        max_progress = max_progress.max(running - start);
    }
    ((max_progress / reference.max(1e-9)).clamp(0.0, 1.0), max_progress)
}

/// Speed-limit compliance: one minus the mean per-step overspeed fraction.
pub fn speed_limit_score(snapshots: &[Snapshot], graph: &LaneGraph) -> f64 {
    if snapshots.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for s in snapshots {
        let limit = graph
            .locate(s.ego.pose)
            .map(|(id, _)| graph.lane(id).unwrap().speed_limit);
        if let Some(limit) = limit {
            total += ((s.ego.speed - limit).max(0.0) / limit).min(1.0);
        }
    }
    1.0 - (total / snapshots.len() as f64).clamp(0.0, 1.0)
}
