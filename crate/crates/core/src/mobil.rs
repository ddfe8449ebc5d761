//! MOBIL lane-change criterion for rule-based agents. Exposed for
//! ablations; background agents keep their lane by default.

use crate::idm::{idm_acceleration, select_leader, world_agents, IdmParams, Leader, IDM_MIN_ACCEL};
use crate::map::{LaneGraph, LaneId};
use crate::scenario::AgentState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilParams {
    /// Politeness factor in [0, 1].
    pub politeness: f64,
    /// Acceleration gain required to trigger a change [m/s^2].
    pub changing_threshold: f64,
    /// Safe deceleration bound imposed on the new follower [m/s^2], positive.
    pub b_safe: f64,
}

impl Default for MobilParams {
    fn default() -> Self {
        Self {
            politeness: 0.3,
            changing_threshold: 0.1,
            b_safe: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneChange {
    Keep,
    ChangeLeft,
    ChangeRight,
}

/// IDM acceleration for a hypothetical (lane, arc) placement of `me`.
fn accel_on(
    me: &AgentState,
    lane_id: LaneId,
    arc: f64,
    ego: &AgentState,
    agents: &[AgentState],
    graph: &LaneGraph,
    ip: &IdmParams,
) -> f64 {
    let leader = select_leader(me, lane_id, arc, world_agents(ego, agents), graph);
    let (gap, dv) = match leader {
        Some(Leader { gap, dv, .. }) => (gap.max(1e-3), dv),
        None => (f64::INFINITY, 0.0),
    };
    idm_acceleration(me.speed, gap, dv, ip).unwrap_or(IDM_MIN_ACCEL)
}

/// Nearest agent behind `arc` on the lane corridor, if any.
fn follower_behind<'a>(
    lane_id: LaneId,
    arc: f64,
    exclude: crate::scenario::AgentId,
    ego: &'a AgentState,
    agents: &'a [AgentState],
    graph: &LaneGraph,
) -> Option<(&'a AgentState, f64)> {
    let lane = graph.lane(lane_id)?;
    let mut best: Option<(&AgentState, f64)> = None;
    for a in world_agents(ego, agents) {
        if a.id == exclude {
            continue;
        }
        let proj = lane.centerline.project(a.pose.position());
        if proj.lateral.abs() > lane.width / 2.0 {
            continue;
        }
        let foot = lane.centerline.point_at(proj.arc);
        if (foot - a.pose.position()).norm() > lane.width {
            continue;
        }
        if proj.arc < arc - 1e-9 {
            match best {
                Some((_, barc)) if barc >= proj.arc => {}
                _ => best = Some((a, proj.arc)),
            }
        }
    }
    best
}

/// Evaluate the MOBIL criterion for one agent.
///
/// A change happens when the own acceleration gain plus the politeness-
/// weighted change in follower accelerations exceeds the threshold, and the
/// new follower is not forced below `-b_safe`. Left is checked before
/// right; exact ties keep the lane.
pub fn mobil_decide(
    me: &AgentState,
    ego: &AgentState,
    agents: &[AgentState],
    graph: &LaneGraph,
    mp: &MobilParams,
    ip: &IdmParams,
) -> LaneChange {
    let (lane_id, proj) = match graph.locate(me.pose) {
        Some(x) => x,
        None => return LaneChange::Keep,
    };
    let lane = graph.lane(lane_id).unwrap();
    let a_old = accel_on(me, lane_id, proj.arc, ego, agents, graph, ip);

    let old_follower = follower_behind(lane_id, proj.arc, me.id, ego, agents, graph);

    for (target, change) in [
        (lane.left_neighbor, LaneChange::ChangeLeft),
        (lane.right_neighbor, LaneChange::ChangeRight),
    ] {
        let target_id = match target {
            Some(t) => t,
            None => continue,
        };
        let target_lane = graph.lane(target_id).unwrap();
        let target_arc = target_lane.centerline.project(me.pose.position()).arc;

        let a_new = accel_on(me, target_id, target_arc, ego, agents, graph, ip);

        // New follower: its deceleration with me in front must stay safe.
        let mut follower_delta = 0.0;
        let mut safe = true;
        if let Some((nf, nf_arc)) = follower_behind(target_id, target_arc, me.id, ego, agents, graph)
        {
            let before = accel_on(nf, target_id, nf_arc, ego, agents, graph, ip);
            // After the change, I am the follower's new leader.
            let gap = (target_arc - nf_arc) - (nf.length + me.length) / 2.0;
            let after = idm_acceleration(nf.speed, gap.max(1e-3), nf.speed - me.speed, ip)
                .unwrap_or(IDM_MIN_ACCEL);
            safe = after >= -mp.b_safe;
            follower_delta += after - before;
        }
        // Old follower is relieved by my departure.
        if let Some((of, of_arc)) = &old_follower {
            let before = accel_on(of, lane_id, *of_arc, ego, agents, graph, ip);
            let without_me: Vec<AgentState> = agents
                .iter()
                .filter(|a| a.id != me.id)
                .copied()
                .collect();
            let (ego_f, rest): (&AgentState, &[AgentState]) = if ego.id == me.id {
                // The ego never lane-changes through this path, but keep
                // the arithmetic total if it ever does.
                (of, &without_me)
            } else {
                (ego, &without_me)
            };
            let after = accel_on(of, lane_id, *of_arc, ego_f, rest, graph, ip);
            follower_delta += after - before;
        }

        let gain = (a_new - a_old) + mp.politeness * follower_delta;
        if safe && gain > mp.changing_threshold {
            return change;
        }
    }
    LaneChange::Keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Pose2D, Vec2};
    use crate::map::{Lane, Polyline};
    use crate::scenario::{AgentId, AgentKind};

    fn agent(id: u64, x: f64, y: f64, speed: f64) -> AgentState {
        AgentState {
            id: AgentId(id),
            pose: Pose2D::new(x, y, 0.0),
            speed,
            acceleration: 0.0,
            length: 4.0,
            width: 1.8,
            kind: AgentKind::Vehicle,
        }
    }

    fn graph(lanes: u32) -> LaneGraph {
        let mut v = Vec::new();
        for i in 0..lanes {
            v.push(Lane {
                id: LaneId(i),
                centerline: Polyline::new(vec![
                    Vec2::new(0.0, 3.5 * i as f64),
                    Vec2::new(500.0, 3.5 * i as f64),
                ]),
                width: 3.5,
                speed_limit: 15.0,
                successors: vec![],
                left_neighbor: if i + 1 < lanes { Some(LaneId(i + 1)) } else { None },
                right_neighbor: if i > 0 { Some(LaneId(i - 1)) } else { None },
            });
        }
        LaneGraph::new(v).unwrap()
    }

    #[test]
    fn no_neighbors_keeps_lane() {
        let g = graph(1);
        let me = agent(1, 50.0, 0.0, 10.0);
        let ego = agent(9, 400.0, 0.0, 0.0);
        let slow = agent(2, 60.0, 0.0, 2.0);
        let d = mobil_decide(
            &me,
            &ego,
            &[slow],
            &g,
            &MobilParams::default(),
            &IdmParams::default(),
        );
        assert_eq!(d, LaneChange::Keep);
    }

    #[test]
    fn blocked_with_empty_left_lane_changes_left() {
        let g = graph(2);
        let me = agent(1, 50.0, 0.0, 12.0);
        let slow = agent(2, 62.0, 0.0, 2.0);
        let ego = agent(9, 400.0, 3.5, 0.0);
        let mp = MobilParams {
            politeness: 0.0,
            changing_threshold: 0.1,
            b_safe: 4.0,
        };
        let ip = IdmParams::default();
        // Oracle: evaluate both branches numerically.
        let a_old = idm_acceleration(12.0, 12.0 - 4.0, 10.0, &ip).unwrap();
        let a_new = idm_acceleration(12.0, f64::INFINITY, 0.0, &ip).unwrap();
        assert!(a_new - a_old > mp.changing_threshold);
        let d = mobil_decide(&me, &ego, &[slow], &g, &mp, &ip);
        assert_eq!(d, LaneChange::ChangeLeft);
    }

    #[test]
    fn identical_gain_keeps_lane() {
        // Free road on the current lane: zero gain in every direction,
        // strictly-greater threshold test keeps the lane.
        let g = graph(3);
        let me = agent(1, 50.0, 3.5, 15.0);
        let ego = agent(9, 400.0, 0.0, 0.0);
        let mp = MobilParams {
            politeness: 0.0,
            changing_threshold: 0.0,
            b_safe: 4.0,
        };
        let d = mobil_decide(&me, &ego, &[], &g, &mp, &IdmParams::default());
        assert_eq!(d, LaneChange::Keep);
    }

    #[test]
    fn unsafe_for_new_follower_blocks_change() {
        let g = graph(2);
        let me = agent(1, 50.0, 0.0, 5.0);
        let slow = agent(2, 58.0, 0.0, 1.0);
        // Fast follower right behind the target slot.
        let chaser = agent(3, 47.0, 3.5, 20.0);
        let ego = agent(9, 400.0, 3.5, 0.0);
        let mp = MobilParams {
            politeness: 0.0,
            changing_threshold: 0.1,
            b_safe: 2.0,
        };
        let d = mobil_decide(&me, &ego, &[slow, chaser], &g, &mp, &IdmParams::default());
        assert_eq!(d, LaneChange::Keep);
    }
}
