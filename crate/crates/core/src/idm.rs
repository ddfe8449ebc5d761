//! Intelligent Driver Model background agents.
//!
//! Leader selection is deliberately restricted to the agent's own lane and
//! its successors: vehicles in adjacent lanes are invisible until their
//! footprint center enters the lane corridor. This mirrors the passive
//! behavior the learned background is meant to contrast with.

use crate::geom::normalize_angle;
use crate::map::{LaneGraph, LaneId};
use crate::scenario::{AgentId, AgentState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard floor for the returned acceleration.
pub const IDM_MIN_ACCEL: f64 = -10.0;
/// Arc-length horizon of the leader search.
pub const LEADER_LOOKAHEAD: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Desired free-flow speed [m/s].
    pub v0: f64,
    /// Desired time headway [s].
    pub time_headway: f64,
    /// Minimum standstill gap [m].
    pub min_gap: f64,
    /// Maximum acceleration [m/s^2].
    pub a_max: f64,
    /// Comfortable deceleration [m/s^2], positive.
    pub b_comfort: f64,
    /// Free-flow acceleration exponent.
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 15.0,
            time_headway: 1.5,
            min_gap: 2.0,
            a_max: 1.5,
            b_comfort: 2.0,
            delta: 4.0,
        }
    }
}

impl IdmParams {
    /// Default parameter set with the desired speed taken from the lane.
    pub fn for_speed_limit(v0: f64) -> Self {
        Self {
            v0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IdmError {
    #[error("overlapping leader: gap {0} <= 0 with a leader present")]
    OverlappingLeader(f64),
}

/// IDM longitudinal acceleration.
///
/// `gap` is the bumper-to-bumper distance to the leader; `f64::INFINITY`
/// encodes a free road. `dv` is the closing speed (own speed minus leader
/// speed). The result is clamped to [`IDM_MIN_ACCEL`].
pub fn idm_acceleration(v: f64, gap: f64, dv: f64, p: &IdmParams) -> Result<f64, IdmError> {
    if gap <= 0.0 {
        return Err(IdmError::OverlappingLeader(gap));
    }
    let free_term = (v / p.v0).powf(p.delta);
    let interaction = if gap.is_infinite() {
        0.0
    } else {
        let desired_gap =
            p.min_gap + (v * p.time_headway + v * dv / (2.0 * (p.a_max * p.b_comfort).sqrt())).max(0.0);
        (desired_gap / gap).powi(2)
    };
    Ok((p.a_max * (1.0 - free_term - interaction)).max(IDM_MIN_ACCEL))
}

/// The leader as seen by an IDM agent, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    pub id: AgentId,
    /// Bumper-to-bumper arc distance [m].
    pub gap: f64,
    /// Closing speed (follower speed minus leader speed) [m/s].
    pub dv: f64,
}

/// Snapshot view of everything an agent can react to: the ego plus the
/// other background agents.
pub fn world_agents<'a>(
    ego: &'a AgentState,
    agents: &'a [AgentState],
) -> impl Iterator<Item = &'a AgentState> {
    std::iter::once(ego).chain(agents.iter())
}

/// Nearest agent ahead on the given lane or its successors, within
/// [`LEADER_LOOKAHEAD`] meters of arc distance. Only agents whose footprint
/// center lies inside the lane corridor are considered; anything in a
/// neighbor lane is ignored regardless of proximity.
pub fn select_leader<'a, I>(
    me: &AgentState,
    lane_id: LaneId,
    arc: f64,
    others: I,
    graph: &LaneGraph,
) -> Option<Leader>
where
    I: Iterator<Item = &'a AgentState>,
{
    let others: Vec<&AgentState> = others.filter(|a| a.id != me.id).collect();
    let mut best: Option<(f64, &AgentState)> = None;

    // Walk the successor chain, accumulating the arc offset of each lane
    // start relative to the agent's position.
    let mut lane = match graph.lane(lane_id) {
        Some(l) => l,
        None => return None,
    };
    let mut offset = -arc;
    let mut remaining = LEADER_LOOKAHEAD + arc;
    loop {
        for other in &others {
            let proj = lane.centerline.project(other.pose.position());
            if proj.lateral.abs() > lane.width / 2.0 {
                continue;
            }
            // Reject clamped projections (the point is off the lane ends).
            let foot = lane.centerline.point_at(proj.arc);
            if (foot - other.pose.position()).norm() > lane.width {
                continue;
            }
            let dist = offset + proj.arc;
            if dist <= 1e-9 || dist > LEADER_LOOKAHEAD {
                continue;
            }
            match best {
                Some((d, b)) if (d, b.id) <= (dist, other.id) => {}
                _ => best = Some((dist, other)),
            }
        }
        remaining -= lane.length();
        if remaining <= 0.0 {
            break;
        }
        offset += lane.length();
        // Deterministic choice among successors: lowest id.
        match lane.successors.iter().min() {
            Some(next) => lane = graph.lane(*next).unwrap(),
            None => break,
        }
    }

    best.map(|(dist, leader)| Leader {
        id: leader.id,
        gap: dist - (me.length + leader.length) / 2.0,
        dv: me.speed - leader.speed,
    })
}

/// Advance one IDM-controlled agent by one tick along its lane centerline.
///
/// Speed is updated first (semi-implicit Euler, clamped at zero), then the
/// position advances by the updated speed. Heading follows the local
/// centerline tangent; there is no lateral motion. Agents that cannot be
/// mapped to a lane, or that run off the end of the graph, continue at
/// constant velocity.
pub fn idm_agent_step(
    me: &AgentState,
    ego: &AgentState,
    agents: &[AgentState],
    graph: &LaneGraph,
    params: &IdmParams,
    dt: f64,
) -> AgentState {
    let located = graph.locate(me.pose);
    let (lane_id, proj) = match located {
        Some(x) => x,
        None => return ballistic_step(me, dt),
    };
    let leader = select_leader(me, lane_id, proj.arc, world_agents(ego, agents), graph);
    let (gap, dv) = match leader {
        Some(l) => (l.gap, l.dv),
        None => (f64::INFINITY, 0.0),
    };
    // An already-overlapping leader is a collision for the metrics to
    // judge; the agent itself just brakes as hard as the model allows.
    let accel = idm_acceleration(me.speed, gap.max(1e-3), dv, params).unwrap_or(IDM_MIN_ACCEL);
    let new_speed = (me.speed + accel * dt).max(0.0);
    advance_along_lane(me, lane_id, proj.arc, new_speed, accel, graph, dt)
}

/// Move an agent `speed * dt` meters along the centerline starting from
/// `arc` on `lane_id`, hopping across successor links.
pub fn advance_along_lane(
    me: &AgentState,
    lane_id: LaneId,
    arc: f64,
    speed: f64,
    accel: f64,
    graph: &LaneGraph,
    dt: f64,
) -> AgentState {
    let mut lane = graph.lane(lane_id).unwrap();
    let mut s = arc + speed * dt;
    while s > lane.length() {
        match lane.successors.iter().min() {
            Some(next) => {
                s -= lane.length();
                lane = graph.lane(*next).unwrap();
            }
            None => {
                // Off the end of the graph: ballistic continuation.
                let overshoot = s - lane.length();
                let end = lane.centerline.point_at(lane.length());
                let h = lane.centerline.tangent_at(lane.length());
                let pos = end + crate::geom::Vec2::unit_from_angle(h) * overshoot;
                return AgentState {
                    pose: crate::geom::Pose2D::new(pos.x, pos.y, h),
                    speed,
                    acceleration: accel,
                    ..*me
                };
            }
        }
    }
    let pos = lane.centerline.point_at(s);
    let heading = lane.centerline.tangent_at(s);
    AgentState {
        pose: crate::geom::Pose2D::new(pos.x, pos.y, heading),
        speed,
        acceleration: accel,
        ..*me
    }
}

pub(crate) fn ballistic_step(me: &AgentState, dt: f64) -> AgentState {
    let pos = me.pose.position() + me.velocity() * dt;
    AgentState {
        pose: crate::geom::Pose2D::new(pos.x, pos.y, me.pose.heading),
        acceleration: 0.0,
        ..*me
    }
}

/// Heading error of an agent against its lane tangent; used by tests.
pub fn heading_error_on_lane(me: &AgentState, graph: &LaneGraph) -> Option<f64> {
    let (lane_id, proj) = graph.locate(me.pose)?;
    let _ = lane_id;
    Some(normalize_angle(me.pose.heading - proj.tangent_heading))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Pose2D, Vec2};
    use crate::map::{Lane, Polyline};
    use crate::scenario::AgentKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

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

    fn two_lane_graph() -> LaneGraph {
        let mut a = Lane {
            id: LaneId(0),
            centerline: Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(400.0, 0.0)]),
            width: 3.5,
            speed_limit: 15.0,
            successors: vec![],
            left_neighbor: Some(LaneId(1)),
            right_neighbor: None,
        };
        let mut b = a.clone();
        b.id = LaneId(1);
        b.centerline = Polyline::new(vec![Vec2::new(0.0, 3.5), Vec2::new(400.0, 3.5)]);
        b.left_neighbor = None;
        b.right_neighbor = Some(LaneId(0));
        a.left_neighbor = Some(LaneId(1));
        LaneGraph::new(vec![a, b]).unwrap()
    }

    #[test]
    fn equilibrium_speed_gives_zero_accel() {
        let p = IdmParams::default();
        let a = idm_acceleration(p.v0, f64::INFINITY, 0.0, &p).unwrap();
        assert_relative_eq!(a, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn standstill_free_road_gives_max_accel() {
        let p = IdmParams::default();
        let a = idm_acceleration(0.0, f64::INFINITY, 0.0, &p).unwrap();
        assert_relative_eq!(a, p.a_max, epsilon = 1e-12);
    }

    #[test]
    fn free_road_below_desired_speed() {
        // 1.5 * (1 - (10/15)^4) = 97.5/81.
        let p = IdmParams {
            v0: 15.0,
            a_max: 1.5,
            ..IdmParams::default()
        };
        let a = idm_acceleration(10.0, f64::INFINITY, 0.0, &p).unwrap();
        assert_relative_eq!(a, 97.5 / 81.0, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_leader_is_an_error() {
        let p = IdmParams::default();
        assert_eq!(
            idm_acceleration(5.0, 0.0, 0.0, &p),
            Err(IdmError::OverlappingLeader(0.0))
        );
    }

    #[test]
    fn braking_behind_stopped_leader_at_min_gap() {
        let p = IdmParams::default();
        // At v > 0 and gap = s0 the desired gap exceeds the actual gap.
        let a = idm_acceleration(5.0, p.min_gap, 5.0, &p).unwrap();
        assert!(a < 0.0, "expected deceleration, got {a}");
    }

    proptest! {
        #[test]
        fn monotone_in_gap_and_closing_speed(
            v in 0.0f64..25.0,
            gap in 1.0f64..80.0,
            dgap in 0.1f64..20.0,
            dv in -5.0f64..5.0,
            ddv in 0.1f64..5.0,
        ) {
            let p = IdmParams::default();
            let base = idm_acceleration(v, gap, dv, &p).unwrap();
            // Larger gap -> no less acceleration.
            let wider = idm_acceleration(v, gap + dgap, dv, &p).unwrap();
            prop_assert!(wider >= base - 1e-12);
            // Faster closing -> no more acceleration.
            let closing = idm_acceleration(v, gap, dv + ddv, &p).unwrap();
            prop_assert!(closing <= base + 1e-12);
        }
    }

    #[test]
    fn single_agent_has_no_leader() {
        let g = two_lane_graph();
        let me = agent(1, 50.0, 0.0, 10.0);
        let leader = select_leader(&me, LaneId(0), 50.0, [].iter(), &g);
        assert!(leader.is_none());
    }

    #[test]
    fn leader_gap_is_bumper_to_bumper() {
        let g = two_lane_graph();
        let me = agent(1, 50.0, 0.0, 10.0);
        let lead = agent(2, 70.0, 0.0, 8.0);
        let others = [lead];
        let l = select_leader(&me, LaneId(0), 50.0, others.iter(), &g).unwrap();
        assert_eq!(l.id, AgentId(2));
        assert_relative_eq!(l.gap, 16.0, epsilon = 1e-9);
        assert_relative_eq!(l.dv, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn adjacent_lane_vehicle_is_invisible() {
        // A vehicle 2 m ahead but in the left neighbor lane, center still
        // outside this lane's corridor: never a leader.
        let g = two_lane_graph();
        let me = agent(1, 50.0, 0.0, 10.0);
        let merging = agent(2, 52.0, 2.2, 10.0); // corridor edge is 1.75
        let others = [merging];
        assert!(select_leader(&me, LaneId(0), 50.0, others.iter(), &g).is_none());
        // Once the center crosses into the corridor it becomes visible.
        let inside = agent(2, 52.0, 1.5, 10.0);
        let others = [inside];
        assert!(select_leader(&me, LaneId(0), 50.0, others.iter(), &g).is_some());
    }

    #[test]
    fn leader_search_beyond_lookahead_is_empty() {
        let g = two_lane_graph();
        let me = agent(1, 10.0, 0.0, 10.0);
        let far = agent(2, 10.0 + 120.0, 0.0, 8.0);
        let others = [far];
        assert!(select_leader(&me, LaneId(0), 10.0, others.iter(), &g).is_none());
    }

    #[test]
    fn leader_found_across_successor_link() {
        let mut a = Lane {
            id: LaneId(0),
            centerline: Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(60.0, 0.0)]),
            width: 3.5,
            speed_limit: 15.0,
            successors: vec![LaneId(1)],
            left_neighbor: None,
            right_neighbor: None,
        };
        let b = Lane {
            id: LaneId(1),
            centerline: Polyline::new(vec![Vec2::new(60.0, 0.0), Vec2::new(160.0, 0.0)]),
            width: 3.5,
            speed_limit: 15.0,
            successors: vec![],
            left_neighbor: None,
            right_neighbor: None,
        };
        a.successors = vec![LaneId(1)];
        let g = LaneGraph::new(vec![a, b]).unwrap();
        let me = agent(1, 40.0, 0.0, 10.0);
        let lead = agent(2, 80.0, 0.0, 9.0);
        let others = [lead];
        let l = select_leader(&me, LaneId(0), 40.0, others.iter(), &g).unwrap();
        assert_relative_eq!(l.gap, 36.0, epsilon = 1e-9);
    }

    #[test]
    fn free_agent_advances_at_desired_speed() {
        let g = two_lane_graph();
        let p = IdmParams::default();
        let me = agent(1, 50.0, 0.0, p.v0);
        let ego = agent(99, 300.0, 3.5, 0.0);
        let next = idm_agent_step(&me, &ego, &[], &g, &p, 0.1);
        assert_relative_eq!(next.pose.x, 50.0 + p.v0 * 0.1, epsilon = 1e-9);
        assert_relative_eq!(next.pose.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(next.speed, p.v0, epsilon = 1e-9);
    }

    #[test]
    fn agent_decelerates_behind_stopped_leader() {
        let g = two_lane_graph();
        let p = IdmParams::default();
        let me = agent(1, 50.0, 0.0, 8.0);
        let stopped = agent(2, 60.0, 0.0, 0.0);
        let ego = agent(99, 300.0, 3.5, 0.0);
        let next = idm_agent_step(&me, &ego, &[stopped], &g, &p, 0.1);
        assert!(next.speed < me.speed);
        assert!(next.acceleration < 0.0);
    }

    #[test]
    fn agent_continues_onto_successor() {
        let a = Lane {
            id: LaneId(0),
            centerline: Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0)]),
            width: 3.5,
            speed_limit: 15.0,
            successors: vec![LaneId(1)],
            left_neighbor: None,
            right_neighbor: None,
        };
        let b = Lane {
            id: LaneId(1),
            centerline: Polyline::new(vec![Vec2::new(30.0, 0.0), Vec2::new(130.0, 0.0)]),
            width: 3.5,
            speed_limit: 15.0,
            successors: vec![],
            left_neighbor: None,
            right_neighbor: None,
        };
        let g = LaneGraph::new(vec![a, b]).unwrap();
        let p = IdmParams::default();
        let me = agent(1, 29.5, 0.0, 15.0);
        let ego = agent(99, 120.0, 3.5, 0.0);
        let next = idm_agent_step(&me, &ego, &[], &g, &p, 0.1);
        assert!(next.pose.x > 30.0, "agent should cross onto the successor");
        assert_relative_eq!(next.pose.y, 0.0, epsilon = 1e-12);
    }

    proptest! {
        /// Perturbing vehicles that stay outside the lane corridor never
        /// changes the selected leader.
        #[test]
        fn blind_to_out_of_corridor_perturbations(
            lead_x in 20.0f64..90.0,
            outside_x in 0.0f64..380.0,
            outside_y in prop::sample::select(vec![2.0f64, 2.5, 3.0, 3.5, -2.0, -2.6]),
        ) {
            let g = two_lane_graph();
            let me = agent(1, 10.0, 0.0, 10.0);
            let lead = agent(2, 10.0 + lead_x, 0.0, 8.0);
            let base = [lead];
            let with_noise = [lead, agent(3, outside_x, outside_y, 12.0)];
            let a = select_leader(&me, LaneId(0), 10.0, base.iter(), &g);
            let b = select_leader(&me, LaneId(0), 10.0, with_noise.iter(), &g);
            prop_assert_eq!(a, b);
        }
    }
}
