//! Rule-based car-following planner: an IDM speed profile swept along the
//! route centerline. Reacts only to agents whose footprint touches the
//! route corridor, so adjacent-lane traffic is invisible to it.

use super::{Planner, PlannerError, PlannerObservation};
use crate::engine::PlannedTrajectory;
use crate::geom::point_in_polygon;
use crate::idm::{idm_acceleration, IdmParams, IDM_MIN_ACCEL, LEADER_LOOKAHEAD};
use crate::scenario::AgentState;
use serde::{Deserialize, Serialize};

const HORIZON_STEPS: usize = 40;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmPlanner {
    pub params: IdmParams,
    /// Take the desired speed from the target lane's speed limit.
    pub v0_from_speed_limit: bool,
}

impl Default for IdmPlanner {
    fn default() -> Self {
        Self {
            params: IdmParams::default(),
            v0_from_speed_limit: true,
        }
    }
}

impl IdmPlanner {
    /// Leader: the nearest agent whose footprint intersects the route
    /// corridor, projected ahead of the ego along the route path.
    fn route_leader(
        &self,
        obs: &PlannerObservation,
        path: &crate::map::Polyline,
        ego_arc: f64,
    ) -> Option<(f64, f64)> {
        let ego = &obs.world.ego;
        let mut best: Option<(f64, &AgentState)> = None;
        for agent in &obs.world.agents {
            if !footprint_touches_route(agent, obs) {
                continue;
            }
            let proj = path.project(agent.pose.position());
            let dist = proj.arc - ego_arc;
            if dist <= 1e-9 || dist > LEADER_LOOKAHEAD {
                continue;
            }
            match best {
                Some((d, b)) if (d, b.id) <= (dist, agent.id) => {}
                _ => best = Some((dist, agent)),
            }
        }
        best.map(|(dist, leader)| {
            (
                dist - (ego.length + leader.length) / 2.0,
                ego.speed - leader.speed,
            )
        })
    }
}

fn footprint_touches_route(agent: &AgentState, obs: &PlannerObservation) -> bool {
    let mut probes = agent.footprint().corners().to_vec();
    probes.push(agent.pose.position());
    obs.route.lanes().iter().any(|lane| {
        let poly = obs.lane_graph.polygon(*lane).unwrap();
        probes.iter().any(|p| point_in_polygon(*p, poly))
    })
}

impl Planner for IdmPlanner {
    fn name(&self) -> &'static str {
        "idm"
    }

    fn plan(&mut self, obs: &PlannerObservation) -> Result<PlannedTrajectory, PlannerError> {
        let ego = &obs.world.ego;
        // Off-route recovery: the projection clamps to the nearest route
        // point, so planning always starts from the route.
        let target_lane = obs.route.target_lane_at(ego.pose.position(), obs.lane_graph);
        let path = obs.route.path_from(target_lane, obs.lane_graph);
        let ego_proj = path.project(ego.pose.position());

        let mut params = self.params;
        if self.v0_from_speed_limit {
            params.v0 = obs.lane_graph.lane(target_lane).unwrap().speed_limit;
        }
        let leader = self.route_leader(obs, &path, ego_proj.arc);

        let mut v = ego.speed;
        let mut arc = ego_proj.arc;
        let mut poses = Vec::with_capacity(HORIZON_STEPS + 1);
        poses.push((ego.pose, v));
        let (lead_gap0, lead_dv) = leader.unwrap_or((f64::INFINITY, 0.0));
        let lead_speed = v - lead_dv;
        for i in 1..=HORIZON_STEPS {
            let t = i as f64 * obs.dt;
            // Leader assumed to continue at constant speed.
            let gap = if lead_gap0.is_infinite() {
                f64::INFINITY
            } else {
                (lead_gap0 + lead_speed * t - (arc - ego_proj.arc)).max(0.1)
            };
            let a = idm_acceleration(v, gap, v - lead_speed, &params).unwrap_or(IDM_MIN_ACCEL);
            v = (v + a * obs.dt).max(0.0);
            arc += v * obs.dt;
            let pos = path.point_at(arc);
            let heading = path.tangent_at(arc);
            poses.push((crate::geom::Pose2D::new(pos.x, pos.y, heading), v));
        }
        Ok(PlannedTrajectory::from_poses(obs.sim_time, obs.dt, poses))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::WorldState;
    use crate::geom::Pose2D;
    use crate::scenario::tests_support::{straight_scenario, two_lane_scenario};
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

    fn obs<'a>(scn: &'a crate::scenario::Scenario, world: &'a WorldState) -> PlannerObservation<'a> {
        PlannerObservation {
            world,
            lane_graph: &scn.lane_graph,
            route: &scn.route,
            logged_ego: None,
            sim_time: world.sim_time,
            dt: scn.dt,
        }
    }

    #[test]
    fn free_road_at_limit_is_constant_speed() {
        let mut scn = straight_scenario(13.89);
        scn.ego.speed = 13.89;
        let world = WorldState::initial(&scn);
        let mut p = IdmPlanner::default();
        let traj = p.plan(&obs(&scn, &world)).unwrap();
        for s in &traj.samples {
            assert!((s.speed - 13.89).abs() < 1e-9);
            assert!(s.pose.y.abs() < 1e-9);
        }
    }

    #[test]
    fn decelerates_behind_stopped_leader() {
        let mut scn = straight_scenario(10.0);
        scn.agents.push(agent(5, 35.0, 0.0, 0.0));
        let world = WorldState::initial(&scn);
        let mut p = IdmPlanner::default();
        let traj = p.plan(&obs(&scn, &world)).unwrap();
        let last = traj.samples.last().unwrap();
        assert!(last.speed < 10.0, "should brake, got {}", last.speed);
        // Profile stays on the centerline.
        assert!(traj.samples.iter().all(|s| s.pose.y.abs() < 1e-9));
    }

    #[test]
    fn adjacent_lane_leader_is_ignored() {
        let mut scn = two_lane_scenario(10.0, 13.89);
        scn.ego.speed = 10.0;
        let free_world = WorldState::initial(&scn);
        let mut p = IdmPlanner::default();
        let free = p.plan(&obs(&scn, &free_world)).unwrap();

        // Same scene plus a slow car in the adjacent lane only.
        scn.agents.push(agent(5, 20.0, 3.5, 1.0));
        let world = WorldState::initial(&scn);
        let with_neighbor = p.plan(&obs(&scn, &world)).unwrap();
        assert_eq!(free.samples, with_neighbor.samples);
    }
}
