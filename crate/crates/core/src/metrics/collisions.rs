//! Ego collision detection and at-fault classification.

use crate::engine::Snapshot;
use crate::geom::{clip_convex, obb_overlap, polygon_centroid, Vec2};
use crate::map::{LaneGraph, Route};
use crate::scenario::AgentId;
use serde::{Deserialize, Serialize};

/// First contact between the ego and one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub step: u32,
    pub other: AgentId,
    /// Centroid of the contact region, expressed in the ego frame at the
    /// moment of first contact (x forward, y left).
    pub contact_local: Vec2,
}

/// Scan a rollout for ego-agent footprint overlaps; one event per agent,
/// at the first overlapping step.
pub fn detect_collisions(snapshots: &[Snapshot]) -> Vec<CollisionEvent> {
    let mut events: Vec<CollisionEvent> = Vec::new();
    let mut hit: std::collections::BTreeSet<AgentId> = Default::default();
    for snap in snapshots {
        let ego_rect = snap.ego.footprint();
        for agent in &snap.agents {
            if hit.contains(&agent.id) {
                continue;
            }
            let rect = agent.footprint();
            // Cheap reject before the SAT test.
            let d = rect.center - ego_rect.center;
            let r = rect.bounding_radius() + ego_rect.bounding_radius();
            if d.norm2() > r * r {
                continue;
            }
            if obb_overlap(&ego_rect, &rect) {
                let inter = clip_convex(&rect.corners(), &ego_rect.corners());
                let centroid_world = if inter.is_empty() {
                    // Touching configurations can clip to nothing; fall
                    // back to the midpoint of the centers.
                    (ego_rect.center + rect.center) * 0.5
                } else {
                    polygon_centroid(&inter)
                };
                events.push(CollisionEvent {
                    step: snap.step_index,
                    other: agent.id,
                    contact_local: snap.ego.pose.to_local(centroid_world),
                });
                hit.insert(agent.id);
            }
        }
    }
    events
}

/// At-fault rule: front contact while moving, or contact while the ego's
/// footprint center is outside its route-lane corridor.
pub fn classify_at_fault(
    event: &CollisionEvent,
    snapshots: &[Snapshot],
    route: &Route,
    graph: &LaneGraph,
) -> bool {
    let snap = snapshots
        .iter()
        .find(|s| s.step_index == event.step)
        .expect("event step exists in log");
    let moving_front = event.contact_local.x >= 0.0 && snap.ego.speed >= 0.1;
    let outside_corridor = !route.corridor_contains(snap.ego.pose.position(), graph);
    moving_front || outside_corridor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose2D;
    use crate::scenario::tests_support::straight_scenario;
    use crate::scenario::{AgentKind, AgentState};

    fn snap(step: u32, ego_x: f64, ego_speed: f64, agents: Vec<AgentState>) -> Snapshot {
        Snapshot {
            step_index: step,
            sim_time: step as f64 * 0.1,
            ego: AgentState {
                id: AgentId(0),
                pose: Pose2D::new(ego_x, 0.0, 0.0),
                speed: ego_speed,
                acceleration: 0.0,
                length: 4.0,
                width: 1.8,
                kind: AgentKind::Vehicle,
            },
            agents,
        }
    }

    fn car(id: u64, x: f64, y: f64) -> AgentState {
        AgentState {
            id: AgentId(id),
            pose: Pose2D::new(x, y, 0.0),
            speed: 0.0,
            acceleration: 0.0,
            length: 4.0,
            width: 1.8,
            kind: AgentKind::Vehicle,
        }
    }

    #[test]
    fn clean_rollout_has_no_events() {
        let snaps: Vec<Snapshot> = (0..50)
            .map(|k| snap(k, k as f64, 10.0, vec![car(1, 100.0, 0.0)]))
            .collect();
        assert!(detect_collisions(&snaps).is_empty());
    }

    #[test]
    fn one_event_at_first_contact() {
        // Agent driven through the ego: contact begins when the gap closes
        // to zero and must be reported exactly once.
        let snaps: Vec<Snapshot> = (0..30)
            .map(|k| snap(k, 0.0, 0.0, vec![car(1, 12.0 - k as f64, 0.0)]))
            .collect();
        let events = detect_collisions(&snaps);
        assert_eq!(events.len(), 1);
        // Touching at bumper distance 4.0 -> x = 12 - k = 4 -> k = 8.
        assert_eq!(events[0].step, 8);
        assert_eq!(events[0].other, AgentId(1));
    }

    #[test]
    fn grazing_pass_is_clean() {
        // Parallel pass with 1 cm lateral clearance.
        let snaps: Vec<Snapshot> = (0..60)
            .map(|k| snap(k, 0.0, 0.0, vec![car(1, 20.0 - k as f64, 1.81)]))
            .collect();
        assert!(detect_collisions(&snaps).is_empty());
    }

    #[test]
    fn rear_ending_is_at_fault_being_struck_is_not() {
        let scn = straight_scenario(10.0);
        // Ego moving, contact centroid in front.
        let snaps = vec![snap(0, 10.0, 5.0, vec![car(1, 14.0, 0.0)])];
        let events = detect_collisions(&snaps);
        assert_eq!(events.len(), 1);
        assert!(events[0].contact_local.x > 0.0);
        assert!(classify_at_fault(&events[0], &snaps, &scn.route, &scn.lane_graph));

        // Stopped ego struck from behind: rear centroid, speed < 0.1.
        let snaps = vec![snap(0, 10.0, 0.0, vec![car(1, 6.0, 0.0)])];
        let events = detect_collisions(&snaps);
        assert_eq!(events.len(), 1);
        assert!(events[0].contact_local.x < 0.0);
        assert!(!classify_at_fault(&events[0], &snaps, &scn.route, &scn.lane_graph));
    }

    #[test]
    fn out_of_corridor_contact_is_at_fault() {
        let scn = straight_scenario(10.0);
        // Ego far off the single 3.5 m lane (corridor is |y| <= 1.75).
        let mut s = snap(0, 10.0, 0.0, vec![]);
        s.ego.pose = Pose2D::new(10.0, 6.0, 0.0);
        s.agents = vec![car(1, 6.5, 6.0)];
        let snaps = vec![s];
        let events = detect_collisions(&snaps);
        assert_eq!(events.len(), 1);
        // Rear contact and stopped, but outside the route corridor.
        assert!(classify_at_fault(&events[0], &snaps, &scn.route, &scn.lane_graph));
    }
}
