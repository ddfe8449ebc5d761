//! Synthetic scenario suites with scripted expert logs: car following,
//! lane changes, merges, a light intersection crossing, and the crafted
//! adjacent-lane cut-in scene used for the reactivity comparison.
//!
//! Every generated scenario carries logged futures for the ego and all
//! background agents, produced by rolling the scripts out at 10 Hz. The
//! logs serve as replay backgrounds, expert references for ADE/progress,
//! and the training corpus of the learned agent.

use crate::geom::{Pose2D, Vec2};
use crate::idm::{idm_acceleration, IdmParams};
use crate::map::{Lane, LaneGraph, LaneId, Polyline, Route};
use crate::scenario::{
    AgentId, AgentKind, AgentState, LoggedFutures, Scenario, TrajectorySample,
    DEFAULT_DT, DEFAULT_HORIZON_STEPS,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const LANE_WIDTH: f64 = 3.5;
const CAR_LENGTH: f64 = 4.5;
const CAR_WIDTH: f64 = 1.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    CarFollowing,
    LaneChange,
    Merge,
    IntersectionLite,
}

impl SuiteKind {
    pub fn tag(self) -> &'static str {
        match self {
            SuiteKind::CarFollowing => "car_following",
            SuiteKind::LaneChange => "lane_change",
            SuiteKind::Merge => "merge",
            SuiteKind::IntersectionLite => "intersection_lite",
        }
    }
}

impl std::str::FromStr for SuiteKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "car_following" => Ok(SuiteKind::CarFollowing),
            "lane_change" => Ok(SuiteKind::LaneChange),
            "merge" => Ok(SuiteKind::Merge),
            "intersection_lite" => Ok(SuiteKind::IntersectionLite),
            other => Err(format!("unknown suite kind '{other}'")),
        }
    }
}

/// Generate `n` seeded variations of one scenario kind.
pub fn generate_suite(kind: SuiteKind, n: usize, seed: u64) -> Vec<Scenario> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(
                seed,
                &[kind.tag(), &i.to_string()],
            ));
            match kind {
                SuiteKind::CarFollowing => car_following(i, &mut rng),
                SuiteKind::LaneChange => lane_change(i, &mut rng),
                SuiteKind::Merge => merge(i, &mut rng),
                SuiteKind::IntersectionLite => intersection_lite(i, &mut rng),
            }
        })
        .collect()
}

/// The smoothstep used by all scripted lateral maneuvers.
pub fn quintic(f: f64) -> f64 {
    let f = f.clamp(0.0, 1.0);
    f * f * f * (10.0 - 15.0 * f + 6.0 * f * f)
}

// ---------------------------------------------------------------------
// Script machinery
// ---------------------------------------------------------------------

/// Positions (t = 0 plus one per tick) turned into an initial state and a
/// logged future. Headings derive from consecutive positions.
fn scripted_agent(
    id: u64,
    positions: &[Vec2],
    heading0: f64,
    speed0: f64,
    kind: AgentKind,
) -> (AgentState, Vec<TrajectorySample>) {
    let state = AgentState {
        id: AgentId(id),
        pose: Pose2D::new(positions[0].x, positions[0].y, heading0),
        speed: speed0,
        acceleration: 0.0,
        length: CAR_LENGTH,
        width: CAR_WIDTH,
        kind,
    };
    let mut samples = Vec::with_capacity(positions.len() - 1);
    let mut heading = heading0;
    let mut prev_speed = speed0;
    for k in 1..positions.len() {
        let d = positions[k] - positions[k - 1];
        let dist = d.norm();
        if dist > 1e-6 {
            heading = d.y.atan2(d.x);
        }
        let speed = dist / DEFAULT_DT;
        samples.push(TrajectorySample {
            pose: Pose2D::new(positions[k].x, positions[k].y, heading),
            speed,
        });
        prev_speed = speed;
    }
    let _ = prev_speed;
    (state, samples)
}

fn assemble(
    id: String,
    tag: &str,
    graph: LaneGraph,
    route: Vec<LaneId>,
    ego: (AgentState, Vec<TrajectorySample>),
    agents: Vec<(AgentState, Vec<TrajectorySample>)>,
) -> Scenario {
    let route = Route::new(route, &graph).expect("generated route is connected");
    let mut futures = LoggedFutures::new();
    futures.insert(ego.0.id, ego.1);
    let mut agent_states = Vec::with_capacity(agents.len());
    for (state, samples) in agents {
        futures.insert(state.id, samples);
        agent_states.push(state);
    }
    let scenario = Scenario {
        id,
        tag: tag.into(),
        lane_graph: graph,
        ego: ego.0,
        agents: agent_states,
        route,
        horizon_steps: DEFAULT_HORIZON_STEPS,
        dt: DEFAULT_DT,
        logged_futures: Some(futures),
    };
    scenario.validate().expect("generated scenario is valid");
    scenario
}

/// Arc profile of an IDM follower behind a scripted leader (all in arc
/// coordinates along one path). `leader` holds the leader's arc per step
/// (t = 0 included) or None for a free road.
fn idm_follow_arcs(
    arc0: f64,
    v0: f64,
    params: &IdmParams,
    leader: Option<&[f64]>,
    steps: usize,
) -> Vec<f64> {
    let mut arcs = Vec::with_capacity(steps + 1);
    let mut arc = arc0;
    let mut v = v0;
    arcs.push(arc);
    for k in 0..steps {
        let (gap, dv) = match leader {
            Some(lead) => {
                let lead_arc = lead[k.min(lead.len() - 1)];
                let prev = lead[k.saturating_sub(1).min(lead.len() - 1)];
                let lead_v = if k == 0 {
                    (lead[1.min(lead.len() - 1)] - lead[0]) / DEFAULT_DT
                } else {
                    (lead_arc - prev) / DEFAULT_DT
                };
                ((lead_arc - arc - CAR_LENGTH).max(0.05), v - lead_v)
            }
            None => (f64::INFINITY, 0.0),
        };
        let a = idm_acceleration(v, gap, dv, params).unwrap_or(-3.0);
        v = (v + a.clamp(-3.5, 1.5) * DEFAULT_DT).max(0.0);
        arc += v * DEFAULT_DT;
        arcs.push(arc);
    }
    arcs
}

/// Constant-speed arc profile.
fn const_arcs(arc0: f64, v: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| arc0 + v * k as f64 * DEFAULT_DT).collect()
}

/// Piecewise cruise / brake / hold / resume arc profile.
fn profile_arcs(arc0: f64, v0: f64, phases: &[(f64, f64)], steps: usize) -> Vec<f64> {
    // phases: (duration seconds, acceleration). Speed clamps at zero.
    let mut arcs = Vec::with_capacity(steps + 1);
    let mut arc = arc0;
    let mut v = v0;
    arcs.push(arc);
    let mut phase_idx = 0;
    let mut phase_left = phases.first().map(|p| p.0).unwrap_or(f64::INFINITY);
    for _ in 0..steps {
        let a = if phase_idx < phases.len() {
            phases[phase_idx].1
        } else {
            0.0
        };
        v = (v + a * DEFAULT_DT).max(0.0);
        arc += v * DEFAULT_DT;
        arcs.push(arc);
        phase_left -= DEFAULT_DT;
        if phase_left <= 1e-9 && phase_idx < phases.len() {
            phase_idx += 1;
            phase_left = phases.get(phase_idx).map(|p| p.0).unwrap_or(f64::INFINITY);
        }
    }
    arcs
}

fn on_path(path: &Polyline, arcs: &[f64]) -> Vec<Vec2> {
    arcs.iter().map(|&s| path.point_at(s)).collect()
}

/// Blend from a source path to a parallel destination path over a tick
/// window, quintic in time.
fn blended_positions(
    src: &Polyline,
    dst: &Polyline,
    arcs: &[f64],
    start_tick: usize,
    duration_ticks: usize,
) -> Vec<Vec2> {
    arcs.iter()
        .enumerate()
        .map(|(k, &s)| {
            let f = if k <= start_tick {
                0.0
            } else if k >= start_tick + duration_ticks {
                1.0
            } else {
                quintic((k - start_tick) as f64 / duration_ticks as f64)
            };
            let a = src.point_at(s);
            let b = dst.point_at(s);
            a + (b - a) * f
        })
        .collect()
}

// ---------------------------------------------------------------------
// Maps
// ---------------------------------------------------------------------

/// Parallel straight lanes; lane 0 is rightmost, neighbors linked.
pub fn straight_map(num_lanes: u32, length: f64, speed_limit: f64) -> LaneGraph {
    let lanes: Vec<Lane> = (0..num_lanes)
        .map(|i| Lane {
            id: LaneId(i),
            centerline: Polyline::new(vec![
                Vec2::new(0.0, LANE_WIDTH * i as f64),
                Vec2::new(length, LANE_WIDTH * i as f64),
            ]),
            width: LANE_WIDTH,
            speed_limit,
            successors: vec![],
            left_neighbor: if i + 1 < num_lanes { Some(LaneId(i + 1)) } else { None },
            right_neighbor: if i > 0 { Some(LaneId(i - 1)) } else { None },
        })
        .collect();
    LaneGraph::new(lanes).expect("straight map is valid")
}

// ---------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------

fn car_following(i: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let steps = DEFAULT_HORIZON_STEPS as usize;
    let limit = rng.random_range(12.0..15.0);
    let graph = straight_map(1, 600.0, limit);
    let path = graph.lane(LaneId(0)).unwrap().centerline.clone();

    let v_lead = rng.random_range(7.0..11.0);
    let lead_x = rng.random_range(60.0..90.0);
    let cruise = rng.random_range(2.0..4.0);
    let stop_fully = rng.random_range(0.0..1.0) < 0.5;
    let target = if stop_fully { 0.0 } else { v_lead / 2.0 };
    let brake_t = (v_lead - target) / 2.0;
    // Half of the stopped leaders stay parked so the corpus carries
    // standstill car-following contexts; the rest pull away again.
    let resume = !stop_fully || rng.random_range(0.0..1.0) < 0.5;
    let hold = if resume {
        rng.random_range(3.0..5.0)
    } else {
        60.0
    };
    let lead_arcs = profile_arcs(
        lead_x,
        v_lead,
        &[(cruise, 0.0), (brake_t, -2.0), (hold, 0.0), (4.0, 1.0)],
        steps,
    );

    let gap0 = rng.random_range(22.0..32.0);
    let ego_v = (v_lead + rng.random_range(-1.0..1.0)).max(5.0);
    let ego_params = IdmParams {
        v0: (v_lead + 3.0).min(limit),
        ..IdmParams::default()
    };
    let ego_arcs = idm_follow_arcs(lead_x - gap0, ego_v, &ego_params, Some(&lead_arcs), steps);

    let mut agents = vec![scripted_agent(
        1,
        &on_path(&path, &lead_arcs),
        0.0,
        v_lead,
        AgentKind::Vehicle,
    )];
    if rng.random_range(0.0..1.0) < 0.5 {
        let f_gap = rng.random_range(24.0..32.0);
        let f_arcs = idm_follow_arcs(
            lead_x - gap0 - f_gap,
            v_lead,
            &IdmParams {
                v0: (v_lead + 2.0).min(limit),
                ..IdmParams::default()
            },
            Some(&ego_arcs),
            steps,
        );
        agents.push(scripted_agent(
            2,
            &on_path(&path, &f_arcs),
            0.0,
            v_lead,
            AgentKind::Vehicle,
        ));
    }
    let ego = scripted_agent(0, &on_path(&path, &ego_arcs), 0.0, ego_v, AgentKind::Vehicle);
    assemble(
        format!("car_following_{i:04}"),
        "car_following",
        graph,
        vec![LaneId(0)],
        ego,
        agents,
    )
}

fn lane_change(i: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let steps = DEFAULT_HORIZON_STEPS as usize;
    let limit = rng.random_range(12.0..14.0);
    let graph = straight_map(2, 600.0, limit);
    let src = graph.lane(LaneId(0)).unwrap().centerline.clone();
    let dst = graph.lane(LaneId(1)).unwrap().centerline.clone();

    // Slow leader pinning down lane 0.
    let v_slow = rng.random_range(2.5..4.0);
    let slow_x = rng.random_range(95.0..115.0);
    let slow_arcs = const_arcs(slow_x, v_slow, steps);

    // A background vehicle that changes lane when it closes on the leader:
    // the maneuver the learned agent is expected to pick up and the IDM
    // background structurally cannot.
    let v_mid = rng.random_range(8.0..10.0);
    let mid_x = rng.random_range(55.0..70.0);
    let mid_trigger_gap = rng.random_range(18.0..22.0);
    let (mid_arcs, mid_change_tick) =
        change_when_close(mid_x, v_mid, &slow_arcs, mid_trigger_gap, steps);
    let mid_duration = (rng.random_range(3.0..3.4) / DEFAULT_DT) as usize;
    let mid_positions = blended_positions(&src, &dst, &mid_arcs, mid_change_tick, mid_duration);

    // Ego follows in lane 0 and performs the same maneuver.
    let v_ego = rng.random_range(8.0..10.0);
    let ego_x = rng.random_range(25.0..35.0);
    let ego_trigger_gap = rng.random_range(22.0..26.0);
    let (ego_arcs, ego_change_tick) =
        change_when_close(ego_x, v_ego, &slow_arcs, ego_trigger_gap, steps);
    let ego_duration = (rng.random_range(3.0..3.6) / DEFAULT_DT) as usize;
    let ego_positions = blended_positions(&src, &dst, &ego_arcs, ego_change_tick, ego_duration);

    // Traffic already in the target lane, far enough behind to stay clear.
    let v_back = rng.random_range(6.0..7.5);
    let back_x = rng.random_range(-15.0..0.0);
    let back_positions = on_path(&dst, &const_arcs(back_x, v_back, steps));

    let ego = scripted_agent(0, &ego_positions, 0.0, v_ego, AgentKind::Vehicle);
    let agents = vec![
        scripted_agent(1, &on_path(&src, &slow_arcs), 0.0, v_slow, AgentKind::Vehicle),
        scripted_agent(2, &mid_positions, 0.0, v_mid, AgentKind::Vehicle),
        scripted_agent(3, &back_positions, 0.0, v_back, AgentKind::Vehicle),
    ];
    assemble(
        format!("lane_change_{i:04}"),
        "lane_change",
        graph,
        vec![LaneId(0), LaneId(1)],
        ego,
        agents,
    )
}

/// Cruise toward a slow leader, then keep constant speed once the change
/// begins (the lateral blend happens in position space). Returns the arc
/// profile and the tick at which the bumper gap first dropped below the
/// trigger.
fn change_when_close(
    arc0: f64,
    v: f64,
    leader_arcs: &[f64],
    trigger_gap: f64,
    steps: usize,
) -> (Vec<f64>, usize) {
    let mut change_tick = steps;
    for k in 0..=steps {
        let gap = leader_arcs[k] - (arc0 + v * k as f64 * DEFAULT_DT) - CAR_LENGTH;
        if gap < trigger_gap {
            change_tick = k;
            break;
        }
    }
    (const_arcs(arc0, v, steps), change_tick)
}

fn merge(i: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let steps = DEFAULT_HORIZON_STEPS as usize;
    let limit = rng.random_range(11.0..14.0);
    let main1 = Lane {
        id: LaneId(0),
        centerline: Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(200.0, 0.0)]),
        width: LANE_WIDTH,
        speed_limit: limit,
        successors: vec![LaneId(1)],
        left_neighbor: None,
        right_neighbor: None,
    };
    let main2 = Lane {
        id: LaneId(1),
        centerline: Polyline::new(vec![Vec2::new(200.0, 0.0), Vec2::new(500.0, 0.0)]),
        width: LANE_WIDTH,
        speed_limit: limit,
        successors: vec![],
        left_neighbor: None,
        right_neighbor: None,
    };
    let ramp = Lane {
        id: LaneId(2),
        centerline: Polyline::new(vec![
            Vec2::new(30.0, -8.0),
            Vec2::new(110.0, -8.0),
            Vec2::new(165.0, -4.0),
            Vec2::new(200.0, 0.0),
        ]),
        width: LANE_WIDTH,
        speed_limit: limit,
        successors: vec![LaneId(1)],
        left_neighbor: None,
        right_neighbor: None,
    };
    let graph = LaneGraph::new(vec![main1, main2, ramp]).expect("merge map is valid");

    let main_path = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(500.0, 0.0)]);
    let ramp_lane = graph.lane(LaneId(2)).unwrap();
    let ramp_path = {
        let mut pts = ramp_lane.centerline.points().to_vec();
        pts.push(Vec2::new(500.0, 0.0));
        Polyline::new(pts)
    };

    let v_ego = rng.random_range(9.0..12.0);
    let ego_x = rng.random_range(30.0..60.0);
    let ego_positions = on_path(&main_path, &const_arcs(ego_x, v_ego, steps));

    // The merger reaches the merge point a few seconds before or after
    // the ego, so the logs stay conflict-free.
    let v_merge = rng.random_range(8.0..10.0);
    let t_ego_at_merge = (200.0 - ego_x) / v_ego;
    let offset = rng.random_range(2.5..4.0) * if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
    let ramp_len = ramp_lane.centerline.length();
    let start_arc = (ramp_len - v_merge * (t_ego_at_merge + offset)).clamp(5.0, ramp_len - 5.0);
    let merger_positions = on_path(&ramp_path, &const_arcs(start_arc, v_merge, steps));

    let ego = scripted_agent(0, &ego_positions, 0.0, v_ego, AgentKind::Vehicle);
    let heading0 = ramp_path.tangent_at(start_arc);
    let agents = vec![scripted_agent(1, &merger_positions, heading0, v_merge, AgentKind::Vehicle)];
    assemble(
        format!("merge_{i:04}"),
        "merge",
        graph,
        vec![LaneId(0), LaneId(1)],
        ego,
        agents,
    )
}

fn intersection_lite(i: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let steps = DEFAULT_HORIZON_STEPS as usize;
    let limit = rng.random_range(10.0..13.0);
    let ego_lane = Lane {
        id: LaneId(0),
        centerline: Polyline::new(vec![Vec2::new(-200.0, 0.0), Vec2::new(300.0, 0.0)]),
        width: LANE_WIDTH,
        speed_limit: limit,
        successors: vec![],
        left_neighbor: None,
        right_neighbor: None,
    };
    let cross_lane = Lane {
        id: LaneId(1),
        centerline: Polyline::new(vec![Vec2::new(0.0, -200.0), Vec2::new(0.0, 300.0)]),
        width: LANE_WIDTH,
        speed_limit: limit,
        successors: vec![],
        left_neighbor: None,
        right_neighbor: None,
    };
    let graph = LaneGraph::new(vec![ego_lane, cross_lane]).expect("intersection map is valid");
    let ego_path = Polyline::new(vec![Vec2::new(-200.0, 0.0), Vec2::new(300.0, 0.0)]);
    let cross_path = Polyline::new(vec![Vec2::new(0.0, -200.0), Vec2::new(0.0, 300.0)]);

    let v_ego = rng.random_range(8.0..12.0);
    let ego_x = rng.random_range(-70.0..-50.0);
    // Arc coordinates on the ego path start at x = -200.
    let ego_positions = on_path(&ego_path, &const_arcs(ego_x + 200.0, v_ego, steps));

    let v_cross = rng.random_range(8.0..11.0);
    let t_ego_origin = -ego_x / v_ego;
    let offset = rng.random_range(2.5..4.0) * if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
    let cross_y = -v_cross * (t_ego_origin + offset);
    let cross_positions = on_path(
        &cross_path,
        &const_arcs(cross_y.clamp(-180.0, -10.0) + 200.0, v_cross, steps),
    );

    let ego = scripted_agent(0, &ego_positions, 0.0, v_ego, AgentKind::Vehicle);
    let agents = vec![scripted_agent(
        1,
        &cross_positions,
        std::f64::consts::FRAC_PI_2,
        v_cross,
        AgentKind::Vehicle,
    )];
    assemble(
        format!("intersection_lite_{i:04}"),
        "intersection_lite",
        graph,
        vec![LaneId(0)],
        ego,
        agents,
    )
}

// ---------------------------------------------------------------------
// The crafted adjacent-lane cut-in
// ---------------------------------------------------------------------

/// Parameters of one cut-in scene.
#[derive(Debug, Clone, Copy)]
pub struct CutInParams {
    /// Initial speed of both vehicles; also the lane speed limit, so the
    /// rule-based agent starts at its equilibrium and holds speed exactly
    /// until it perceives a leader.
    pub speed: f64,
    /// Longitudinal bumper lead of the ego over the agent at t = 0.
    pub lead_gap: f64,
    /// Ego speed after the cut-in completes.
    pub ego_target_speed: f64,
    /// Seconds of straight driving before the lane change starts.
    pub cruise_time: f64,
    /// Duration of the lateral maneuver.
    pub change_duration: f64,
    /// When false the ego keeps its lane and speed for the whole horizon;
    /// the yield script then never triggers. These contrastive variants
    /// teach the policy that a parallel neighbor alone is no reason to
    /// brake, only a closing one.
    pub performs_cut: bool,
}

impl Default for CutInParams {
    fn default() -> Self {
        Self {
            speed: 10.0,
            lead_gap: 6.0,
            ego_target_speed: 6.0,
            cruise_time: 1.0,
            change_duration: 2.4,
            performs_cut: true,
        }
    }
}

/// The directional-replication scene: the ego (in the left lane, slightly
/// ahead) cuts into the agent's lane while slowing down. The agent's
/// logged future is a yield script that brakes once the intruder closes
/// in through its forward sector or enters the lane corridor; this is
/// what the learned background trains on.
pub fn cut_in_scenario_with(id: String, p: CutInParams) -> Scenario {
    let steps = DEFAULT_HORIZON_STEPS as usize;
    let graph = straight_map(2, 600.0, p.speed);
    let src = graph.lane(LaneId(1)).unwrap().centerline.clone(); // ego start: left lane
    let dst = graph.lane(LaneId(0)).unwrap().centerline.clone();

    let agent_x = 20.0;
    let ego_x = agent_x + p.lead_gap + CAR_LENGTH; // bumper gap -> center gap

    // Ego: cruise, then change lanes while easing off to the target speed.
    let cruise_ticks = (p.cruise_time / DEFAULT_DT).round() as usize;
    let change_ticks = (p.change_duration / DEFAULT_DT).round() as usize;
    let mut ego_arcs = Vec::with_capacity(steps + 1);
    let mut arc = ego_x;
    let mut v = p.speed;
    ego_arcs.push(arc);
    // The slowdown is front-loaded into the first part of the maneuver,
    // so the gap tightens while the ego is still crossing.
    let slow_ticks = (change_ticks * 3 / 5).max(1);
    for k in 0..steps {
        if p.performs_cut && k >= cruise_ticks {
            let f = ((k - cruise_ticks) as f64 / slow_ticks as f64).min(1.0);
            v = p.speed + (p.ego_target_speed - p.speed) * quintic(f);
        }
        arc += v * DEFAULT_DT;
        ego_arcs.push(arc);
    }
    let ego_positions = if p.performs_cut {
        blended_positions(&src, &dst, &ego_arcs, cruise_ticks, change_ticks)
    } else {
        on_path(&src, &ego_arcs)
    };

    // Agent: yield script. Brake once the intruder is closing in through
    // the forward sector, or has entered the lane corridor; a parallel
    // neighbor holding its distance is left alone.
    let mut agent_positions = Vec::with_capacity(steps + 1);
    let mut a_arc = agent_x;
    let mut a_v = p.speed;
    agent_positions.push(dst.point_at(a_arc));
    for k in 0..steps {
        let me = dst.point_at(a_arc);
        let intruder = ego_positions[k];
        let rel = intruder - me;
        let dist = rel.norm();
        let bearing = rel.y.atan2(rel.x);
        let ego_v = if k == 0 {
            p.speed
        } else {
            (ego_positions[k] - ego_positions[k - 1]).norm() / DEFAULT_DT
        };
        let closing = a_v - ego_v;
        let in_sector = dist <= 50.0 && bearing.abs() <= 30.0f64.to_radians();
        let in_corridor = intruder.y.abs() <= LANE_WIDTH / 2.0;
        let accel = if in_corridor || (in_sector && closing > 0.2) {
            let gap = (rel.x - CAR_LENGTH).max(0.1);
            idm_acceleration(a_v, gap, closing, &IdmParams::for_speed_limit(p.speed))
                .unwrap_or(-3.0)
                .clamp(-3.5, 1.0)
        } else {
            0.0
        };
        a_v = (a_v + accel * DEFAULT_DT).max(0.0);
        a_arc += a_v * DEFAULT_DT;
        agent_positions.push(dst.point_at(a_arc));
    }

    let ego = scripted_agent(0, &ego_positions, 0.0, p.speed, AgentKind::Vehicle);
    let agents = vec![scripted_agent(1, &agent_positions, 0.0, p.speed, AgentKind::Vehicle)];
    assemble(
        id,
        "cut_in",
        graph,
        vec![LaneId(1), LaneId(0)],
        ego,
        agents,
    )
}

/// Canonical cut-in scene with fixed default parameters.
pub fn cut_in_scenario() -> Scenario {
    cut_in_scenario_with("cut_in_canonical".into(), CutInParams::default())
}

/// Seeded variations of the cut-in scene, one third of them contrastive
/// no-cut variants; the yield-annotated training corpus for the learned
/// background.
pub fn cut_in_suite(n: usize, seed: u64) -> Vec<Scenario> {
    (0..n)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(crate::derive_seed(seed, &["cut_in", &i.to_string()]));
            let speed = rng.random_range(8.0..12.0);
            let p = CutInParams {
                speed,
                lead_gap: rng.random_range(5.0..10.0),
                ego_target_speed: speed * rng.random_range(0.55..0.75),
                cruise_time: rng.random_range(0.8..1.5),
                change_duration: rng.random_range(2.2..2.9),
                performs_cut: i % 3 != 2,
            };
            cut_in_scenario_with(format!("cut_in_{i:04}"), p)
        })
        .collect()
}
