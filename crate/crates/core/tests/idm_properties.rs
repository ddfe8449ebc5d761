//! Rule-based agent invariants: platoon safety under hard leader braking
//! and free-road speed convergence, using the default parameter set.

use loopsim_core::generate::straight_map;
use loopsim_core::idm::{idm_agent_step, IdmParams};
use loopsim_core::map::LaneId;
use loopsim_core::scenario::{AgentId, AgentKind, AgentState};
use loopsim_core::Pose2D;

fn car(id: u64, x: f64, speed: f64) -> AgentState {
    AgentState {
        id: AgentId(id),
        pose: Pose2D::new(x, 0.0, 0.0),
        speed,
        acceleration: 0.0,
        length: 4.5,
        width: 1.8,
        kind: AgentKind::Vehicle,
    }
}

#[test]
fn platoon_never_closes_below_zero_gap() {
    // Leader brakes at -2 m/s^2 to a stop; up to 10 followers spawned at
    // the safe spacing s0 + v*T never produce a negative bumper gap over
    // 60 s of simulation.
    let params = IdmParams::default();
    let graph = straight_map(1, 2500.0, params.v0);
    let dt = 0.1;
    let v = params.v0;
    let spacing = params.min_gap + v * params.time_headway + 4.5; // bumper-safe center spacing

    for n in [3usize, 6, 10] {
        let mut leader = car(0, 1200.0, v);
        let mut followers: Vec<AgentState> = (1..=n)
            .map(|i| car(i as u64, 1200.0 - spacing * i as f64, v))
            .collect();
        // A parked far-away ego so the world view is complete.
        let ego = car(99, 2400.0, 0.0);

        for step in 0..600 {
            let t = step as f64 * dt;
            // Scripted leader: brake to a stop, then hold.
            let new_speed = (v - 2.0 * t).max(0.0);
            let lead_next = AgentState {
                pose: Pose2D::new(leader.pose.x + new_speed * dt, 0.0, 0.0),
                speed: new_speed,
                ..leader
            };
            // Followers react to the pre-step world (synchronous update).
            let mut world: Vec<AgentState> = vec![leader];
            world.extend(followers.iter().copied());
            let next_followers: Vec<AgentState> = followers
                .iter()
                .map(|f| {
                    let others: Vec<AgentState> =
                        world.iter().filter(|a| a.id != f.id).copied().collect();
                    idm_agent_step(f, &ego, &others, &graph, &params, dt)
                })
                .collect();
            leader = lead_next;
            followers = next_followers;

            // Check every bumper gap.
            let mut chain = vec![leader];
            chain.extend(followers.iter().copied());
            for w in chain.windows(2) {
                let gap = w[0].pose.x - w[1].pose.x - 4.5;
                assert!(
                    gap >= 0.0,
                    "n={n} t={t:.1}: bumper gap {gap:.3} between {} and {}",
                    w[0].id,
                    w[1].id
                );
            }
        }
        // The platoon has come to a stop behind the leader.
        assert!(followers.iter().all(|f| f.speed < 0.5));
    }
}

#[test]
fn free_road_speed_converges_to_desired() {
    let params = IdmParams::default();
    let graph = straight_map(1, 2500.0, params.v0);
    let ego = car(99, 2400.0, 0.0);
    let mut agent = car(1, 10.0, 0.0);
    let mut converged_at = None;
    for step in 0..600 {
        agent = idm_agent_step(&agent, &ego, &[], &graph, &params, 0.1);
        if (agent.speed - params.v0).abs() < 0.1 && converged_at.is_none() {
            converged_at = Some(step as f64 * 0.1);
        }
    }
    let t = converged_at.expect("agent must reach v0 within 60 s");
    assert!(t < 60.0, "converged at {t} s");
    // And it stays there.
    assert!((agent.speed - params.v0).abs() < 0.1);
}

#[test]
fn reference_integration_matches_engine_idm_step() {
    // Independent scalar Euler integration of the same law as the oracle
    // for the geometric step (identical speeds and arc positions).
    let params = IdmParams::default();
    let graph = straight_map(1, 2000.0, params.v0);
    let ego = car(99, 1900.0, 0.0);
    let leader = car(2, 80.0, 3.0);

    let mut agent = car(1, 30.0, 12.0);
    let mut ref_x = 30.0;
    let mut ref_v = 12.0;
    for _ in 0..100 {
        let others = [leader];
        agent = idm_agent_step(&agent, &ego, &others, &graph, &params, 0.1);

        // Oracle: gap/dv from scalar geometry, semi-implicit Euler.
        let gap = (leader.pose.x - ref_x) - 4.5;
        let s_star = params.min_gap
            + (ref_v * params.time_headway
                + ref_v * (ref_v - 3.0) / (2.0 * (params.a_max * params.b_comfort).sqrt()))
            .max(0.0);
        let a = params.a_max
            * (1.0 - (ref_v / params.v0).powf(params.delta) - (s_star / gap).powi(2));
        ref_v = (ref_v + a.max(-10.0) * 0.1).max(0.0);
        ref_x += ref_v * 0.1;

        assert!(
            (agent.speed - ref_v).abs() < 1e-9,
            "speed diverged: {} vs {ref_v}",
            agent.speed
        );
        assert!(
            (agent.pose.x - ref_x).abs() < 1e-9,
            "position diverged: {} vs {ref_x}",
            agent.pose.x
        );
    }
}
