//! End-to-end learned-background checks. Models are trained per corpus,
//! each bound to its own vocabulary: a car-following model for the
//! longitudinal behaviors, a yield model (cut-in corpus, tokenized with
//! top-6 noise) for the reactivity comparison, and a traffic model
//! (car-following plus lane changes) for the imitation-error comparison.

use loopsim_core::engine::{
    run_scenario, Background, IdmBackgroundConfig, LearnedBackground, RolloutLog, TrackerMode,
};
use loopsim_core::generate::{
    cut_in_scenario, cut_in_suite, generate_suite, straight_map, SuiteKind,
};
use loopsim_core::map::{LaneId, Route};
use loopsim_core::metrics::{background_ade, min_ttc_of_step};
use loopsim_core::planners::LogReplayPlanner;
use loopsim_core::scenario::{AgentId, AgentKind, AgentState, Scenario};
use loopsim_core::token::{
    build_training_corpus, build_vocabulary, cross_entropy, decode_step, train,
    vocabulary_corpus, ContextFeatures, DecodeMode, TokenPolicyModel, TokenVocabulary,
    TrainConfig,
};
use loopsim_core::Pose2D;

fn train_pair(
    scenarios: &[Scenario],
    vocab_size: usize,
    noise_top_k: usize,
    epochs: usize,
) -> (TokenVocabulary, TokenPolicyModel) {
    let vocab = build_vocabulary(&vocabulary_corpus(scenarios), vocab_size, 7).unwrap();
    let corpus = build_training_corpus(scenarios, &vocab, noise_top_k, 5).unwrap();
    let cfg = TrainConfig {
        epochs,
        learning_rate: 1.0,
        batch_size: 64,
        seed: 3,
    };
    let (model, curve) = train(&corpus, &vocab, &cfg).unwrap();
    assert!((curve[0] - (vocab.size() as f64).ln()).abs() < 1e-6);
    assert!(cross_entropy(&model, &corpus.samples) <= (vocab.size() as f64).ln());
    (vocab, model)
}

fn single_agent_cruise_scenario(speed: f64) -> Scenario {
    let graph = straight_map(1, 600.0, 13.0);
    let route = Route::new(vec![LaneId(0)], &graph).unwrap();
    let mut futures = loopsim_core::scenario::LoggedFutures::new();
    futures.insert(
        AgentId(0),
        (0..150)
            .map(|_| loopsim_core::scenario::TrajectorySample {
                pose: Pose2D::new(550.0, 0.0, 0.0),
                speed: 0.0,
            })
            .collect::<Vec<_>>(),
    );
    let s = Scenario {
        id: "cruise".into(),
        tag: "car_following".into(),
        lane_graph: graph,
        ego: AgentState {
            id: AgentId(0),
            pose: Pose2D::new(550.0, 0.0, 0.0),
            speed: 0.0,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            kind: AgentKind::Static,
        },
        agents: vec![AgentState {
            id: AgentId(1),
            pose: Pose2D::new(20.0, 0.0, 0.0),
            speed,
            acceleration: 0.0,
            length: 4.5,
            width: 1.8,
            kind: AgentKind::Vehicle,
        }],
        route,
        horizon_steps: 150,
        dt: 0.1,
        logged_futures: Some(futures),
    };
    s.validate().unwrap();
    s
}

#[test]
fn car_following_model_behaviors() {
    let scenarios = generate_suite(SuiteKind::CarFollowing, 12, 101);
    let (vocab, model) = train_pair(&scenarios, 32, 1, 40);

    // Standstill behind a stopped leader decodes the zero-motion token,
    // matching the majority label of that context bucket in the corpus.
    let corpus = build_training_corpus(&scenarios, &vocab, 1, 5).unwrap();
    let mut counts = vec![0usize; vocab.size()];
    for s in &corpus.samples {
        if s.features[0] < 0.3 && s.features[5] < 6.0 {
            counts[s.target] += 1;
        }
    }
    assert!(counts.iter().sum::<usize>() > 30, "standstill bucket too small");
    let majority = counts
        .iter()
        .enumerate()
        .max_by_key(|(_, c)| **c)
        .map(|(i, _)| i)
        .unwrap();
    assert_eq!(majority, vocab.zero_token());
    let standstill = ContextFeatures {
        speed: 0.0,
        prev_token: vocab.zero_token(),
        lateral_offset: 0.0,
        heading_error: 0.0,
        curvature_ahead: 0.0,
        front_gap: 2.0,
        front_closing: 0.0,
        left_distance: 50.0,
        right_distance: 50.0,
    };
    assert_eq!(decode_step(&standstill, &model), majority);

    // A lone cruising agent keeps its lane and keeps moving for 15 s.
    let scn = single_agent_cruise_scenario(10.0);
    let mut planner = LogReplayPlanner::default();
    let mut bg = Background::Learned(LearnedBackground::new(&model, &vocab, DecodeMode::Argmax, 1));
    let log = run_scenario(&scn, &mut planner, &mut bg, TrackerMode::Perfect);
    assert!(log.completed());
    let mut max_lat: f64 = 0.0;
    let mut final_x = 0.0;
    for snap in &log.snapshots {
        let a = snap.agents.iter().find(|a| a.id == AgentId(1)).unwrap();
        max_lat = max_lat.max(a.pose.y.abs());
        final_x = a.pose.x;
    }
    assert!(max_lat < 1.0, "lateral deviation {max_lat}");
    assert!(
        final_x - 20.0 > 10.0 * 15.0 * 0.5,
        "agent stalled: covered {} m",
        final_x - 20.0
    );
}

#[test]
fn yield_model_reacts_to_cut_in_earlier_than_idm() {
    let (vocab, model) = train_pair(&cut_in_suite(24, 202), 32, 6, 60);
    let scn = cut_in_scenario();
    let agent_id = scn.agents[0].id;
    let corridor = 3.5 / 2.0;

    let learned = {
        let mut planner = LogReplayPlanner::default();
        let mut bg =
            Background::Learned(LearnedBackground::new(&model, &vocab, DecodeMode::Argmax, 1));
        run_scenario(&scn, &mut planner, &mut bg, TrackerMode::Perfect)
    };
    let idm = {
        let mut planner = LogReplayPlanner::default();
        let mut bg = Background::Idm {
            config: IdmBackgroundConfig::default(),
            lane_changes: Default::default(),
        };
        run_scenario(&scn, &mut planner, &mut bg, TrackerMode::Perfect)
    };

    let crossing = learned
        .snapshots
        .iter()
        .find(|s| s.ego.pose.y.abs() <= corridor)
        .map(|s| s.step_index as usize)
        .expect("ego crosses the corridor");

    let speed_at = |log: &RolloutLog, step: usize| {
        log.snapshots[step]
            .agents
            .iter()
            .find(|a| a.id == agent_id)
            .unwrap()
            .speed
    };
    let v0 = speed_at(&learned, 0);
    // Within 2 s of corridor intrusion the learned agent has shed >= 1 m/s.
    let deadline = (crossing + 20).min(learned.snapshots.len() - 1);
    let min_learned = (0..=deadline)
        .map(|k| speed_at(&learned, k))
        .fold(f64::INFINITY, f64::min);
    assert!(
        min_learned <= v0 - 1.0,
        "learned agent only reached {min_learned} from {v0}"
    );
    // The rule-based agent holds speed (< 0.1 m/s change) until the
    // corridor is breached.
    for k in 0..crossing {
        assert!((speed_at(&idm, k) - v0).abs() < 0.1);
    }

    // Consequently the ego's min TTC is higher under the learned agents.
    let min_ttc = |log: &RolloutLog| {
        log.snapshots
            .iter()
            .filter_map(|s| min_ttc_of_step(&s.ego, &s.agents, 3.0, 0.1))
            .fold(f64::INFINITY, f64::min)
    };
    let ttc_learned = min_ttc(&learned);
    let ttc_idm = min_ttc(&idm);
    assert!(
        ttc_learned > ttc_idm,
        "TTC learned {ttc_learned} vs idm {ttc_idm}"
    );
}

#[test]
fn traffic_model_imitates_lane_changing_experts_better_than_idm() {
    let mut scenarios = generate_suite(SuiteKind::CarFollowing, 10, 101);
    scenarios.extend(generate_suite(SuiteKind::LaneChange, 8, 303));
    let (vocab, model) = train_pair(&scenarios, 48, 6, 60);

    // Held-out lane-change scenarios (different seed).
    let held_out = generate_suite(SuiteKind::LaneChange, 5, 909);
    let mut learned_sum = 0.0;
    let mut idm_sum = 0.0;
    for s in &held_out {
        let mut planner = LogReplayPlanner::default();
        let mut bg =
            Background::Learned(LearnedBackground::new(&model, &vocab, DecodeMode::Argmax, 1));
        let log = run_scenario(s, &mut planner, &mut bg, TrackerMode::Perfect);
        learned_sum += background_ade(&log, s, 80).unwrap();

        let mut planner = LogReplayPlanner::default();
        let mut bg = Background::Idm {
            config: IdmBackgroundConfig::default(),
            lane_changes: Default::default(),
        };
        let log = run_scenario(s, &mut planner, &mut bg, TrackerMode::Perfect);
        idm_sum += background_ade(&log, s, 80).unwrap();
    }
    let learned_ade = learned_sum / held_out.len() as f64;
    let idm_ade = idm_sum / held_out.len() as f64;
    assert!(
        learned_ade < idm_ade,
        "ADE learned {learned_ade} vs idm {idm_ade}"
    );
}
