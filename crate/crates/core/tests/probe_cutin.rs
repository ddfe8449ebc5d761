use loopsim_core::engine::{run_scenario, Background, LearnedBackground, TrackerMode};
use loopsim_core::generate::{cut_in_scenario, cut_in_suite};
use loopsim_core::planners::LogReplayPlanner;
use loopsim_core::token::*;
use loopsim_core::scenario::AgentId;

#[test]
fn probe() {
    for (epochs, lr, seed) in [(60usize, 1.0f64, 3u64), (100, 1.0, 3), (60, 1.5, 3), (60, 1.0, 4)] {
        let ci = cut_in_suite(24, 202);
        let vocab = build_vocabulary(&vocabulary_corpus(&ci), 32, 7).unwrap();
        let corpus = build_training_corpus(&ci, &vocab, 6, 5).unwrap();
        let (model, curve) = train(&corpus, &vocab, &TrainConfig { epochs, learning_rate: lr, batch_size: 64, seed }).unwrap();
        let scn = cut_in_scenario();
        let aid = AgentId(1);
        let mut p = LogReplayPlanner::default();
        let mut bg = Background::Learned(LearnedBackground::new(&model, &vocab, DecodeMode::Argmax, 1));
        let log = run_scenario(&scn, &mut p, &mut bg, TrackerMode::Perfect);
        let speeds: Vec<f64> = log.snapshots.iter().map(|s| s.agents.iter().find(|a| a.id == aid).unwrap().speed).collect();
        let min_v = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_gap = log.snapshots.iter().map(|s| {
            let a = s.agents.iter().find(|a| a.id == aid).unwrap();
            s.ego.pose.x - a.pose.x - 4.5
        }).fold(f64::INFINITY, f64::min);
        eprintln!("ep={epochs} lr={lr} seed={seed}: loss={:.3} min_v={min_v:.2} min_gap={min_gap:.1} v@2s={:.1} v@4s={:.1}",
            curve.last().unwrap(), speeds[20], speeds[40]);
    }
}
