//! Benchmark orchestration: configuration, single-scenario simulation,
//! the (scenario x background) sweep with optional density augmentation,
//! and deterministic report emission.

use crate::augment::{augment_density, AugmentError, DensityLevel};
use crate::engine::{
    run_scenario, Background, BackgroundKind, IdmBackgroundConfig, LearnedBackground, RolloutLog,
    TrackerMode,
};
use crate::generate::{generate_suite, SuiteKind};
use crate::io::{load_scenarios, ScenarioIoError};
use crate::metrics::{
    aggregate_benchmark, background_ade, evaluate_rollout, realism_report, BenchmarkReport,
    MetricThresholds, MetricWeights, RolloutEvaluation, ScenarioRecord, ADE_HORIZON_STEPS,
};
use crate::planners::{build_planner, PlannerError};
use crate::scenario::Scenario;
use crate::token::{
    load_model, load_vocabulary, DecodeMode, ModelIoError, TokenPolicyModel, TokenVocabulary,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    ScenarioIo(#[from] ScenarioIoError),
    #[error(transparent)]
    ModelIo(#[from] ModelIoError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("planner: {0}")]
    Planner(#[from] PlannerError),
    #[error("{0} background requires logged futures in the scenario")]
    MissingLoggedFutures(&'static str),
    #[error("learned_reactive background requires --model and --vocabulary")]
    MissingModel,
    #[error("config: {0}")]
    BadConfig(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunnerError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| RunnerError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Where the benchmark takes its scenarios from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// Scenario files or directories of files.
    Paths(Vec<PathBuf>),
    /// Synthesize a suite.
    Generate {
        kind: SuiteKind,
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSpec {
    pub levels: Vec<DensityLevel>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub weights: MetricWeights,
    #[serde(default)]
    pub thresholds: MetricThresholds,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            weights: MetricWeights::default(),
            thresholds: MetricThresholds::default(),
        }
    }
}

/// The complete benchmark configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub seed: u64,
    pub scenarios: ScenarioSource,
    pub planner: PlannerSpec,
    pub backgrounds: Vec<BackgroundKind>,
    #[serde(default)]
    pub tracker: TrackerMode,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub vocabulary: Option<PathBuf>,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub idm_background: IdmBackgroundConfig,
    #[serde(default)]
    pub augment: Option<AugmentSpec>,
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub svg: bool,
}

fn default_version() -> u32 {
    1
}

fn default_parallelism() -> usize {
    1
}

pub fn load_config(path: &Path) -> Result<BenchmarkConfig, RunnerError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: BenchmarkConfig = serde_json::from_str(&text)
        .map_err(|e| RunnerError::BadConfig(format!("{}: {e}", path.display())))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn validate_config(cfg: &BenchmarkConfig) -> Result<(), RunnerError> {
    if cfg.backgrounds.is_empty() {
        return Err(RunnerError::BadConfig("at least one background required".into()));
    }
    if let ScenarioSource::Paths(p) = &cfg.scenarios {
        if p.is_empty() {
            return Err(RunnerError::BadConfig("at least one scenario required".into()));
        }
    }
    if cfg
        .backgrounds
        .contains(&BackgroundKind::LearnedReactive)
        && (cfg.model.is_none() || cfg.vocabulary.is_none())
    {
        return Err(RunnerError::MissingModel);
    }
    Ok(())
}

/// Loaded simulation assets shared across rollouts.
#[derive(Default)]
pub struct SimAssets {
    pub model: Option<TokenPolicyModel>,
    pub vocab: Option<TokenVocabulary>,
}

impl SimAssets {
    pub fn load(
        model: Option<&Path>,
        vocabulary: Option<&Path>,
    ) -> Result<Self, RunnerError> {
        let vocab = vocabulary.map(load_vocabulary).transpose()?;
        let model = match (model, &vocab) {
            (Some(m), Some(v)) => Some(load_model(m, v)?),
            (Some(_), None) => return Err(RunnerError::MissingModel),
            _ => None,
        };
        Ok(Self { model, vocab })
    }
}

/// Build the background runtime for one rollout.
pub fn make_background<'a>(
    kind: BackgroundKind,
    scenario: &Scenario,
    idm: &IdmBackgroundConfig,
    assets: &'a SimAssets,
    seed: u64,
) -> Result<Background<'a>, RunnerError> {
    match kind {
        BackgroundKind::NonReactiveReplay => {
            if scenario.logged_futures.is_none() {
                return Err(RunnerError::MissingLoggedFutures("non_reactive_replay"));
            }
            Ok(Background::Replay)
        }
        BackgroundKind::IdmReactive => Ok(Background::Idm {
            config: idm.clone(),
            lane_changes: Default::default(),
        }),
        BackgroundKind::LearnedReactive => match (&assets.model, &assets.vocab) {
            (Some(m), Some(v)) => Ok(Background::Learned(LearnedBackground::new(
                m,
                v,
                DecodeMode::Argmax,
                crate::derive_seed(seed, &["learned"]),
            ))),
            _ => Err(RunnerError::MissingModel),
        },
    }
}

/// Run one (scenario, planner, background) rollout and score it.
pub fn simulate_scenario(
    scenario: &Scenario,
    planner_spec: &PlannerSpec,
    background: BackgroundKind,
    tracker: TrackerMode,
    seed: u64,
    metrics: &MetricConfig,
    idm: &IdmBackgroundConfig,
    assets: &SimAssets,
) -> Result<(RolloutLog, RolloutEvaluation, ScenarioRecord), RunnerError> {
    let mut planner = build_planner(&planner_spec.name, &planner_spec.params)?;
    let mut bg = make_background(background, scenario, idm, assets, seed)?;
    let log = run_scenario(scenario, planner.as_mut(), &mut bg, tracker);
    let eval = evaluate_rollout(&log, scenario, &metrics.weights, &metrics.thresholds);
    let (ade, realism) = if scenario.logged_futures.is_some() {
        let ade = background_ade(&log, scenario, ADE_HORIZON_STEPS).ok();
        let realism = realism_report(&log, scenario).ok();
        (ade, realism)
    } else {
        (None, None)
    };
    let record = ScenarioRecord {
        scenario_id: scenario.id.clone(),
        tag: scenario.tag.clone(),
        density: None,
        planner: planner_spec.name.clone(),
        background,
        background_label: background.label().to_string(),
        soft: eval.soft,
        hard: eval.hard,
        composite: eval.composite,
        min_ttc: eval.min_ttc,
        progress_m: eval.progress_m,
        reference_progress: eval.reference_progress,
        ade,
        realism_composite: realism.map(|r| r.composite),
        planner_error: eval.planner_error,
    };
    Ok((log, eval, record))
}

/// A failure of one benchmark task; the run continues past it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskFailure {
    pub scenario_id: String,
    pub background: String,
    pub message: String,
}

/// Benchmark outcome plus the artifact paths that were written.
pub struct BenchmarkRun {
    pub report: BenchmarkReport,
    pub failures: Vec<TaskFailure>,
    pub report_json: PathBuf,
    pub report_csv: PathBuf,
}

/// Materialize the scenario list: load or generate, then expand the
/// density sweep.
pub fn resolve_scenarios(cfg: &BenchmarkConfig) -> Result<Vec<(Scenario, Option<String>)>, RunnerError> {
    let base: Vec<Scenario> = match &cfg.scenarios {
        ScenarioSource::Paths(paths) => {
            let mut out = Vec::new();
            for p in paths {
                out.extend(load_scenarios(p)?);
            }
            out
        }
        ScenarioSource::Generate { kind, count, seed } => generate_suite(*kind, *count, *seed),
    };
    match &cfg.augment {
        None => Ok(base.into_iter().map(|s| (s, None)).collect()),
        Some(spec) => {
            let mut out = Vec::new();
            for scenario in &base {
                for level in &spec.levels {
                    let aug_seed =
                        crate::derive_seed(spec.seed, &[&scenario.id, level.as_str()]);
                    let mut augmented = augment_density(scenario, *level, aug_seed)?;
                    augmented.id = format!("{}__{}", scenario.id, level.as_str());
                    out.push((augmented, Some(level.as_str().to_string())));
                }
            }
            Ok(out)
        }
    }
}

/// Run the full benchmark: every scenario against every configured
/// background, optionally in parallel, with deterministic artifacts.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkRun, RunnerError> {
    validate_config(cfg)?;
    let assets = SimAssets::load(cfg.model.as_deref(), cfg.vocabulary.as_deref())?;
    let scenarios = resolve_scenarios(cfg)?;

    let tasks: Vec<(usize, BackgroundKind)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.backgrounds.iter().map(move |b| (i, *b)))
        .collect();

    let run_task = |&(idx, background): &(usize, BackgroundKind)| -> Result<ScenarioRecord, TaskFailure> {
        let (scenario, density) = &scenarios[idx];
        let seed = crate::derive_seed(
            cfg.seed,
            &[&scenario.id, &cfg.planner.name, background.as_str()],
        );
        let result = simulate_scenario(
            scenario,
            &cfg.planner,
            background,
            cfg.tracker,
            seed,
            &cfg.metrics,
            &cfg.idm_background,
            &assets,
        );
        match result {
            Ok((log, _eval, mut record)) => {
                record.density = density.clone();
                let record_path = cfg.output_dir.join("records").join(format!(
                    "{}__{}__{}.json",
                    scenario.id, cfg.planner.name, background.as_str()
                ));
                let record_json = serde_json::to_string_pretty(&record).expect("record serializes");
                if let Err(e) = write_file(&record_path, &record_json) {
                    return Err(TaskFailure {
                        scenario_id: scenario.id.clone(),
                        background: background.as_str().into(),
                        message: e.to_string(),
                    });
                }
                if cfg.svg {
                    let dir = cfg.output_dir.join("svg").join(format!(
                        "{}__{}__{}",
                        scenario.id, cfg.planner.name, background.as_str()
                    ));
                    for (name, svg) in crate::svg::render_series(scenario, &log.snapshots) {
                        if let Err(e) = write_file(&dir.join(name), &svg) {
                            return Err(TaskFailure {
                                scenario_id: scenario.id.clone(),
                                background: background.as_str().into(),
                                message: e.to_string(),
                            });
                        }
                    }
                }
                Ok(record)
            }
            Err(e) => Err(TaskFailure {
                scenario_id: scenario.id.clone(),
                background: background.as_str().into(),
                message: e.to_string(),
            }),
        }
    };

    let results: Vec<Result<ScenarioRecord, TaskFailure>> = if cfg.parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| RunnerError::BadConfig(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run_task).collect())
    } else {
        tasks.iter().map(run_task).collect()
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    failures.sort_by(|a, b| (&a.scenario_id, &a.background).cmp(&(&b.scenario_id, &b.background)));

    let report = aggregate_benchmark(records);
    let report_json = cfg.output_dir.join("report.json");
    let report_csv = cfg.output_dir.join("report.csv");
    write_file(
        &report_json,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    write_file(&report_csv, &report.to_csv())?;
    if !failures.is_empty() {
        write_file(
            &cfg.output_dir.join("errors.json"),
            &serde_json::to_string_pretty(&failures).expect("failures serialize"),
        )?;
    }
    Ok(BenchmarkRun {
        report,
        failures,
        report_json,
        report_csv,
    })
}

/// Re-aggregate previously written per-scenario records.
pub fn reaggregate_records(records_dir: &Path) -> Result<BenchmarkReport, RunnerError> {
    let mut files: Vec<_> = std::fs::read_dir(records_dir)
        .map_err(|source| RunnerError::Io {
            path: records_dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    files.sort();
    let mut records = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|source| RunnerError::Io {
            path: f.display().to_string(),
            source,
        })?;
        let record: ScenarioRecord = serde_json::from_str(&text)
            .map_err(|e| RunnerError::BadConfig(format!("{}: {e}", f.display())))?;
        records.push(record);
    }
    Ok(aggregate_benchmark(records))
}
