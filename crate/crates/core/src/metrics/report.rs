//! Benchmark records and aggregation across (planner x background).

use super::{HardMultipliers, SoftMetrics};
use crate::engine::BackgroundKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One row of the benchmark: a single (scenario, planner, background) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario_id: String,
    pub tag: String,
    /// Augmentation level, when the scenario came from a density sweep.
    pub density: Option<String>,
    pub planner: String,
    pub background: BackgroundKind,
    pub background_label: String,
    pub soft: SoftMetrics,
    pub hard: HardMultipliers,
    pub composite: f64,
    pub min_ttc: Option<f64>,
    pub progress_m: f64,
    pub reference_progress: f64,
    pub ade: Option<f64>,
    pub realism_composite: Option<f64>,
    pub planner_error: bool,
}

/// Mean composite for one (planner, background) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub planner: String,
    pub background_label: String,
    pub mean_composite: f64,
    pub scenario_count: usize,
}

/// Mean composite per (planner, background, tag, density) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagAggregateRow {
    pub planner: String,
    pub background_label: String,
    pub tag: String,
    pub density: Option<String>,
    pub mean_composite: f64,
    pub scenario_count: usize,
}

/// CLS-SR minus CLS-R for one planner (overall or per tag/density group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub planner: String,
    pub scope: String,
    pub cls_r: f64,
    pub cls_sr: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<ScenarioRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub tag_aggregates: Vec<TagAggregateRow>,
    pub deltas: Vec<DeltaRow>,
}

/// Aggregate per-scenario records: unweighted means per (planner x
/// background), per-tag/density sub-means, and CLS-SR - CLS-R deltas.
/// Records are sorted first so the output is independent of run order.
pub fn aggregate_benchmark(mut records: Vec<ScenarioRecord>) -> BenchmarkReport {
    records.sort_by(|a, b| {
        (&a.scenario_id, &a.planner, &a.background_label).cmp(&(
            &b.scenario_id,
            &b.planner,
            &b.background_label,
        ))
    });

    let mut cells: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    let mut tag_cells: BTreeMap<(String, String, String, Option<String>), (f64, usize)> =
        BTreeMap::new();
    for r in &records {
        let cell = cells
            .entry((r.planner.clone(), r.background_label.clone()))
            .or_insert((0.0, 0));
        cell.0 += r.composite;
        cell.1 += 1;
        let tcell = tag_cells
            .entry((
                r.planner.clone(),
                r.background_label.clone(),
                r.tag.clone(),
                r.density.clone(),
            ))
            .or_insert((0.0, 0));
        tcell.0 += r.composite;
        tcell.1 += 1;
    }
    let aggregates: Vec<AggregateRow> = cells
        .iter()
        .map(|((planner, label), (sum, n))| AggregateRow {
            planner: planner.clone(),
            background_label: label.clone(),
            mean_composite: sum / *n as f64,
            scenario_count: *n,
        })
        .collect();
    let tag_aggregates: Vec<TagAggregateRow> = tag_cells
        .iter()
        .map(|((planner, label, tag, density), (sum, n))| TagAggregateRow {
            planner: planner.clone(),
            background_label: label.clone(),
            tag: tag.clone(),
            density: density.clone(),
            mean_composite: sum / *n as f64,
            scenario_count: *n,
        })
        .collect();

    // Deltas: CLS-SR - CLS-R wherever a planner has both columns.
    let mut deltas = Vec::new();
    let planners: std::collections::BTreeSet<&String> =
        aggregates.iter().map(|a| &a.planner).collect();
    for planner in planners {
        let get = |label: &str| {
            aggregates
                .iter()
                .find(|a| &a.planner == planner && a.background_label == label)
                .map(|a| a.mean_composite)
        };
        if let (Some(r), Some(sr)) = (get("CLS-R"), get("CLS-SR")) {
            deltas.push(DeltaRow {
                planner: planner.clone(),
                scope: "overall".into(),
                cls_r: r,
                cls_sr: sr,
                delta: sr - r,
            });
        }
        // Per (tag, density) groups.
        let groups: std::collections::BTreeSet<(String, Option<String>)> = tag_aggregates
            .iter()
            .filter(|t| &t.planner == planner)
            .map(|t| (t.tag.clone(), t.density.clone()))
            .collect();
        for (tag, density) in groups {
            let get = |label: &str| {
                tag_aggregates
                    .iter()
                    .find(|t| {
                        &t.planner == planner
                            && t.background_label == label
                            && t.tag == tag
                            && t.density == density
                    })
                    .map(|t| t.mean_composite)
            };
            if let (Some(r), Some(sr)) = (get("CLS-R"), get("CLS-SR")) {
                let scope = match &density {
                    Some(d) => format!("tag:{tag}/density:{d}"),
                    None => format!("tag:{tag}"),
                };
                deltas.push(DeltaRow {
                    planner: planner.clone(),
                    scope,
                    cls_r: r,
                    cls_sr: sr,
                    delta: sr - r,
                });
            }
        }
    }

    BenchmarkReport {
        records,
        aggregates,
        tag_aggregates,
        deltas,
    }
}

impl BenchmarkReport {
    /// CSV: one row per scenario x planner x background.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario_id,tag,density,planner,background,ttc_score,progress_score,comfort_score,\
             speed_limit_score,at_fault_collision,drivable_area_violation,composite,min_ttc,\
             progress_m,reference_progress,ade,realism_composite,planner_error\n",
        );
        for r in &self.records {
            let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.scenario_id,
                r.tag,
                r.density.clone().unwrap_or_default(),
                r.planner,
                r.background_label,
                r.soft.ttc_score,
                r.soft.progress_score,
                r.soft.comfort_score,
                r.soft.speed_limit_score,
                r.hard.at_fault_collision,
                r.hard.drivable_area_violation,
                r.composite,
                opt(&r.min_ttc),
                r.progress_m,
                r.reference_progress,
                opt(&r.ade),
                opt(&r.realism_composite),
                r.planner_error,
            ));
        }
        out
    }

    /// Human-readable aggregate table with one planner per row and the
    /// CLS-NR / CLS-R / CLS-SR columns plus the CLS-SR - CLS-R delta.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<20} {:>8} {:>8} {:>8} {:>8}\n",
            "planner", "CLS-NR", "CLS-R", "CLS-SR", "delta"
        ));
        let planners: std::collections::BTreeSet<&String> =
            self.aggregates.iter().map(|a| &a.planner).collect();
        for planner in planners {
            let get = |label: &str| {
                self.aggregates
                    .iter()
                    .find(|a| &a.planner == planner && a.background_label == label)
                    .map(|a| format!("{:.2}", a.mean_composite))
                    .unwrap_or_else(|| "-".into())
            };
            let delta = self
                .deltas
                .iter()
                .find(|d| &d.planner == planner && d.scope == "overall")
                .map(|d| format!("{:+.2}", d.delta))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<20} {:>8} {:>8} {:>8} {:>8}\n",
                planner,
                get("CLS-NR"),
                get("CLS-R"),
                get("CLS-SR"),
                delta
            ));
        }
        out
    }
}
