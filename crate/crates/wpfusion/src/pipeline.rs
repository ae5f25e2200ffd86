//! Scenario in, metric tables out.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use wpfusion_core::affinity::{scenario_feature_distances, visual_affinity, FeatureMetric};
use wpfusion_core::align::distance_matrix;
use wpfusion_core::eval::{self, GalleryFilter, MetricReport};
use wpfusion_core::rcpm::{self, RcpmConfig, Variant};
use wpfusion_core::simgen::{make_queries, QueryRule};
use wpfusion_core::{AffinityMatrix, FeatureDistanceMatrix, Scenario, SequenceId, TrajDistanceMatrix};

use crate::config::RunConfig;
use crate::error::{AppError, Result, Stage};
use crate::io::{write_json, write_matrix, write_text};

/// Column order of every metrics CSV.
pub const METRIC_HEADER: &str = "method,task,metric,rank,value";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Reid,
    Signal,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Reid => "reid",
            Task::Signal => "signal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub task: Task,
    #[serde(flatten)]
    pub report: MetricReport,
}

/// Initial matrices of a scenario.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    pub queries: Vec<SequenceId>,
    pub f: FeatureDistanceMatrix,
    pub s0: AffinityMatrix,
    pub d0: TrajDistanceMatrix,
}

/// Computes F, S⁰ and D⁰. Queries come from the scenario, or are drawn with `seed` if it lists none.
pub fn prepare(scenario: Scenario, metric: FeatureMetric, seed: u64) -> Result<Prepared> {
    let queries = if scenario.queries.is_empty() {
        make_queries(&scenario, &QueryRule { seed, min_cameras: 2 })
    } else {
        scenario.queries.clone()
    };
    if queries.is_empty() {
        return Err(AppError::config("queries", "scenario has no queryable sequences"));
    }
    let f = scenario_feature_distances(&scenario, metric).stage("affinity")?;
    let s0 = visual_affinity(&f).stage("affinity")?;
    let d0 = distance_matrix(&scenario);
    Ok(Prepared { scenario, queries, f, s0, d0 })
}

pub fn method_name(variant: Variant) -> &'static str {
    match variant {
        Variant::Standard => "rcpm",
        Variant::Star => "rcpm-star",
    }
}

/// Metrics of the propagated matrices, plus the matrices themselves.
pub struct Propagated {
    pub reid: MetricReport,
    pub signal: MetricReport,
    pub s: AffinityMatrix,
    pub d: TrajDistanceMatrix,
}

pub fn propagate(prep: &Prepared, cfg: &RcpmConfig, filter: GalleryFilter, max_rank: usize) -> Result<Propagated> {
    let (s, d) = rcpm::run(&prep.s0, &prep.d0, cfg).stage("rcpm")?;
    let reid = eval::reid_report(&s, &prep.scenario, &prep.queries, filter, max_rank).stage("eval")?;
    let signal = eval::signal_report(&d, &prep.scenario, &prep.queries, max_rank).stage("eval")?;
    Ok(Propagated { reid, signal, s, d })
}

pub struct RunOutcome {
    pub results: Vec<MethodResult>,
    /// Output of the configured variant.
    pub s: AffinityMatrix,
    pub d: TrajDistanceMatrix,
}

/// Baselines and the configured propagation variant(s).
pub fn evaluate(prep: &Prepared, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let filter = GalleryFilter { exclude_same_camera: cfg.eval.exclude_same_camera };
    let max_rank = cfg.max_rank();
    let mut results = vec![
        MethodResult {
            method: "visual".into(),
            task: Task::Reid,
            report: eval::reid_report(&prep.s0, &prep.scenario, &prep.queries, filter, max_rank).stage("eval")?,
        },
        MethodResult {
            method: "sm-baseline".into(),
            task: Task::Signal,
            report: eval::sm_baseline(&prep.d0, &prep.scenario, &prep.queries, max_rank).stage("eval")?,
        },
    ];
    let main = propagate(prep, &cfg.rcpm, filter, max_rank)?;
    let name = method_name(cfg.rcpm.variant);
    results.push(MethodResult { method: name.into(), task: Task::Reid, report: main.reid });
    results.push(MethodResult { method: name.into(), task: Task::Signal, report: main.signal });
    if cfg.eval.compare_star && cfg.rcpm.variant == Variant::Standard {
        let star = propagate(prep, &RcpmConfig { variant: Variant::Star, ..cfg.rcpm }, filter, max_rank)?;
        let name = method_name(Variant::Star);
        results.push(MethodResult { method: name.into(), task: Task::Reid, report: star.reid });
        results.push(MethodResult { method: name.into(), task: Task::Signal, report: star.signal });
    }
    Ok(RunOutcome { results, s: main.s, d: main.d })
}

/// Appends `cmc` rows for `ranks` and one `map` row; `prefix` leads every row.
pub fn push_metric_rows(out: &mut String, prefix: &str, report: &MetricReport, ranks: &[usize]) {
    for &r in ranks {
        if let Some(v) = report.rank(r) {
            let _ = writeln!(out, "{prefix},cmc,{r},{v}");
        }
    }
    let _ = writeln!(out, "{prefix},map,,{}", report.map);
}

pub fn metrics_csv(results: &[MethodResult], ranks: &[usize]) -> String {
    let mut out = String::from(METRIC_HEADER);
    out.push('\n');
    for r in results {
        push_metric_rows(&mut out, &format!("{},{}", r.method, r.task.name()), &r.report, ranks);
    }
    out
}

#[derive(Serialize)]
struct ScenarioSummary {
    sequences: usize,
    signals: usize,
    queries: usize,
    signal_queries: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    scenario: ScenarioSummary,
    config: &'a RunConfig,
    results: &'a [MethodResult],
}

/// Writes `metrics.csv`, `report.json` and the requested matrix dumps into the output directory.
pub fn write_outputs(prep: &Prepared, cfg: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    let dir = &cfg.output_dir;
    write_text(&dir.join("metrics.csv"), &metrics_csv(&outcome.results, &cfg.eval.ranks))?;
    let report = Report {
        scenario: ScenarioSummary {
            sequences: prep.scenario.sequences.len(),
            signals: prep.scenario.signals.len(),
            queries: prep.queries.len(),
            signal_queries: eval::signal_queries(&prep.scenario, &prep.queries).len(),
        },
        config: cfg,
        results: &outcome.results,
    };
    write_json(&dir.join("report.json"), &report)?;
    let dump = |name: &str| dir.join(Path::new(name));
    if cfg.dump.f {
        write_matrix(&dump("f.csv"), &prep.f, |v| *v)?;
    }
    if cfg.dump.s0 {
        write_matrix(&dump("s0.csv"), &prep.s0, |v| *v)?;
    }
    if cfg.dump.d0 {
        write_matrix(&dump("d0.csv"), &prep.d0, |v| v.to_f64())?;
    }
    if cfg.dump.s {
        write_matrix(&dump("s.csv"), &outcome.s, |v| *v)?;
    }
    if cfg.dump.d {
        write_matrix(&dump("d.csv"), &outcome.d, |v| v.to_f64())?;
    }
    Ok(())
}
