use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wpfusion::config::{RunConfig, SweepConfig};
use wpfusion::error::{AppError, Result, Stage};
use wpfusion::georef::{georef, GeorefConfig};
use wpfusion::io::{read_controls, read_distance_matrix, read_json, read_matrix, read_scenario, write_json, write_text};
use wpfusion::pipeline::{self, MethodResult, Task};
use wpfusion::sweep::sweep;
use wpfusion_core::eval::{self, GalleryFilter};
use wpfusion_core::rcpm::Variant;
use wpfusion_core::simgen::{generate, SimConfig};

#[derive(Parser)]
#[command(name = "wpfusion", version, about = "Fuse video re-identification with wireless positioning trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario.
    Simulate {
        /// Simulator config (JSON); defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map one camera's tracked boxes onto the ground plane.
    Georef {
        /// JSON array of {"pixel": [u, v], "world": [lat, lon]}.
        #[arg(long)]
        controls: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Shared origin as `lat,lon`.
        #[arg(long, value_parser = parse_origin)]
        origin: Option<[f64; 2]>,
        /// Accepted for interface uniformity; georeferencing draws no random numbers.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Baselines, propagation and metrics for one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
        #[arg(long)]
        dump_f: bool,
        #[arg(long)]
        dump_s0: bool,
        #[arg(long)]
        dump_d0: bool,
        #[arg(long)]
        dump_s: bool,
        #[arg(long)]
        dump_d: bool,
        /// Also evaluate the variant that reuses its own output.
        #[arg(long)]
        compare_star: bool,
    },
    /// Propagation metrics over a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep CSV path; defaults to `sweep.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score externally produced affinity and/or distance matrices.
    Eval {
        #[arg(long)]
        scenario: PathBuf,
        /// Headerless N×N CSV of affinities, higher is more similar.
        #[arg(long)]
        affinity: Option<PathBuf>,
        /// Headerless N×M CSV of distances, `inf` for no overlap.
        #[arg(long)]
        distances: Option<PathBuf>,
        #[arg(long, default_value = "external")]
        method: String,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
        ranks: Vec<usize>,
        /// Keep same-camera matches of the query's identity in the gallery.
        #[arg(long)]
        keep_same_camera: bool,
        /// Seed for drawing queries when the scenario lists none.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunOverrides {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunOverrides {
    fn apply(self, cfg: &mut RunConfig) {
        if let Some(p) = self.scenario {
            cfg.scenario = p;
        }
        if let Some(p) = self.out_dir {
            cfg.output_dir = p;
        }
        if let Some(k) = self.k {
            cfg.rcpm.k = k;
        }
        if let Some(s) = self.sigma {
            cfg.rcpm.sigma = s;
        }
        if let Some(t) = self.iters {
            cfg.rcpm.iterations = t;
        }
        if let Some(v) = self.variant {
            cfg.rcpm.variant = v;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: wpfusion_core::Error| e.to_string())
}

fn parse_origin(s: &str) -> Result<[f64; 2], String> {
    let (lat, lon) = s.split_once(',').ok_or("expected `lat,lon`")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok([p(lat)?, p(lon)?])
}

fn simulate(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(p) => read_json::<SimConfig>(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let sc = generate(&cfg).stage("simgen")?;
    write_json(out, &sc)?;
    println!(
        "{}: {} sequences, {} signals, {} queries",
        out.display(),
        sc.sequences.len(),
        sc.signals.len(),
        sc.queries.len()
    );
    Ok(())
}

fn run(cfg: RunConfig) -> Result<()> {
    let sc = read_scenario(&cfg.scenario)?;
    let prep = pipeline::prepare(sc, cfg.metric, cfg.seed)?;
    let outcome = pipeline::evaluate(&prep, &cfg)?;
    pipeline::write_outputs(&prep, &cfg, &outcome)?;
    for r in &outcome.results {
        println!(
            "{:<12} {:<6} rank-1 {:.4}  mAP {:.4}",
            r.method,
            r.task.name(),
            r.report.rank(1).unwrap_or(f64::NAN),
            r.report.map
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval_matrices(
    scenario: &Path,
    affinity: Option<&Path>,
    distances: Option<&Path>,
    method: &str,
    ranks: &[usize],
    filter: GalleryFilter,
    seed: u64,
    out_dir: &Path,
) -> Result<()> {
    if affinity.is_none() && distances.is_none() {
        return Err(AppError::config("eval", "pass --affinity and/or --distances"));
    }
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(AppError::config("ranks", "ranks must be positive"));
    }
    let sc = read_scenario(scenario)?;
    let queries = if sc.queries.is_empty() {
        wpfusion_core::simgen::make_queries(&sc, &wpfusion_core::simgen::QueryRule { seed, min_cameras: 2 })
    } else {
        sc.queries.clone()
    };
    let max_rank = ranks.iter().copied().max().unwrap_or(1);
    let mut results = Vec::new();
    if let Some(p) = affinity {
        let s = read_matrix(p)?;
        let report = eval::reid_report(&s, &sc, &queries, filter, max_rank).stage("eval")?;
        results.push(MethodResult { method: method.into(), task: Task::Reid, report });
    }
    if let Some(p) = distances {
        let d = read_distance_matrix(p)?;
        let report = eval::signal_report(&d, &sc, &queries, max_rank).stage("eval")?;
        results.push(MethodResult { method: method.into(), task: Task::Signal, report });
    }
    write_text(&out_dir.join("metrics.csv"), &pipeline::metrics_csv(&results, ranks))?;
    write_json(&out_dir.join("report.json"), &results)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out } => simulate(config.as_deref(), seed, &out),
        Command::Georef { controls, detections, config, origin, seed: _, out } => {
            let mut cfg = match config {
                Some(p) => read_json::<GeorefConfig>(&p)?,
                None => GeorefConfig::default(),
            };
            if origin.is_some() {
                cfg.origin = origin;
            }
            let traj = georef(&read_controls(&controls)?, &read_json(&detections)?, &cfg)?;
            write_json(&out, &traj)
        }
        Command::Run { config, overrides, dump_f, dump_s0, dump_d0, dump_s, dump_d, compare_star } => {
            let mut cfg = RunConfig::load(&config)?;
            overrides.apply(&mut cfg);
            cfg.dump.f |= dump_f;
            cfg.dump.s0 |= dump_s0;
            cfg.dump.d0 |= dump_d0;
            cfg.dump.s |= dump_s;
            cfg.dump.d |= dump_d;
            cfg.eval.compare_star |= compare_star;
            run(cfg)
        }
        Command::Sweep { config, scenario, seed, out } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(p) = scenario {
                cfg.run.scenario = p;
            }
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            cfg.grid.validate()?;
            let prep = pipeline::prepare(read_scenario(&cfg.run.scenario)?, cfg.run.metric, cfg.run.seed)?;
            let table = sweep(&prep, &cfg)?;
            let out = out.unwrap_or_else(|| cfg.run.output_dir.join("sweep.csv"));
            write_text(&out, &table)
        }
        Command::Eval { scenario, affinity, distances, method, ranks, keep_same_camera, seed, out_dir } => eval_matrices(
            &scenario,
            affinity.as_deref(),
            distances.as_deref(),
            &method,
            &ranks,
            GalleryFilter { exclude_same_camera: !keep_same_camera },
            seed,
            &out_dir,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
