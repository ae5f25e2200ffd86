//! JSON run and sweep configuration. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wpfusion_core::affinity::FeatureMetric;
use wpfusion_core::rcpm::{RcpmConfig, Variant};

use crate::error::{AppError, Result};
use crate::io::read_json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSwitches {
    /// Drop gallery items of the query's identity seen by the query's camera.
    pub exclude_same_camera: bool,
    /// Also evaluate the variant that feeds each round its own output.
    pub compare_star: bool,
    /// CMC ranks written to the metrics table.
    pub ranks: Vec<usize>,
}

impl Default for EvalSwitches {
    fn default() -> Self {
        EvalSwitches { exclude_same_camera: true, compare_star: false, ranks: vec![1, 5, 10, 20] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DumpFlags {
    pub f: bool,
    pub s0: bool,
    pub d0: bool,
    /// Final affinity after propagation.
    pub s: bool,
    /// Final distances after propagation.
    pub d: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub metric: FeatureMetric,
    pub rcpm: RcpmConfig,
    pub eval: EvalSwitches,
    pub output_dir: PathBuf,
    pub dump: DumpFlags,
    /// Used to draw queries when the scenario lists none.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: PathBuf::from("scenario.json"),
            metric: FeatureMetric::default(),
            rcpm: RcpmConfig::default(),
            eval: EvalSwitches::default(),
            output_dir: PathBuf::from("out"),
            dump: DumpFlags::default(),
            seed: 0,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        resolve(base, &mut cfg.scenario);
        resolve(base, &mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval.ranks.is_empty() {
            return Err(AppError::config("eval.ranks", "must list at least one rank"));
        }
        if self.eval.ranks.contains(&0) {
            return Err(AppError::config("eval.ranks", "ranks start at 1"));
        }
        Ok(())
    }

    pub fn max_rank(&self) -> usize {
        self.eval.ranks.iter().copied().max().unwrap_or(1)
    }
}

/// Parameter grid; every axis must be non-empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub k: Vec<usize>,
    pub sigma: Vec<f64>,
    pub iterations: Vec<usize>,
    #[serde(default = "default_variants")]
    pub variant: Vec<Variant>,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Standard]
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("grid.k", self.k.len()),
            ("grid.sigma", self.sigma.len()),
            ("grid.iterations", self.iterations.len()),
            ("grid.variant", self.variant.len()),
        ];
        match axes.iter().find(|(_, n)| *n == 0) {
            Some((field, _)) => Err(AppError::config(*field, "grid axis is empty")),
            None => Ok(()),
        }
    }

    /// Grid points in row-major order: variant, k, sigma, then iterations vary fastest.
    pub fn points(&self, base: &RcpmConfig) -> Vec<RcpmConfig> {
        let mut out = Vec::new();
        for &variant in &self.variant {
            for &k in &self.k {
                for &sigma in &self.sigma {
                    for &iterations in &self.iterations {
                        out.push(RcpmConfig { k, sigma, iterations, variant, ..*base });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Everything except the swept parameters; `run.rcpm` supplies the fusion weight.
    #[serde(default)]
    pub run: RunConfig,
    pub grid: Grid,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: SweepConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        resolve(base, &mut cfg.run.scenario);
        resolve(base, &mut cfg.run.output_dir);
        Ok(cfg)
    }
}
