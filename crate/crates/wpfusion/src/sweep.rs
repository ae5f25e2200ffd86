use rayon::prelude::*;
use wpfusion_core::eval::GalleryFilter;

use crate::config::SweepConfig;
use crate::error::Result;
use crate::pipeline::{propagate, push_metric_rows, Prepared};

pub const SWEEP_HEADER: &str = "k,sigma,iterations,variant,task,metric,rank,value";

/// Runs every grid point and returns the sweep table. Rows follow grid order.
pub fn sweep(prep: &Prepared, cfg: &SweepConfig) -> Result<String> {
    cfg.run.validate()?;
    cfg.grid.validate()?;
    let filter = GalleryFilter { exclude_same_camera: cfg.run.eval.exclude_same_camera };
    let max_rank = cfg.run.max_rank();
    let points = cfg.grid.points(&cfg.run.rcpm);
    let reports = points
        .par_iter()
        .map(|p| propagate(prep, p, filter, max_rank).map(|r| (r.reid, r.signal)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for (p, (reid, signal)) in points.iter().zip(&reports) {
        let head = format!("{},{},{},{}", p.k, p.sigma, p.iterations, p.variant.name());
        push_metric_rows(&mut out, &format!("{head},reid"), reid, &cfg.run.eval.ranks);
        push_metric_rows(&mut out, &format!("{head},signal"), signal, &cfg.run.eval.ranks);
    }
    Ok(out)
}
