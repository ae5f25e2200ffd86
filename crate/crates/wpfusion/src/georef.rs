//! Detections to ground-plane trajectories for one camera.

use serde::{Deserialize, Serialize};
use wpfusion_core::geomap::{build_visual_trajectory, estimate_map, GeoOrigin, KalmanParams};

use crate::error::{AppError, Result, Stage};
use crate::io::{local_controls, ControlRecord, Detections, TrackTrajectory, Trajectories};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeorefConfig {
    pub kalman: KalmanParams,
    /// Shared `[lat, lon]` origin; defaults to the control-point centroid.
    /// Set it when several cameras must share one frame.
    pub origin: Option<[f64; 2]>,
}

pub fn georef(controls: &[ControlRecord], detections: &Detections, cfg: &GeorefConfig) -> Result<Trajectories> {
    cfg.kalman.validate().stage("geomap")?;
    let origin = match cfg.origin {
        Some([lat, lon]) => GeoOrigin { lat, lon },
        None => {
            let coords: Vec<(f64, f64)> = controls.iter().map(|c| (c.world[0], c.world[1])).collect();
            GeoOrigin::centroid(&coords).ok_or_else(|| AppError::config("controls", "no control points"))?
        }
    };
    let map = estimate_map(&local_controls(controls, &origin)).stage("geomap")?;
    let trajectories = detections
        .tracks
        .iter()
        .map(|t| {
            let boxes = t.bounding_boxes().stage("geomap")?;
            let traj = build_visual_trajectory(&boxes, &map, &cfg.kalman).stage("geomap")?;
            Ok(TrackTrajectory { id: t.id, points: traj.points })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectories { camera: detections.camera, origin: [origin.lat, origin.lon], trajectories })
}
