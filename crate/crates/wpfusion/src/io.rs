//! JSON and CSV file formats.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wpfusion_core::geomap::{BoundingBox, ControlPoint, GeoOrigin, PixelPoint};
use wpfusion_core::model::{validate, Distance, Matrix};
use wpfusion_core::{CameraId, Scenario, TimedPoint, Timestamp};

use crate::error::{AppError, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| AppError::Json { path: path.into(), source })
}

/// Pretty JSON with a trailing newline. Parent directories are created.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| AppError::Json { path: path.into(), source })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Reads a scenario and rejects it if any invariant is broken.
pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let sc: Scenario = read_json(path)?;
    let violations = validate(&sc);
    if let Some(first) = violations.first() {
        return Err(AppError::BadFile {
            path: path.into(),
            reason: format!("{} invalid scenario entries, first: {first}", violations.len()),
        });
    }
    Ok(sc)
}

/// One control point as stored on disk: pixel `[u, v]`, world `[lat, lon]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRecord {
    pub pixel: [f64; 2],
    pub world: [f64; 2],
}

pub fn read_controls(path: &Path) -> Result<Vec<ControlRecord>> {
    read_json(path)
}

/// Converts geodetic control points into the local frame of `origin`.
pub fn local_controls(records: &[ControlRecord], origin: &GeoOrigin) -> Vec<ControlPoint> {
    records
        .iter()
        .map(|r| ControlPoint {
            pixel: PixelPoint::new(r.pixel[0], r.pixel[1]),
            world: origin.to_local(r.world[0], r.world[1]),
        })
        .collect()
}

/// Tracked detections of one camera.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detections {
    pub camera: CameraId,
    pub tracks: Vec<Track>,
}

/// Boxes as `[millis, left, top, width, height]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Track {
    pub id: u32,
    pub boxes: Vec<[f64; 5]>,
}

impl Track {
    pub fn bounding_boxes(&self) -> wpfusion_core::Result<Vec<BoundingBox>> {
        self.boxes
            .iter()
            .map(|b| {
                if !(b[0] >= 0.0 && b[0].fract() == 0.0) {
                    return Err(wpfusion_core::Error::InvalidInput(format!(
                        "track {}: timestamp {} is not a whole number of milliseconds",
                        self.id, b[0]
                    )));
                }
                BoundingBox::new(b[1], b[2], b[3], b[4], Timestamp(b[0] as u64))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectories {
    pub camera: CameraId,
    /// Geodetic `[lat, lon]` of the local frame's origin.
    pub origin: [f64; 2],
    pub trajectories: Vec<TrackTrajectory>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackTrajectory {
    pub id: u32,
    pub points: Vec<TimedPoint>,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |source| AppError::Csv { path: path.into(), source }
}

/// Headerless CSV, one matrix row per line; infinite distances are written as `inf`.
pub fn write_matrix<T>(path: &Path, m: &Matrix<T>, cell: impl Fn(&T) -> f64) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    for row in m.iter_rows() {
        w.write_record(row.iter().map(|v| cell(v).to_string())).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::BadFile { path: path.into(), reason: format!("line {}: {e}", line + 1) })?;
        rows.push(row);
    }
    Matrix::from_rows(rows).ok_or_else(|| AppError::BadFile { path: path.into(), reason: "ragged rows".into() })
}

pub fn read_distance_matrix(path: &Path) -> Result<Matrix<Distance>> {
    let m = read_matrix(path)?;
    if m.as_slice().iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(AppError::BadFile { path: path.into(), reason: "distances must be non-negative or inf".into() });
    }
    Ok(m.map(|v| Distance::from_f64(*v)))
}
