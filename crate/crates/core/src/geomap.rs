//! Camera georeferencing: a planar pixel-to-world homography fitted from
//! surveyed control points, the foot-point rule for bounding boxes, and a
//! constant-velocity Kalman filter over the projected track.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix2x4, Matrix3, Matrix4, SMatrix, SymmetricEigen, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::model::{Timestamp, TimedPoint, VisualTrajectory, WorldPoint};

/// Below this magnitude a homogeneous scale is treated as zero.
pub const SCALE_EPSILON: f64 = 1e-12;

/// Mean Earth radius in meters, used by the equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        PixelPoint { u, v }
    }
}

/// A surveyed correspondence between an image location and the ground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlPoint {
    pub pixel: PixelPoint,
    pub world: WorldPoint,
}

/// Local east-north frame anchored at a geodetic origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoOrigin {
    pub lat: f64,
    pub lon: f64,
}

impl GeoOrigin {
    /// Origin at the arithmetic mean of `(lat, lon)` pairs.
    pub fn centroid(coords: &[(f64, f64)]) -> Option<GeoOrigin> {
        if coords.is_empty() {
            return None;
        }
        let n = coords.len() as f64;
        let (lat, lon) = coords.iter().fold((0.0, 0.0), |(a, b), (la, lo)| (a + la, b + lo));
        Some(GeoOrigin { lat: lat / n, lon: lon / n })
    }

    /// Equirectangular approximation; accurate to centimeters over a few hundred meters.
    pub fn to_local(&self, lat: f64, lon: f64) -> WorldPoint {
        let k = core::f64::consts::PI / 180.0;
        let x = EARTH_RADIUS_M * (lon - self.lon) * k * libm::cos(self.lat * k);
        let y = EARTH_RADIUS_M * (lat - self.lat) * k;
        WorldPoint::new(x, y)
    }

    pub fn to_geodetic(&self, p: &WorldPoint) -> (f64, f64) {
        let k = core::f64::consts::PI / 180.0;
        let lat = self.lat + p.y / (EARTH_RADIUS_M * k);
        let lon = self.lon + p.x / (EARTH_RADIUS_M * k * libm::cos(self.lat * k));
        (lat, lon)
    }
}

/// Planar homography from image pixels to world meters, stored with `h[2][2] == 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelToWorldMap {
    h: Matrix3<f64>,
}

impl PixelToWorldMap {
    pub fn identity() -> Self {
        PixelToWorldMap { h: Matrix3::identity() }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        PixelToWorldMap { h: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0) }
    }

    /// Normalizes `rows` so the bottom-right entry is 1 and checks invertibility.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        let h = Matrix3::from_fn(|r, c| rows[r][c]);
        Self::from_matrix(h)
    }

    fn from_matrix(h: Matrix3<f64>) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateConfiguration("non-finite homography"));
        }
        let scale = h[(2, 2)];
        if libm::fabs(scale) < SCALE_EPSILON * h.norm().max(1.0) {
            return Err(Error::DegenerateConfiguration("homography bottom-right entry is zero"));
        }
        let h = h / scale;
        if libm::fabs(h.determinant()) <= 1e-12 {
            return Err(Error::DegenerateConfiguration("homography is singular"));
        }
        Ok(PixelToWorldMap { h })
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.h[(r, c)];
            }
        }
        out
    }

    /// Projective mapping of one pixel onto the ground plane.
    pub fn project(&self, p: PixelPoint) -> Result<WorldPoint> {
        let h = &self.h;
        let w = h[(2, 0)] * p.u + h[(2, 1)] * p.v + h[(2, 2)];
        if libm::fabs(w) < SCALE_EPSILON {
            return Err(Error::PointAtInfinity(w));
        }
        let x = (h[(0, 0)] * p.u + h[(0, 1)] * p.v + h[(0, 2)]) / w;
        let y = (h[(1, 0)] * p.u + h[(1, 1)] * p.v + h[(1, 2)]) / w;
        let out = WorldPoint::new(x, y);
        if !out.is_finite() {
            return Err(Error::PointAtInfinity(w));
        }
        Ok(out)
    }
}

/// Similarity transform moving the centroid to the origin with mean radius sqrt(2).
fn normalizer(points: &[(f64, f64)]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (cx, cy) = (sx / n, sy / n);
    let mean_r = points.iter().map(|p| libm::hypot(p.0 - cx, p.1 - cy)).sum::<f64>() / n;
    if !(mean_r > 0.0) || !mean_r.is_finite() {
        return Err(Error::DegenerateConfiguration("control points coincide"));
    }
    let s = core::f64::consts::SQRT_2 / mean_r;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, p: (f64, f64)) -> (f64, f64) {
    (t[(0, 0)] * p.0 + t[(0, 2)], t[(1, 1)] * p.1 + t[(1, 2)])
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let area = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    libm::fabs(area) < 1e-9
}

/// Levenberg-Marquardt on the eight free entries of `h` (with `h[8] = 1`),
/// minimizing squared transfer error in the target frame.
fn refine(h: &mut [f64; 9], src: &[(f64, f64)], dst: &[(f64, f64)]) {
    let residuals = |h: &[f64; 9], out: Option<&mut DMatrix<f64>>| -> DVector<f64> {
        let mut r = DVector::zeros(2 * src.len());
        let mut jac = out;
        for (k, (&(x, y), &(tx, ty))) in src.iter().zip(dst).enumerate() {
            let w = h[6] * x + h[7] * y + 1.0;
            let px = (h[0] * x + h[1] * y + h[2]) / w;
            let py = (h[3] * x + h[4] * y + h[5]) / w;
            r[2 * k] = px - tx;
            r[2 * k + 1] = py - ty;
            if let Some(j) = jac.as_deref_mut() {
                let rx = 2 * k;
                let ry = rx + 1;
                j[(rx, 0)] = x / w;
                j[(rx, 1)] = y / w;
                j[(rx, 2)] = 1.0 / w;
                j[(rx, 6)] = -px * x / w;
                j[(rx, 7)] = -px * y / w;
                j[(ry, 3)] = x / w;
                j[(ry, 4)] = y / w;
                j[(ry, 5)] = 1.0 / w;
                j[(ry, 6)] = -py * x / w;
                j[(ry, 7)] = -py * y / w;
            }
        }
        r
    };

    let mut lambda = 1e-3;
    let mut jac = DMatrix::zeros(2 * src.len(), 8);
    let mut r = residuals(h, Some(&mut jac));
    let mut cost = r.norm_squared();
    for _ in 0..100 {
        if cost < 1e-30 {
            break;
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..10 {
            let mut a = jtj.clone();
            for d in 0..8 {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand = *h;
            for d in 0..8 {
                cand[d] += step[d];
            }
            let cand_r = residuals(&cand, None);
            let cand_cost = cand_r.norm_squared();
            if cand_cost.is_finite() && cand_cost < cost {
                let rel = (cost - cand_cost) / cost;
                *h = cand;
                r = residuals(h, Some(&mut jac));
                cost = cand_cost;
                lambda = (lambda * 0.1).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
}

/// Fits the homography mapping control-point pixels onto their world positions.
///
/// A normalized direct linear transform gives the initial estimate, which is
/// then refined to minimize squared world-space residuals.
pub fn estimate_map(controls: &[ControlPoint]) -> Result<PixelToWorldMap> {
    if controls.len() < 4 {
        return Err(Error::DegenerateConfiguration("at least 4 control points are required"));
    }
    let src: Vec<(f64, f64)> = controls.iter().map(|c| (c.pixel.u, c.pixel.v)).collect();
    let dst: Vec<(f64, f64)> = controls.iter().map(|c| (c.world.x, c.world.y)).collect();
    if src.iter().chain(&dst).any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegenerateConfiguration("non-finite control point"));
    }

    let t_src = normalizer(&src)?;
    let t_dst = normalizer(&dst)?;
    let src_n: Vec<(f64, f64)> = src.iter().map(|&p| apply(&t_src, p)).collect();
    let dst_n: Vec<(f64, f64)> = dst.iter().map(|&p| apply(&t_dst, p)).collect();

    if controls.len() == 4 {
        for (a, b, c) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            if collinear(src_n[a], src_n[b], src_n[c]) || collinear(dst_n[a], dst_n[b], dst_n[c]) {
                return Err(Error::DegenerateConfiguration("three of four control points are collinear"));
            }
        }
    }

    let mut ata = SMatrix::<f64, 9, 9>::zeros();
    for (&(x, y), &(tx, ty)) in src_n.iter().zip(&dst_n) {
        let rows = [
            [-x, -y, -1.0, 0.0, 0.0, 0.0, tx * x, tx * y, tx],
            [0.0, 0.0, 0.0, -x, -y, -1.0, ty * x, ty * y, ty],
        ];
        for row in &rows {
            for i in 0..9 {
                for j in 0..9 {
                    ata[(i, j)] += row[i] * row[j];
                }
            }
        }
    }
    let eig = SymmetricEigen::new(ata);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[8]];
    if !(largest > 0.0) || eig.eigenvalues[order[1]] <= 1e-10 * largest {
        return Err(Error::DegenerateConfiguration("linear system is rank deficient"));
    }
    let null = eig.eigenvectors.column(order[0]);
    if libm::fabs(null[8]) < SCALE_EPSILON {
        return Err(Error::DegenerateConfiguration("normalized homography has zero scale"));
    }
    let mut h = [0.0; 9];
    for (k, v) in h.iter_mut().enumerate() {
        *v = null[k] / null[8];
    }
    refine(&mut h, &src_n, &dst_n);

    let hn = Matrix3::from_row_slice(&h);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or(Error::DegenerateConfiguration("world normalization is singular"))?;
    PixelToWorldMap::from_matrix(t_dst_inv * hn * t_src)
}

/// Detection rectangle in image pixels, `top` measured downward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub timestamp: Timestamp,
}

impl BoundingBox {
    pub fn new(left: f64, top: f64, width: f64, height: f64, timestamp: Timestamp) -> Result<Self> {
        if !(width > 0.0) || !(height > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bounding box needs positive size, got {width}x{height}"
            )));
        }
        Ok(BoundingBox { left, top, width, height, timestamp })
    }

    /// Bottom-center of the box, taken as the pedestrian's foot position.
    pub fn foot_point(&self) -> PixelPoint {
        PixelPoint::new(self.left + self.width / 2.0, self.top + self.height)
    }
}

/// Noise levels for the constant-velocity track filter.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct KalmanParams {
    /// Acceleration standard deviation, m/s².
    pub process_noise: f64,
    /// Position measurement standard deviation, m.
    pub measurement_noise: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams { process_noise: 1.0, measurement_noise: 2.0 }
    }
}

impl KalmanParams {
    pub fn new(process_noise: f64, measurement_noise: f64) -> Result<Self> {
        let p = KalmanParams { process_noise, measurement_noise };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.process_noise > 0.0 && self.process_noise.is_finite()) {
            return Err(Error::config("process_noise", "must be positive and finite"));
        }
        if !(self.measurement_noise > 0.0 && self.measurement_noise.is_finite()) {
            return Err(Error::config("measurement_noise", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Prior velocity spread for a track that has only been seen once, m/s.
const INITIAL_SPEED_STD: f64 = 10.0;

/// Forward constant-velocity Kalman filter over state `(x, y, vx, vy)`.
///
/// The filter starts at the first measurement with zero velocity, so the first
/// output point equals the first input point. Timestamps are preserved.
pub fn kalman_smooth(raw: &VisualTrajectory, params: &KalmanParams) -> VisualTrajectory {
    let Some(first) = raw.points.first() else {
        return raw.clone();
    };
    let q2 = params.process_noise * params.process_noise;
    let r2 = params.measurement_noise * params.measurement_noise;
    let obs = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let meas_cov = Matrix2::identity() * r2;

    let mut x = Vector4::new(first.p.x, first.p.y, 0.0, 0.0);
    let v0 = INITIAL_SPEED_STD * INITIAL_SPEED_STD;
    let mut p = Matrix4::from_diagonal(&Vector4::new(r2, r2, v0, v0));
    let mut out = Vec::with_capacity(raw.points.len());
    out.push(*first);
    let mut prev_t = first.t;

    for pt in &raw.points[1..] {
        let dt = (pt.t.millis().saturating_sub(prev_t.millis())) as f64 / 1000.0;
        prev_t = pt.t;
        let f = Matrix4::new(
            1.0, 0.0, dt, 0.0, //
            0.0, 1.0, 0.0, dt, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        let (a, b, c) = (dt * dt * dt * dt / 4.0 * q2, dt * dt * dt / 2.0 * q2, dt * dt * q2);
        let q = Matrix4::new(
            a, 0.0, b, 0.0, //
            0.0, a, 0.0, b, //
            b, 0.0, c, 0.0, //
            0.0, b, 0.0, c,
        );
        x = f * x;
        p = f * p * f.transpose() + q;

        let z = Vector2::new(pt.p.x, pt.p.y);
        let innov = z - obs * x;
        let s = obs * p * obs.transpose() + meas_cov;
        let gain = match s.try_inverse() {
            Some(s_inv) => p * obs.transpose() * s_inv,
            None => SMatrix::<f64, 4, 2>::zeros(),
        };
        x += gain * innov;
        // Joseph form keeps the covariance symmetric positive definite.
        let ikh = Matrix4::identity() - gain * obs;
        p = ikh * p * ikh.transpose() + gain * meas_cov * gain.transpose();

        out.push(TimedPoint::new(pt.t, WorldPoint::new(x[0], x[1])));
    }
    VisualTrajectory::new(out)
}

/// Foot points projected to the ground and filtered into a visual trajectory.
pub fn build_visual_trajectory(
    boxes: &[BoundingBox],
    map: &PixelToWorldMap,
    params: &KalmanParams,
) -> Result<VisualTrajectory> {
    if boxes.is_empty() {
        return Err(Error::InvalidInput("no bounding boxes".into()));
    }
    if boxes.windows(2).any(|w| w[0].timestamp >= w[1].timestamp) {
        return Err(Error::InvalidInput("box timestamps must be strictly increasing".into()));
    }
    let raw = boxes
        .iter()
        .map(|b| map.project(b.foot_point()).map(|p| TimedPoint::new(b.timestamp, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(kalman_smooth(&VisualTrajectory::new(raw), params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn synthetic() -> PixelToWorldMap {
        PixelToWorldMap::from_rows([[0.05, 0.01, -3.0], [0.002, 0.08, 4.0], [1e-4, 2e-4, 1.0]]).unwrap()
    }

    fn controls_for(map: &PixelToWorldMap, pixels: &[(f64, f64)]) -> Vec<ControlPoint> {
        pixels
            .iter()
            .map(|&(u, v)| ControlPoint {
                pixel: PixelPoint::new(u, v),
                world: map.project(PixelPoint::new(u, v)).unwrap(),
            })
            .collect()
    }

    #[test]
    fn foot_point_examples() {
        let b = |l, t, w, h| BoundingBox::new(l, t, w, h, Timestamp(0)).unwrap().foot_point();
        assert_eq!(b(10.0, 20.0, 4.0, 10.0), PixelPoint::new(12.0, 30.0));
        assert_eq!(b(0.0, 0.0, 2.0, 2.0), PixelPoint::new(1.0, 2.0));
        assert_eq!(b(5.0, 5.0, 1.0, 1.0), PixelPoint::new(5.5, 6.0));
    }

    #[test]
    fn empty_box_is_rejected() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0, Timestamp(0)).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0, Timestamp(0)).is_err());
    }

    #[test]
    fn project_simple_maps() {
        let p = PixelToWorldMap::identity().project(PixelPoint::new(3.0, 4.0)).unwrap();
        assert_eq!(p, WorldPoint::new(3.0, 4.0));
        let p = PixelToWorldMap::translation(10.0, 20.0).project(PixelPoint::new(1.0, 1.0)).unwrap();
        assert_eq!(p, WorldPoint::new(11.0, 21.0));
    }

    #[test]
    fn project_matches_closed_form() {
        let m = synthetic();
        let (u, v) = (321.0, 123.5);
        let w = 1e-4 * u + 2e-4 * v + 1.0;
        let x = (0.05 * u + 0.01 * v - 3.0) / w;
        let y = (0.002 * u + 0.08 * v + 4.0) / w;
        let p = m.project(PixelPoint::new(u, v)).unwrap();
        assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
    }

    #[test]
    fn point_at_infinity() {
        let m = PixelToWorldMap::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(m.project(PixelPoint::new(-1.0, 5.0)), Err(Error::PointAtInfinity(_))));
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(PixelToWorldMap::from_rows([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn four_exact_points() {
        let m = synthetic();
        let c = controls_for(&m, &[(0.0, 0.0), (640.0, 0.0), (640.0, 480.0), (0.0, 480.0)]);
        let est = estimate_map(&c).unwrap();
        for cp in &c {
            let p = est.project(cp.pixel).unwrap();
            assert!(p.distance(&cp.world) <= 1e-9, "residual {}", p.distance(&cp.world));
        }
    }

    #[test]
    fn three_points_degenerate() {
        let m = synthetic();
        let c = controls_for(&m, &[(0.0, 0.0), (640.0, 0.0), (640.0, 480.0)]);
        assert!(matches!(estimate_map(&c), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn collinear_points_degenerate() {
        let m = synthetic();
        let c = controls_for(&m, &[(0.0, 0.0), (100.0, 100.0), (200.0, 200.0), (300.0, 300.0), (400.0, 400.0)]);
        assert!(matches!(estimate_map(&c), Err(Error::DegenerateConfiguration(_))));
        let c = controls_for(&m, &[(0.0, 0.0), (100.0, 100.0), (200.0, 200.0), (0.0, 400.0)]);
        assert!(matches!(estimate_map(&c), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn geodetic_round_trip() {
        let o = GeoOrigin { lat: 31.84, lon: 117.26 };
        let p = o.to_local(31.8405, 117.2612);
        let (lat, lon) = o.to_geodetic(&p);
        assert!((lat - 31.8405).abs() < 1e-12 && (lon - 117.2612).abs() < 1e-12);
        // 0.0005 degrees of latitude is about 55.6 m.
        assert!((p.y - 55.597).abs() < 0.01);
    }

    #[test]
    fn single_point_unchanged() {
        let t = VisualTrajectory::new(vec![TimedPoint::new(Timestamp(0), WorldPoint::new(1.0, 2.0))]);
        assert_eq!(kalman_smooth(&t, &KalmanParams::default()), t);
    }

    #[test]
    fn kalman_params_validated() {
        assert!(KalmanParams::new(0.0, 1.0).is_err());
        assert!(KalmanParams::new(1.0, -1.0).is_err());
        assert!(KalmanParams::new(1.0, 2.0).is_ok());
    }

    #[test]
    fn build_requires_increasing_boxes() {
        let b = BoundingBox::new(0.0, 0.0, 2.0, 2.0, Timestamp(0)).unwrap();
        let map = PixelToWorldMap::identity();
        assert!(build_visual_trajectory(&[], &map, &KalmanParams::default()).is_err());
        assert!(build_visual_trajectory(&[b, b], &map, &KalmanParams::default()).is_err());
        let t = build_visual_trajectory(&[b], &map, &KalmanParams::default()).unwrap();
        assert_eq!(t.points, vec![TimedPoint::new(Timestamp(0), WorldPoint::new(1.0, 2.0))]);
    }
}
