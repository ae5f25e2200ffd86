#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wpfusion_core::model::{Distance, Matrix};
use wpfusion_core::{
    AffinityMatrix, CameraId, IdentityId, Scenario, SequenceId, SignalId, TimedPoint, Timestamp, TrajDistanceMatrix,
    VideoSequence, VisualTrajectory, WirelessTrajectory, WorldPoint,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_point(rng: &mut ChaCha8Rng) -> WorldPoint {
    WorldPoint::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0))
}

/// Scenario with random 6 fps visual tracks and 1 Hz signals with gaps.
pub fn random_tracks(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Scenario {
    let sequences = (0..n)
        .map(|i| {
            let start = rng.gen_range(0..120u64);
            let len = rng.gen_range(1..90u64);
            let points = (start..start + len)
                .map(|f| TimedPoint::new(Timestamp::video_frame(f), random_point(rng)))
                .collect();
            VideoSequence {
                id: SequenceId(i as u32),
                camera: CameraId(0),
                identity: None,
                embedding: vec![0.0],
                trajectory: VisualTrajectory::new(points),
            }
        })
        .collect();
    let signals = (0..m)
        .map(|j| {
            let mut points = Vec::new();
            for s in 0..25u64 {
                if rng.gen_bool(0.7) {
                    points.push(TimedPoint::new(Timestamp::from_secs(s), random_point(rng)));
                }
            }
            WirelessTrajectory { id: SignalId(j as u32), identity: None, points }
        })
        .collect();
    Scenario { sequences, signals, queries: vec![], embedding_dim: 1 }
}

/// Row-normalized random affinity with unit diagonal.
pub fn random_affinity(rng: &mut ChaCha8Rng, n: usize) -> AffinityMatrix {
    Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rng.gen_range(0.0..1.0) })
}

/// Random distances in `[0, scale)`, with roughly `inf_rate` of them infinite.
pub fn random_distances(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64, inf_rate: f64) -> TrajDistanceMatrix {
    Matrix::from_fn(n, m, |_, _| {
        if rng.gen_bool(inf_rate) {
            Distance::Infinite
        } else {
            Distance::Finite(rng.gen_range(0.0..scale))
        }
    })
}

pub fn labelled(labels: &[(u32, u32)], signal_owners: &[u32]) -> Scenario {
    Scenario {
        sequences: labels
            .iter()
            .enumerate()
            .map(|(i, &(id, cam))| VideoSequence {
                id: SequenceId(i as u32),
                camera: CameraId(cam),
                identity: Some(IdentityId(id)),
                embedding: vec![0.0],
                trajectory: VisualTrajectory::default(),
            })
            .collect(),
        signals: signal_owners
            .iter()
            .enumerate()
            .map(|(j, &id)| WirelessTrajectory { id: SignalId(j as u32), identity: Some(IdentityId(id)), points: vec![] })
            .collect(),
        queries: (0..labels.len() as u32).map(SequenceId).collect(),
        embedding_dim: 1,
    }
}
