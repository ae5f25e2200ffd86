//! Timestamp alignment of visual and wireless trajectories and the initial
//! trajectory distance matrix.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::{
    Distance, Matrix, Scenario, Timestamp, TimedPoint, TrajDistanceMatrix, VisualTrajectory,
    WirelessTrajectory, WorldPoint,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignedPair {
    pub t: Timestamp,
    pub visual: WorldPoint,
    pub wireless: WorldPoint,
}

impl AlignedPair {
    pub fn distance(&self) -> f64 {
        self.visual.distance(&self.wireless)
    }
}

/// Point pairs of one visual and one wireless trajectory that share a whole-second timestamp.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlignedPairs {
    pub pairs: Vec<AlignedPair>,
}

impl AlignedPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn whole_seconds(points: &[TimedPoint]) -> impl Iterator<Item = &TimedPoint> {
    points.iter().filter(|p| p.t.is_whole_second())
}

/// Exact-timestamp join of the two trajectories on the whole-second grid.
///
/// Visual frames between seconds never participate. Both inputs are assumed
/// sorted by time.
pub fn aligned_pairs(tv: &VisualTrajectory, tw: &WirelessTrajectory) -> AlignedPairs {
    let mut pairs = Vec::new();
    let mut vis = whole_seconds(&tv.points).peekable();
    let mut wls = whole_seconds(&tw.points).peekable();
    while let (Some(v), Some(w)) = (vis.peek(), wls.peek()) {
        match v.t.cmp(&w.t) {
            Ordering::Less => {
                vis.next();
            }
            Ordering::Greater => {
                wls.next();
            }
            Ordering::Equal => {
                pairs.push(AlignedPair { t: v.t, visual: v.p, wireless: w.p });
                vis.next();
                wls.next();
            }
        }
    }
    AlignedPairs { pairs }
}

/// Mean Euclidean distance over the aligned pairs; `Infinite` when there are none.
pub fn trajectory_distance(pairs: &AlignedPairs) -> Distance {
    if pairs.is_empty() {
        return Distance::Infinite;
    }
    let total: f64 = pairs.pairs.iter().map(AlignedPair::distance).sum();
    Distance::Finite(total / pairs.len() as f64)
}

/// D⁰: one row per video sequence, one column per wireless signal.
pub fn distance_matrix(scenario: &Scenario) -> TrajDistanceMatrix {
    Matrix::from_fn(scenario.sequences.len(), scenario.signals.len(), |i, m| {
        trajectory_distance(&aligned_pairs(&scenario.sequences[i].trajectory, &scenario.signals[m]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SignalId;
    use alloc::vec;

    fn at_secs(secs: &[u64]) -> Vec<TimedPoint> {
        secs.iter()
            .map(|&s| TimedPoint::new(Timestamp::from_secs(s), WorldPoint::new(s as f64, 0.0)))
            .collect()
    }

    fn signal(points: Vec<TimedPoint>) -> WirelessTrajectory {
        WirelessTrajectory { id: SignalId(0), identity: None, points }
    }

    #[test]
    fn disjoint_ranges_are_empty() {
        let p = aligned_pairs(&VisualTrajectory::new(at_secs(&[1, 2])), &signal(at_secs(&[5, 6])));
        assert!(p.is_empty());
        assert_eq!(trajectory_distance(&p), Distance::Infinite);
    }

    #[test]
    fn partial_overlap() {
        let p = aligned_pairs(&VisualTrajectory::new(at_secs(&[1, 2, 3])), &signal(at_secs(&[2, 3, 4])));
        let ts: Vec<u64> = p.pairs.iter().map(|q| q.t.millis()).collect();
        assert_eq!(ts, vec![2000, 3000]);
    }

    #[test]
    fn six_fps_against_one_hz() {
        let frames = (0..=60)
            .map(|f| TimedPoint::new(Timestamp::video_frame(f), WorldPoint::new(0.0, 0.0)))
            .collect();
        let secs: Vec<u64> = (0..=10).collect();
        let p = aligned_pairs(&VisualTrajectory::new(frames), &signal(at_secs(&secs)));
        assert_eq!(p.len(), 11);
    }

    #[test]
    fn off_second_visual_frames_excluded() {
        let tv = VisualTrajectory::new(vec![
            TimedPoint::new(Timestamp(1000), WorldPoint::new(0.0, 0.0)),
            TimedPoint::new(Timestamp(1167), WorldPoint::new(0.0, 0.0)),
        ]);
        let mut tw = signal(at_secs(&[1]));
        tw.points.push(TimedPoint::new(Timestamp(1167), WorldPoint::new(0.0, 0.0)));
        assert_eq!(aligned_pairs(&tv, &tw).len(), 1);
    }

    #[test]
    fn mean_of_pair_distances() {
        let pairs = AlignedPairs {
            pairs: vec![
                AlignedPair { t: Timestamp(0), visual: WorldPoint::new(0.0, 0.0), wireless: WorldPoint::new(3.0, 4.0) },
                AlignedPair { t: Timestamp(1000), visual: WorldPoint::new(0.0, 0.0), wireless: WorldPoint::new(9.0, 12.0) },
            ],
        };
        assert_eq!(trajectory_distance(&pairs), Distance::Finite(10.0));
    }

    #[test]
    fn identical_paths_are_zero() {
        let pts = at_secs(&[0, 1, 2]);
        let p = aligned_pairs(&VisualTrajectory::new(pts.clone()), &signal(pts));
        assert_eq!(trajectory_distance(&p), Distance::Finite(0.0));
    }
}
