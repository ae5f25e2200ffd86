//! Seeded synthetic scenarios: pedestrians walking waypoint paths through
//! camera footprints, phones reporting noisy 1 Hz fixes with dropouts, and
//! identity-conditioned embeddings with occlusion and clothing-change damage.
//!
//! Every random draw comes from a ChaCha stream derived from `SimConfig::seed`,
//! so a config fully determines the generated scenario.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{
    CameraId, IdentityId, Scenario, SequenceId, SignalId, Timestamp, TimedPoint, VideoSequence, VisualTrajectory,
    WirelessTrajectory, WorldPoint, VIDEO_FPS,
};

/// Axis-aligned world rectangle, meters.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Footprint {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Footprint {
    pub const fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Footprint { min_x, min_y, max_x, max_y }
    }

    pub fn contains(&self, p: &WorldPoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    fn is_valid(&self) -> bool {
        [self.min_x, self.min_y, self.max_x, self.max_y].iter().all(|v| v.is_finite())
            && self.min_x < self.max_x
            && self.min_y < self.max_y
    }

    fn sample(&self, rng: &mut impl Rng) -> WorldPoint {
        WorldPoint::new(rng.gen_range(self.min_x..=self.max_x), rng.gen_range(self.min_y..=self.max_y))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimConfig {
    pub n_identities: usize,
    pub n_with_phone: usize,
    /// One footprint per camera; cameras are numbered in list order.
    pub cameras: Vec<Footprint>,
    /// Region the waypoints are drawn from.
    pub area: Footprint,
    pub duration_secs: u64,
    /// Shortest time a person spends in the scene.
    pub min_presence_secs: u64,
    /// Walking speed range, m/s.
    pub walk_speed: [f64; 2],
    /// Per-axis std of the georeferenced foot position, m.
    pub visual_noise_std: f64,
    /// Per-axis std of the white component of the positioning error, m.
    pub positioning_noise_std: f64,
    /// Per-axis stationary std of the slowly drifting positioning bias, m.
    pub positioning_bias_std: f64,
    /// Correlation time of the positioning bias, s.
    pub positioning_bias_tau_secs: f64,
    /// Per-second probability that a dropout burst starts.
    pub dropout_prob: f64,
    /// Longest dropout burst, s.
    pub dropout_max_secs: u64,
    pub embedding_dim: usize,
    /// Per-dimension std of the identity appearance means.
    pub identity_spread: f64,
    /// Per-dimension std of sequence embeddings around their identity mean.
    pub embedding_noise_std: f64,
    /// Fraction of sequences whose embedding is damaged as if occluded.
    pub corruption_rate: f64,
    /// Per-dimension std of the additive occlusion noise.
    pub corruption_strength: f64,
    /// Probability that a person changes appearance partway through the scene.
    pub clothing_change_prob: f64,
    /// Expected fraction of people walking alongside a partner.
    pub pair_walking_prob: f64,
    /// Lateral distance between walking partners, m.
    pub pair_offset: f64,
    /// Camera passages shorter than this are not turned into sequences, s.
    pub min_sequence_secs: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_identities: 36,
            n_with_phone: 24,
            cameras: vec![
                Footprint::new(0.0, 0.0, 21.0, 21.0),
                Footprint::new(31.5, 0.0, 52.5, 21.0),
                Footprint::new(63.0, 0.0, 84.0, 21.0),
                Footprint::new(0.0, 35.0, 21.0, 56.0),
                Footprint::new(31.5, 35.0, 52.5, 56.0),
                Footprint::new(63.0, 35.0, 84.0, 56.0),
            ],
            area: Footprint::new(0.0, 0.0, 84.0, 56.0),
            duration_secs: 600,
            min_presence_secs: 600,
            walk_speed: [0.8, 1.6],
            visual_noise_std: 0.3,
            positioning_noise_std: 5.0,
            positioning_bias_std: 5.0,
            positioning_bias_tau_secs: 90.0,
            dropout_prob: 0.02,
            dropout_max_secs: 5,
            embedding_dim: 32,
            identity_spread: 1.1,
            embedding_noise_std: 0.4,
            corruption_rate: 0.3,
            corruption_strength: 1.5,
            clothing_change_prob: 0.1,
            pair_walking_prob: 0.3,
            pair_offset: 1.5,
            min_sequence_secs: 6.0,
            seed: 0,
        }
    }
}

fn check_rate(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, "must lie in [0, 1]"))
    }
}

fn check_std(field: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, "must be non-negative and finite"))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_identities == 0 {
            return Err(Error::config("n_identities", "must be at least 1"));
        }
        if self.n_with_phone > self.n_identities {
            return Err(Error::config("n_with_phone", "exceeds n_identities"));
        }
        if self.cameras.is_empty() {
            return Err(Error::config("cameras", "at least one camera is required"));
        }
        if !self.cameras.iter().all(Footprint::is_valid) {
            return Err(Error::config("cameras", "footprints need min < max on both axes"));
        }
        if !self.area.is_valid() {
            return Err(Error::config("area", "needs min < max on both axes"));
        }
        if self.duration_secs == 0 {
            return Err(Error::config("duration_secs", "must be positive"));
        }
        if self.min_presence_secs == 0 || self.min_presence_secs > self.duration_secs {
            return Err(Error::config("min_presence_secs", "must lie in [1, duration_secs]"));
        }
        let [lo, hi] = self.walk_speed;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config("walk_speed", "needs 0 < min <= max"));
        }
        check_std("visual_noise_std", self.visual_noise_std)?;
        check_std("positioning_noise_std", self.positioning_noise_std)?;
        check_std("positioning_bias_std", self.positioning_bias_std)?;
        if !(self.positioning_bias_tau_secs > 0.0) {
            return Err(Error::config("positioning_bias_tau_secs", "must be positive"));
        }
        check_rate("dropout_prob", self.dropout_prob)?;
        if self.dropout_prob > 0.0 && self.dropout_max_secs == 0 {
            return Err(Error::config("dropout_max_secs", "must be positive when dropouts are enabled"));
        }
        if self.embedding_dim == 0 {
            return Err(Error::config("embedding_dim", "must be positive"));
        }
        check_std("identity_spread", self.identity_spread)?;
        check_std("embedding_noise_std", self.embedding_noise_std)?;
        check_rate("corruption_rate", self.corruption_rate)?;
        check_std("corruption_strength", self.corruption_strength)?;
        check_rate("clothing_change_prob", self.clothing_change_prob)?;
        check_rate("pair_walking_prob", self.pair_walking_prob)?;
        check_std("pair_offset", self.pair_offset)?;
        check_std("min_sequence_secs", self.min_sequence_secs)?;
        Ok(())
    }
}

/// Independent random streams, one per concern, so that changing e.g. the
/// embedding settings leaves the motion untouched.
#[derive(Clone, Copy)]
enum Stream {
    Motion = 1,
    Visual = 2,
    Appearance = 3,
    Wireless = 4,
    Shuffle = 5,
    Queries = 6,
}

fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    rng
}

fn normal(std: f64) -> Normal<f64> {
    // std is validated non-negative and finite.
    Normal::new(0.0, std).expect("valid normal std")
}

#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    t1: f64,
    from: WorldPoint,
    to: WorldPoint,
}

/// Piecewise-linear walk over `[start, end]` seconds.
#[derive(Clone, Debug)]
struct Walk {
    start: u64,
    end: u64,
    segments: Vec<Segment>,
    offset: (f64, f64),
}

impl Walk {
    fn random(cfg: &SimConfig, rng: &mut impl Rng) -> Walk {
        let span = cfg.duration_secs - cfg.min_presence_secs;
        let start = rng.gen_range(0..=span);
        let end = rng.gen_range(start + cfg.min_presence_secs..=cfg.duration_secs);
        let mut segments = Vec::new();
        let mut t = start as f64;
        let mut at = cfg.area.sample(rng);
        while t < end as f64 {
            let to = cfg.area.sample(rng);
            let speed = rng.gen_range(cfg.walk_speed[0]..=cfg.walk_speed[1]);
            let len = at.distance(&to).max(1e-6);
            let t1 = t + len / speed;
            segments.push(Segment { t0: t, t1, from: at, to });
            t = t1;
            at = to;
        }
        Walk { start, end, segments, offset: (0.0, 0.0) }
    }

    fn position(&self, t: f64) -> WorldPoint {
        let idx = self.segments.partition_point(|s| s.t1 < t).min(self.segments.len() - 1);
        let s = &self.segments[idx];
        let a = ((t - s.t0) / (s.t1 - s.t0)).clamp(0.0, 1.0);
        WorldPoint::new(
            s.from.x + a * (s.to.x - s.from.x) + self.offset.0,
            s.from.y + a * (s.to.y - s.from.y) + self.offset.1,
        )
    }
}

/// Sequence produced before ids are assigned.
struct Passage {
    identity: usize,
    camera: usize,
    start_secs: f64,
    points: Vec<TimedPoint>,
}

/// Generates a full scenario, including one seeded query set.
pub fn generate(cfg: &SimConfig) -> Result<Scenario> {
    cfg.validate()?;
    let n = cfg.n_identities;

    // Walks, with consecutive identities occasionally paired up.
    let mut motion = stream(cfg.seed, Stream::Motion);
    let pair_chance = cfg.pair_walking_prob / (2.0 - cfg.pair_walking_prob);
    let mut walks: Vec<Walk> = Vec::with_capacity(n);
    let mut id = 0;
    while id < n {
        let walk = Walk::random(cfg, &mut motion);
        let paired = id + 1 < n && motion.gen_bool(pair_chance);
        if paired {
            let angle = motion.gen_range(0.0..core::f64::consts::TAU);
            let mut partner = walk.clone();
            partner.offset = (cfg.pair_offset * libm::cos(angle), cfg.pair_offset * libm::sin(angle));
            walks.push(walk);
            walks.push(partner);
            id += 2;
        } else {
            walks.push(walk);
            id += 1;
        }
    }

    // Camera passages on the 6 fps grid.
    let mut visual_rng = stream(cfg.seed, Stream::Visual);
    let visual_noise = normal(cfg.visual_noise_std);
    let min_frames = libm::ceil(cfg.min_sequence_secs * VIDEO_FPS as f64).max(1.0) as usize;
    let mut passages = Vec::new();
    for (who, walk) in walks.iter().enumerate() {
        let frames: Vec<(Timestamp, WorldPoint)> = (walk.start * VIDEO_FPS..=walk.end * VIDEO_FPS)
            .map(Timestamp::video_frame)
            .map(|t| (t, walk.position(t.as_secs_f64())))
            .collect();
        for (cam, fp) in cfg.cameras.iter().enumerate() {
            let mut run: Vec<(Timestamp, WorldPoint)> = Vec::new();
            for &(t, p) in frames.iter().chain(core::iter::once(&(Timestamp(u64::MAX), WorldPoint::new(f64::NAN, f64::NAN)))) {
                if fp.contains(&p) {
                    run.push((t, p));
                    continue;
                }
                if run.len() >= min_frames {
                    let points = run
                        .iter()
                        .map(|&(t, p)| {
                            let dx = visual_noise.sample(&mut visual_rng);
                            let dy = visual_noise.sample(&mut visual_rng);
                            TimedPoint::new(t, p.translate(dx, dy))
                        })
                        .collect();
                    passages.push(Passage { identity: who, camera: cam, start_secs: run[0].0.as_secs_f64(), points });
                }
                run.clear();
            }
        }
    }

    // Appearance.
    let mut look = stream(cfg.seed, Stream::Appearance);
    let spread = normal(cfg.identity_spread);
    let noise = normal(cfg.embedding_noise_std);
    let occlusion = normal(cfg.corruption_strength);
    let dim = cfg.embedding_dim;
    let draw_mean = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| spread.sample(rng)).collect() };
    let means: Vec<Vec<f64>> = (0..n).map(|_| draw_mean(&mut look)).collect();
    let changes: Vec<Option<(f64, Vec<f64>)>> = walks
        .iter()
        .map(|w| {
            look.gen_bool(cfg.clothing_change_prob)
                .then(|| (look.gen_range(w.start as f64..=w.end as f64), draw_mean(&mut look)))
        })
        .collect();
    let embeddings: Vec<Vec<f64>> = passages
        .iter()
        .map(|p| {
            let mean = match &changes[p.identity] {
                Some((when, after)) if p.start_secs >= *when => after,
                _ => &means[p.identity],
            };
            let mut e: Vec<f64> = mean.iter().map(|m| m + noise.sample(&mut look)).collect();
            if look.gen_bool(cfg.corruption_rate) {
                if n > 1 && look.gen_bool(0.5) {
                    // Another person dominates the crop.
                    let mut other = look.gen_range(0..n - 1);
                    if other >= p.identity {
                        other += 1;
                    }
                    let alpha = look.gen_range(0.5..=0.9);
                    for (v, o) in e.iter_mut().zip(&means[other]) {
                        *v = (1.0 - alpha) * *v + alpha * o;
                    }
                } else {
                    for v in e.iter_mut() {
                        *v += occlusion.sample(&mut look);
                    }
                }
            }
            e
        })
        .collect();

    // Phones.
    let mut shuffle = stream(cfg.seed, Stream::Shuffle);
    let mut owners: Vec<usize> = (0..n).collect();
    owners.shuffle(&mut shuffle);
    owners.truncate(cfg.n_with_phone);
    let mut wireless = stream(cfg.seed, Stream::Wireless);
    let signals_raw: Vec<(usize, Vec<TimedPoint>)> = owners
        .iter()
        .map(|&who| (who, phone_track(cfg, &walks[who], &mut wireless)))
        .collect();

    // Shuffle database order so indices carry no identity information.
    let mut seq_order: Vec<usize> = (0..passages.len()).collect();
    seq_order.shuffle(&mut shuffle);
    let mut passages: Vec<Option<Passage>> = passages.into_iter().map(Some).collect();
    let mut embeddings: Vec<Option<Vec<f64>>> = embeddings.into_iter().map(Some).collect();
    let sequences: Vec<VideoSequence> = seq_order
        .iter()
        .enumerate()
        .map(|(new_id, &old)| {
            let p = passages[old].take().expect("each passage used once");
            VideoSequence {
                id: SequenceId(new_id as u32),
                camera: CameraId(p.camera as u32),
                identity: Some(IdentityId(p.identity as u32)),
                embedding: embeddings[old].take().expect("each embedding used once"),
                trajectory: VisualTrajectory::new(p.points),
            }
        })
        .collect();
    let signals = signals_raw
        .into_iter()
        .enumerate()
        .map(|(m, (who, points))| WirelessTrajectory {
            id: SignalId(m as u32),
            identity: Some(IdentityId(who as u32)),
            points,
        })
        .collect();

    let mut scenario = Scenario { sequences, signals, queries: Vec::new(), embedding_dim: dim };
    scenario.queries = make_queries(&scenario, &QueryRule { seed: cfg.seed, min_cameras: 2 });
    Ok(scenario)
}

/// 1 Hz fixes: truth plus a Gauss-Markov bias plus white noise, with dropout bursts.
fn phone_track(cfg: &SimConfig, walk: &Walk, rng: &mut ChaCha8Rng) -> Vec<TimedPoint> {
    let phi = libm::exp(-1.0 / cfg.positioning_bias_tau_secs);
    let innovation = normal(cfg.positioning_bias_std * libm::sqrt(1.0 - phi * phi));
    let bias0 = normal(cfg.positioning_bias_std);
    let white = normal(cfg.positioning_noise_std);
    let mut bias = (bias0.sample(rng), bias0.sample(rng));
    let mut out = Vec::new();
    let mut first = None;
    let mut silent = 0u64;
    for sec in walk.start..=walk.end {
        if sec > walk.start {
            bias = (phi * bias.0 + innovation.sample(rng), phi * bias.1 + innovation.sample(rng));
        }
        let truth = walk.position(sec as f64);
        let fix = truth.translate(bias.0 + white.sample(rng), bias.1 + white.sample(rng));
        let point = TimedPoint::new(Timestamp::from_secs(sec), fix);
        first.get_or_insert(point);
        if silent == 0 && cfg.dropout_prob > 0.0 && rng.gen_bool(cfg.dropout_prob) {
            silent = rng.gen_range(1..=cfg.dropout_max_secs);
        }
        if silent > 0 {
            silent -= 1;
            continue;
        }
        out.push(point);
    }
    if out.is_empty() {
        out.extend(first);
    }
    out
}

/// How queries are drawn from a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryRule {
    pub seed: u64,
    /// Only people seen by at least this many cameras are queried.
    pub min_cameras: usize,
}

/// One random sequence per (person, camera) for every person seen by at least
/// `rule.min_cameras` cameras, in identity-then-camera order.
pub fn make_queries(scenario: &Scenario, rule: &QueryRule) -> Vec<SequenceId> {
    let mut rng = stream(rule.seed, Stream::Queries);
    let mut groups: Vec<((IdentityId, CameraId), Vec<SequenceId>)> = Vec::new();
    for s in &scenario.sequences {
        let Some(identity) = s.identity else { continue };
        let key = (identity, s.camera);
        match groups.binary_search_by(|(k, _)| k.cmp(&key)) {
            Ok(i) => groups[i].1.push(s.id),
            Err(i) => groups.insert(i, (key, vec![s.id])),
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < groups.len() {
        let identity = groups[i].0 .0;
        let j = groups[i..].iter().position(|(k, _)| k.0 != identity).map_or(groups.len(), |p| i + p);
        if j - i >= rule.min_cameras {
            for (_, ids) in &groups[i..j] {
                out.push(*ids.choose(&mut rng).expect("non-empty group"));
            }
        }
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn default_config_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_fields_are_named() {
        let cfg = SimConfig { n_with_phone: 99, ..SimConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { field: "n_with_phone", .. })));
        let cfg = SimConfig { corruption_rate: 1.2, ..SimConfig::default() };
        assert!(matches!(generate(&cfg), Err(Error::InvalidConfig { field: "corruption_rate", .. })));
        let cfg = SimConfig { cameras: vec![], ..SimConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { field: "cameras", .. })));
    }

    #[test]
    fn generated_scenario_is_valid_and_deterministic() {
        let cfg = SimConfig { seed: 11, ..SimConfig::default() };
        let a = generate(&cfg).unwrap();
        assert_eq!(validate(&a), vec![]);
        assert!(!a.sequences.is_empty());
        assert_eq!(a.signals.len(), cfg.n_with_phone);
        assert_eq!(a, generate(&cfg).unwrap());
        let b = generate(&SimConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn queries_follow_protocol() {
        let s = generate(&SimConfig { seed: 3, ..SimConfig::default() }).unwrap();
        let mut seen = Vec::new();
        for q in &s.queries {
            let seq = &s.sequences[s.sequence_index(*q).unwrap()];
            let key = (seq.identity, seq.camera);
            assert!(!seen.contains(&key), "one query per person and camera");
            seen.push(key);
            let cams: Vec<CameraId> = s
                .sequences
                .iter()
                .filter(|o| o.identity == seq.identity)
                .map(|o| o.camera)
                .collect();
            assert!(cams.iter().any(|c| *c != seq.camera));
        }
    }

    #[test]
    fn query_counts_per_identity() {
        let traj = VisualTrajectory::default();
        let seq = |id: u32, person: u32, cam: u32| VideoSequence {
            id: SequenceId(id),
            camera: CameraId(cam),
            identity: Some(IdentityId(person)),
            embedding: vec![],
            trajectory: traj.clone(),
        };
        let scenario = Scenario {
            sequences: vec![seq(0, 0, 0), seq(1, 0, 1), seq(2, 0, 2), seq(3, 0, 2), seq(4, 1, 0), seq(5, 1, 0)],
            ..Scenario::default()
        };
        let rule = QueryRule { seed: 5, min_cameras: 2 };
        let q = make_queries(&scenario, &rule);
        assert_eq!(q.len(), 3);
        assert!(q[2] == SequenceId(2) || q[2] == SequenceId(3));
        assert_eq!(q, make_queries(&scenario, &rule));
    }
}
