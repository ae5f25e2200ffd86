//! Domain types shared by every stage of the pipeline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Video frame rate of every camera.
pub const VIDEO_FPS: u64 = 6;

/// Milliseconds per whole second.
pub const MILLIS_PER_SEC: u64 = 1000;

/// Integer milliseconds since the scenario epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const fn from_millis(millis: u64) -> Self {
        Timestamp(millis)
    }

    pub const fn from_secs(secs: u64) -> Self {
        Timestamp(secs * MILLIS_PER_SEC)
    }

    /// Time of `frame` on the 6 fps video grid, rounded to the nearest millisecond.
    pub const fn video_frame(frame: u64) -> Self {
        Timestamp((frame * MILLIS_PER_SEC * 2 + VIDEO_FPS) / (2 * VIDEO_FPS))
    }

    pub const fn millis(self) -> u64 {
        self.0
    }

    pub const fn is_whole_second(self) -> bool {
        self.0.is_multiple_of(MILLIS_PER_SEC)
    }

    /// Whether this timestamp sits on the 6 fps video grid.
    pub const fn is_video_frame(self) -> bool {
        let frame = (self.0 * VIDEO_FPS * 2 + MILLIS_PER_SEC) / (2 * MILLIS_PER_SEC);
        Timestamp::video_frame(frame).0 == self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MILLIS_PER_SEC as f64
    }
}

/// Planar world position in meters (x east, y north).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        WorldPoint { x, y }
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> WorldPoint {
        WorldPoint::new(self.x + dx, self.y + dy)
    }
}

/// One trajectory sample. Serialized as `[millis, x, y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimedPoint {
    pub t: Timestamp,
    pub p: WorldPoint,
}

impl TimedPoint {
    pub const fn new(t: Timestamp, p: WorldPoint) -> Self {
        TimedPoint { t, p }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for TimedPoint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut tup = serializer.serialize_tuple(3)?;
        tup.serialize_element(&self.t.0)?;
        tup.serialize_element(&self.p.x)?;
        tup.serialize_element(&self.p.y)?;
        tup.end()
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for TimedPoint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (millis, x, y) = <(u64, f64, f64)>::deserialize(deserializer)?;
        Ok(TimedPoint::new(Timestamp(millis), WorldPoint::new(x, y)))
    }
}

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        #[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
        #[cfg_attr(feature = "serde", serde(transparent))]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(
    /// Identifier of a video sequence (tracklet).
    SequenceId,
    "seq"
);
id_newtype!(
    /// Identifier of a wireless positioning signal.
    SignalId,
    "sig"
);
id_newtype!(CameraId, "cam");
id_newtype!(
    /// Ground-truth person label. Only evaluation code reads it.
    IdentityId,
    "id"
);

/// World-coordinate path of a pedestrian derived from one video sequence.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct VisualTrajectory {
    pub points: Vec<TimedPoint>,
}

impl VisualTrajectory {
    pub fn new(points: Vec<TimedPoint>) -> Self {
        VisualTrajectory { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// 1 Hz positioning fixes of one phone.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WirelessTrajectory {
    pub id: SignalId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub identity: Option<IdentityId>,
    pub points: Vec<TimedPoint>,
}

impl WirelessTrajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VideoSequence {
    pub id: SequenceId,
    pub camera: CameraId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub identity: Option<IdentityId>,
    pub embedding: Vec<f64>,
    pub trajectory: VisualTrajectory,
}

/// A complete dataset: query and gallery sequences share one database.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub sequences: Vec<VideoSequence>,
    pub signals: Vec<WirelessTrajectory>,
    pub queries: Vec<SequenceId>,
    pub embedding_dim: usize,
}

impl Scenario {
    pub fn sequence_index(&self, id: SequenceId) -> Option<usize> {
        self.sequences.iter().position(|s| s.id == id)
    }

    /// Index of the signal carried by `identity`, if that person has one.
    pub fn signal_of(&self, identity: IdentityId) -> Option<usize> {
        self.signals
            .iter()
            .position(|s| s.identity == Some(identity))
    }
}

/// A broken invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownQuery(SequenceId),
    DuplicateSequenceId(SequenceId),
    DuplicateSignalId(SignalId),
    /// More than one signal claims the same identity.
    DuplicateSignalIdentity(IdentityId),
    EmbeddingDimension { sequence: SequenceId, expected: usize, found: usize },
    NonFiniteEmbedding(SequenceId),
    EmptyTrajectory(String),
    NonIncreasingTimestamps(String),
    NonFinitePoint(String),
    OffGridVideoSample { sequence: SequenceId, millis: u64 },
    OffSecondWirelessSample { signal: SignalId, millis: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownQuery(id) => write!(f, "query {id} is not a known sequence"),
            Violation::DuplicateSequenceId(id) => write!(f, "duplicate sequence id {id}"),
            Violation::DuplicateSignalId(id) => write!(f, "duplicate signal id {id}"),
            Violation::DuplicateSignalIdentity(id) => {
                write!(f, "identity {id} owns more than one signal")
            }
            Violation::EmbeddingDimension { sequence, expected, found } => write!(
                f,
                "sequence {sequence} has embedding dimension {found}, expected {expected}"
            ),
            Violation::NonFiniteEmbedding(id) => {
                write!(f, "sequence {id} has a non-finite embedding value")
            }
            Violation::EmptyTrajectory(owner) => write!(f, "{owner} has an empty trajectory"),
            Violation::NonIncreasingTimestamps(owner) => {
                write!(f, "{owner} has non-increasing timestamps")
            }
            Violation::NonFinitePoint(owner) => write!(f, "{owner} has a non-finite coordinate"),
            Violation::OffGridVideoSample { sequence, millis } => write!(
                f,
                "off-grid video sample in {sequence} at {millis} ms"
            ),
            Violation::OffSecondWirelessSample { signal, millis } => write!(
                f,
                "off-second wireless sample in {signal} at {millis} ms"
            ),
        }
    }
}

fn check_points(owner: &str, points: &[TimedPoint], out: &mut Vec<Violation>) {
    if points.is_empty() {
        out.push(Violation::EmptyTrajectory(owner.into()));
        return;
    }
    if points.windows(2).any(|w| w[0].t >= w[1].t) {
        out.push(Violation::NonIncreasingTimestamps(owner.into()));
    }
    if points.iter().any(|p| !p.p.is_finite()) {
        out.push(Violation::NonFinitePoint(owner.into()));
    }
}

/// Checks every scenario invariant. An empty result means the scenario is well formed.
pub fn validate(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seq_ids: Vec<SequenceId> = scenario.sequences.iter().map(|s| s.id).collect();
    seq_ids.sort_unstable();
    for w in seq_ids.windows(2) {
        if w[0] == w[1] && !out.contains(&Violation::DuplicateSequenceId(w[0])) {
            out.push(Violation::DuplicateSequenceId(w[0]));
        }
    }

    for seq in &scenario.sequences {
        if seq.embedding.len() != scenario.embedding_dim {
            out.push(Violation::EmbeddingDimension {
                sequence: seq.id,
                expected: scenario.embedding_dim,
                found: seq.embedding.len(),
            });
        }
        if seq.embedding.iter().any(|v| !v.is_finite()) {
            out.push(Violation::NonFiniteEmbedding(seq.id));
        }
        check_points(&format!("{}", seq.id), &seq.trajectory.points, &mut out);
        if let Some(p) = seq.trajectory.points.iter().find(|p| !p.t.is_video_frame()) {
            out.push(Violation::OffGridVideoSample { sequence: seq.id, millis: p.t.0 });
        }
    }

    let mut sig_ids: Vec<SignalId> = scenario.signals.iter().map(|s| s.id).collect();
    sig_ids.sort_unstable();
    for w in sig_ids.windows(2) {
        if w[0] == w[1] && !out.contains(&Violation::DuplicateSignalId(w[0])) {
            out.push(Violation::DuplicateSignalId(w[0]));
        }
    }
    let mut owners: Vec<IdentityId> = scenario.signals.iter().filter_map(|s| s.identity).collect();
    owners.sort_unstable();
    for w in owners.windows(2) {
        if w[0] == w[1] && !out.contains(&Violation::DuplicateSignalIdentity(w[0])) {
            out.push(Violation::DuplicateSignalIdentity(w[0]));
        }
    }

    for sig in &scenario.signals {
        check_points(&format!("{}", sig.id), &sig.points, &mut out);
        if let Some(p) = sig.points.iter().find(|p| !p.t.is_whole_second()) {
            out.push(Violation::OffSecondWirelessSample { signal: sig.id, millis: p.t.0 });
        }
    }

    for q in &scenario.queries {
        if !seq_ids.contains(q) {
            out.push(Violation::UnknownQuery(*q));
        }
    }

    out
}

/// Average aligned distance between a visual and a wireless trajectory.
///
/// `Infinite` marks the absence of temporal overlap and orders after every
/// finite value. Arithmetic on it is only exposed through [`Distance::midpoint`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<f64> {
        match self {
            Distance::Finite(v) => Some(v),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    /// `(a + b) / 2` with `Infinite` absorbing.
    pub fn midpoint(self, other: Distance) -> Distance {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => Distance::Finite((a + b) / 2.0),
            _ => Distance::Infinite,
        }
    }

    /// Lossy float view used for dumps; `Infinite` becomes `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn from_f64(v: f64) -> Distance {
        if v.is_finite() {
            Distance::Finite(v)
        } else {
            Distance::Infinite
        }
    }

    pub fn total_cmp(&self, other: &Distance) -> Ordering {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => a.total_cmp(b),
            (Distance::Finite(_), Distance::Infinite) => Ordering::Less,
            (Distance::Infinite, Distance::Finite(_)) => Ordering::Greater,
            (Distance::Infinite, Distance::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: alloc::vec![value; rows * cols] }
    }
}

impl<T> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from row vectors; `None` when rows differ in length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Matrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        assert!(r < self.rows && c < self.cols, "matrix index out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        assert!(r < self.rows && c < self.cols, "matrix index out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

/// N×N visual distances between sequence embeddings.
pub type FeatureDistanceMatrix = Matrix<f64>;
/// N×N row-normalized visual affinity in [0, 1].
pub type AffinityMatrix = Matrix<f64>;
/// N×M visual-to-wireless trajectory distances.
pub type TrajDistanceMatrix = Matrix<Distance>;
