//! Fusion of surveillance video and wireless positioning for person
//! re-identification and signal matching.
//!
//! The pipeline maps detections onto the ground plane ([`geomap`]), aligns
//! visual and wireless trajectories on a shared clock ([`align`]), turns
//! appearance embeddings into a row-normalized affinity ([`affinity`]), and
//! lets the two modalities refine each other by recurrent context propagation
//! ([`rcpm`]). [`eval`] ranks and scores both retrieval tasks and [`simgen`]
//! produces seeded synthetic scenarios.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// `!(x > 0.0)` style checks reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod affinity;
pub mod align;
pub mod error;
pub mod eval;
pub mod geomap;
pub mod model;
pub mod rcpm;
pub mod simgen;

pub use error::{Error, Result};
pub use model::{
    AffinityMatrix, CameraId, Distance, FeatureDistanceMatrix, IdentityId, Matrix, Scenario, SequenceId, SignalId,
    Timestamp, TimedPoint, TrajDistanceMatrix, VideoSequence, VisualTrajectory, WirelessTrajectory, WorldPoint,
};
