//! Physical-layer simulator for the artificial-noise alignment scheme.
//!
//! All channels are diagonal over a block of `T` channel uses and stored as
//! their diagonals; beamformer columns are elementwise products of channel
//! ratios applied to a random base vector. Dense linear algebra appears only
//! when a receiver stacks its desired and noise columns into a square matrix
//! for rank checks, zero-forcing and leakage.
//!
//! Uplink: user `a` sends artificial noise while the other users send one
//! message per server. Message group `j` (everything meant for server `j`)
//! must land, at every other server `k`, inside the span of the noise user's
//! beamformer for group `j`. Downlink: the servers send to every user except
//! `a`, and group `i` (everything meant for user `i`) must align into user
//! `a`'s noise at every other user and, in full duplex, at every server.

mod beamforming;
mod channel;
mod decode;
mod dof;
mod leakage;
mod plan;
mod verify;

pub use crate::analysis::Direction;
pub use beamforming::{
    build_beamformers, build_beamformers_with, Beam, BeamformingSet, ExponentRanges, GroupBeams,
};
pub use channel::{gen_channel, ChannelRealization, Station};
pub use decode::{
    qpsk, qpsk_index, ser_sweep, simulate_reception, SerPoint, Transmission, ZfReceiver,
};
pub use dof::{measure_dof, DofMeasurement};
pub use leakage::{leakage_sweep, PowerSweep};
pub use plan::{AlignmentConfig, AlignmentPlan, Duplex, MessageGroup, Relation};
pub use verify::{
    equilibrate, receiver_matrix, singular_ratio, verify_alignment, verify_independence,
    AlignmentReport, RankReport, CONTAINMENT_TOLERANCE, RANK_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AirsimError {
    #[error("invalid alignment configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("block length {block_len} exceeds the cap of {cap}")]
    TooLarge { block_len: u128, cap: usize },
    #[error("alignment violated for group {group} at {receiver:?} from {transmitter:?}: residual {residual:e}")]
    AlignmentViolation { group: usize, receiver: Station, transmitter: Station, residual: f64 },
    #[error("receiver {receiver:?} is not in generic position: singular value ratio {ratio:e}")]
    RankDeficient { receiver: Station, ratio: f64 },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("power sweep must be strictly increasing and positive")]
    BadPowers,
}
