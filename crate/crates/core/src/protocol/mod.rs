//! The logical (noiseless) message flow of one aggregation.
//!
//! Uplink: over `M` rounds, every user except the round's noise user sends
//! one segment of each of its `K` shares, one envelope per server. Downlink:
//! over another `M` rounds, every participating server sends the matching
//! segment of its aggregate `F(α_j)` to every user except the noise user.
//! The physical-layer side of the same schedule lives in [`crate::airsim`].

use alloc::string::String;

use crate::coding::CodingError;

mod engine;
mod schedule;
mod transport;
mod wire;

pub use engine::{
    run_downlink, run_end_to_end, run_uplink, DownlinkOutcome, EndToEnd, Participation, RunReport,
    Traffic, UplinkOutcome,
};
pub use schedule::{
    desegment, downlink_segment, segment, uplink_segment, Round, RoundSchedule, SegmentAssignment,
    SegmentedMessage,
};
pub use transport::{InMemoryTransport, Transport};
pub use wire::{
    Envelope, Node, ShareHeader, SharePacket, WireError, ENVELOPE_HEADER_BYTES, SHARE_HEADER_BYTES,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unsupported topology: {users} users (need at least 3)")]
    UnsupportedTopology { users: usize },
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("replayed envelope {from:?} -> {to:?} with seq {seq}")]
    Replay { from: Node, to: Node, seq: u32 },
    #[error("sequence gap {from:?} -> {to:?}: expected seq {expected}, got {got}")]
    Gap { from: Node, to: Node, expected: u32, got: u32 },
    #[error("{at:?} received segment {segment} of {peer:?} twice")]
    DuplicateSegment { at: Node, peer: Node, segment: usize },
    #[error("{at:?} never received segment {segment} of {peer:?}")]
    MissingSegment { at: Node, peer: Node, segment: usize },
    #[error("envelope for {expected:?} delivered to {got:?}")]
    Misaddressed { expected: Node, got: Node },
    #[error("envelope from round {got} delivered in round {expected}")]
    WrongRound { expected: usize, got: usize },
    #[error("packet header disagrees with the run: {0}")]
    HeaderMismatch(&'static str),
    #[error("transport failure: {0}")]
    Transport(String),
}
