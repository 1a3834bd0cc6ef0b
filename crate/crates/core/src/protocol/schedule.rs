//! Round rotation and message segmentation.
//!
//! Indices are zero-based throughout: users `0..M`, rounds `0..M`, segments
//! `0..M-1`. In round `a` user `a` sends artificial noise; every other user `i`
//! sends segment `τ(a, i)`, which is `a - 1` when `i < a` and `a` when `i > a`.

use alloc::vec::Vec;

use crate::galois::Fe;

use super::ProtocolError;

/// Segment user `i` transmits in round `a`, or `None` when `i` is the noise user.
pub fn uplink_segment(round: usize, user: usize) -> Option<usize> {
    match user.cmp(&round) {
        core::cmp::Ordering::Less => Some(round - 1),
        core::cmp::Ordering::Greater => Some(round),
        core::cmp::Ordering::Equal => None,
    }
}

/// Segment of each server's payload destined for user `dest` in round `a`.
///
/// Keyed by the destination user: `a - 1` if `dest < a`, `a` if `dest >= a`,
/// and nothing for the noise user itself, which does not receive in its round.
pub fn downlink_segment(round: usize, dest: usize) -> Option<usize> {
    if dest == round {
        None
    } else if dest < round {
        Some(round - 1)
    } else {
        Some(round)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SegmentAssignment {
    pub user: usize,
    pub segment: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub index: usize,
    pub noise_user: usize,
    pub assignments: Vec<SegmentAssignment>,
}

/// The `M`-round uplink schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundSchedule {
    users: usize,
    rounds: Vec<Round>,
}

impl RoundSchedule {
    pub fn build(users: usize) -> Result<Self, ProtocolError> {
        if users < 3 {
            return Err(ProtocolError::UnsupportedTopology { users });
        }
        let rounds = (0..users)
            .map(|a| Round {
                index: a,
                noise_user: a,
                assignments: (0..users)
                    .filter_map(|i| uplink_segment(a, i).map(|segment| SegmentAssignment { user: i, segment }))
                    .collect(),
            })
            .collect();
        Ok(RoundSchedule { users, rounds })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn segments(&self) -> usize {
        self.users - 1
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }
}

/// A message cut into equal pieces, the last one zero-padded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentedMessage {
    pub segments: Vec<Vec<Fe>>,
    pub pad: usize,
}

impl SegmentedMessage {
    /// Cuts `message` into `pieces` segments of `ceil(len / pieces)` elements.
    pub fn split(message: &[Fe], pieces: usize) -> Self {
        assert!(pieces > 0, "at least one segment");
        let seg = message.len().div_ceil(pieces);
        let pad = seg * pieces - message.len();
        let segments = (0..pieces)
            .map(|s| {
                let start = (s * seg).min(message.len());
                let end = ((s + 1) * seg).min(message.len());
                let mut piece = message[start..end].to_vec();
                piece.resize(seg, Fe::ZERO);
                piece
            })
            .collect();
        SegmentedMessage { segments, pad }
    }

    pub fn segment_len(&self) -> usize {
        self.segments.first().map_or(0, Vec::len)
    }

    pub fn join(&self) -> Vec<Fe> {
        let mut out: Vec<Fe> = self.segments.iter().flatten().copied().collect();
        out.truncate(out.len() - self.pad);
        out
    }
}

/// `M - 1` segments of `message`, as the uplink and downlink both use.
pub fn segment(message: &[Fe], users: usize) -> Result<SegmentedMessage, ProtocolError> {
    if users < 2 {
        return Err(ProtocolError::UnsupportedTopology { users });
    }
    Ok(SegmentedMessage::split(message, users - 1))
}

pub fn desegment(message: &SegmentedMessage) -> Vec<Fe> {
    message.join()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn five_users_last_round() {
        let s = RoundSchedule::build(5).unwrap();
        let last = &s.rounds()[4];
        assert_eq!(last.noise_user, 4);
        assert_eq!(
            last.assignments,
            (0..4).map(|user| SegmentAssignment { user, segment: 3 }).collect::<Vec<_>>()
        );
    }

    #[test]
    fn three_users_enumerated() {
        let s = RoundSchedule::build(3).unwrap();
        let got: Vec<Vec<(usize, usize)>> = s
            .rounds()
            .iter()
            .map(|r| r.assignments.iter().map(|a| (a.user, a.segment)).collect())
            .collect();
        assert_eq!(got, vec![vec![(1, 0), (2, 0)], vec![(0, 0), (2, 1)], vec![(0, 1), (1, 1)]]);
    }

    #[test]
    fn each_user_sends_each_segment_once() {
        for m in 3..12 {
            let s = RoundSchedule::build(m).unwrap();
            let noise: Vec<usize> = s.rounds().iter().map(|r| r.noise_user).collect();
            assert_eq!(noise, (0..m).collect::<Vec<_>>());
            for user in 0..m {
                let mut segs: Vec<usize> = s
                    .rounds()
                    .iter()
                    .flat_map(|r| r.assignments.iter())
                    .filter(|a| a.user == user)
                    .map(|a| a.segment)
                    .collect();
                segs.sort_unstable();
                assert_eq!(segs, (0..m - 1).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn rejects_small_topologies() {
        assert_eq!(RoundSchedule::build(2), Err(ProtocolError::UnsupportedTopology { users: 2 }));
        assert!(RoundSchedule::build(0).is_err());
    }

    #[test]
    fn downlink_matches_uplink_off_the_noise_user() {
        for a in 0..9 {
            for j in 0..9 {
                assert_eq!(downlink_segment(a, j), uplink_segment(a, j));
            }
        }
    }

    #[test]
    fn segmentation_examples() {
        let msg: Vec<Fe> = (1..=4).map(|v| crate::PrimeField::mersenne31().element(v)).collect();
        let s = segment(&msg, 5).unwrap();
        assert_eq!(s.segments.len(), 4);
        assert!(s.segments.iter().all(|x| x.len() == 1));
        assert_eq!(desegment(&s), msg);

        let msg: Vec<Fe> = (1..=5).map(|v| crate::PrimeField::mersenne31().element(v)).collect();
        let s = segment(&msg, 4).unwrap();
        assert_eq!(s.segments.len(), 3);
        assert_eq!(s.segment_len(), 2);
        assert_eq!(s.pad, 1);
        assert_eq!(desegment(&s), msg);
    }
}
