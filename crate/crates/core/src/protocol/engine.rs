//! The single-threaded event loop that drives one aggregation over a [`Transport`].

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::coding::{
    aggregate_shares, direct_sum, reconstruct, AggregatedEvaluation, CodingConfig, CodingError,
    GradientVector, MaskVector, ShareMatrix,
};
use crate::galois::{Fe, ELEMENT_BYTES};
use crate::seed;

use super::schedule::{downlink_segment, RoundSchedule, SegmentedMessage};
use super::{Envelope, Node, ProtocolError, ShareHeader, SharePacket, Transport};

const ELEMENT_BITS: u64 = (ELEMENT_BYTES * 8) as u64;

/// Which servers answer in the downlink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Participation {
    All,
    /// The last `s` servers drop out; the first `K - s` answer.
    Stragglers(usize),
    Subset(Vec<usize>),
}

impl Participation {
    /// Sorted, de-duplicated participating server indices.
    pub fn servers(&self, total: usize) -> Result<Vec<usize>, ProtocolError> {
        let mut out = match self {
            Participation::All => (0..total).collect(),
            Participation::Stragglers(s) => (0..total.saturating_sub(*s)).collect(),
            Participation::Subset(v) => v.clone(),
        };
        out.sort_unstable();
        out.dedup();
        if let Some(&bad) = out.iter().find(|&&j| j >= total) {
            return Err(CodingError::BadServer(bad).into());
        }
        Ok(out)
    }
}

/// Byte and bit counts for one direction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Traffic {
    pub envelopes: u64,
    /// Envelope plus packet headers plus (padded) elements.
    pub wire_bytes: u64,
    /// Message content only: no headers, no segment padding, identical
    /// downlink payloads counted once per server.
    pub payload_bits: u64,
    /// Wire bytes delivered to each receiver, indexed like the receivers.
    pub received_bytes: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UplinkOutcome {
    /// `received.get(j, i)` is `c_{j,i}` as reassembled by server `j`.
    pub received: ShareMatrix,
    /// Every packet header each server accepted, in delivery order.
    pub inbox: Vec<Vec<ShareHeader>>,
    pub traffic: Traffic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DownlinkOutcome {
    /// `evaluations[i]` holds `(j, F(α_j))` for every participating server, by server index.
    pub evaluations: Vec<Vec<AggregatedEvaluation>>,
    pub inbox: Vec<Vec<ShareHeader>>,
    pub traffic: Traffic,
}

/// Summary of one end-to-end run.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunReport {
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub users: usize,
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub servers: usize,
    #[cfg_attr(feature = "serde", serde(rename = "r"))]
    pub partitions: usize,
    #[cfg_attr(feature = "serde", serde(rename = "q"))]
    pub modulus: u64,
    #[cfg_attr(feature = "serde", serde(rename = "p"))]
    pub grad_len: usize,
    pub seed: u64,
    pub rounds: usize,
    pub participating_servers: Vec<usize>,
    /// `A`: bits in one serialized gradient.
    pub gradient_bits: u64,
    pub uplink_payload_bits: u64,
    pub downlink_payload_bits: u64,
    pub uplink_wire_bytes: u64,
    pub downlink_wire_bytes: u64,
    pub downlink_wire_bytes_per_user: u64,
    pub ok: bool,
}

impl RunReport {
    /// Uplink payload in units of `A`.
    pub fn comm_up(&self) -> f64 {
        self.uplink_payload_bits as f64 / self.gradient_bits as f64
    }

    /// Downlink payload in units of `A`.
    pub fn comm_down(&self) -> f64 {
        self.downlink_payload_bits as f64 / self.gradient_bits as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndToEnd {
    /// `estimates[i]` is user `i`'s reconstruction of `Σ g`.
    pub estimates: Vec<Vec<Fe>>,
    pub uplink: UplinkOutcome,
    pub downlink: DownlinkOutcome,
    pub report: RunReport,
}

fn node_index(n: Node) -> usize {
    match n {
        Node::User(i) | Node::Server(i) => i as usize,
    }
}

fn narrow(v: usize, what: &'static str) -> Result<u16, ProtocolError> {
    u16::try_from(v).map_err(|_| ProtocolError::HeaderMismatch(what))
}

/// Assigns per-link sequence numbers to outgoing envelopes.
#[derive(Default)]
struct Outbox {
    next_seq: BTreeMap<(Node, Node), u32>,
    traffic: Traffic,
}

impl Outbox {
    fn send<T: Transport + ?Sized>(
        &mut self,
        transport: &mut T,
        from: Node,
        to: Node,
        round: u16,
        packet: &SharePacket,
    ) -> Result<(), ProtocolError> {
        let seq = self.next_seq.entry((from, to)).or_insert(0);
        let envelope = Envelope { from, to, round, seq: *seq, payload: packet.to_bytes() };
        *seq += 1;
        self.traffic.envelopes += 1;
        self.traffic.wire_bytes += envelope.encoded_len() as u64;
        transport.send(envelope)
    }
}

/// One receiver's view: sequence tracking, header checks and reassembly.
struct Inbox<'a> {
    me: Node,
    cfg: &'a CodingConfig,
    next_seq: BTreeMap<Node, u32>,
    pieces: BTreeMap<(Node, usize), Vec<Fe>>,
    log: Vec<ShareHeader>,
    bytes: u64,
}

impl<'a> Inbox<'a> {
    fn new(me: Node, cfg: &'a CodingConfig) -> Self {
        Inbox { me, cfg, next_seq: BTreeMap::new(), pieces: BTreeMap::new(), log: Vec::new(), bytes: 0 }
    }

    /// Drains everything pending for this receiver in `round`.
    ///
    /// `expect(from)` gives the segment the sender should carry this round.
    fn drain<T: Transport + ?Sized>(
        &mut self,
        transport: &mut T,
        round: usize,
        seg_len: usize,
        expect: impl Fn(Node) -> Option<usize>,
    ) -> Result<(), ProtocolError> {
        while let Some(env) = transport.recv(self.me)? {
            if env.to != self.me {
                return Err(ProtocolError::Misaddressed { expected: env.to, got: self.me });
            }
            let expected_seq = self.next_seq.entry(env.from).or_insert(0);
            if env.seq < *expected_seq {
                return Err(ProtocolError::Replay { from: env.from, to: env.to, seq: env.seq });
            }
            if env.seq > *expected_seq {
                return Err(ProtocolError::Gap {
                    from: env.from,
                    to: env.to,
                    expected: *expected_seq,
                    got: env.seq,
                });
            }
            *expected_seq += 1;
            if env.round as usize != round {
                return Err(ProtocolError::WrongRound { expected: round, got: env.round as usize });
            }
            self.bytes += env.encoded_len() as u64;
            let packet = SharePacket::from_bytes(&env.payload)?;
            let segment = self.check_header(&packet.header, env.from, round, &expect)?;
            if packet.values.len() != seg_len {
                return Err(ProtocolError::HeaderMismatch("segment length"));
            }
            if self.pieces.insert((env.from, segment), packet.values).is_some() {
                return Err(ProtocolError::DuplicateSegment { at: self.me, peer: env.from, segment });
            }
            self.log.push(packet.header);
        }
        Ok(())
    }

    fn check_header(
        &self,
        h: &ShareHeader,
        from: Node,
        round: usize,
        expect: &impl Fn(Node) -> Option<usize>,
    ) -> Result<usize, ProtocolError> {
        let cfg = self.cfg;
        if h.modulus != cfg.field().modulus()
            || h.users as usize != cfg.users()
            || h.servers as usize != cfg.servers()
            || h.partitions as usize != cfg.partitions()
            || h.grad_len as usize != cfg.grad_len()
        {
            return Err(ProtocolError::HeaderMismatch("coding parameters"));
        }
        if h.round as usize != round {
            return Err(ProtocolError::HeaderMismatch("round"));
        }
        let (user, server) = match (self.me, from) {
            (Node::Server(j), Node::User(i)) | (Node::User(i), Node::Server(j)) => (i, j),
            _ => return Err(ProtocolError::HeaderMismatch("sender role")),
        };
        if h.user != user || h.server != server {
            return Err(ProtocolError::Misaddressed {
                expected: self.me,
                got: match self.me {
                    Node::Server(_) => Node::Server(h.server),
                    Node::User(_) => Node::User(h.user),
                },
            });
        }
        match expect(from) {
            Some(s) if s == h.segment as usize => Ok(s),
            _ => Err(ProtocolError::HeaderMismatch("segment index")),
        }
    }

    /// Reassembles the full message from `peer`.
    fn take(&mut self, peer: Node, pieces: usize, len: usize) -> Result<Vec<Fe>, ProtocolError> {
        let segments = (0..pieces)
            .map(|segment| {
                self.pieces
                    .remove(&(peer, segment))
                    .ok_or(ProtocolError::MissingSegment { at: self.me, peer, segment })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let seg_len = segments.first().map_or(0, Vec::len);
        Ok(SegmentedMessage { segments, pad: seg_len * pieces - len }.join())
    }
}

fn header(cfg: &CodingConfig, server: usize, user: usize, round: usize, segment: usize) -> Result<ShareHeader, ProtocolError> {
    Ok(ShareHeader {
        modulus: cfg.field().modulus(),
        users: narrow(cfg.users(), "M")?,
        servers: narrow(cfg.servers(), "K")?,
        partitions: narrow(cfg.partitions(), "r")?,
        grad_len: u32::try_from(cfg.grad_len()).map_err(|_| ProtocolError::HeaderMismatch("p"))?,
        server: narrow(server, "server")?,
        user: narrow(user, "user")?,
        round: narrow(round, "round")?,
        segment: narrow(segment, "segment")?,
    })
}

/// Ships every `c_{j,i}` from user `i` to server `j` over `M` rounds.
pub fn run_uplink<T: Transport + ?Sized>(
    shares: &ShareMatrix,
    cfg: &CodingConfig,
    transport: &mut T,
) -> Result<UplinkOutcome, ProtocolError> {
    let schedule = RoundSchedule::build(cfg.users())?;
    let pieces = schedule.segments();
    let (m, k) = (cfg.users(), cfg.servers());
    if shares.users() != m || shares.servers() != k {
        return Err(CodingError::LengthMismatch { expected: m * k, got: shares.users() * shares.servers() }.into());
    }
    // segmented[j][i] = c_{j,i} cut into M - 1 pieces
    let segmented: Vec<Vec<SegmentedMessage>> = (0..k)
        .map(|j| (0..m).map(|i| SegmentedMessage::split(shares.get(j, i), pieces)).collect())
        .collect();
    let seg_len = segmented.first().and_then(|row| row.first()).map_or(0, SegmentedMessage::segment_len);

    let mut outbox = Outbox::default();
    let mut inboxes: Vec<Inbox<'_>> = (0..k).map(|j| Inbox::new(Node::Server(j as u16), cfg)).collect();
    for round in schedule.rounds() {
        let r16 = narrow(round.index, "round")?;
        for a in &round.assignments {
            for (j, row) in segmented.iter().enumerate() {
                let packet = SharePacket {
                    header: header(cfg, j, a.user, round.index, a.segment)?,
                    values: row[a.user].segments[a.segment].clone(),
                };
                outbox.send(transport, Node::User(a.user as u16), Node::Server(j as u16), r16, &packet)?;
            }
        }
        transport.flush()?;
        for inbox in &mut inboxes {
            inbox.drain(transport, round.index, seg_len, |from| {
                super::uplink_segment(round.index, node_index(from))
            })?;
        }
    }

    let share_len = cfg.segment_len();
    let mut columns = vec![Vec::with_capacity(k); m];
    for inbox in &mut inboxes {
        for (i, column) in columns.iter_mut().enumerate() {
            column.push(inbox.take(Node::User(i as u16), pieces, share_len)?);
        }
    }
    let mut traffic = outbox.traffic;
    traffic.payload_bits = (k * m * share_len) as u64 * ELEMENT_BITS;
    traffic.received_bytes = inboxes.iter().map(|b| b.bytes).collect();
    Ok(UplinkOutcome {
        received: ShareMatrix::from_columns(&columns),
        inbox: inboxes.into_iter().map(|b| b.log).collect(),
        traffic,
    })
}

/// Ships each participating server's `F(α_j)` to every user over `M` rounds.
///
/// `aggregates` must be indexed by server. Fewer than `r + 1` participants is
/// an error, since no user could interpolate.
pub fn run_downlink<T: Transport + ?Sized>(
    aggregates: &[AggregatedEvaluation],
    cfg: &CodingConfig,
    participation: &Participation,
    transport: &mut T,
) -> Result<DownlinkOutcome, ProtocolError> {
    let schedule = RoundSchedule::build(cfg.users())?;
    let pieces = schedule.segments();
    let m = cfg.users();
    let servers = participation.servers(cfg.servers())?;
    if servers.len() < cfg.threshold() {
        return Err(CodingError::InsufficientShares { needed: cfg.threshold(), got: servers.len() }.into());
    }
    let payloads = servers
        .iter()
        .map(|&j| {
            aggregates
                .iter()
                .find(|e| e.server == j)
                .map(|e| (j, SegmentedMessage::split(&e.value, pieces)))
                .ok_or(ProtocolError::Coding(CodingError::BadServer(j)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let seg_len = payloads.first().map_or(0, |(_, s)| s.segment_len());

    let mut outbox = Outbox::default();
    let mut inboxes: Vec<Inbox<'_>> = (0..m).map(|i| Inbox::new(Node::User(i as u16), cfg)).collect();
    for round in schedule.rounds() {
        let r16 = narrow(round.index, "round")?;
        for (j, payload) in &payloads {
            for dest in 0..m {
                if let Some(segment) = downlink_segment(round.index, dest) {
                    let packet = SharePacket {
                        header: header(cfg, *j, dest, round.index, segment)?,
                        values: payload.segments[segment].clone(),
                    };
                    outbox.send(transport, Node::Server(*j as u16), Node::User(dest as u16), r16, &packet)?;
                }
            }
        }
        transport.flush()?;
        for (dest, inbox) in inboxes.iter_mut().enumerate() {
            let segment = downlink_segment(round.index, dest);
            inbox.drain(transport, round.index, seg_len, |_| segment)?;
        }
    }

    let share_len = cfg.segment_len();
    let evaluations = inboxes
        .iter_mut()
        .map(|inbox| {
            servers
                .iter()
                .map(|&j| {
                    Ok(AggregatedEvaluation { server: j, value: inbox.take(Node::Server(j as u16), pieces, share_len)? })
                })
                .collect::<Result<Vec<_>, ProtocolError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut traffic = outbox.traffic;
    traffic.payload_bits = (servers.len() * share_len) as u64 * ELEMENT_BITS;
    traffic.received_bytes = inboxes.iter().map(|b| b.bytes).collect();
    Ok(DownlinkOutcome { evaluations, inbox: inboxes.into_iter().map(|b| b.log).collect(), traffic })
}

/// Encodes, uploads, aggregates, downloads and reconstructs.
///
/// Masks come from the `"masks"` stream of `seed`, one per user. Every user
/// interpolates from the `r + 1` lowest-indexed servers it heard from.
pub fn run_end_to_end<T: Transport + ?Sized>(
    gradients: &[GradientVector],
    cfg: &CodingConfig,
    seed: u64,
    participation: &Participation,
    transport: &mut T,
) -> Result<EndToEnd, ProtocolError> {
    if gradients.len() != cfg.users() {
        return Err(CodingError::LengthMismatch { expected: cfg.users(), got: gradients.len() }.into());
    }
    let masks: Vec<MaskVector> = (0..cfg.users())
        .map(|i| MaskVector::sample(cfg, &mut seed::stream(seed, "masks", i as u64)))
        .collect();
    let shares = ShareMatrix::encode_all(gradients, &masks, cfg)?;
    let uplink = run_uplink(&shares, cfg, transport)?;
    let aggregates = (0..cfg.servers())
        .map(|j| aggregate_shares(j, uplink.received.server_row(j), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let downlink = run_downlink(&aggregates, cfg, participation, transport)?;
    let estimates = downlink
        .evaluations
        .iter()
        .map(|evals| reconstruct(&evals[..cfg.threshold()], cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let truth = direct_sum(gradients, cfg);
    let report = RunReport {
        users: cfg.users(),
        servers: cfg.servers(),
        partitions: cfg.partitions(),
        modulus: cfg.field().modulus(),
        grad_len: cfg.grad_len(),
        seed,
        rounds: 2 * cfg.users(),
        participating_servers: participation.servers(cfg.servers())?,
        gradient_bits: cfg.grad_len() as u64 * ELEMENT_BITS,
        uplink_payload_bits: uplink.traffic.payload_bits,
        downlink_payload_bits: downlink.traffic.payload_bits,
        uplink_wire_bytes: uplink.traffic.wire_bytes,
        downlink_wire_bytes: downlink.traffic.wire_bytes,
        downlink_wire_bytes_per_user: downlink.traffic.received_bytes.iter().copied().max().unwrap_or(0),
        ok: estimates.iter().all(|e| *e == truth),
    };
    Ok(EndToEnd { estimates, uplink, downlink, report })
}
