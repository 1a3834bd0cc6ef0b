//! Byte layouts for share packets and transport envelopes. Little-endian throughout.
//!
//! Share packet (26-byte header, then the segment's elements, 8 bytes each):
//!
//! ```text
//! q: u64 | M: u16 | K: u16 | r: u16 | p: u32 | server: u16 | user: u16 | round: u16 | segment: u16 | elements…
//! ```
//!
//! Envelope (16-byte header, then the packet):
//!
//! ```text
//! from role: u8 | from index: u16 | to role: u8 | to index: u16 | round: u16 | seq: u32 | payload len: u32 | payload…
//! ```

use alloc::vec::Vec;

use crate::galois::{Fe, ELEMENT_BYTES};

pub const SHARE_HEADER_BYTES: usize = 26;
pub const ENVELOPE_HEADER_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("truncated: needed {needed} bytes, had {had}")]
    Truncated { needed: usize, had: usize },
    #[error("payload of {0} bytes is not a whole number of field elements")]
    Ragged(usize),
    #[error("element {value} is not a canonical residue modulo {modulus}")]
    NonCanonical { value: u64, modulus: u64 },
    #[error("unknown node role {0}")]
    BadRole(u8),
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    User(u16),
    Server(u16),
}

impl Node {
    fn encode(self, out: &mut Vec<u8>) {
        let (role, idx) = match self {
            Node::User(i) => (0u8, i),
            Node::Server(i) => (1u8, i),
        };
        out.push(role);
        out.extend_from_slice(&idx.to_le_bytes());
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let role = r.u8()?;
        let idx = r.u16()?;
        match role {
            0 => Ok(Node::User(idx)),
            1 => Ok(Node::Server(idx)),
            other => Err(WireError::BadRole(other)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShareHeader {
    pub modulus: u64,
    pub users: u16,
    pub servers: u16,
    pub partitions: u16,
    pub grad_len: u32,
    pub server: u16,
    pub user: u16,
    pub round: u16,
    pub segment: u16,
}

/// One segment of `c_{j,i}` (uplink) or of `F(α_j)` bound for user `i` (downlink).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharePacket {
    pub header: ShareHeader,
    pub values: Vec<Fe>,
}

impl SharePacket {
    pub fn encoded_len(&self) -> usize {
        SHARE_HEADER_BYTES + self.values.len() * ELEMENT_BYTES
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&h.modulus.to_le_bytes());
        out.extend_from_slice(&h.users.to_le_bytes());
        out.extend_from_slice(&h.servers.to_le_bytes());
        out.extend_from_slice(&h.partitions.to_le_bytes());
        out.extend_from_slice(&h.grad_len.to_le_bytes());
        out.extend_from_slice(&h.server.to_le_bytes());
        out.extend_from_slice(&h.user.to_le_bytes());
        out.extend_from_slice(&h.round.to_le_bytes());
        out.extend_from_slice(&h.segment.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a packet; elements are checked against the header's modulus.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let header = ShareHeader {
            modulus: r.u64()?,
            users: r.u16()?,
            servers: r.u16()?,
            partitions: r.u16()?,
            grad_len: r.u32()?,
            server: r.u16()?,
            user: r.u16()?,
            round: r.u16()?,
            segment: r.u16()?,
        };
        let rest = r.remaining();
        if !rest.len().is_multiple_of(ELEMENT_BYTES) {
            return Err(WireError::Ragged(rest.len()));
        }
        let values = rest
            .chunks_exact(ELEMENT_BYTES)
            .map(|c| {
                let v = u64::from_le_bytes(c.try_into().expect("chunk of 8"));
                if v < header.modulus {
                    Ok(Fe::from_canonical(v))
                } else {
                    Err(WireError::NonCanonical { value: v, modulus: header.modulus })
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(SharePacket { header, values })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub from: Node,
    pub to: Node,
    pub round: u16,
    /// Per-sender sequence number, starting at 0.
    pub seq: u32,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub fn encoded_len(&self) -> usize {
        ENVELOPE_HEADER_BYTES + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.from.encode(&mut out);
        self.to.encode(&mut out);
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&self.seq.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let from = Node::decode(&mut r)?;
        let to = Node::decode(&mut r)?;
        let round = r.u16()?;
        let seq = r.u32()?;
        let len = r.u32()? as usize;
        let payload = r.take(len)?.to_vec();
        if !r.remaining().is_empty() {
            return Err(WireError::Trailing(r.remaining().len()));
        }
        Ok(Envelope { from, to, round, seq, payload })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let had = self.bytes.len() - self.pos;
        if had < n {
            return Err(WireError::Truncated { needed: n, had });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
