//! Message transport between users and servers.

use alloc::collections::{BTreeMap, VecDeque};

use super::{Envelope, Node, ProtocolError};

/// Delivers envelopes per sender in FIFO order, exactly once.
///
/// The engine calls [`Transport::flush`] after each batch of sends; after it
/// returns, every envelope sent so far must be visible to [`Transport::recv`].
pub trait Transport {
    fn send(&mut self, envelope: Envelope) -> Result<(), ProtocolError>;

    fn flush(&mut self) -> Result<(), ProtocolError> {
        Ok(())
    }

    /// Next pending envelope addressed to `node`, if any.
    fn recv(&mut self, node: Node) -> Result<Option<Envelope>, ProtocolError>;
}

/// Deterministic in-process queue, one FIFO per receiver.
#[derive(Debug, Default)]
pub struct InMemoryTransport {
    queues: BTreeMap<Node, VecDeque<Envelope>>,
    delivered: u64,
}

impl InMemoryTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Envelopes handed out by `recv` so far.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn pending(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }
}

impl Transport for InMemoryTransport {
    fn send(&mut self, envelope: Envelope) -> Result<(), ProtocolError> {
        self.queues.entry(envelope.to).or_default().push_back(envelope);
        Ok(())
    }

    fn recv(&mut self, node: Node) -> Result<Option<Envelope>, ProtocolError> {
        let next = self.queues.get_mut(&node).and_then(VecDeque::pop_front);
        if next.is_some() {
            self.delivered += 1;
        }
        Ok(next)
    }
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, envelope: Envelope) -> Result<(), ProtocolError> {
        (**self).send(envelope)
    }

    fn flush(&mut self) -> Result<(), ProtocolError> {
        (**self).flush()
    }

    fn recv(&mut self, node: Node) -> Result<Option<Envelope>, ProtocolError> {
        (**self).recv(node)
    }
}
