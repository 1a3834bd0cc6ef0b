//! Length-prefixed envelope transport over Unix socket pairs.
//!
//! Every destination node gets its own socket pair: `send` writes a frame
//! (4-byte little-endian length, then the envelope bytes) to the node's
//! write end, and a reader thread decodes frames from the other end into a
//! channel. A single writer per stream keeps per-sender FIFO order.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, VecDeque};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::Shutdown;
use std::os::unix::net::UnixStream;
use std::sync::mpsc::{self, Receiver};
use std::thread::{self, JoinHandle};

use secagg_core::protocol::{Envelope, Node, ProtocolError, Transport};

struct Endpoint {
    writer: BufWriter<UnixStream>,
    frames: Receiver<Result<Envelope, String>>,
    ready: VecDeque<Envelope>,
    sent: u64,
    arrived: u64,
    reader: Option<JoinHandle<()>>,
}

impl Endpoint {
    fn open() -> io::Result<Self> {
        let (tx_end, rx_end) = UnixStream::pair()?;
        let (frames_tx, frames) = mpsc::channel();
        let reader = thread::spawn(move || {
            let mut stream = BufReader::new(rx_end);
            loop {
                match read_frame(&mut stream) {
                    Ok(Some(bytes)) => {
                        let decoded = Envelope::from_bytes(&bytes).map_err(|e| e.to_string());
                        if frames_tx.send(decoded).is_err() {
                            break;
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        let _ = frames_tx.send(Err(e.to_string()));
                        break;
                    }
                }
            }
        });
        Ok(Endpoint {
            writer: BufWriter::new(tx_end),
            frames,
            ready: VecDeque::new(),
            sent: 0,
            arrived: 0,
            reader: Some(reader),
        })
    }

    fn accept(&mut self, frame: Result<Envelope, String>) -> Result<(), ProtocolError> {
        self.arrived += 1;
        self.ready.push_back(frame.map_err(ProtocolError::Transport)?);
        Ok(())
    }
}

/// Reads one frame; `None` on a clean end of stream.
pub fn read_frame<R: Read>(stream: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match stream.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let mut bytes = vec![0u8; u32::from_le_bytes(len) as usize];
    stream.read_exact(&mut bytes)?;
    Ok(Some(bytes))
}

pub fn write_frame<W: Write>(stream: &mut W, bytes: &[u8]) -> io::Result<()> {
    let len = u32::try_from(bytes.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too long"))?;
    stream.write_all(&len.to_le_bytes())?;
    stream.write_all(bytes)
}

/// Transport whose envelopes really cross a socket.
#[derive(Default)]
pub struct SocketTransport {
    endpoints: BTreeMap<Node, Endpoint>,
}

impl SocketTransport {
    pub fn new() -> Self {
        Self::default()
    }

    fn endpoint(&mut self, node: Node) -> Result<&mut Endpoint, ProtocolError> {
        Ok(match self.endpoints.entry(node) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(v) => v.insert(Endpoint::open().map_err(io_error)?),
        })
    }
}

fn io_error(e: io::Error) -> ProtocolError {
    ProtocolError::Transport(e.to_string())
}

impl Transport for SocketTransport {
    fn send(&mut self, envelope: Envelope) -> Result<(), ProtocolError> {
        let endpoint = self.endpoint(envelope.to)?;
        write_frame(&mut endpoint.writer, &envelope.to_bytes()).map_err(io_error)?;
        endpoint.sent += 1;
        Ok(())
    }

    /// Waits until every frame written so far has been decoded.
    fn flush(&mut self) -> Result<(), ProtocolError> {
        for endpoint in self.endpoints.values_mut() {
            endpoint.writer.flush().map_err(io_error)?;
            while endpoint.arrived < endpoint.sent {
                let frame = endpoint
                    .frames
                    .recv()
                    .map_err(|_| ProtocolError::Transport("reader thread exited early".into()))?;
                endpoint.accept(frame)?;
            }
        }
        Ok(())
    }

    fn recv(&mut self, node: Node) -> Result<Option<Envelope>, ProtocolError> {
        let Some(endpoint) = self.endpoints.get_mut(&node) else {
            return Ok(None);
        };
        while let Ok(frame) = endpoint.frames.try_recv() {
            endpoint.accept(frame)?;
        }
        Ok(endpoint.ready.pop_front())
    }
}

impl Drop for SocketTransport {
    fn drop(&mut self) {
        for endpoint in self.endpoints.values_mut() {
            let _ = endpoint.writer.flush();
            let _ = endpoint.writer.get_ref().shutdown(Shutdown::Write);
            if let Some(reader) = endpoint.reader.take() {
                let _ = reader.join();
            }
        }
    }
}
