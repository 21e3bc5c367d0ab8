//! Two transports sharing one codec: in-process FIFO queues for simulation
//! and testing, and length-framed byte streams over TCP for real federations.
//!
//! Both can mirror every sent byte into a capture buffer, which the test
//! suite scans to confirm that no raw observation ever crosses the wire.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Shared sink that accumulates every byte a transport puts on the wire.
pub type TrafficCapture = Arc<Mutex<Vec<u8>>>;

pub fn new_capture() -> TrafficCapture {
    Arc::new(Mutex::new(Vec::new()))
}

/// Peer-to-peer message transport for one node.
pub trait Transport: Send {
    fn node_id(&self) -> u32;
    /// Peer ids, excluding this node.
    fn peers(&self) -> &[u32];
    fn send(&mut self, peer: u32, bytes: &[u8]) -> Result<()>;
    /// Next inbound message from any peer; `None` when the timeout elapses.
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Vec<u8>>>;
    /// Total messages sent so far (for communication-bound assertions).
    fn sent_messages(&self) -> u64;
}

// ---------------------------------------------------------------------------
// in-process transport

/// In-process transport backed by per-pair FIFO queues.
pub struct InprocTransport {
    node_id: u32,
    peers: Vec<u32>,
    senders: HashMap<u32, mpsc::Sender<Vec<u8>>>,
    inbox: mpsc::Receiver<Vec<u8>>,
    capture: Option<TrafficCapture>,
    sent: u64,
}

impl InprocTransport {
    pub fn set_capture(&mut self, capture: TrafficCapture) {
        self.capture = Some(capture);
    }
}

/// Builds a fully connected set of in-process transports, one per node.
pub fn inproc_network(n_nodes: usize) -> Vec<InprocTransport> {
    let mut txs = Vec::with_capacity(n_nodes);
    let mut rxs = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (tx, rx) = mpsc::channel();
        txs.push(tx);
        rxs.push(rx);
    }
    rxs.into_iter()
        .enumerate()
        .map(|(i, inbox)| {
            let node_id = i as u32;
            let peers: Vec<u32> = (0..n_nodes as u32).filter(|&j| j != node_id).collect();
            let senders = peers
                .iter()
                .map(|&j| (j, txs[j as usize].clone()))
                .collect();
            InprocTransport {
                node_id,
                peers,
                senders,
                inbox,
                capture: None,
                sent: 0,
            }
        })
        .collect()
}

impl Transport for InprocTransport {
    fn node_id(&self) -> u32 {
        self.node_id
    }

    fn peers(&self) -> &[u32] {
        &self.peers
    }

    fn send(&mut self, peer: u32, bytes: &[u8]) -> Result<()> {
        if let Some(cap) = &self.capture {
            cap.lock().unwrap().extend_from_slice(bytes);
        }
        let tx = self
            .senders
            .get(&peer)
            .ok_or_else(|| Error::Config(format!("unknown peer {}", peer)))?;
        tx.send(bytes.to_vec())
            .map_err(|_| Error::Config(format!("peer {} hung up", peer)))?;
        self.sent += 1;
        Ok(())
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Vec<u8>>> {
        match self.inbox.recv_timeout(timeout) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(mpsc::RecvTimeoutError::Timeout) => Ok(None),
            Err(mpsc::RecvTimeoutError::Disconnected) => Ok(None),
        }
    }

    fn sent_messages(&self) -> u64 {
        self.sent
    }
}

// ---------------------------------------------------------------------------
// socket transport

fn write_frame(stream: &mut TcpStream, bytes: &[u8]) -> std::io::Result<()> {
    stream.write_all(&(bytes.len() as u32).to_le_bytes())?;
    stream.write_all(bytes)
}

fn read_frame(stream: &mut TcpStream) -> std::io::Result<Vec<u8>> {
    let mut len_buf = [0u8; 4];
    stream.read_exact(&mut len_buf)?;
    let len = u32::from_le_bytes(len_buf) as usize;
    let mut buf = vec![0u8; len];
    stream.read_exact(&mut buf)?;
    Ok(buf)
}

/// Socket transport: one persistent connection per peer pair, each message
/// framed with a u32 length prefix. Connection setup is deterministic — a
/// node dials every peer with a larger id and accepts from every peer with a
/// smaller one, identifying itself with a hello frame.
pub struct SocketTransport {
    node_id: u32,
    peers: Vec<u32>,
    writers: HashMap<u32, TcpStream>,
    inbox: mpsc::Receiver<Vec<u8>>,
    capture: Option<TrafficCapture>,
    sent: u64,
}

impl SocketTransport {
    /// Establishes all peer connections. `listener` must already be bound to
    /// this node's advertised address; `peers` maps every other node id to
    /// its address.
    pub fn connect(
        node_id: u32,
        listener: TcpListener,
        peers: &[(u32, SocketAddr)],
        setup_timeout: Duration,
        capture: Option<TrafficCapture>,
    ) -> Result<Self> {
        let deadline = Instant::now() + setup_timeout;
        let mut streams: HashMap<u32, TcpStream> = HashMap::new();

        // dial the peers above us
        for &(peer, addr) in peers.iter().filter(|&&(p, _)| p > node_id) {
            let stream = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(e) => {
                        if Instant::now() >= deadline {
                            return Err(Error::Io(e));
                        }
                        std::thread::sleep(Duration::from_millis(10));
                    }
                }
            };
            let mut s = stream;
            s.set_nodelay(true).ok();
            write_frame(&mut s, &node_id.to_le_bytes())?;
            streams.insert(peer, s);
        }

        // accept from the peers below us
        let expect_accepts = peers.iter().filter(|&&(p, _)| p < node_id).count();
        listener.set_nonblocking(true)?;
        let mut accepted = 0;
        while accepted < expect_accepts {
            match listener.accept() {
                Ok((mut s, _)) => {
                    s.set_nonblocking(false)?;
                    s.set_nodelay(true).ok();
                    s.set_read_timeout(Some(setup_timeout))?;
                    let hello = read_frame(&mut s)?;
                    if hello.len() != 4 {
                        return Err(Error::Codec {
                            offset: 0,
                            what: "malformed hello frame".into(),
                        });
                    }
                    let peer = u32::from_le_bytes(hello.try_into().unwrap());
                    s.set_read_timeout(None)?;
                    streams.insert(peer, s);
                    accepted += 1;
                }
                Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(Error::Config(
                            "timed out waiting for peer connections".into(),
                        ));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(Error::Io(e)),
            }
        }

        // one reader thread per peer, feeding a shared inbox
        let (tx, inbox) = mpsc::channel::<Vec<u8>>();
        let mut writers = HashMap::new();
        for (peer, stream) in streams {
            let mut reader = stream.try_clone()?;
            writers.insert(peer, stream);
            let tx = tx.clone();
            std::thread::spawn(move || {
                while let Ok(frame) = read_frame(&mut reader) {
                    if tx.send(frame).is_err() {
                        break;
                    }
                }
            });
        }

        let mut peer_ids: Vec<u32> = peers.iter().map(|&(p, _)| p).collect();
        peer_ids.sort_unstable();
        Ok(Self {
            node_id,
            peers: peer_ids,
            writers,
            inbox,
            capture,
            sent: 0,
        })
    }
}

impl Transport for SocketTransport {
    fn node_id(&self) -> u32 {
        self.node_id
    }

    fn peers(&self) -> &[u32] {
        &self.peers
    }

    fn send(&mut self, peer: u32, bytes: &[u8]) -> Result<()> {
        if let Some(cap) = &self.capture {
            let mut cap = cap.lock().unwrap();
            cap.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            cap.extend_from_slice(bytes);
        }
        let stream = self
            .writers
            .get_mut(&peer)
            .ok_or_else(|| Error::Config(format!("unknown peer {}", peer)))?;
        write_frame(stream, bytes)?;
        self.sent += 1;
        Ok(())
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Vec<u8>>> {
        match self.inbox.recv_timeout(timeout) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(mpsc::RecvTimeoutError::Timeout) => Ok(None),
            Err(mpsc::RecvTimeoutError::Disconnected) => Ok(None),
        }
    }

    fn sent_messages(&self) -> u64 {
        self.sent
    }
}
