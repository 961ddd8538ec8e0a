//! Framed point-to-point channels with byte accounting.
//!
//! Every frame is `session_id: u32 LE | msg_type: u8 | length: u32 LE | payload`,
//! so framing costs [`FRAME_OVERHEAD`] bytes per message.

mod tcp;

pub use tcp::{tcp_connect, tcp_listen_one, TcpChannel};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FRAME_OVERHEAD: usize = 9;

/// Upper limit on a single payload, guarding against corrupt length fields.
pub const MAX_PAYLOAD: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("connection closed")]
    Closed,
    #[error("expected a {expected} frame, received {got}")]
    UnexpectedType { expected: MsgType, got: MsgType },
    #[error("unknown message type byte {0}")]
    UnknownType(u8),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("peer aborted: {0}")]
    PeerAborted(String),
    #[error("receive timed out")]
    Timeout,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TransportError {
    fn from(e: std::io::Error) -> Self {
        match e.kind() {
            std::io::ErrorKind::UnexpectedEof
            | std::io::ErrorKind::ConnectionReset
            | std::io::ErrorKind::BrokenPipe => TransportError::Closed,
            _ => TransportError::Io(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum MsgType {
    InputShare = 1,
    Emulation = 2,
    WatchlistCiphertext = 3,
    CoinCommit = 4,
    CoinOpen = 5,
    TestBroadcast = 6,
    Output = 7,
    Abort = 8,
    DealerHello = 16,
    DealerRequest = 17,
    DealerResponse = 18,
    OtKeys = 19,
    OtChoice = 20,
}

impl MsgType {
    pub const ALL: [MsgType; 13] = [
        MsgType::InputShare,
        MsgType::Emulation,
        MsgType::WatchlistCiphertext,
        MsgType::CoinCommit,
        MsgType::CoinOpen,
        MsgType::TestBroadcast,
        MsgType::Output,
        MsgType::Abort,
        MsgType::DealerHello,
        MsgType::DealerRequest,
        MsgType::DealerResponse,
        MsgType::OtKeys,
        MsgType::OtChoice,
    ];

    pub fn from_byte(b: u8) -> Result<Self, TransportError> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| *t as u8 == b)
            .ok_or(TransportError::UnknownType(b))
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgType::InputShare => "input-share",
            MsgType::Emulation => "emulation",
            MsgType::WatchlistCiphertext => "watchlist-ciphertext",
            MsgType::CoinCommit => "coin-commit",
            MsgType::CoinOpen => "coin-open",
            MsgType::TestBroadcast => "test-broadcast",
            MsgType::Output => "output",
            MsgType::Abort => "abort",
            MsgType::DealerHello => "dealer-hello",
            MsgType::DealerRequest => "dealer-request",
            MsgType::DealerResponse => "dealer-response",
            MsgType::OtKeys => "ot-keys",
            MsgType::OtChoice => "ot-choice",
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub session_id: u32,
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(session_id: u32, msg_type: MsgType, payload: Vec<u8>) -> Self {
        Frame {
            session_id,
            msg_type,
            payload,
        }
    }

    pub fn wire_len(&self) -> usize {
        FRAME_OVERHEAD + self.payload.len()
    }

    pub fn header(&self) -> [u8; FRAME_OVERHEAD] {
        let mut h = [0u8; FRAME_OVERHEAD];
        h[..4].copy_from_slice(&self.session_id.to_le_bytes());
        h[4] = self.msg_type as u8;
        h[5..].copy_from_slice(&(self.payload.len() as u32).to_le_bytes());
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.header());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one complete frame; trailing bytes are an error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TransportError> {
        if bytes.len() < FRAME_OVERHEAD {
            return Err(TransportError::Malformed("short header".into()));
        }
        let (session_id, msg_type, len) = parse_header(bytes[..FRAME_OVERHEAD].try_into().unwrap())?;
        if bytes.len() != FRAME_OVERHEAD + len {
            return Err(TransportError::Malformed(format!(
                "length field {len} does not match {} payload bytes",
                bytes.len() - FRAME_OVERHEAD
            )));
        }
        Ok(Frame::new(session_id, msg_type, bytes[FRAME_OVERHEAD..].to_vec()))
    }
}

pub(crate) fn parse_header(h: &[u8; FRAME_OVERHEAD]) -> Result<(u32, MsgType, usize), TransportError> {
    let session_id = u32::from_le_bytes(h[..4].try_into().unwrap());
    let msg_type = MsgType::from_byte(h[4])?;
    let len = u32::from_le_bytes(h[5..].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(TransportError::Malformed(format!("payload length {len} too large")));
    }
    Ok((session_id, msg_type, len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Setup,
    Offline,
    Online,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCount {
    pub frames: u64,
    pub payload_bytes: u64,
}

impl TypeCount {
    pub fn total_bytes(&self) -> u64 {
        self.payload_bytes + self.frames * FRAME_OVERHEAD as u64
    }
}

/// Cumulative counts of sent frames by message type and by phase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteLedger {
    pub by_type: BTreeMap<MsgType, TypeCount>,
    pub by_phase: BTreeMap<Phase, u64>,
}

impl ByteLedger {
    pub fn record(&mut self, phase: Phase, frame: &Frame) {
        let c = self.by_type.entry(frame.msg_type).or_default();
        c.frames += 1;
        c.payload_bytes += frame.payload.len() as u64;
        *self.by_phase.entry(phase).or_default() += frame.wire_len() as u64;
    }

    pub fn total(&self) -> u64 {
        self.by_type.values().map(TypeCount::total_bytes).sum()
    }

    pub fn merge(&mut self, other: &ByteLedger) {
        for (t, c) in &other.by_type {
            let e = self.by_type.entry(*t).or_default();
            e.frames += c.frames;
            e.payload_bytes += c.payload_bytes;
        }
        for (p, b) in &other.by_phase {
            *self.by_phase.entry(*p).or_default() += b;
        }
    }

    pub fn get(&self, t: MsgType) -> TypeCount {
        self.by_type.get(&t).copied().unwrap_or_default()
    }
}

/// Raw ordered frame transport.
pub trait RawChannel: Send {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError>;
    fn recv_frame(&mut self, timeout: Option<Duration>) -> Result<Frame, TransportError>;
}

pub struct MemChannel {
    tx: Sender<Frame>,
    rx: Receiver<Frame>,
}

/// Connected pair of in-memory channels.
pub fn mem_pair() -> (MemChannel, MemChannel) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (MemChannel { tx: a_tx, rx: a_rx }, MemChannel { tx: b_tx, rx: b_rx })
}

impl RawChannel for MemChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.tx.send(frame.clone()).map_err(|_| TransportError::Closed)
    }

    fn recv_frame(&mut self, timeout: Option<Duration>) -> Result<Frame, TransportError> {
        match timeout {
            None => self.rx.recv().map_err(|_| TransportError::Closed),
            Some(t) => self.rx.recv_timeout(t).map_err(|e| match e {
                std::sync::mpsc::RecvTimeoutError::Timeout => TransportError::Timeout,
                std::sync::mpsc::RecvTimeoutError::Disconnected => TransportError::Closed,
            }),
        }
    }
}

/// A party's end of the link: typed send/receive, the byte ledger of frames
/// it sent, and an optional transcript of all frames in both directions.
pub struct Endpoint {
    raw: Box<dyn RawChannel>,
    session_id: u32,
    phase: Phase,
    sent: ByteLedger,
    received: ByteLedger,
    transcript: Option<Vec<u8>>,
    timeout: Option<Duration>,
}

impl Endpoint {
    pub fn new(raw: Box<dyn RawChannel>, session_id: u32) -> Self {
        Endpoint {
            raw,
            session_id,
            phase: Phase::Setup,
            sent: ByteLedger::default(),
            received: ByteLedger::default(),
            transcript: None,
            timeout: None,
        }
    }

    pub fn with_transcript(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn session_id(&self) -> u32 {
        self.session_id
    }

    pub fn send(&mut self, msg_type: MsgType, payload: Vec<u8>) -> Result<(), TransportError> {
        let frame = Frame::new(self.session_id, msg_type, payload);
        self.sent.record(self.phase, &frame);
        if let Some(t) = &mut self.transcript {
            t.push(0);
            t.extend_from_slice(&frame.to_bytes());
        }
        self.raw.send_frame(&frame)
    }

    /// Receives the next frame, which must have type `expected`. An abort
    /// frame from the peer is reported as [`TransportError::PeerAborted`].
    pub fn recv(&mut self, expected: MsgType) -> Result<Vec<u8>, TransportError> {
        let frame = self.raw.recv_frame(self.timeout)?;
        self.received.record(self.phase, &frame);
        if let Some(t) = &mut self.transcript {
            t.push(1);
            t.extend_from_slice(&frame.to_bytes());
        }
        if frame.session_id != self.session_id {
            return Err(TransportError::Malformed(format!(
                "session {} on a session-{} link",
                frame.session_id, self.session_id
            )));
        }
        if frame.msg_type != expected {
            if frame.msg_type == MsgType::Abort && expected != MsgType::Abort {
                return Err(TransportError::PeerAborted(
                    String::from_utf8_lossy(&frame.payload).into_owned(),
                ));
            }
            return Err(TransportError::UnexpectedType {
                expected,
                got: frame.msg_type,
            });
        }
        Ok(frame.payload)
    }

    /// Receives the next frame whatever its type.
    pub fn recv_any(&mut self) -> Result<(MsgType, Vec<u8>), TransportError> {
        let frame = self.raw.recv_frame(self.timeout)?;
        self.received.record(self.phase, &frame);
        if let Some(t) = &mut self.transcript {
            t.push(1);
            t.extend_from_slice(&frame.to_bytes());
        }
        Ok((frame.msg_type, frame.payload))
    }

    pub fn ledger(&self) -> &ByteLedger {
        &self.sent
    }

    pub fn received_ledger(&self) -> &ByteLedger {
        &self.received
    }

    pub fn transcript(&self) -> Option<&[u8]> {
        self.transcript.as_deref()
    }
}

/// Two endpoints joined by an in-memory link.
pub fn mem_endpoints(session_id: u32) -> (Endpoint, Endpoint) {
    let (a, b) = mem_pair();
    (
        Endpoint::new(Box::new(a), session_id),
        Endpoint::new(Box::new(b), session_id),
    )
}
