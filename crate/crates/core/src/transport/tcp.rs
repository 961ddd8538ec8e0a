use std::io::{BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{parse_header, Frame, RawChannel, TransportError, FRAME_OVERHEAD};

/// Frames over one TCP connection. A background thread drains the socket so
/// that simultaneous large sends from both sides cannot deadlock.
pub struct TcpChannel {
    writer: BufWriter<TcpStream>,
    incoming: Receiver<Result<Frame, TransportError>>,
}

fn read_frame(stream: &mut TcpStream) -> Result<Frame, TransportError> {
    let mut header = [0u8; FRAME_OVERHEAD];
    stream.read_exact(&mut header)?;
    let (session_id, msg_type, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    stream.read_exact(&mut payload)?;
    Ok(Frame::new(session_id, msg_type, payload))
}

impl TcpChannel {
    pub fn new(stream: TcpStream) -> Result<Self, TransportError> {
        stream.set_nodelay(true)?;
        let mut reader = stream.try_clone()?;
        let (tx, rx) = channel();
        thread::spawn(move || loop {
            let r = read_frame(&mut reader);
            let stop = r.is_err();
            if tx.send(r).is_err() || stop {
                break;
            }
        });
        Ok(TcpChannel {
            writer: BufWriter::new(stream),
            incoming: rx,
        })
    }
}

impl Drop for TcpChannel {
    fn drop(&mut self) {
        let _ = self.writer.flush();
        // wakes the reader thread and signals end of stream to the peer
        let _ = self.writer.get_ref().shutdown(std::net::Shutdown::Both);
    }
}

impl RawChannel for TcpChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.writer.write_all(&frame.header())?;
        self.writer.write_all(&frame.payload)?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv_frame(&mut self, timeout: Option<Duration>) -> Result<Frame, TransportError> {
        match timeout {
            None => self.incoming.recv().map_err(|_| TransportError::Closed)?,
            Some(t) => match self.incoming.recv_timeout(t) {
                Ok(r) => r,
                Err(RecvTimeoutError::Timeout) => Err(TransportError::Timeout),
                Err(RecvTimeoutError::Disconnected) => Err(TransportError::Closed),
            },
        }
    }
}

/// Connects, retrying until `wait` has elapsed (the peer may still be starting).
pub fn tcp_connect<A: ToSocketAddrs + Clone>(addr: A, wait: Duration) -> Result<TcpChannel, TransportError> {
    let start = Instant::now();
    loop {
        match TcpStream::connect(addr.clone()) {
            Ok(s) => return TcpChannel::new(s),
            Err(e) if start.elapsed() < wait => {
                let _ = e;
                thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Accepts exactly one connection.
pub fn tcp_listen_one(listener: &TcpListener) -> Result<TcpChannel, TransportError> {
    let (s, _) = listener.accept()?;
    TcpChannel::new(s)
}
