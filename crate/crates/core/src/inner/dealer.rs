//! Trusted dealer service over TCP.
//!
//! Each OLE direction is a "pair": the sending party connects a sender stream
//! and the receiving party a receiver stream, both announcing the pair id in a
//! hello frame (`role: u8 | pair_id: u32 LE`). Both sides then send requests
//! (`count: u32 LE`); the dealer answers the sender stream with `count`
//! triples `(a, v, seq)` and the receiver stream with `count` pairs `(u, w)`.
//! The same pair of streams carries ideal OT: the sender stream submits its
//! keys, the receiver stream its choice indices (`u32 LE` each), and the
//! dealer returns the chosen keys on the receiver stream.

use std::collections::HashMap;
use std::marker::PhantomData;
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::{InnerError, OleSource, RandomOle, ReceiverCorr, SenderCorr};
use crate::crypto::{derive_rng, CryptoError, ObliviousTransfer, Seed, WatchKey, WatchlistSelection};
use crate::field::{decode_elements, encode_elements, PrimeField};
use crate::transport::{tcp_connect, Endpoint, MsgType, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum DealerRole {
    SenderStream = 0,
    ReceiverStream = 1,
}

fn hello_bytes(role: DealerRole, pair_id: u32) -> Vec<u8> {
    let mut v = vec![role as u8];
    v.extend_from_slice(&pair_id.to_le_bytes());
    v
}

fn parse_hello(b: &[u8]) -> Result<(DealerRole, u32), TransportError> {
    if b.len() != 5 {
        return Err(TransportError::Malformed("hello must be 5 bytes".into()));
    }
    let role = match b[0] {
        0 => DealerRole::SenderStream,
        1 => DealerRole::ReceiverStream,
        r => return Err(TransportError::Malformed(format!("unknown dealer role {r}"))),
    };
    Ok((role, u32::from_le_bytes(b[1..].try_into().unwrap())))
}

fn parse_count(b: &[u8]) -> Result<usize, TransportError> {
    let arr: [u8; 4] = b
        .try_into()
        .map_err(|_| TransportError::Malformed("request must be 4 bytes".into()))?;
    Ok(u32::from_le_bytes(arr) as usize)
}

/// Serves dealer pairs until `max_pairs` pairs have completed (forever when
/// `None`). Each pair is handled on its own thread.
pub fn serve_dealer<F: PrimeField>(
    listener: TcpListener,
    seed: Seed,
    max_pairs: Option<usize>,
) -> Result<(), TransportError> {
    let mut waiting: HashMap<u32, (DealerRole, Endpoint)> = HashMap::new();
    let mut handles = Vec::new();
    loop {
        if let Some(m) = max_pairs {
            if handles.len() >= m {
                break;
            }
        }
        let ch = crate::transport::tcp_listen_one(&listener)?;
        let mut ep = Endpoint::new(Box::new(ch), 0);
        let (role, pair) = parse_hello(&ep.recv(MsgType::DealerHello)?)?;
        match waiting.remove(&pair) {
            Some((other_role, other)) if other_role != role => {
                let (s, r) = if role == DealerRole::SenderStream { (ep, other) } else { (other, ep) };
                handles.push(thread::spawn(move || serve_pair::<F>(s, r, seed, pair)));
            }
            Some(_) => {
                return Err(TransportError::Malformed(format!(
                    "two {role:?} connections for pair {pair}"
                )))
            }
            None => {
                waiting.insert(pair, (role, ep));
            }
        }
    }
    for h in handles {
        match h.join() {
            Ok(Ok(())) | Ok(Err(TransportError::Closed)) => {}
            Ok(Err(e)) => return Err(e),
            Err(_) => return Err(TransportError::Io("dealer thread panicked".into())),
        }
    }
    Ok(())
}

fn serve_pair<F: PrimeField>(
    mut sender: Endpoint,
    mut receiver: Endpoint,
    seed: Seed,
    pair: u32,
) -> Result<(), TransportError> {
    let mut rng = derive_rng(&seed, "dealer-pair", &[pair as u64]);
    let mut seq = 0u64;
    loop {
        // the sender stream decides what happens next
        let (t, payload) = sender.recv_any()?;
        match t {
            MsgType::DealerRequest => {
                let count = parse_count(&payload)?;
                let rcount = parse_count(&receiver.recv(MsgType::DealerRequest)?)?;
                if rcount != count {
                    return Err(TransportError::Malformed(format!(
                        "pair {pair}: sender asked {count}, receiver {rcount}"
                    )));
                }
                let mut s_out = Vec::with_capacity(count * 24);
                let mut r_out = Vec::with_capacity(count * 16);
                for _ in 0..count {
                    let c: RandomOle<F> = RandomOle::sample(seq, &mut rng);
                    encode_elements(&[c.a, c.v, F::from_u64(seq)], &mut s_out);
                    encode_elements(&[c.u, c.w], &mut r_out);
                    seq += 1;
                }
                sender.send(MsgType::DealerResponse, s_out)?;
                receiver.send(MsgType::DealerResponse, r_out)?;
            }
            MsgType::OtKeys => {
                if payload.len() % 32 != 0 {
                    return Err(TransportError::Malformed("OT keys not a multiple of 32 bytes".into()));
                }
                let keys: Vec<&[u8]> = payload.chunks_exact(32).collect();
                let choice = receiver.recv(MsgType::OtChoice)?;
                if choice.len() < 4 || choice.len() % 4 != 0 {
                    return Err(TransportError::Malformed("OT choice length".into()));
                }
                let words: Vec<usize> = choice
                    .chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
                    .collect();
                if words[0] != keys.len() || words[1..].iter().any(|&i| i >= keys.len()) {
                    return Err(TransportError::Malformed("OT choice out of range".into()));
                }
                let out: Vec<u8> = words[1..].iter().flat_map(|&i| keys[i].to_vec()).collect();
                receiver.send(MsgType::OtKeys, out)?;
            }
            other => {
                return Err(TransportError::UnexpectedType {
                    expected: MsgType::DealerRequest,
                    got: other,
                })
            }
        }
    }
}

/// Party-side client holding one sender stream and one receiver stream.
pub struct DealerClient<F> {
    sender: Endpoint,
    receiver: Endpoint,
    requests: u64,
    _f: PhantomData<F>,
}

impl<F: PrimeField> DealerClient<F> {
    /// Connects the two streams of `party` for session `base`: pair
    /// `2*base + party` as sender and `2*base + 1 - party` as receiver.
    pub fn connect<A: ToSocketAddrs + Clone>(addr: A, base: u32, party: usize) -> Result<Self, TransportError> {
        let own = 2 * base + party as u32;
        let other = 2 * base + 1 - party as u32;
        let mut sender = Endpoint::new(Box::new(tcp_connect(addr.clone(), Duration::from_secs(10))?), 0);
        sender.send(MsgType::DealerHello, hello_bytes(DealerRole::SenderStream, own))?;
        let mut receiver = Endpoint::new(Box::new(tcp_connect(addr, Duration::from_secs(10))?), 0);
        receiver.send(MsgType::DealerHello, hello_bytes(DealerRole::ReceiverStream, other))?;
        Ok(DealerClient {
            sender,
            receiver,
            requests: 0,
            _f: PhantomData,
        })
    }

    fn request(ep: &mut Endpoint, count: usize, width: usize) -> Result<Vec<F>, InnerError> {
        ep.send(MsgType::DealerRequest, (count as u32).to_le_bytes().to_vec())?;
        Self::response(ep, count, width)
    }

    fn response(ep: &mut Endpoint, count: usize, width: usize) -> Result<Vec<F>, InnerError> {
        let v: Vec<F> = decode_elements(&ep.recv(MsgType::DealerResponse)?)?;
        if v.len() != count * width {
            return Err(InnerError::LengthMismatch {
                expected: count * width,
                got: v.len(),
            });
        }
        Ok(v)
    }
}

fn sender_halves<F: PrimeField>(v: Vec<F>) -> Vec<SenderCorr<F>> {
    v.chunks_exact(3)
        .map(|c| SenderCorr {
            seq: c[2].to_canonical(),
            a: c[0],
            v: c[1],
        })
        .collect()
}

// receiver halves carry no sequence number; number them locally
fn receiver_halves<F: PrimeField>(v: Vec<F>, base: u64) -> Vec<ReceiverCorr<F>> {
    v.chunks_exact(2)
        .enumerate()
        .map(|(i, c)| ReceiverCorr {
            seq: (base << 32) | i as u64,
            u: c[0],
            w: c[1],
        })
        .collect()
}

impl<F: PrimeField> OleSource<F> for DealerClient<F> {
    fn sender_batch(&mut self, count: usize) -> Result<Vec<SenderCorr<F>>, InnerError> {
        self.requests += 1;
        Ok(sender_halves(Self::request(&mut self.sender, count, 3)?))
    }

    fn receiver_batch(&mut self, count: usize) -> Result<Vec<ReceiverCorr<F>>, InnerError> {
        let base = self.requests;
        self.requests += 1;
        Ok(receiver_halves(Self::request(&mut self.receiver, count, 2)?, base))
    }

    fn batch_pair(&mut self, count: usize) -> Result<(Vec<SenderCorr<F>>, Vec<ReceiverCorr<F>>), InnerError> {
        let req = (count as u32).to_le_bytes().to_vec();
        self.sender.send(MsgType::DealerRequest, req.clone())?;
        self.receiver.send(MsgType::DealerRequest, req)?;
        let base = self.requests + 1;
        self.requests += 2;
        let s = sender_halves(Self::response(&mut self.sender, count, 3)?);
        let r = receiver_halves(Self::response(&mut self.receiver, count, 2)?, base);
        Ok((s, r))
    }

    fn requests(&self) -> u64 {
        self.requests
    }
}

/// Shared handle so one dealer connection can serve both OLE and OT.
pub struct DealerHandle<F>(pub Arc<Mutex<DealerClient<F>>>);

impl<F> Clone for DealerHandle<F> {
    fn clone(&self) -> Self {
        DealerHandle(self.0.clone())
    }
}

impl<F: PrimeField> DealerHandle<F> {
    pub fn new(client: DealerClient<F>) -> Self {
        DealerHandle(Arc::new(Mutex::new(client)))
    }

    fn lock(&self) -> Result<std::sync::MutexGuard<'_, DealerClient<F>>, InnerError> {
        self.0.lock().map_err(|_| InnerError::Backend("dealer handle poisoned".into()))
    }
}

impl<F: PrimeField> OleSource<F> for DealerHandle<F> {
    fn sender_batch(&mut self, count: usize) -> Result<Vec<SenderCorr<F>>, InnerError> {
        self.lock()?.sender_batch(count)
    }

    fn receiver_batch(&mut self, count: usize) -> Result<Vec<ReceiverCorr<F>>, InnerError> {
        self.lock()?.receiver_batch(count)
    }

    fn requests(&self) -> u64 {
        self.lock().map(|g| g.requests()).unwrap_or(0)
    }

    fn batch_pair(&mut self, count: usize) -> Result<(Vec<SenderCorr<F>>, Vec<ReceiverCorr<F>>), InnerError> {
        self.lock()?.batch_pair(count)
    }
}

impl<F: PrimeField> ObliviousTransfer for DealerHandle<F> {
    fn send(&mut self, _instance: u32, keys: &[WatchKey]) -> Result<(), CryptoError> {
        let mut g = self.0.lock().map_err(|_| CryptoError::OtUnavailable("poisoned".into()))?;
        let payload: Vec<u8> = keys.iter().flat_map(|k| k.0).collect();
        g.sender.send(MsgType::OtKeys, payload)?;
        Ok(())
    }

    fn receive(&mut self, _instance: u32, sel: &WatchlistSelection) -> Result<Vec<WatchKey>, CryptoError> {
        let mut g = self.0.lock().map_err(|_| CryptoError::OtUnavailable("poisoned".into()))?;
        let mut payload = (sel.n() as u32).to_le_bytes().to_vec();
        for &i in sel.indices() {
            payload.extend_from_slice(&(i as u32).to_le_bytes());
        }
        g.receiver.send(MsgType::OtChoice, payload)?;
        let got = g.receiver.recv(MsgType::OtKeys)?;
        if got.len() != 32 * sel.t() {
            return Err(CryptoError::Malformed("OT reply length".into()));
        }
        Ok(got.chunks_exact(32).map(|c| WatchKey(c.try_into().unwrap())).collect())
    }
}
