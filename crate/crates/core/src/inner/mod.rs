//! Passively secure inner protocol: random-OLE preprocessing, derandomization
//! and GMW multiplication on additive shares.
//!
//! A random OLE gives the sender `(a, v)` and the receiver `(u, w)` with
//! `w = a*u + v`. To evaluate a live OLE `a'*x' + b'` the receiver sends
//! `delta = x' - u`, the sender answers `alpha = a' - a` and
//! `gamma = a*delta + b' - v`, and the receiver outputs `w + gamma + alpha*x'`.

mod dealer;

pub use dealer::{serve_dealer, DealerClient, DealerHandle, DealerRole};

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::crypto::{derive_rng, CryptoError, Seed};
use crate::field::{decode_elements, encode_elements, FieldError, PrimeField};
use crate::transport::{Endpoint, MsgType, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InnerError {
    #[error("random OLE correlation {0} consumed twice")]
    CorrelationReuse(u64),
    #[error("need {need} preprocessed correlations, {have} left")]
    Exhausted { need: usize, have: usize },
    #[error("OLE backend failure: {0}")]
    Backend(String),
    #[error("message length mismatch: expected {expected} elements, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Ideal OLE: the receiver learns `a*x + b`.
pub fn ole_ideal<F: PrimeField>(a: F, b: F, x: F) -> F {
    a * x + b
}

/// Both halves of a random OLE, as produced by a dealer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomOle<F> {
    pub seq: u64,
    pub a: F,
    pub v: F,
    pub u: F,
    pub w: F,
}

impl<F: PrimeField> RandomOle<F> {
    pub fn sample<R: Rng + ?Sized>(seq: u64, rng: &mut R) -> Self {
        let (a, v, u) = (F::random(rng), F::random(rng), F::random(rng));
        RandomOle {
            seq,
            a,
            v,
            u,
            w: a * u + v,
        }
    }

    pub fn holds(&self) -> bool {
        self.w == self.a * self.u + self.v
    }

    pub fn split(self) -> (SenderCorr<F>, ReceiverCorr<F>) {
        (
            SenderCorr {
                seq: self.seq,
                a: self.a,
                v: self.v,
            },
            ReceiverCorr {
                seq: self.seq,
                u: self.u,
                w: self.w,
            },
        )
    }
}

/// Sender half. Deliberately not `Clone`: derandomization consumes it.
#[derive(Debug, PartialEq, Eq)]
pub struct SenderCorr<F> {
    pub seq: u64,
    pub a: F,
    pub v: F,
}

/// Receiver half. Not `Clone` for the same reason.
#[derive(Debug, PartialEq, Eq)]
pub struct ReceiverCorr<F> {
    pub seq: u64,
    pub u: F,
    pub w: F,
}

/// Receiver state between sending `delta` and receiving `(alpha, gamma)`.
#[derive(Debug)]
pub struct PendingOle<F> {
    corr: ReceiverCorr<F>,
    x: F,
}

pub fn receiver_start<F: PrimeField>(corr: ReceiverCorr<F>, x: F) -> (PendingOle<F>, F) {
    let delta = x - corr.u;
    (PendingOle { corr, x }, delta)
}

/// Sender reply `(alpha, gamma)` for live coefficients `(a', b')`.
pub fn sender_respond<F: PrimeField>(corr: SenderCorr<F>, a: F, b: F, delta: F) -> (F, F) {
    (a - corr.a, corr.a * delta + b - corr.v)
}

pub fn receiver_finish<F: PrimeField>(p: PendingOle<F>, alpha: F, gamma: F) -> F {
    p.corr.w + gamma + alpha * p.x
}

/// Single derandomized OLE evaluated locally, returning `(delta, alpha, gamma, output)`.
pub fn derandomize_ole<F: PrimeField>(
    corr: RandomOle<F>,
    a: F,
    b: F,
    x: F,
) -> (F, F, F, F) {
    let (s, r) = corr.split();
    let (pending, delta) = receiver_start(r, x);
    let (alpha, gamma) = sender_respond(s, a, b, delta);
    (delta, alpha, gamma, receiver_finish(pending, alpha, gamma))
}

/// Source of random OLE correlations (the functionality's view).
pub trait OleBackend<F>: Send {
    fn generate(&mut self, count: usize) -> Result<Vec<RandomOle<F>>, InnerError>;
    fn invocations(&self) -> u64;
}

/// Trusted in-process dealer backend.
pub struct IdealOleBackend {
    rng: ChaCha20Rng,
    next_seq: u64,
    calls: u64,
}

impl IdealOleBackend {
    pub fn new(seed: &Seed, stream: u64) -> Self {
        IdealOleBackend {
            rng: derive_rng(seed, "ideal-ole", &[stream]),
            next_seq: 0,
            calls: 0,
        }
    }
}

impl<F: PrimeField> OleBackend<F> for IdealOleBackend {
    fn generate(&mut self, count: usize) -> Result<Vec<RandomOle<F>>, InnerError> {
        self.calls += 1;
        let out = (0..count)
            .map(|i| RandomOle::sample(self.next_seq + i as u64, &mut self.rng))
            .collect();
        self.next_seq += count as u64;
        Ok(out)
    }

    fn invocations(&self) -> u64 {
        self.calls
    }
}

/// `count` correlations generated in `ceil(count / batch)` backend calls.
pub fn gen_random_oles<F: PrimeField>(
    backend: &mut dyn OleBackend<F>,
    count: usize,
    batch: usize,
) -> Result<Vec<RandomOle<F>>, InnerError> {
    let batch = batch.max(1);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let take = batch.min(count - out.len());
        let got = backend.generate(take)?;
        if got.len() != take {
            return Err(InnerError::Backend(format!("asked for {take}, got {}", got.len())));
        }
        out.extend(got);
    }
    Ok(out)
}

/// One party's access to preprocessed correlations in both directions:
/// as sender (its own direction) and as receiver (the other party's).
pub trait OleSource<F>: Send {
    fn sender_batch(&mut self, count: usize) -> Result<Vec<SenderCorr<F>>, InnerError>;
    fn receiver_batch(&mut self, count: usize) -> Result<Vec<ReceiverCorr<F>>, InnerError>;
    /// Number of batch requests served so far.
    fn requests(&self) -> u64;
    /// Both halves at once; remote sources override this to issue the two
    /// requests before waiting on either answer.
    #[allow(clippy::type_complexity)]
    fn batch_pair(&mut self, count: usize) -> Result<(Vec<SenderCorr<F>>, Vec<ReceiverCorr<F>>), InnerError> {
        let s = self.sender_batch(count)?;
        let r = self.receiver_batch(count)?;
        Ok((s, r))
    }
}

/// Party-side view of an in-process trusted dealer. Both parties derive the
/// same correlations from a shared dealer seed and keep only their half.
pub struct IdealDealerSource {
    party: usize,
    as_sender: IdealOleBackend,
    as_receiver: IdealOleBackend,
    requests: u64,
}

impl IdealDealerSource {
    pub fn new(dealer_seed: &Seed, party: usize) -> Self {
        assert!(party < 2);
        IdealDealerSource {
            party,
            as_sender: IdealOleBackend::new(dealer_seed, party as u64),
            as_receiver: IdealOleBackend::new(dealer_seed, 1 - party as u64),
            requests: 0,
        }
    }

    pub fn party(&self) -> usize {
        self.party
    }
}

impl<F: PrimeField> OleSource<F> for IdealDealerSource {
    fn sender_batch(&mut self, count: usize) -> Result<Vec<SenderCorr<F>>, InnerError> {
        self.requests += 1;
        let v: Vec<RandomOle<F>> = self.as_sender.generate(count)?;
        Ok(v.into_iter().map(|c| c.split().0).collect())
    }

    fn receiver_batch(&mut self, count: usize) -> Result<Vec<ReceiverCorr<F>>, InnerError> {
        self.requests += 1;
        let v: Vec<RandomOle<F>> = self.as_receiver.generate(count)?;
        Ok(v.into_iter().map(|c| c.split().1).collect())
    }

    fn requests(&self) -> u64 {
        self.requests
    }
}

/// FIFO of preprocessed correlations with single-use accounting.
pub struct OlePool<F> {
    sender: VecDeque<SenderCorr<F>>,
    receiver: VecDeque<ReceiverCorr<F>>,
    used_sender: HashSet<u64>,
    used_receiver: HashSet<u64>,
    consumed: u64,
}

impl<F: PrimeField> Default for OlePool<F> {
    fn default() -> Self {
        OlePool {
            sender: VecDeque::new(),
            receiver: VecDeque::new(),
            used_sender: HashSet::new(),
            used_receiver: HashSet::new(),
            consumed: 0,
        }
    }
}

impl<F: PrimeField> OlePool<F> {
    /// Fetches `count` correlations of each kind in batches of `batch`.
    pub fn fill(&mut self, source: &mut dyn OleSource<F>, count: usize, batch: usize) -> Result<(), InnerError> {
        let batch = batch.max(1);
        let mut left = count;
        while left > 0 {
            let take = batch.min(left);
            let (s, r) = source.batch_pair(take)?;
            self.push_sender(s);
            self.push_receiver(r);
            left -= take;
        }
        Ok(())
    }

    pub fn push_sender(&mut self, v: Vec<SenderCorr<F>>) {
        self.sender.extend(v);
    }

    pub fn push_receiver(&mut self, v: Vec<ReceiverCorr<F>>) {
        self.receiver.extend(v);
    }

    pub fn take_sender(&mut self, count: usize) -> Result<Vec<SenderCorr<F>>, InnerError> {
        if self.sender.len() < count {
            return Err(InnerError::Exhausted {
                need: count,
                have: self.sender.len(),
            });
        }
        let out: Vec<SenderCorr<F>> = self.sender.drain(..count).collect();
        for c in &out {
            if !self.used_sender.insert(c.seq) {
                return Err(InnerError::CorrelationReuse(c.seq));
            }
        }
        self.consumed += count as u64;
        Ok(out)
    }

    pub fn take_receiver(&mut self, count: usize) -> Result<Vec<ReceiverCorr<F>>, InnerError> {
        if self.receiver.len() < count {
            return Err(InnerError::Exhausted {
                need: count,
                have: self.receiver.len(),
            });
        }
        let out: Vec<ReceiverCorr<F>> = self.receiver.drain(..count).collect();
        for c in &out {
            if !self.used_receiver.insert(c.seq) {
                return Err(InnerError::CorrelationReuse(c.seq));
            }
        }
        self.consumed += count as u64;
        Ok(out)
    }

    /// Correlations consumed by this party (sender and receiver halves).
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn available(&self) -> (usize, usize) {
        (self.sender.len(), self.receiver.len())
    }
}

/// Local part of a batched GMW multiplication, before any message is sent.
pub struct GmwPending<F> {
    x: Vec<F>,
    y: Vec<F>,
    masks: Vec<F>,
    sender: Vec<SenderCorr<F>>,
    pending: Vec<PendingOle<F>>,
}

/// Starts a batch of GMW multiplications on additive shares `(x_i, y_i)`.
/// Returns the receiver message `delta` (one element per product). Each
/// product uses one OLE with this party as sender (coefficients `(x_i, r_i)`)
/// and one with this party as receiver (input `y_i`).
pub fn gmw_start<F: PrimeField, R: Rng + ?Sized>(
    pool: &mut OlePool<F>,
    x: &[F],
    y: &[F],
    rng: &mut R,
) -> Result<(GmwPending<F>, Vec<F>), InnerError> {
    assert_eq!(x.len(), y.len());
    let m = x.len();
    let sender = pool.take_sender(m)?;
    let receiver = pool.take_receiver(m)?;
    let masks: Vec<F> = (0..m).map(|_| F::random(rng)).collect();
    let mut pending = Vec::with_capacity(m);
    let mut deltas = Vec::with_capacity(m);
    for (corr, &yi) in receiver.into_iter().zip(y) {
        let (p, d) = receiver_start(corr, yi);
        pending.push(p);
        deltas.push(d);
    }
    Ok((
        GmwPending {
            x: x.to_vec(),
            y: y.to_vec(),
            masks,
            sender,
            pending,
        },
        deltas,
    ))
}

impl<F: PrimeField> GmwPending<F> {
    /// Sender replies `(alpha_i, gamma_i)` interleaved, given the peer's deltas.
    pub fn respond(&mut self, peer_deltas: &[F]) -> Result<Vec<F>, InnerError> {
        if peer_deltas.len() != self.x.len() {
            return Err(InnerError::LengthMismatch {
                expected: self.x.len(),
                got: peer_deltas.len(),
            });
        }
        let mut out = Vec::with_capacity(2 * self.x.len());
        for ((corr, (&xi, &ri)), &d) in self
            .sender
            .drain(..)
            .zip(self.x.iter().zip(&self.masks))
            .zip(peer_deltas)
        {
            let (alpha, gamma) = sender_respond(corr, xi, ri, d);
            out.push(alpha);
            out.push(gamma);
        }
        Ok(out)
    }

    /// Output shares `x_i*y_i - r_i + (peer_x_i*y_i + peer_r_i)`.
    pub fn finish(self, peer_reply: &[F]) -> Result<Vec<F>, InnerError> {
        if peer_reply.len() != 2 * self.x.len() {
            return Err(InnerError::LengthMismatch {
                expected: 2 * self.x.len(),
                got: peer_reply.len(),
            });
        }
        Ok(self
            .pending
            .into_iter()
            .zip(peer_reply.chunks_exact(2))
            .zip(self.x.iter().zip(&self.y).zip(&self.masks))
            .map(|((p, ag), ((&xi, &yi), &ri))| xi * yi - ri + receiver_finish(p, ag[0], ag[1]))
            .collect())
    }
}

/// Batched GMW multiplication over a link: one `delta` frame and one reply
/// frame in each direction, all tagged as emulation traffic.
pub fn gmw_mul<F: PrimeField, R: Rng + ?Sized>(
    link: &mut Endpoint,
    party: usize,
    pool: &mut OlePool<F>,
    x: &[F],
    y: &[F],
    rng: &mut R,
) -> Result<Vec<F>, InnerError> {
    let (mut pending, deltas) = gmw_start(pool, x, y, rng)?;
    let peer_deltas = exchange_elements(link, party, &deltas)?;
    let reply = pending.respond(&peer_deltas)?;
    let peer_reply = exchange_elements(link, party, &reply)?;
    pending.finish(&peer_reply)
}

fn exchange_elements<F: PrimeField>(link: &mut Endpoint, party: usize, v: &[F]) -> Result<Vec<F>, InnerError> {
    let mut buf = Vec::with_capacity(v.len() * 8);
    encode_elements(v, &mut buf);
    let got = crate::crypto::exchange(link, party, MsgType::Emulation, buf)?;
    Ok(decode_elements(&got)?)
}

