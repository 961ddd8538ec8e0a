//! Hash commitments, keyed PRG streams, watchlist channel encryption, an
//! ideal t-out-of-n OT and the two-party coin toss.
//!
//! The hash is SHA-256 throughout; the PRG is ChaCha20.

mod ot;

pub use ot::{ideal_ot_pair, ot_t_of_n, IdealOtEndpoint, ObliviousTransfer, WatchlistSelection};

use std::collections::HashSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{decode_elements, encode_elements, FieldError, PrimeField};
use crate::transport::{Endpoint, MsgType, TransportError};

pub type Seed = [u8; 32];

/// Length of the integrity tag appended to watchlist ciphertexts.
pub const TAG_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("commitment opening does not match")]
    BadOpening,
    #[error("integrity tag mismatch (wrong key or tampered ciphertext)")]
    BadTag,
    #[error("ciphertext shorter than its tag")]
    ShortCiphertext,
    #[error("counter {0} reused under the same key")]
    CounterReuse(u64),
    #[error("watchlist selection must have {expected} distinct indices below {n}, got {got:?}")]
    BadSelection {
        expected: usize,
        n: usize,
        got: Vec<usize>,
    },
    #[error("OT functionality unavailable: {0}")]
    OtUnavailable(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Child seed for `label` and `indices`, domain separated by construction.
pub fn derive_seed(seed: &Seed, label: &str, indices: &[u64]) -> Seed {
    let mut h = Sha256::new();
    h.update(b"sac/derive");
    h.update(seed);
    h.update((label.len() as u32).to_le_bytes());
    h.update(label.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    h.finalize().into()
}

pub fn derive_rng(seed: &Seed, label: &str, indices: &[u64]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(seed, label, indices))
}

pub fn random_seed<R: RngCore + ?Sized>(rng: &mut R) -> Seed {
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    s
}

/// Expands a `u64` into a seed, for tests and CLI seeds.
pub fn seed_from_u64(v: u64) -> Seed {
    derive_seed(&[0u8; 32], "u64-seed", &[v])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commitment {
    pub digest: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opening {
    pub payload: Vec<u8>,
    pub randomness: [u8; 32],
}

impl Opening {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.randomness.to_vec();
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() < 32 {
            return Err(CryptoError::Malformed("opening shorter than 32 bytes".into()));
        }
        Ok(Opening {
            randomness: bytes[..32].try_into().unwrap(),
            payload: bytes[32..].to_vec(),
        })
    }
}

fn commit_digest(payload: &[u8], randomness: &[u8; 32]) -> [u8; 32] {
    sha256(&[b"sac/commit", randomness, payload])
}

pub fn commit<R: RngCore + ?Sized>(payload: &[u8], rng: &mut R) -> (Commitment, Opening) {
    let mut randomness = [0u8; 32];
    rng.fill_bytes(&mut randomness);
    let c = Commitment {
        digest: commit_digest(payload, &randomness),
    };
    (
        c,
        Opening {
            payload: payload.to_vec(),
            randomness,
        },
    )
}

pub fn open<'a>(c: &Commitment, opening: &'a Opening) -> Result<&'a [u8], CryptoError> {
    if commit_digest(&opening.payload, &opening.randomness) == c.digest {
        Ok(&opening.payload)
    } else {
        Err(CryptoError::BadOpening)
    }
}

/// Symmetric key of one watchlist channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WatchKey(pub Seed);

impl WatchKey {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        WatchKey(random_seed(rng))
    }
}

/// ChaCha20 keystream for `(key, counter)`.
pub fn keystream(key: &WatchKey, counter: u64, len: usize) -> Vec<u8> {
    let mut rng = ChaCha20Rng::from_seed(key.0);
    rng.set_stream(counter);
    let mut out = vec![0u8; len];
    rng.fill_bytes(&mut out);
    out
}

/// XOR with the keystream; its own inverse.
pub fn stream_xor(key: &WatchKey, counter: u64, data: &[u8]) -> Vec<u8> {
    keystream(key, counter, data.len())
        .iter()
        .zip(data)
        .map(|(k, d)| k ^ d)
        .collect()
}

fn tag(key: &WatchKey, counter: u64, plaintext: &[u8]) -> [u8; TAG_BYTES] {
    let full = sha256(&[b"sac/tag", &key.0, &counter.to_le_bytes(), plaintext]);
    full[..TAG_BYTES].try_into().unwrap()
}

/// Ciphertext followed by a 16-byte tag over `key || counter || plaintext`.
pub fn seal(key: &WatchKey, counter: u64, plaintext: &[u8]) -> Vec<u8> {
    let mut out = stream_xor(key, counter, plaintext);
    out.extend_from_slice(&tag(key, counter, plaintext));
    out
}

pub fn unseal(key: &WatchKey, counter: u64, sealed: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if sealed.len() < TAG_BYTES {
        return Err(CryptoError::ShortCiphertext);
    }
    let (ct, t) = sealed.split_at(sealed.len() - TAG_BYTES);
    let pt = stream_xor(key, counter, ct);
    if tag(key, counter, &pt)[..] != *t {
        return Err(CryptoError::BadTag);
    }
    Ok(pt)
}

/// Encrypting side of one watchlist channel; refuses to reuse a counter.
#[derive(Debug, Clone)]
pub struct SealingKey {
    key: WatchKey,
    used: HashSet<u64>,
}

impl SealingKey {
    pub fn new(key: WatchKey) -> Self {
        SealingKey {
            key,
            used: HashSet::new(),
        }
    }

    pub fn seal(&mut self, counter: u64, plaintext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        if !self.used.insert(counter) {
            return Err(CryptoError::CounterReuse(counter));
        }
        Ok(seal(&self.key, counter, plaintext))
    }
}

/// Coordinate-wise sum of two coin shares.
pub fn combine_coin_shares<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// Two-party coin toss over `link`: commit to a share, exchange commitments,
/// open, verify and add. Party 0 sends first in each round.
pub fn coin_toss<F: PrimeField, R: Rng + ?Sized>(
    link: &mut Endpoint,
    party: usize,
    share: &[F],
    rng: &mut R,
) -> Result<Vec<F>, CryptoError> {
    let mut payload = Vec::new();
    encode_elements(share, &mut payload);
    let (c, o) = commit(&payload, rng);
    let theirs_c = exchange(link, party, MsgType::CoinCommit, c.digest.to_vec())?;
    let theirs_c = Commitment {
        digest: theirs_c
            .try_into()
            .map_err(|_| CryptoError::Malformed("commitment must be 32 bytes".into()))?,
    };
    let theirs_o = Opening::from_bytes(&exchange(link, party, MsgType::CoinOpen, o.to_bytes())?)?;
    let their_share: Vec<F> = decode_elements(open(&theirs_c, &theirs_o)?)?;
    if their_share.len() != share.len() {
        return Err(CryptoError::Malformed("coin share length mismatch".into()));
    }
    Ok(combine_coin_shares(share, &their_share))
}

/// Coin toss of a 32-byte seed; the result is the XOR of both shares.
pub fn coin_toss_seed<R: RngCore + ?Sized>(
    link: &mut Endpoint,
    party: usize,
    share: &Seed,
    rng: &mut R,
) -> Result<Seed, CryptoError> {
    let (c, o) = commit(share, rng);
    let theirs_c = exchange(link, party, MsgType::CoinCommit, c.digest.to_vec())?;
    let theirs_c = Commitment {
        digest: theirs_c
            .try_into()
            .map_err(|_| CryptoError::Malformed("commitment must be 32 bytes".into()))?,
    };
    let theirs_o = Opening::from_bytes(&exchange(link, party, MsgType::CoinOpen, o.to_bytes())?)?;
    let theirs: Seed = open(&theirs_c, &theirs_o)?
        .try_into()
        .map_err(|_| CryptoError::Malformed("coin seed must be 32 bytes".into()))?;
    Ok(xor_seeds(share, &theirs))
}

pub fn xor_seeds(a: &Seed, b: &Seed) -> Seed {
    let mut out = *a;
    for (o, x) in out.iter_mut().zip(b) {
        *o ^= x;
    }
    out
}

/// Symmetric exchange of one message; party 0 sends first.
pub fn exchange(
    link: &mut Endpoint,
    party: usize,
    t: MsgType,
    payload: Vec<u8>,
) -> Result<Vec<u8>, TransportError> {
    if party == 0 {
        link.send(t, payload)?;
        link.recv(t)
    } else {
        let got = link.recv(t)?;
        link.send(t, payload)?;
        Ok(got)
    }
}

