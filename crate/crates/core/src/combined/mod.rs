//! The two-party protocol: each party acts as one client of the outer
//! protocol and holds an additive share of every server's state.
//!
//! Linear server steps run locally on shares. Products run through batched
//! GMW over preprocessed OLEs. A server message to a client is revealed by
//! the other party sending its share. Every client-to-server message and
//! every server tape seed is also sent encrypted under a per-server key; a
//! party holding the key of server `j` (its watchlist) replays `j` in the
//! clear and aborts on any mismatch with the revealed messages.

mod mac;
mod party;

pub use mac::{augment_with_mac, mac_tag, run_f_prime, MacCircuit, MacError, MacInput};
pub use party::{masks_from_tapes, run_party};

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitError, LayeredCircuit};
use crate::crypto::{derive_seed, ideal_ot_pair, seed_from_u64, CryptoError, Seed};
use crate::field::PrimeField;
use crate::inner::{IdealDealerSource, InnerError};
use crate::outer::{OuterAbort, OuterError, ProtocolParams, ServerStates, SessionSeeds};
use crate::transport::{mem_endpoints, ByteLedger, TransportError};

/// Scripted misbehaviour of one party.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum Attack {
    #[default]
    None,
    /// Adds `delta` to this party's share of the listed servers' output
    /// blocks of `layer`.
    AdditiveShare { layer: usize, servers: Vec<usize>, delta: u64 },
    /// Adds an encoding of the unit block to this party's reduction message
    /// for block 0 of multiplication layer `layer`.
    BadDegreeReduction { layer: usize },
    /// All-zero blinding rows in every test.
    SkipBlinding,
    /// Changes input element `element` after its MAC was computed.
    TamperInputMac { element: usize },
    /// Emulates the listed servers with a randomness tape other than the one
    /// reported on the watchlist channel. Outputs stay correct.
    WatchEvade { servers: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinedError {
    #[error(transparent)]
    Setup(#[from] OuterError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error("outer protocol abort: {0}")]
    Outer(#[from] OuterAbort),
    #[error("server {server} misbehaved ({stage})")]
    Watchlist { server: usize, stage: String },
    #[error("watchlist message for server {0} failed authentication")]
    WatchlistTag(usize),
    #[error("MAC flag is nonzero")]
    FlagRaised,
    #[error("peer aborted: {0}")]
    PeerAborted(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Transport(TransportError),
    #[error(transparent)]
    Inner(InnerError),
    #[error(transparent)]
    Crypto(CryptoError),
}

impl From<TransportError> for CombinedError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::PeerAborted(m) => CombinedError::PeerAborted(m),
            e => CombinedError::Transport(e),
        }
    }
}

impl From<InnerError> for CombinedError {
    fn from(e: InnerError) -> Self {
        match e {
            InnerError::Transport(t) => t.into(),
            e => CombinedError::Inner(e),
        }
    }
}

impl From<CryptoError> for CombinedError {
    fn from(e: CryptoError) -> Self {
        match e {
            CryptoError::Transport(t) => t.into(),
            e => CombinedError::Crypto(e),
        }
    }
}

impl CombinedError {
    /// True when this party detected the problem itself and should tell the peer.
    pub fn is_local(&self) -> bool {
        !matches!(self, CombinedError::PeerAborted(_) | CombinedError::Transport(_))
    }

    /// True for detections by the watchlist replay.
    pub fn is_watchlist(&self) -> bool {
        matches!(self, CombinedError::Watchlist { .. } | CombinedError::WatchlistTag(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyConfig {
    pub params: ProtocolParams,
    /// Augment the circuit with the MAC flag.
    pub mac: bool,
    pub ole_batch: usize,
    pub attack: Attack,
}

impl PartyConfig {
    pub fn new(params: ProtocolParams) -> Self {
        PartyConfig {
            params,
            mac: true,
            ole_batch: 1024,
            attack: Attack::None,
        }
    }
}

/// Private seeds of one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartySeeds {
    /// Client-side randomness: encodings, blinding rows, coin shares.
    pub client: Seed,
    /// Master seed of this party's contribution to server tapes.
    pub server: Seed,
    /// Everything else: keys, watchlist choice, share masks.
    pub rng: Seed,
}

impl PartySeeds {
    pub fn from_session(s: &SessionSeeds, party: usize, rng: Seed) -> Self {
        PartySeeds {
            client: s.client[party],
            server: s.server[party],
            rng,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub setup_s: f64,
    pub offline_s: f64,
    pub online_s: f64,
}

#[derive(Debug, Clone)]
pub struct PartyOutput<F> {
    /// Outputs of the original circuit.
    pub outputs: Vec<F>,
    pub flag: F,
    /// Public inputs of the executed circuit, flag coefficients included.
    pub public: Vec<F>,
    /// The executed circuit (augmented when MACs are on).
    pub circuit: LayeredCircuit,
    /// This party's additive share of all server states.
    pub states: ServerStates<F>,
    pub broadcasts: Vec<Vec<F>>,
    /// Correlations consumed with this party as OLE sender.
    pub ole_sent: u64,
    pub watched: Vec<usize>,
    pub ledger: ByteLedger,
    pub times: PhaseTimes,
}

/// Result of one in-process run with both parties.
#[derive(Debug)]
pub struct JointRun<F> {
    pub party0: Result<PartyOutput<F>, CombinedError>,
    pub party1: Result<PartyOutput<F>, CombinedError>,
}

impl<F: PrimeField> JointRun<F> {
    /// Outputs if both parties accepted and agree.
    pub fn outputs(&self) -> Option<&[F]> {
        match (&self.party0, &self.party1) {
            (Ok(a), Ok(b)) if a.outputs == b.outputs => Some(&a.outputs),
            _ => None,
        }
    }

    /// Total OLE invocations, both directions.
    pub fn ole_invocations(&self) -> Option<u64> {
        match (&self.party0, &self.party1) {
            (Ok(a), Ok(b)) => Some(a.ole_sent + b.ole_sent),
            _ => None,
        }
    }

    pub fn aborted(&self) -> bool {
        self.party0.is_err() || self.party1.is_err()
    }
}

/// Runs both parties in threads over an in-memory link with the ideal OT
/// and a seeded ideal OLE dealer. `attack` is applied by party 1.
#[allow(clippy::too_many_arguments)]
pub fn run_protocol_mem<F: PrimeField>(
    circuit: &LayeredCircuit,
    x: &[F],
    y: &[F],
    public: &[F],
    config: &PartyConfig,
    seed: u64,
    attack: &Attack,
) -> JointRun<F> {
    let session = SessionSeeds::from_u64(seed);
    let base = seed_from_u64(seed);
    let dealer_seed = derive_seed(&base, "dealer", &[]);
    let (mut l0, mut l1) = mem_endpoints(seed as u32);
    l0.set_timeout(Some(Duration::from_secs(120)));
    l1.set_timeout(Some(Duration::from_secs(120)));
    let (mut ot0, mut ot1) = ideal_ot_pair();
    let seeds0 = PartySeeds::from_session(&session, 0, derive_seed(&base, "party-rng", &[0]));
    let seeds1 = PartySeeds::from_session(&session, 1, derive_seed(&base, "party-rng", &[1]));
    let config0 = config.clone();
    let mut config1 = config.clone();
    config1.attack = attack.clone();
    // each endpoint drops when its party returns, so a peer blocked in a
    // receive sees the closed link instead of waiting for the timeout
    thread::scope(|s| {
        let h1 = s.spawn(move || {
            let mut ole = IdealDealerSource::new(&dealer_seed, 1);
            run_party(1, circuit, y, public, &seeds1, &config1, &mut l1, &mut ot1, &mut ole)
        });
        let party0 = {
            let mut ole = IdealDealerSource::new(&dealer_seed, 0);
            run_party(0, circuit, x, public, &seeds0, &config0, &mut l0, &mut ot0, &mut ole)
        };
        drop(l0);
        drop(ot0);
        let party1 = h1.join().expect("party 1 thread panicked");
        JointRun { party0, party1 }
    })
}

