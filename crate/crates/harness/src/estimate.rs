//! Communication estimates.
//!
//! `estimate_communication` predicts every frame the two parties exchange
//! over their link under ideal OT and OLE backends, which put nothing on the
//! link. Predictions are itemised by protocol step and message type, so a
//! measured ledger can be reconciled line by line. `asymptotic_terms` gives the
//! asymptotic cost formula in bits, for comparison only.

use std::collections::BTreeMap;

use sac_core::circuit::{CircuitError, LayeredCircuit, Op, Owner};
use sac_core::combined::augment_with_mac;
use sac_core::crypto::TAG_BYTES;
use sac_core::field::ELEMENT_BYTES;
use sac_core::outer::{layer_sources, ProtocolParams};
use sac_core::transport::{ByteLedger, MsgType, TypeCount, FRAME_OVERHEAD};
use serde::{Deserialize, Serialize};

const SEED_BYTES: u64 = 32;
const COMMIT_BYTES: u64 = 32;
const OPENING_BYTES: u64 = 32 + SEED_BYTES;
const VERDICT_BYTES: u64 = 1;

/// One protocol step's traffic from one party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub step: String,
    pub msg_type: MsgType,
    pub frames: u64,
    pub payload_bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyEstimate {
    pub terms: Vec<Term>,
}

impl PartyEstimate {
    fn push(&mut self, step: impl Into<String>, msg_type: MsgType, frames: u64, payload_bytes: u64) {
        self.terms.push(Term {
            step: step.into(),
            msg_type,
            frames,
            payload_bytes,
        });
    }

    pub fn by_type(&self) -> BTreeMap<MsgType, TypeCount> {
        let mut out: BTreeMap<MsgType, TypeCount> = BTreeMap::new();
        for t in &self.terms {
            let c = out.entry(t.msg_type).or_default();
            c.frames += t.frames;
            c.payload_bytes += t.payload_bytes;
        }
        out
    }

    pub fn payload_bytes(&self) -> u64 {
        self.terms.iter().map(|t| t.payload_bytes).sum()
    }

    pub fn framing_bytes(&self) -> u64 {
        self.terms.iter().map(|t| t.frames).sum::<u64>() * FRAME_OVERHEAD as u64
    }

    pub fn total(&self) -> u64 {
        self.payload_bytes() + self.framing_bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommEstimate {
    pub parties: [PartyEstimate; 2],
    /// OLE correlations consumed, both directions.
    pub ole_invocations: u64,
    pub asymptotic: AsymptoticTerms,
}

/// One line of a reconciliation between an estimate and a measured ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub msg_type: MsgType,
    pub estimated: TypeCount,
    pub measured: TypeCount,
}

impl Reconciliation {
    pub fn payload_residual(&self) -> i64 {
        self.measured.payload_bytes as i64 - self.estimated.payload_bytes as i64
    }

    pub fn framing_residual(&self) -> i64 {
        (self.measured.frames as i64 - self.estimated.frames as i64) * FRAME_OVERHEAD as i64
    }
}

/// Lines up the estimate for `party` with its sent-frame ledger.
pub fn reconcile(estimate: &PartyEstimate, measured: &ByteLedger) -> Vec<Reconciliation> {
    let est = estimate.by_type();
    let mut types: Vec<MsgType> = est.keys().copied().collect();
    types.extend(measured.by_type.keys().copied().filter(|t| !est.contains_key(t)));
    types.sort();
    types
        .into_iter()
        .map(|t| Reconciliation {
            msg_type: t,
            estimated: est.get(&t).copied().unwrap_or_default(),
            measured: measured.get(t),
        })
        .collect()
}

/// The cost formula in bits: watchlist setup `2 CC_OT`, passive
/// multiplications `n d CC_rho`, layer outputs `d n log|F|`, coin tossing
/// `3 kappa`, degree test `2 sigma (t+e+w) log|F|` and permutation plus
/// equality tests `4 sigma (t+e+w) log|F|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTerms {
    pub setup_bits: f64,
    pub passive_bits: f64,
    pub layer_output_bits: f64,
    pub coin_bits: f64,
    pub degree_test_bits: f64,
    pub perm_equality_bits: f64,
}

pub fn asymptotic_terms(params: &ProtocolParams, depth: usize, log_field: f64, cc_ot_bits: f64, cc_rho_bits: f64) -> AsymptoticTerms {
    let (n, d) = (params.n as f64, depth as f64);
    let tew = (params.t + params.e + params.w) as f64;
    let sigma = params.sigma as f64;
    AsymptoticTerms {
        setup_bits: 2.0 * cc_ot_bits,
        passive_bits: n * d * cc_rho_bits,
        layer_output_bits: d * n * log_field,
        coin_bits: 3.0 * params.kappa as f64,
        degree_test_bits: 2.0 * sigma * tew * log_field,
        perm_equality_bits: 4.0 * sigma * tew * log_field,
    }
}

/// Exact link traffic of one run of `circuit`; `mac` selects the flag
/// augmentation. `modulus` only feeds the asymptotic terms; elements always
/// travel as 8 bytes.
pub fn estimate_communication(
    params: &ProtocolParams,
    circuit: &LayeredCircuit,
    mac: bool,
    modulus: u64,
) -> Result<CommEstimate, CircuitError> {
    circuit.validate()?;
    let (exec, coefficients) = if mac {
        let mc = augment_with_mac(circuit)?;
        (mc.circuit, mc.coefficients)
    } else {
        (circuit.clone(), 0)
    };
    let n = params.n as u64;
    let el = ELEMENT_BYTES as u64;
    let sealed = |plain: u64| n * (plain + TAG_BYTES as u64);
    let mut parties = [PartyEstimate::default(), PartyEstimate::default()];
    for (me, est) in parties.iter_mut().enumerate() {
        let owner = if me == 0 { Owner::Client0 } else { Owner::Client1 };
        let own_blocks = exec.inputs.iter().filter(|b| b.owner == owner).count() as u64;
        est.push("setup: tape seeds", MsgType::WatchlistCiphertext, 1, sealed(SEED_BYTES));
        est.push("input shares", MsgType::InputShare, 1, own_blocks * n * el);
        est.push("input encodings", MsgType::WatchlistCiphertext, 1, sealed(own_blocks * el));
        if coefficients > 0 {
            est.push("flag coin commit", MsgType::CoinCommit, 1, COMMIT_BYTES);
            est.push("flag coin open", MsgType::CoinOpen, 1, OPENING_BYTES);
        }
        for (j, layer) in exec.layers.iter().enumerate() {
            let m = layer.block_count() as u64;
            let sources = layer_sources(&exec, j).len() as u64;
            est.push(format!("layer {j}: rearrangement split"), MsgType::Emulation, 1, sources * n * el);
            est.push(format!("layer {j}: rearranged blocks"), MsgType::WatchlistCiphertext, 1, sealed(2 * m * el));
            if layer.op == Op::Mul {
                est.push(format!("layer {j}: product deltas"), MsgType::Emulation, 1, n * m * el);
                est.push(format!("layer {j}: product replies"), MsgType::Emulation, 1, 2 * n * m * el);
                est.push(format!("layer {j}: reduction split"), MsgType::Emulation, 1, m * n * el);
                est.push(format!("layer {j}: reduced blocks"), MsgType::WatchlistCiphertext, 1, sealed(m * el));
            }
        }
        let reps = 3 * params.sigma as u64;
        est.push("tests: blinding rows", MsgType::WatchlistCiphertext, reps, reps * sealed(el));
        est.push("tests: coin commits", MsgType::CoinCommit, reps, reps * COMMIT_BYTES);
        est.push("tests: coin openings", MsgType::CoinOpen, reps, reps * OPENING_BYTES);
        est.push("tests: broadcasts", MsgType::TestBroadcast, reps, reps * n * el);
        est.push("outputs", MsgType::Output, 1, exec.outputs.len() as u64 * n * el);
        est.push("verdict", MsgType::Abort, 1, VERDICT_BYTES);
    }
    let ole_invocations = 2 * n * exec.mul_blocks() as u64;
    let log_field = (modulus as f64).log2();
    Ok(CommEstimate {
        parties,
        ole_invocations,
        asymptotic: asymptotic_terms(params, exec.depth(), log_field, 0.0, 0.0),
    })
}
