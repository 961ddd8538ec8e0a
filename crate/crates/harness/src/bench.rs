//! Batched benchmarks over the in-memory link.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use sac_core::circuit::{BlockRef, CircuitError, Layer, LayeredCircuit, Owner, Source};
use sac_core::combined::{run_protocol_mem, Attack, CombinedError, PartyConfig, PhaseTimes};
use sac_core::field::{random_vec, PrimeField};
use sac_core::transport::{MsgType, Phase, TypeCount};

use crate::estimate::{estimate_communication, reconcile};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("batch size must be at least 1")]
    EmptyBatch,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("party {party} aborted: {source}")]
    Aborted { party: usize, source: CombinedError },
    #[error("outputs differ from the plaintext evaluation")]
    WrongOutputs,
}

/// `copies` independent instances of `c` side by side. Instance `i` owns
/// input blocks `i*I..(i+1)*I` and blocks `i*m..(i+1)*m` of every layer, so
/// flat inputs and outputs are the per-instance vectors concatenated.
pub fn batch_circuit(c: &LayeredCircuit, copies: usize) -> LayeredCircuit {
    let ib = c.inputs.len();
    let shift = |src: Source, i: usize| match src {
        Source::Input { block, slot } => Source::Input { block: block + i * ib, slot },
        Source::Out { layer, block, slot } => Source::Out {
            layer,
            block: block + i * c.layers[layer].block_count(),
            slot,
        },
        Source::Zero => Source::Zero,
    };
    let side = |rows: &Vec<Vec<Source>>| -> Vec<Vec<Source>> {
        (0..copies)
            .flat_map(|i| rows.iter().map(move |r| r.iter().map(|&s| shift(s, i)).collect()))
            .collect()
    };
    LayeredCircuit {
        w: c.w,
        inputs: (0..copies).flat_map(|_| c.inputs.iter().cloned()).collect(),
        layers: c
            .layers
            .iter()
            .map(|l| Layer {
                op: l.op,
                left: side(&l.left),
                right: side(&l.right),
            })
            .collect(),
        outputs: (0..copies)
            .flat_map(|i| {
                c.outputs.iter().map(move |r| match *r {
                    BlockRef::Input(b) => BlockRef::Input(b + i * ib),
                    BlockRef::Out { layer, block } => BlockRef::Out {
                        layer,
                        block: block + i * c.layers[layer].block_count(),
                    },
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMatch {
    /// Per party and message type, measured minus estimated bytes.
    pub payload_residual: [i64; 2],
    pub framing_residual: [i64; 2],
    pub ole_estimated: u64,
}

impl EstimateMatch {
    pub fn exact(&self) -> bool {
        self.payload_residual == [0, 0] && self.framing_residual == [0, 0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub batch: usize,
    pub n: usize,
    pub w: usize,
    pub depth: usize,
    pub mac: bool,
    /// Party 0's wall-clock phase times.
    pub times: PhaseTimes,
    /// Bytes sent by both parties, framing included.
    pub bytes_by_phase: BTreeMap<Phase, u64>,
    pub bytes_by_type: BTreeMap<MsgType, TypeCount>,
    pub total_bytes: u64,
    pub ole_invocations: u64,
    pub per_instance_bytes: f64,
    pub per_instance_online_s: f64,
    pub estimate: EstimateMatch,
}

/// Runs `batch` copies of `circuit` once with seeded random inputs and
/// checks the outputs against the plaintext evaluation.
pub fn bench<F: PrimeField>(
    circuit: &LayeredCircuit,
    batch: usize,
    config: &PartyConfig,
    seed: u64,
) -> Result<BenchReport, BenchError> {
    if batch == 0 {
        return Err(BenchError::EmptyBatch);
    }
    let c = batch_circuit(circuit, batch);
    c.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x: Vec<F> = random_vec(&mut rng, c.input_count(Owner::Client0));
    let y: Vec<F> = random_vec(&mut rng, c.input_count(Owner::Client1));
    let public: Vec<F> = random_vec(&mut rng, c.input_count(Owner::Public));
    let want = c.eval_with_public(&x, &y, &public)?;
    let run = run_protocol_mem(&c, &x, &y, &public, config, seed, &Attack::None);
    let a = run.party0.map_err(|source| BenchError::Aborted { party: 0, source })?;
    let b = run.party1.map_err(|source| BenchError::Aborted { party: 1, source })?;
    if a.outputs != want || b.outputs != want {
        return Err(BenchError::WrongOutputs);
    }
    let est = estimate_communication(&config.params, &c, config.mac, F::MODULUS)?;
    let mut payload_residual = [0i64; 2];
    let mut framing_residual = [0i64; 2];
    for (i, ledger) in [&a.ledger, &b.ledger].into_iter().enumerate() {
        for r in reconcile(&est.parties[i], ledger) {
            payload_residual[i] += r.payload_residual().abs();
            framing_residual[i] += r.framing_residual().abs();
        }
    }
    let mut ledger = a.ledger.clone();
    ledger.merge(&b.ledger);
    let total = ledger.total();
    Ok(BenchReport {
        batch,
        n: config.params.n,
        w: config.params.w,
        depth: circuit.depth(),
        mac: config.mac,
        times: a.times,
        bytes_by_phase: ledger.by_phase.clone(),
        bytes_by_type: ledger.by_type.clone(),
        total_bytes: total,
        ole_invocations: a.ole_sent + b.ole_sent,
        per_instance_bytes: total as f64 / batch as f64,
        per_instance_online_s: a.times.online_s / batch as f64,
        estimate: EstimateMatch {
            payload_residual,
            framing_residual,
            ole_estimated: est.ole_invocations,
        },
    })
}
