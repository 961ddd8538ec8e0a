//! Monte Carlo adversary experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use sac_core::circuit::{CircuitError, LayeredCircuit, Owner};
use sac_core::combined::{run_protocol_mem, Attack, PartyConfig};
use sac_core::crypto::{derive_seed, seed_from_u64};
use sac_core::field::{random_vec, PrimeField};
use sac_core::outer::{run_standalone, Deviation, OuterError, ProtocolParams, SessionSeeds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    /// Clients and servers simulated in one process, no watchlists.
    Standalone,
    /// Both parties over an in-memory link; the attack is run by party 1.
    TwoParty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: ExperimentMode,
    pub params: ProtocolParams,
    pub attack: Attack,
    /// MAC flag in two-party mode.
    pub mac: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trials: u64,
    pub aborts: u64,
    /// Aborts raised by a watchlist check.
    pub watchlist_aborts: u64,
    pub correct_outputs: u64,
    /// Wrong outputs that were accepted.
    pub silent_corruptions: u64,
}

impl ExperimentReport {
    pub fn abort_rate(&self) -> f64 {
        self.aborts as f64 / self.trials.max(1) as f64
    }

    fn merge(mut self, o: Self) -> Self {
        self.trials += o.trials;
        self.aborts += o.aborts;
        self.watchlist_aborts += o.watchlist_aborts;
        self.correct_outputs += o.correct_outputs;
        self.silent_corruptions += o.silent_corruptions;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("attack {0:?} has no standalone counterpart")]
    Unsupported(Attack),
    #[error("additive corruption of {got} servers exceeds e={e}")]
    TooManyServers { got: usize, e: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Outer(#[from] OuterError),
}

fn deviation(a: &Attack) -> Result<Deviation, ExperimentError> {
    Ok(match a {
        Attack::None => Deviation::None,
        Attack::AdditiveShare { layer, servers, delta } => Deviation::AdditiveShare {
            layer: *layer,
            servers: servers.clone(),
            delta: *delta,
        },
        Attack::BadDegreeReduction { layer } => Deviation::BadDegreeReduction { layer: *layer },
        Attack::SkipBlinding => Deviation::SkipBlinding,
        other => return Err(ExperimentError::Unsupported(other.clone())),
    })
}

fn trial_seed(seed: u64, i: u64) -> u64 {
    let s = derive_seed(&seed_from_u64(seed), "trial", &[i]);
    u64::from_le_bytes(s[..8].try_into().unwrap())
}

/// Runs `trials` independent seeded trials on `circuit` with fresh random
/// inputs, in parallel. Counts are independent of thread scheduling.
pub fn run_adversary_experiment<F: PrimeField>(
    spec: &ExperimentSpec,
    circuit: &LayeredCircuit,
    trials: u64,
) -> Result<ExperimentReport, ExperimentError> {
    circuit.validate()?;
    spec.params.validate().map_err(OuterError::from)?;
    if let Attack::AdditiveShare { servers, .. } = &spec.attack {
        if servers.len() > spec.params.e {
            return Err(ExperimentError::TooManyServers {
                got: servers.len(),
                e: spec.params.e,
            });
        }
    }
    let dev = match spec.mode {
        ExperimentMode::Standalone => Some(deviation(&spec.attack)?),
        ExperimentMode::TwoParty => None,
    };
    let mut config = PartyConfig::new(spec.params);
    config.mac = spec.mac;
    (0..trials)
        .into_par_iter()
        .map(|i| -> Result<ExperimentReport, ExperimentError> {
            let seed = trial_seed(spec.seed, i);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let x: Vec<F> = random_vec(&mut rng, circuit.input_count(Owner::Client0));
            let y: Vec<F> = random_vec(&mut rng, circuit.input_count(Owner::Client1));
            let public: Vec<F> = random_vec(&mut rng, circuit.input_count(Owner::Public));
            let want = circuit.eval_with_public(&x, &y, &public)?;
            let (accepted, watch): (Option<Vec<F>>, bool) = match &dev {
                Some(d) => {
                    let run = run_standalone(circuit, &spec.params, &x, &y, &public, &SessionSeeds::from_u64(seed), d)?;
                    (run.result.ok(), false)
                }
                None => {
                    let run = run_protocol_mem(circuit, &x, &y, &public, &config, seed, &spec.attack);
                    let watch = [&run.party0, &run.party1]
                        .iter()
                        .any(|r| r.as_ref().err().is_some_and(|e| e.is_watchlist()));
                    (if run.aborted() { None } else { run.outputs().map(<[F]>::to_vec) }, watch)
                }
            };
            let mut r = ExperimentReport {
                trials: 1,
                ..Default::default()
            };
            match accepted {
                None => {
                    r.aborts = 1;
                    r.watchlist_aborts = u64::from(watch);
                }
                Some(out) if out == want => r.correct_outputs = 1,
                Some(_) => r.silent_corruptions = 1,
            }
            Ok(r)
        })
        .try_reduce(ExperimentReport::default, |a, b| Ok(a.merge(b)))
}
