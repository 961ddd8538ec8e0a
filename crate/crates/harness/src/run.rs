//! Subcommand execution.

use std::fs;
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use rand::rngs::OsRng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use sac_core::circuit::{parse_circuit, random_circuit, CircuitError, LayeredCircuit, Owner};
use sac_core::combined::{run_party, run_protocol_mem, CombinedError, PartyConfig, PartyOutput, PartySeeds, PhaseTimes};
use sac_core::crypto::{derive_rng, derive_seed, random_seed, seed_from_u64, ObliviousTransfer};
use sac_core::field::{random_vec, PrimeField};
use sac_core::inner::{serve_dealer, DealerClient, DealerHandle, IdealDealerSource, OleSource};
use sac_core::nn::{compile_to_circuit, infer_clear, load_features, load_model, CompiledModel, FeatureTable, NnError};
use sac_core::outer::SessionSeeds;
use sac_core::transport::{tcp_connect, tcp_listen_one, ByteLedger, Endpoint, TransportError};
use sac_core::{Goldilocks, Toy257};

use crate::bench::{batch_circuit, bench, BenchError};
use crate::cli::{Backend, Command, ConfigError, FieldChoice, Role, Settings};
use crate::estimate::estimate_communication;
use crate::experiment::{run_adversary_experiment, ExperimentError, ExperimentSpec};
use crate::params::{select_params, SelectError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("protocol aborted: {0}")]
    Protocol(#[from] CombinedError),
    #[error("{0}")]
    Usage(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Runs `cmd` and returns its report, if it has one.
pub fn execute(cmd: Command, s: &Settings) -> Result<Option<String>, CliError> {
    match s.field {
        FieldChoice::Goldilocks => execute_in::<Goldilocks>(cmd, s),
        FieldChoice::Toy257 => execute_in::<Toy257>(cmd, s),
    }
}

fn execute_in<F: PrimeField>(cmd: Command, s: &Settings) -> Result<Option<String>, CliError> {
    let report = match cmd {
        Command::Params => {
            let p = select_params(s.n, s.s, F::MODULUS)?;
            let text = toml::to_string(&p).map_err(|e| usage(e.to_string()))?;
            return Ok(Some(format!(
                "# soundness bound 2^{:.2} over {}\n{text}",
                p.soundness_bound_log2(F::MODULUS),
                F::NAME
            )));
        }
        Command::Estimate => {
            let w = workload::<F>(s)?;
            let c = batch_circuit(&w.circuit, s.batch);
            to_json(&estimate_communication(&s.params, &c, s.mac, F::MODULUS)?)
        }
        Command::Experiment => {
            let w = workload::<F>(s)?;
            let spec = ExperimentSpec {
                mode: s.mode.into(),
                params: s.params,
                attack: s.adversary.clone(),
                mac: s.mac,
                seed: s.seed.unwrap_or(0),
            };
            let r = run_adversary_experiment::<F>(&spec, &w.circuit, s.trials)?;
            json!({ "spec": spec, "report": r, "abort_rate": r.abort_rate() })
        }
        Command::Bench => {
            let w = workload::<F>(s)?;
            to_json(&bench::<F>(&w.circuit, s.batch, &config(s), s.seed.unwrap_or(0))?)
        }
        Command::Run => match s.role {
            Role::Dealer => {
                let listener = TcpListener::bind(&s.listen).map_err(|source| CliError::Io {
                    path: s.listen.clone().into(),
                    source,
                })?;
                eprintln!("dealer listening on {}", s.listen);
                let seed = match s.seed {
                    Some(v) => seed_from_u64(v),
                    None => random_seed(&mut OsRng),
                };
                serve_dealer::<F>(listener, seed, s.max_pairs)?;
                return Ok(None);
            }
            Role::StandaloneSim => simulate::<F>(s)?,
            Role::Party0 => party::<F>(0, s)?,
            Role::Party1 => party::<F>(1, s)?,
        },
    };
    Ok(Some(serde_json::to_string_pretty(&report).expect("reports serialize")))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn config(s: &Settings) -> PartyConfig {
    let mut c = PartyConfig::new(s.params);
    c.mac = s.mac;
    c
}

/// What a run evaluates.
struct Workload {
    circuit: LayeredCircuit,
    model: Option<CompiledModel>,
}

fn workload<F: PrimeField>(s: &Settings) -> Result<Workload, CliError> {
    match (&s.circuit, &s.model) {
        (Some(_), Some(_)) => Err(usage("give either --circuit or --model, not both")),
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(Workload {
                circuit: parse_circuit(&text)?,
                model: None,
            })
        }
        (None, Some(path)) => {
            let compiled = compile_to_circuit::<F>(&load_model(path)?, s.params.w)?;
            Ok(Workload {
                circuit: compiled.circuit.clone(),
                model: Some(compiled),
            })
        }
        (None, None) => {
            let mut rng = ChaCha20Rng::seed_from_u64(s.seed.unwrap_or(0));
            Ok(Workload {
                circuit: random_circuit(&mut rng, s.params.w, 3, 2, 2),
                model: None,
            })
        }
    }
}

/// Feature tables for the parties in `parties`.
fn features(s: &Settings, compiled: &CompiledModel, parties: &[usize]) -> Result<Vec<FeatureTable>, CliError> {
    let path = |i: usize| -> Result<&PathBuf, CliError> {
        match s.features.as_slice() {
            [one] => Ok(one),
            many if many.len() > i => Ok(&many[i]),
            _ => Err(usage("--features needs one CSV, or one per party")),
        }
    };
    parties
        .iter()
        .enumerate()
        .map(|(i, &p)| Ok(load_features(path(i)?, &compiled.model, p)?))
        .collect()
}

/// Seeded private inputs of `party` for circuit mode.
fn circuit_inputs<F: PrimeField>(c: &LayeredCircuit, seed: u64, party: usize, run: usize) -> Vec<F> {
    let owner = if party == 0 { Owner::Client0 } else { Owner::Client1 };
    let mut rng = derive_rng(&seed_from_u64(seed), "inputs", &[party as u64, run as u64]);
    random_vec(&mut rng, c.input_count(owner))
}

fn public_inputs<F: PrimeField>(c: &LayeredCircuit, seed: u64, run: usize) -> Vec<F> {
    let mut rng = derive_rng(&seed_from_u64(seed), "public", &[run as u64]);
    random_vec(&mut rng, c.input_count(Owner::Public))
}

/// Inputs of `party` for each run, `batch` instances per run.
fn batches<F: PrimeField>(
    w: &Workload,
    tables: Option<&FeatureTable>,
    party: usize,
    batch: usize,
    seed: u64,
) -> Result<Vec<Vec<F>>, CliError> {
    match (&w.model, tables) {
        (Some(m), Some(t)) => t
            .rows
            .chunks(batch)
            .map(|rows| {
                let mut v = Vec::new();
                for r in rows {
                    v.extend(m.party_inputs::<F>(party, r)?);
                }
                Ok(v)
            })
            .collect(),
        _ => {
            let c = batch_circuit(&w.circuit, batch);
            Ok(vec![circuit_inputs(&c, seed, party, 0)])
        }
    }
}

#[derive(Serialize)]
struct RowResult {
    row: usize,
    class: usize,
    logits: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clear_class: Option<usize>,
}

#[derive(Default)]
struct Totals {
    times: PhaseTimes,
    ledger: ByteLedger,
    ole: u64,
    runs: usize,
}

impl Totals {
    fn add<F>(&mut self, out: &PartyOutput<F>) {
        self.times.setup_s += out.times.setup_s;
        self.times.offline_s += out.times.offline_s;
        self.times.online_s += out.times.online_s;
        self.ole += out.ole_sent;
        self.runs += 1;
    }

    fn json(&self) -> Value {
        json!({
            "runs": self.runs,
            "times": self.times,
            "bytes_by_phase": self.ledger.by_phase,
            "bytes_by_type": self.ledger.by_type,
            "total_bytes": self.ledger.total(),
            "ole_invocations": self.ole,
        })
    }
}

fn decode_rows<F: PrimeField>(
    m: &CompiledModel,
    outputs: &[F],
    first: usize,
    labels: Option<&Vec<usize>>,
    clear: Option<&[Vec<Vec<i64>>; 2]>,
) -> Result<Vec<RowResult>, CliError> {
    let per = m.circuit.outputs.len() * m.circuit.w;
    outputs
        .chunks(per)
        .enumerate()
        .map(|(i, o)| {
            let r = m.decode(o);
            let clear_class = match clear {
                Some([a, b]) => Some(infer_clear(&m.model, &m.model.merge_features(&a[i], &b[i])?)?.class),
                None => None,
            };
            Ok(RowResult {
                row: first + i,
                class: r.class,
                logits: r.logits,
                label: labels.map(|l| l[first + i]),
                clear_class,
            })
        })
        .collect()
}

fn simulate<F: PrimeField>(s: &Settings) -> Result<Value, CliError> {
    let w = workload::<F>(s)?;
    let seed = s.seed.unwrap_or(0);
    let cfg = config(s);
    let mut totals = Totals::default();
    let tables = match &w.model {
        Some(m) => Some(features(s, m, &[0, 1])?),
        None => None,
    };
    let xs = batches::<F>(&w, tables.as_ref().map(|t| &t[0]), 0, s.batch, seed)?;
    let ys = batches::<F>(&w, tables.as_ref().map(|t| &t[1]), 1, s.batch, seed)?;
    if xs.len() != ys.len() {
        return Err(usage("the parties' feature files have different row counts"));
    }
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
        let copies = match &tables {
            Some(t) => t[0].rows.chunks(s.batch).nth(i).map_or(0, <[_]>::len),
            None => s.batch,
        };
        let c = batch_circuit(&w.circuit, copies);
        let public = public_inputs::<F>(&c, seed, i);
        let run = run_protocol_mem(&c, x, y, &public, &cfg, seed.wrapping_add(i as u64), &s.adversary);
        let a = run.party0?;
        let b = run.party1?;
        totals.add(&a);
        totals.ole += b.ole_sent;
        totals.ledger.merge(&a.ledger);
        totals.ledger.merge(&b.ledger);
        match (&w.model, &tables) {
            (Some(m), Some(t)) => {
                let first = i * s.batch;
                let clear = [
                    t[0].rows[first..first + copies].to_vec(),
                    t[1].rows[first..first + copies].to_vec(),
                ];
                rows.extend(decode_rows(m, &a.outputs, first, t[0].labels.as_ref(), Some(&clear))?);
            }
            _ => {
                let want = c.eval_with_public(x, y, &public)?;
                if a.outputs != want {
                    return Err(usage("outputs differ from the plaintext evaluation"));
                }
                outputs = a.outputs.iter().map(|v| v.to_canonical()).collect();
            }
        }
    }
    let mut report = totals.json();
    if w.model.is_some() {
        let agree = rows.iter().filter(|r| r.clear_class == Some(r.class)).count();
        report["clear_agreement"] = json!(agree as f64 / rows.len().max(1) as f64);
        accuracy(&mut report, &rows);
        report["rows"] = to_json(&rows);
    } else {
        report["outputs"] = json!(outputs);
    }
    Ok(report)
}

fn accuracy(report: &mut Value, rows: &[RowResult]) {
    let labelled: Vec<_> = rows.iter().filter_map(|r| r.label.map(|l| l == r.class)).collect();
    if !labelled.is_empty() {
        let hits = labelled.iter().filter(|&&h| h).count();
        report["accuracy"] = json!(hits as f64 / labelled.len() as f64);
    }
}

fn party<F: PrimeField>(me: usize, s: &Settings) -> Result<Value, CliError> {
    let w = workload::<F>(s)?;
    let table = match &w.model {
        Some(m) => Some(features(s, m, &[me])?.remove(0)),
        None => None,
    };
    let seed = s.seed;
    let inputs = batches::<F>(&w, table.as_ref(), me, s.batch, seed.unwrap_or(0))?;

    let handle = if s.ole_backend == Backend::Dealer || s.ot_backend == Backend::Dealer {
        Some(DealerHandle::<F>::new(DealerClient::connect(s.dealer.as_str(), s.session, me)?))
    } else {
        None
    };
    let mut ot: Box<dyn ObliviousTransfer> = match (&handle, s.ot_backend) {
        (Some(h), Backend::Dealer) => Box::new(h.clone()),
        _ => return Err(usage("the ideal OT only exists in-process; use --ot-backend dealer")),
    };
    let mut ole: Box<dyn OleSource<F>> = match (&handle, s.ole_backend) {
        (Some(h), Backend::Dealer) => Box::new(h.clone()),
        _ => {
            let v = seed.ok_or_else(|| usage("--ole-backend ideal needs a --seed shared by both parties"))?;
            Box::new(IdealDealerSource::new(&derive_seed(&seed_from_u64(v), "dealer", &[]), me))
        }
    };

    let mut link = if me == 0 {
        let listener = TcpListener::bind(&s.listen).map_err(|source| CliError::Io {
            path: s.listen.clone().into(),
            source,
        })?;
        eprintln!("party 0 listening on {}", s.listen);
        Endpoint::new(Box::new(tcp_listen_one(&listener)?), s.session)
    } else {
        Endpoint::new(Box::new(tcp_connect(s.peer.as_str(), Duration::from_secs(30))?), s.session)
    };
    link.set_timeout(Some(Duration::from_secs(300)));

    let mut cfg = config(s);
    if me == 1 {
        cfg.attack = s.adversary.clone();
    }
    let mut totals = Totals::default();
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for (i, own) in inputs.iter().enumerate() {
        let copies = match &table {
            Some(t) => t.rows.chunks(s.batch).nth(i).map_or(0, <[_]>::len),
            None => s.batch,
        };
        let c = batch_circuit(&w.circuit, copies);
        let public = public_inputs::<F>(&c, seed.unwrap_or(0), i);
        let seeds = match seed {
            Some(v) => {
                let v = v.wrapping_add(i as u64);
                let base = seed_from_u64(v);
                PartySeeds::from_session(&SessionSeeds::from_u64(v), me, derive_seed(&base, "party-rng", &[me as u64]))
            }
            None => PartySeeds {
                client: random_seed(&mut OsRng),
                server: random_seed(&mut OsRng),
                rng: random_seed(&mut OsRng),
            },
        };
        let out = run_party(me, &c, own, &public, &seeds, &cfg, &mut link, ot.as_mut(), ole.as_mut())?;
        totals.add(&out);
        match (&w.model, &table) {
            (Some(m), Some(t)) => rows.extend(decode_rows(m, &out.outputs, i * s.batch, t.labels.as_ref(), None)?),
            _ => outputs = out.outputs.iter().map(|v| v.to_canonical()).collect(),
        }
    }
    totals.ledger = link.ledger().clone();
    let mut report = totals.json();
    report["party"] = json!(me);
    if w.model.is_some() {
        accuracy(&mut report, &rows);
        report["rows"] = to_json(&rows);
    } else {
        report["outputs"] = json!(outputs);
    }
    Ok(report)
}
