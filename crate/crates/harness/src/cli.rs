//! Command line and configuration file.
//!
//! Every option can come from a flag, an `SAC_*` environment variable or a
//! TOML file given by `--config`, in that order of precedence, with the
//! built-in defaults last. File keys are the flag names without dashes in
//! front, e.g. `ole-backend = "dealer"`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use sac_core::combined::Attack;
use sac_core::outer::ProtocolParams;

use crate::experiment::ExperimentMode;
use crate::params::DEFAULT_S;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config file {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("params file {path}: {msg}")]
    Params { path: PathBuf, msg: String },
    #[error("bad adversary {0:?}: expected none, skip-blinding, bad-degree-reduction:L, additive-share:L:S1,S2:D, tamper-input-mac:E, watch-evade:S1,S2 or a JSON object")]
    Adversary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Listens for party 1.
    Party0,
    /// Connects to party 0.
    Party1,
    /// Serves OLE and OT correlations to both parties.
    Dealer,
    /// Both parties in one process over an in-memory link.
    StandaloneSim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldChoice {
    Goldilocks,
    Toy257,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Seeded in-process functionality. For tests only.
    Ideal,
    /// TCP dealer started with `--role dealer`.
    Dealer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Standalone,
    TwoParty,
}

impl From<ModeChoice> for ExperimentMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Standalone => ExperimentMode::Standalone,
            ModeChoice::TwoParty => ExperimentMode::TwoParty,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sac", version, about = "Two-party arithmetic MPC with active security")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run a party, the dealer, or both parties in one process.
    Run,
    /// Select parameters for `--n` servers at security `--s`.
    Params,
    /// Communication estimate for a circuit or model.
    Estimate,
    /// Monte Carlo adversary experiment.
    Experiment,
    /// Batched benchmark with the in-memory link.
    Bench,
}

/// Options shared by all subcommands. Every field is optional here so that
/// the config file can fill the gaps.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Opts {
    /// TOML file with defaults for any option below.
    #[arg(long, global = true, env = "SAC_CONFIG")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "SAC_ROLE")]
    pub role: Option<Role>,
    /// Address of party 0 (party 1 connects here).
    #[arg(long, global = true, env = "SAC_PEER")]
    pub peer: Option<String>,
    /// Listen address for party 0 or the dealer.
    #[arg(long, global = true, env = "SAC_LISTEN")]
    pub listen: Option<String>,
    /// Dealer address for the dealer backends.
    #[arg(long, global = true, env = "SAC_DEALER")]
    pub dealer: Option<String>,
    /// Protocol parameters, TOML or JSON.
    #[arg(long, global = true, env = "SAC_PARAMS_FILE")]
    pub params_file: Option<PathBuf>,
    /// Circuit in the text format.
    #[arg(long, global = true, env = "SAC_CIRCUIT")]
    pub circuit: Option<PathBuf>,
    /// Quantized model JSON.
    #[arg(long, global = true, env = "SAC_MODEL")]
    pub model: Option<PathBuf>,
    /// Feature CSVs. The simulator takes one file with every column or one
    /// file per party.
    #[arg(long, global = true, env = "SAC_FEATURES", value_delimiter = ',')]
    pub features: Option<Vec<PathBuf>>,
    #[arg(long, global = true, env = "SAC_SEED")]
    pub seed: Option<u64>,
    /// Deviation run by party 1 (or the corrupt client in standalone mode).
    #[arg(long, global = true, env = "SAC_ADVERSARY")]
    pub adversary: Option<String>,
    #[arg(long, global = true, env = "SAC_OLE_BACKEND")]
    pub ole_backend: Option<Backend>,
    #[arg(long, global = true, env = "SAC_OT_BACKEND")]
    pub ot_backend: Option<Backend>,
    /// Instances evaluated per protocol run.
    #[arg(long, global = true, env = "SAC_BATCH")]
    pub batch: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, env = "SAC_REPORT")]
    pub report: Option<PathBuf>,
    #[arg(long, global = true, env = "SAC_FIELD")]
    pub field: Option<FieldChoice>,
    /// Session id shared by both parties and used for dealer pairing.
    #[arg(long, global = true, env = "SAC_SESSION")]
    pub session: Option<u32>,
    /// Append the MAC flag to the circuit.
    #[arg(long, global = true, env = "SAC_MAC")]
    pub mac: Option<bool>,
    /// Number of servers for `params`.
    #[arg(long, global = true, env = "SAC_N")]
    pub n: Option<usize>,
    /// Statistical security for `params`.
    #[arg(long, global = true, env = "SAC_S")]
    pub s: Option<usize>,
    #[arg(long, global = true, env = "SAC_TRIALS")]
    pub trials: Option<u64>,
    #[arg(long, global = true, env = "SAC_MODE")]
    pub mode: Option<ModeChoice>,
    /// Dealer exits after serving this many party pairs.
    #[arg(long, global = true, env = "SAC_MAX_PAIRS")]
    pub max_pairs: Option<usize>,
}

macro_rules! fill {
    ($a:ident, $b:ident; $($f:ident),*) => { $( if $a.$f.is_none() { $a.$f = $b.$f.clone(); } )* };
}

impl Opts {
    /// Fills unset options from `file`.
    pub fn layer_over(mut self, file: &Opts) -> Opts {
        fill!(self, file; role, peer, listen, dealer, params_file, circuit, model, features, seed, adversary,
            ole_backend, ot_backend, batch, report, field, session, mac, n, s, trials, mode, max_pairs);
        self
    }

    /// Flags and environment layered over the config file, if any.
    pub fn resolve(self) -> Result<Settings, ConfigError> {
        let merged = match &self.config {
            Some(path) => {
                let text = read(path)?;
                let mut file: Opts = toml::from_str(&text).map_err(|source| ConfigError::Toml {
                    path: path.clone(),
                    source,
                })?;
                // relative paths in the file are relative to the file
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [&mut file.params_file, &mut file.circuit, &mut file.model, &mut file.report]
                    .into_iter()
                    .flatten()
                {
                    *p = base.join(&*p);
                }
                if let Some(fs) = file.features.as_mut() {
                    fs.iter_mut().for_each(|p| *p = base.join(&*p));
                }
                self.layer_over(&file)
            }
            None => self,
        };
        Settings::from_opts(merged)
    }
}

/// Fully resolved options.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub role: Role,
    pub peer: String,
    pub listen: String,
    pub dealer: String,
    pub params: ProtocolParams,
    pub circuit: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub features: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub adversary: Attack,
    pub ole_backend: Backend,
    pub ot_backend: Backend,
    pub batch: usize,
    pub report: Option<PathBuf>,
    pub field: FieldChoice,
    pub session: u32,
    pub mac: bool,
    pub n: usize,
    pub s: usize,
    pub trials: u64,
    pub mode: ModeChoice,
    pub max_pairs: Option<usize>,
}

impl Settings {
    fn from_opts(o: Opts) -> Result<Self, ConfigError> {
        let params = match &o.params_file {
            Some(p) => load_params(p)?,
            None => ProtocolParams::toy(),
        };
        Ok(Settings {
            role: o.role.unwrap_or(Role::StandaloneSim),
            peer: o.peer.unwrap_or_else(|| "127.0.0.1:7000".into()),
            listen: o.listen.unwrap_or_else(|| "127.0.0.1:7000".into()),
            dealer: o.dealer.unwrap_or_else(|| "127.0.0.1:7100".into()),
            params,
            circuit: o.circuit,
            model: o.model,
            features: o.features.unwrap_or_default(),
            seed: o.seed,
            adversary: parse_attack(o.adversary.as_deref().unwrap_or("none"))?,
            ole_backend: o.ole_backend.unwrap_or(Backend::Ideal),
            ot_backend: o.ot_backend.unwrap_or(Backend::Ideal),
            batch: o.batch.unwrap_or(1).max(1),
            report: o.report,
            field: o.field.unwrap_or(FieldChoice::Goldilocks),
            session: o.session.unwrap_or(0),
            mac: o.mac.unwrap_or(true),
            n: o.n.unwrap_or(512),
            s: o.s.unwrap_or(DEFAULT_S),
            trials: o.trials.unwrap_or(1000),
            mode: o.mode.unwrap_or(ModeChoice::Standalone),
            max_pairs: o.max_pairs,
        })
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parameters from a `.json` file, or TOML otherwise.
pub fn load_params(path: &Path) -> Result<ProtocolParams, ConfigError> {
    let text = read(path)?;
    let err = |msg: String| ConfigError::Params {
        path: path.to_path_buf(),
        msg,
    };
    let p: ProtocolParams = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| err(e.to_string()))?
    };
    p.validate().map_err(|e| err(e.to_string()))?;
    Ok(p)
}

/// Parses the short adversary syntax or a JSON object.
pub fn parse_attack(s: &str) -> Result<Attack, ConfigError> {
    let bad = || ConfigError::Adversary(s.to_string());
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|_| bad());
    }
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    let list = |x: &str| x.split(',').map(num).collect::<Result<Vec<_>, _>>();
    Ok(match parts.as_slice() {
        ["none"] => Attack::None,
        ["skip-blinding"] => Attack::SkipBlinding,
        ["bad-degree-reduction", l] => Attack::BadDegreeReduction { layer: num(l)? },
        ["additive-share", l, servers, d] => Attack::AdditiveShare {
            layer: num(l)?,
            servers: list(servers)?,
            delta: d.trim().parse().map_err(|_| bad())?,
        },
        ["tamper-input-mac", e] => Attack::TamperInputMac { element: num(e)? },
        ["watch-evade", servers] => Attack::WatchEvade { servers: list(servers)? },
        _ => return Err(bad()),
    })
}
