use std::fs;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Command as Proc, Stdio};
use std::thread;
use std::time::Duration;

use clap::Parser;
use sac_core::combined::Attack;
use sac_core::outer::ProtocolParams;
use sac_harness::cli::{parse_attack, Backend, Cli, Command, FieldChoice, Role};
use sac_harness::run::execute;
use serde_json::Value;

const SAC: &str = env!("CARGO_BIN_EXE_sac");

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn circuit() -> PathBuf {
    root().join("fixtures/circuits/inner_product.txt")
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn flags_override_env_over_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sac.toml");
    fs::write(&cfg, "seed = 1\nbatch = 4\nfield = \"toy257\"\ncircuit = \"c.txt\"\nole-backend = \"dealer\"\n").unwrap();
    // the only test in this binary touching SAC_* variables
    std::env::set_var("SAC_BATCH", "3");
    std::env::set_var("SAC_SEED", "2");
    let cli = Cli::try_parse_from(["sac", "run", "--config", cfg.to_str().unwrap(), "--seed", "9"]).unwrap();
    let s = cli.opts.resolve().unwrap();
    std::env::remove_var("SAC_BATCH");
    std::env::remove_var("SAC_SEED");
    assert_eq!(cli.command, Command::Run);
    assert_eq!(s.seed, Some(9));
    assert_eq!(s.batch, 3);
    assert_eq!(s.field, FieldChoice::Toy257);
    assert_eq!(s.circuit, Some(dir.path().join("c.txt")));
    assert_eq!(s.ole_backend, Backend::Dealer);
    assert_eq!(s.ot_backend, Backend::Ideal);
    assert_eq!(s.role, Role::StandaloneSim);
    assert_eq!(s.params, ProtocolParams::toy());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sac.toml");
    fs::write(&cfg, "sed = 1\n").unwrap();
    let cli = Cli::try_parse_from(["sac", "bench", "--config", cfg.to_str().unwrap()]).unwrap();
    assert!(cli.opts.resolve().is_err());
}

#[test]
fn adversary_syntax() {
    assert_eq!(parse_attack("none").unwrap(), Attack::None);
    assert_eq!(parse_attack("skip-blinding").unwrap(), Attack::SkipBlinding);
    assert_eq!(
        parse_attack("additive-share:1:0,4:7").unwrap(),
        Attack::AdditiveShare { layer: 1, servers: vec![0, 4], delta: 7 }
    );
    assert_eq!(parse_attack("watch-evade:3").unwrap(), Attack::WatchEvade { servers: vec![3] });
    assert_eq!(
        parse_attack(r#"{"strategy":"bad-degree-reduction","layer":2}"#).unwrap(),
        Attack::BadDegreeReduction { layer: 2 }
    );
    assert!(parse_attack("additive-share:1").is_err());
    assert!(parse_attack("fly").is_err());
}

#[test]
fn params_output_round_trips_through_a_params_file() {
    let cli = Cli::try_parse_from(["sac", "params", "--n", "64", "--s", "1"]).unwrap();
    let out = execute(cli.command, &cli.opts.resolve().unwrap()).unwrap().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    fs::write(&path, &out).unwrap();
    let p = sac_harness::cli::load_params(&path).unwrap();
    assert_eq!(p.n, 64);
    let cli = Cli::try_parse_from(["sac", "params", "--n", "64", "--s", "40"]).unwrap();
    let err = execute(cli.command, &cli.opts.resolve().unwrap()).unwrap_err();
    assert!(err.to_string().contains("soundness"), "{err}");
}

#[test]
fn estimate_and_bench_agree() {
    let c = circuit();
    let args = |cmd: &str| vec!["sac".to_string(), cmd.into(), "--circuit".into(), c.display().to_string(), "--batch".into(), "2".into()];
    let cli = Cli::try_parse_from(args("estimate")).unwrap();
    let est: Value = serde_json::from_str(&execute(cli.command, &cli.opts.resolve().unwrap()).unwrap().unwrap()).unwrap();
    let cli = Cli::try_parse_from(args("bench")).unwrap();
    let rep: Value = serde_json::from_str(&execute(cli.command, &cli.opts.resolve().unwrap()).unwrap().unwrap()).unwrap();
    assert_eq!(est["ole_invocations"], rep["ole_invocations"]);
    assert_eq!(rep["estimate"]["payload_residual"], serde_json::json!([0, 0]));
}

#[test]
fn experiment_subcommand_reports_counts() {
    let cli = Cli::try_parse_from([
        "sac",
        "experiment",
        "--trials",
        "20",
        "--adversary",
        "bad-degree-reduction:0",
        "--circuit",
        circuit().to_str().unwrap(),
        "--field",
        "toy257",
    ])
    .unwrap();
    let out: Value = serde_json::from_str(&execute(cli.command, &cli.opts.resolve().unwrap()).unwrap().unwrap()).unwrap();
    assert_eq!(out["report"]["trials"], 20);
    assert_eq!(out["report"]["silent_corruptions"], 0);
}

#[test]
fn simulator_runs_the_model_fixture() {
    // the first rows suffice here; the full fixture runs in the acceptance suite
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for p in ["party0.csv", "party1.csv"] {
        let text = fs::read_to_string(root().join("fixtures/nn").join(p)).unwrap();
        let head: Vec<&str> = text.lines().take(5).collect();
        let path = dir.path().join(p);
        fs::write(&path, head.join("\n")).unwrap();
        files.push(path);
    }
    let out = Proc::new(SAC)
        .args(["run", "--role", "standalone-sim", "--batch", "2", "--seed", "1", "--model"])
        .arg(root().join("fixtures/nn/model.json"))
        .arg("--features")
        .arg(&files[0])
        .arg("--features")
        .arg(&files[1])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["clear_agreement"], 1.0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn three_processes_over_tcp() {
    let (dp, pp) = (free_port(), free_port());
    let dealer_addr = format!("127.0.0.1:{dp}");
    let peer_addr = format!("127.0.0.1:{pp}");
    let mut dealer = Proc::new(SAC)
        .args(["run", "--role", "dealer", "--max-pairs", "2", "--seed", "5", "--listen", &dealer_addr])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    thread::sleep(Duration::from_millis(300));
    let party = |role: &str| {
        let mut c = Proc::new(SAC);
        c.args(["run", "--role", role, "--seed", "3", "--ot-backend", "dealer", "--ole-backend", "dealer"])
            .args(["--dealer", &dealer_addr, "--listen", &peer_addr, "--peer", &peer_addr])
            .arg("--circuit")
            .arg(circuit())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        c
    };
    let p0 = party("party0").spawn().unwrap();
    thread::sleep(Duration::from_millis(300));
    let p1 = party("party1").spawn().unwrap();
    let (o0, o1) = (p0.wait_with_output().unwrap(), p1.wait_with_output().unwrap());
    assert!(o0.status.success() && o1.status.success());
    assert!(dealer.wait().unwrap().success());
    let v0: Value = serde_json::from_slice(&o0.stdout).unwrap();
    let v1: Value = serde_json::from_slice(&o1.stdout).unwrap();
    assert_eq!(v0["outputs"], v1["outputs"]);

    let sim = Proc::new(SAC).args(["run", "--seed", "3", "--circuit"]).arg(circuit()).output().unwrap();
    let vs: Value = serde_json::from_slice(&sim.stdout).unwrap();
    assert_eq!(vs["outputs"], v0["outputs"]);
}

#[test]
fn ideal_ot_is_refused_across_processes() {
    let out = Proc::new(SAC)
        .args(["run", "--role", "party1", "--seed", "1", "--peer", "127.0.0.1:1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ot-backend dealer"));
}
