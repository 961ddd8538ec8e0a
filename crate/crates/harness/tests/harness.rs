use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sac_core::circuit::{random_circuit, Owner};
use sac_core::combined::{run_protocol_mem, Attack, PartyConfig};
use sac_core::field::{random_vec, PrimeField};
use sac_core::outer::ProtocolParams;
use sac_core::transport::FRAME_OVERHEAD;
use sac_core::{Goldilocks, Toy257};
use sac_harness::bench::{batch_circuit, bench};
use sac_harness::estimate::{estimate_communication, reconcile};
use sac_harness::experiment::{run_adversary_experiment, ExperimentMode, ExperimentSpec};

#[test]
fn estimate_reconciles_with_measured_ledgers() {
    let mut r = ChaCha20Rng::seed_from_u64(1);
    for mac in [false, true] {
        let mut config = PartyConfig::new(ProtocolParams::toy());
        config.mac = mac;
        for i in 0..6u64 {
            let depth = r.gen_range(0..=3);
            let blocks = r.gen_range(1..=3);
            let c = random_circuit(&mut r, config.params.w, depth, 3, blocks);
            let x: Vec<Goldilocks> = random_vec(&mut r, c.input_count(Owner::Client0));
            let y: Vec<Goldilocks> = random_vec(&mut r, c.input_count(Owner::Client1));
            let run = run_protocol_mem(&c, &x, &y, &[], &config, i, &Attack::None);
            let ole = run.ole_invocations().unwrap();
            let (a, b) = (run.party0.unwrap(), run.party1.unwrap());
            let est = estimate_communication(&config.params, &c, mac, Goldilocks::MODULUS).unwrap();
            assert_eq!(est.ole_invocations, ole);
            for (p, ledger) in [(0, &a.ledger), (1, &b.ledger)] {
                for line in reconcile(&est.parties[p], ledger) {
                    assert_eq!(line.estimated, line.measured, "party {p} {:?}", line.msg_type);
                }
                assert_eq!(est.parties[p].total(), ledger.total());
                let frames: u64 = ledger.by_type.values().map(|c| c.frames).sum();
                assert_eq!(est.parties[p].framing_bytes(), frames * FRAME_OVERHEAD as u64);
            }
        }
    }
}

#[test]
fn depth_zero_circuit_has_no_layer_terms() {
    let mut r = ChaCha20Rng::seed_from_u64(2);
    let c = random_circuit(&mut r, 2, 0, 1, 2);
    let est = estimate_communication(&ProtocolParams::toy(), &c, false, 257).unwrap();
    assert_eq!(est.ole_invocations, 0);
    assert!(est.parties[0].terms.iter().all(|t| !t.step.starts_with("layer")));
    assert_eq!(est.asymptotic.passive_bits, 0.0);
    assert_eq!(est.asymptotic.layer_output_bits, 0.0);
}

#[test]
fn estimate_is_linear_in_batch_size() {
    let mut r = ChaCha20Rng::seed_from_u64(3);
    let p = ProtocolParams::toy();
    let c = random_circuit(&mut r, p.w, 3, 2, 2);
    let size = |b: usize| {
        let e = estimate_communication(&p, &batch_circuit(&c, b), false, 257).unwrap();
        e.parties[0].payload_bytes() as i64
    };
    let (s1, s2, s3) = (size(1), size(2), size(3));
    assert_eq!(s3 - s2, s2 - s1);
    assert!(s2 > s1);
}

#[test]
fn batched_circuit_evaluates_each_copy() {
    let mut r = ChaCha20Rng::seed_from_u64(4);
    for _ in 0..10 {
        let (depth, blocks) = (r.gen_range(0..=4), r.gen_range(1..=3));
        let c = random_circuit(&mut r, 3, depth, 3, blocks);
        let copies = r.gen_range(1..=4);
        let bc = batch_circuit(&c, copies);
        bc.validate().unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut want = Vec::new();
        for _ in 0..copies {
            let x: Vec<Toy257> = random_vec(&mut r, c.input_count(Owner::Client0));
            let y: Vec<Toy257> = random_vec(&mut r, c.input_count(Owner::Client1));
            want.extend(c.eval_plain(&x, &y).unwrap());
            xs.extend(x);
            ys.extend(y);
        }
        assert_eq!(bc.eval_plain(&xs, &ys).unwrap(), want);
        assert_eq!(bc.mul_blocks(), copies * c.mul_blocks());
    }
}

#[test]
fn bench_report_matches_its_estimate() {
    let mut r = ChaCha20Rng::seed_from_u64(5);
    let config = PartyConfig::new(ProtocolParams::toy());
    let c = random_circuit(&mut r, config.params.w, 2, 2, 2);
    let rep = bench::<Goldilocks>(&c, 3, &config, 9).unwrap();
    assert!(rep.estimate.exact());
    assert_eq!(rep.ole_invocations, rep.estimate.ole_estimated);
    assert_eq!(rep.total_bytes, rep.bytes_by_phase.values().sum::<u64>());
    let json = serde_json::to_string(&rep).unwrap();
    assert!(json.contains("bytes_by_type"));
}

#[test]
fn experiment_counts_are_reproducible() {
    let mut r = ChaCha20Rng::seed_from_u64(6);
    let params = ProtocolParams::toy();
    let c = random_circuit(&mut r, params.w, 2, 2, 2);
    let spec = ExperimentSpec {
        mode: ExperimentMode::Standalone,
        params,
        attack: Attack::AdditiveShare { layer: 0, servers: vec![1, 2], delta: 3 },
        mac: false,
        seed: 11,
    };
    let a = run_adversary_experiment::<Toy257>(&spec, &c, 40).unwrap();
    let b = run_adversary_experiment::<Toy257>(&spec, &c, 40).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trials, 40);
    assert_eq!(a.silent_corruptions, 0);
    assert_eq!(a.aborts + a.correct_outputs, 40);
}

#[test]
fn experiment_rejects_unsupported_attacks() {
    let params = ProtocolParams::toy();
    let mut r = ChaCha20Rng::seed_from_u64(7);
    let c = random_circuit(&mut r, params.w, 1, 1, 2);
    let mut spec = ExperimentSpec {
        mode: ExperimentMode::Standalone,
        params,
        attack: Attack::WatchEvade { servers: vec![0] },
        mac: false,
        seed: 0,
    };
    assert!(run_adversary_experiment::<Toy257>(&spec, &c, 1).is_err());
    spec.attack = Attack::AdditiveShare { layer: 0, servers: vec![0, 1, 2], delta: 1 };
    assert!(run_adversary_experiment::<Toy257>(&spec, &c, 1).is_err());
}
