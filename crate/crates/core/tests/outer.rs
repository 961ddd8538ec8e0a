use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sac_core::circuit::{random_circuit, BlockRef, InputBlock, Layer, LayeredCircuit, Op, Owner, Source, TraceBlock};
use sac_core::field::{random_vec, PrimeField};
use sac_core::outer::*;
use sac_core::rscode::{degree_reduce_matrix, random_sum_zero_row, random_zero_block_row, CodeSpec};
use sac_core::{Goldilocks, Toy257};

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn toy_spec() -> CodeSpec<Toy257> {
    let p = ProtocolParams::toy();
    CodeSpec::new(p.n, p.k, p.w).unwrap()
}

fn rand_block<F: PrimeField>(r: &mut ChaCha20Rng, w: usize) -> Vec<F> {
    random_vec(r, w)
}

fn production() -> ProtocolParams {
    ProtocolParams {
        n: 512,
        w: 64,
        t: 32,
        e: 31,
        k: 128,
        sigma: 1,
        kappa: 128,
        s: 40,
    }
}

#[test]
fn params_validation() {
    production().validate().unwrap();
    ProtocolParams::toy().validate().unwrap();
    ProtocolParams::tiny().validate().unwrap();
    let mut p = production();
    p.e = 32;
    assert!(matches!(p.validate(), Err(ParamsError::PrivacyBound { .. })));
    let mut p = production();
    p.k = 96;
    assert!(matches!(p.validate(), Err(ParamsError::KNotPowerOfTwo(96))));
    let mut p = ProtocolParams::toy();
    p.n = 17;
    assert!(matches!(p.validate(), Err(ParamsError::TooFewServers { .. })));
    let p = ProtocolParams {
        n: 40,
        w: 1,
        t: 1,
        e: 8,
        k: 16,
        sigma: 1,
        kappa: 128,
        s: 1,
    };
    assert!(matches!(p.validate(), Err(ParamsError::ErrorBound { .. })));
}

#[test]
fn soundness_plug_in() {
    let mut p = ProtocolParams::tiny();
    p.e = 0;
    p.sigma = 1;
    assert_eq!(p.outer_soundness(2), 1.0);
}

fn big_pow(base: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * base)
}

#[test]
fn soundness_matches_exact_rational() {
    let p = production();
    let modulus = Goldilocks::MODULUS;
    let q = BigRational::from_integer(BigUint::from(modulus).into());
    let int = |v: usize| BigRational::from_integer(v.into());
    let exact = int(p.e + 2) / big_pow(&q, p.sigma)
        + big_pow(&(int(1) - int(p.e) / int(p.n)), p.t)
        + big_pow(&(int(3 * p.e + 2 * p.w + 2 * p.t) / int(p.n)), p.t);
    let exact = exact.to_f64().unwrap();
    let got = p.soundness_bound(modulus);
    assert!(((got - exact) / exact).abs() < 1e-9, "{got} vs {exact}");
    // the watchlist term dominates at these parameters
    assert!(got > 2f64.powi(-40));
    assert!(p.outer_soundness(modulus) < 2f64.powi(-40));
}

#[test]
fn soundness_monotone_in_sigma() {
    let mut p = ProtocolParams::toy();
    let mut last = f64::INFINITY;
    for sigma in 1..6 {
        p.sigma = sigma;
        let v = p.outer_soundness(257);
        assert!(v < last);
        last = v;
    }
}

#[test]
fn share_inputs_roundtrip_and_zero() {
    let spec = toy_spec();
    let mut r = rng(1);
    let blocks: Vec<Vec<Toy257>> = (0..4).map(|_| rand_block(&mut r, 2)).collect();
    let mut with_zero = blocks.clone();
    with_zero.push(vec![Toy257::zero(); 2]);
    let shares = share_inputs(&spec, &with_zero, &mut r).unwrap();
    for (b, cw) in with_zero.iter().zip(&shares) {
        // any k shares suffice
        let picked: Vec<(usize, Toy257)> = (0..spec.k()).map(|i| (2 * i + 1, cw[2 * i + 1])).collect();
        assert_eq!(&spec.decode_from(&picked).unwrap().secrets, b);
    }
}

#[test]
fn t_plus_e_shares_are_independent_of_the_secret() {
    // k=4 > t+e+w = 1+1+1; count every aux assignment
    let spec: CodeSpec<Toy257> = CodeSpec::new(9, 4, 1).unwrap();
    let (a, b) = (2usize, 7usize);
    let coeff = |secret: u64, aux: [u64; 3]| {
        let cw = spec
            .encode_with(&[Toy257::from_u64(secret)], &aux.map(Toy257::from_u64))
            .unwrap();
        (cw[a], cw[b])
    };
    let base_of = |secret| coeff(secret, [0, 0, 0]);
    let unit: Vec<(Toy257, Toy257)> = (0..3)
        .map(|i| {
            let mut aux = [0u64; 3];
            aux[i] = 1;
            let (x, y) = coeff(0, aux);
            (x, y)
        })
        .collect();
    for secret in [0u64, 1, 200] {
        let mut hist = vec![0u32; 257 * 257];
        let (bx, by) = base_of(secret);
        let mut x0 = bx;
        let mut y0 = by;
        for _ in 0..257 {
            let (mut x1, mut y1) = (x0, y0);
            for _ in 0..257 {
                let (mut x2, mut y2) = (x1, y1);
                for _ in 0..257 {
                    hist[(x2.to_canonical() * 257 + y2.to_canonical()) as usize] += 1;
                    x2 += unit[2].0;
                    y2 += unit[2].1;
                }
                x1 += unit[1].0;
                y1 += unit[1].1;
            }
            x0 += unit[0].0;
            y0 += unit[0].1;
        }
        assert!(hist.iter().all(|&c| c == 257), "secret {secret} skews the joint distribution");
    }
}

#[test]
fn linear_layers_decode_blockwise() {
    let spec = toy_spec();
    let mut r = rng(2);
    for _ in 0..20 {
        let (x, y): (Vec<Toy257>, Vec<Toy257>) = (rand_block(&mut r, 2), rand_block(&mut r, 2));
        let u = spec.encode(&x, &mut r).unwrap().shares;
        let v = spec.encode(&y, &mut r).unwrap().shares;
        let s = eval_layer_linear(Op::Add, &u, &v);
        let d = eval_layer_linear(Op::Sub, &u, &v);
        assert!(spec.is_codeword(&s, spec.k()));
        let want: Vec<Toy257> = x.iter().zip(&y).map(|(&a, &b)| a + b).collect();
        assert_eq!(spec.decode(&s).unwrap().secrets, want);
        let want: Vec<Toy257> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
        assert_eq!(spec.decode(&d).unwrap().secrets, want);
        let neg: Vec<Toy257> = u.iter().map(|&c| -c).collect();
        let zero = eval_layer_linear(Op::Add, &u, &neg);
        assert_eq!(spec.decode(&zero).unwrap().secrets, vec![Toy257::zero(); 2]);
    }
}

#[test]
fn product_lies_in_double_degree_code() {
    // k = w = 1: encodings are constant vectors
    let one: CodeSpec<Toy257> = CodeSpec::new(4, 1, 1).unwrap();
    let a = one.encode_deterministic(&[Toy257::from_u64(5)]).unwrap().shares;
    let b = one.encode_deterministic(&[Toy257::from_u64(9)]).unwrap().shares;
    assert_eq!(eval_layer_mul(&a, &b), vec![Toy257::from_u64(45); 4]);

    let spec = toy_spec();
    let mut r = rng(3);
    for _ in 0..20 {
        let (x, y): (Vec<Toy257>, Vec<Toy257>) = (rand_block(&mut r, 2), rand_block(&mut r, 2));
        let p = eval_layer_mul(&spec.encode(&x, &mut r).unwrap().shares, &spec.encode(&y, &mut r).unwrap().shares);
        assert!(spec.is_codeword(&p, 2 * spec.k()));
        let want: Vec<Toy257> = x.iter().zip(&y).map(|(&a, &b)| a * b).collect();
        assert_eq!(spec.decode_bound(&p, 2 * spec.k()).unwrap().secrets, want);
    }
}

#[test]
fn degree_reduce_keeps_the_product() {
    let spec = toy_spec();
    let a_mat = degree_reduce_matrix(&spec).unwrap();
    let mut r = rng(4);
    for _ in 0..20 {
        let (x, y): (Vec<Toy257>, Vec<Toy257>) = (rand_block(&mut r, 2), rand_block(&mut r, 2));
        let p = eval_layer_mul(&spec.encode(&x, &mut r).unwrap().shares, &spec.encode(&y, &mut r).unwrap().shares);
        let red = degree_reduce(&spec, &p, &mut r).unwrap();
        assert!(spec.is_codeword(&red, spec.k()));
        let want: Vec<Toy257> = x.iter().zip(&y).map(|(&a, &b)| a * b).collect();
        assert_eq!(spec.decode(&red).unwrap().secrets, want);

        let zero = vec![Toy257::zero(); spec.n()];
        let rho: Vec<Toy257> = random_vec(&mut r, spec.n());
        let exact = degree_reduce_with(&spec, &p, &rho, &zero, &zero).unwrap();
        assert_eq!(exact, a_mat.mul_vec(&p));
    }
}

fn wiring_circuit(left: Vec<Source>) -> LayeredCircuit {
    let w = left.len();
    LayeredCircuit {
        w,
        inputs: vec![InputBlock { owner: Owner::Client0, used: w }],
        layers: vec![Layer {
            op: Op::Add,
            left: vec![left],
            right: vec![vec![Source::Zero; w]],
        }],
        outputs: vec![BlockRef::Out { layer: 0, block: 0 }],
    }
}

#[test]
fn rearrange_identity_swap_and_replication() {
    let spec = toy_spec();
    let mut r = rng(5);
    let x: Vec<Toy257> = vec![Toy257::from_u64(11), Toy257::from_u64(22)];
    let row = spec.encode(&x, &mut r).unwrap().shares;
    let src = |s| Source::Input { block: 0, slot: s };
    for (wiring, want) in [
        (vec![src(0), src(1)], vec![x[0], x[1]]),
        (vec![src(1), src(0)], vec![x[1], x[0]]),
        (vec![src(1), src(1)], vec![x[1], x[1]]),
    ] {
        let c = wiring_circuit(wiring);
        let rows = vec![row.clone()];
        let out = rearrange(&spec, &c, 0, &rows, &mut r).unwrap();
        assert_eq!(out.len(), 2);
        assert!(spec.is_codeword(&out[0], spec.k()));
        assert_eq!(spec.decode(&out[0]).unwrap().secrets, want);
        assert_eq!(spec.decode(&out[1]).unwrap().secrets, vec![Toy257::zero(); 2]);
    }
}

#[test]
fn degree_test_accepts_codewords_and_zero_coin() {
    let spec = toy_spec();
    let mut r = rng(6);
    let rows: Vec<Vec<Toy257>> = (0..5).map(|_| spec.random_codeword(&mut r).shares).collect();
    let z0 = spec.random_codeword(&mut r).shares;
    let z1 = spec.random_codeword(&mut r).shares;
    for _ in 0..50 {
        let coin: Vec<Toy257> = random_vec(&mut r, 5);
        let l = degree_combination(&rows, &coin, &[&z0, &z1]);
        assert_eq!(check_broadcast(&spec, TestKind::Degree, &l), Ok(()));
    }
    let mut bad = rows.clone();
    bad[2][3] += Toy257::one();
    let l = degree_combination(&bad, &[Toy257::zero(); 5], &[]);
    assert!(l.iter().all(|v| v.is_zero()));
    assert_eq!(check_broadcast(&spec, TestKind::Degree, &l), Ok(()));
}

#[test]
fn degree_test_monte_carlo_distance_one() {
    let spec = toy_spec();
    let e = ProtocolParams::toy().e;
    let mut r = rng(7);
    let mut rows: Vec<Vec<Toy257>> = (0..3).map(|_| spec.random_codeword(&mut r).shares).collect();
    rows[1][4] += Toy257::one();
    assert_eq!(spec.distance_to_code(&rows[1]).unwrap().0, 1);
    let trials = 100_000;
    let mut accepted = 0u32;
    for _ in 0..trials {
        let coin: Vec<Toy257> = random_vec(&mut r, 3);
        let l = degree_combination(&rows, &coin, &[]);
        if check_broadcast(&spec, TestKind::Degree, &l).is_ok() {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / trials as f64;
    let bound = (e + 2) as f64 / 257.0;
    assert!(rate <= 2.0 / 257.0 + 0.002, "accept rate {rate}");
    assert!(rate <= bound);
}

fn toy_seeds(s: u64) -> SessionSeeds {
    SessionSeeds::from_u64(s)
}

fn random_inputs<F: PrimeField>(c: &LayeredCircuit, r: &mut ChaCha20Rng) -> (Vec<F>, Vec<F>) {
    (random_vec(r, c.input_count(Owner::Client0)), random_vec(r, c.input_count(Owner::Client1)))
}

#[test]
fn honest_random_circuits_match_eval_plain() {
    let params = ProtocolParams::toy();
    let mut r = rng(8);
    for i in 0..100 {
        let depth = r.gen_range(0..=6);
        let inputs = r.gen_range(1..=3);
        let c = random_circuit(&mut r, params.w, depth, 4, inputs);
        let (x, y) = random_inputs::<Toy257>(&c, &mut r);
        let run = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(i), &Deviation::None).unwrap();
        assert_eq!(run.result, Ok(c.eval_plain(&x, &y).unwrap()), "circuit {i}");
        assert_eq!(run.broadcasts.len(), 3 * params.sigma);
    }
}

#[test]
fn single_gate_circuits() {
    let params = ProtocolParams::toy();
    for (op, x, y, want) in [(Op::Add, 3u64, 4u64, 7u64), (Op::Mul, 0, 123, 0), (Op::Sub, 3, 4, 256)] {
        let c = LayeredCircuit {
            w: 2,
            inputs: vec![
                InputBlock { owner: Owner::Client0, used: 1 },
                InputBlock { owner: Owner::Client1, used: 1 },
            ],
            layers: vec![Layer {
                op,
                left: vec![vec![Source::Input { block: 0, slot: 0 }, Source::Zero]],
                right: vec![vec![Source::Input { block: 1, slot: 0 }, Source::Zero]],
            }],
            outputs: vec![BlockRef::Out { layer: 0, block: 0 }],
        };
        let run = run_standalone(
            &c,
            &params,
            &[Toy257::from_u64(x)],
            &[Toy257::from_u64(y)],
            &[],
            &toy_seeds(0),
            &Deviation::None,
        )
        .unwrap();
        assert_eq!(run.result.unwrap()[0], Toy257::from_u64(want));
    }
}

#[test]
fn standalone_is_deterministic_per_seed() {
    let params = ProtocolParams::toy();
    let mut r = rng(9);
    let c = random_circuit(&mut r, params.w, 3, 2, 2);
    let (x, y) = random_inputs::<Toy257>(&c, &mut r);
    let a = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(1), &Deviation::None).unwrap();
    let b = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(1), &Deviation::None).unwrap();
    let d = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(2), &Deviation::None).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.broadcasts, b.broadcasts);
    assert_ne!(a.states, d.states);
    assert_eq!(a.result, d.result);
}

fn mul_circuit(w: usize) -> LayeredCircuit {
    let src = |b, s| Source::Input { block: b, slot: s };
    LayeredCircuit {
        w,
        inputs: vec![
            InputBlock { owner: Owner::Client0, used: w },
            InputBlock { owner: Owner::Client1, used: w },
        ],
        layers: vec![
            Layer {
                op: Op::Mul,
                left: vec![(0..w).map(|s| src(0, s)).collect(), (0..w).map(|s| src(1, s)).collect()],
                right: vec![(0..w).map(|s| src(1, s)).collect(), (0..w).map(|s| src(1, s)).collect()],
            },
            Layer {
                op: Op::Add,
                left: vec![(0..w)
                    .map(|s| Source::Out { layer: 0, block: 0, slot: s })
                    .collect()],
                right: vec![(0..w)
                    .map(|s| Source::Out { layer: 0, block: 1, slot: (s + 1) % w })
                    .collect()],
            },
        ],
        outputs: vec![BlockRef::Out { layer: 1, block: 0 }],
    }
}

#[test]
fn perm_test_rejects_mutated_copy() {
    let params = ProtocolParams::toy();
    let spec = toy_spec();
    let c = mul_circuit(2);
    let mut r = rng(10);
    let (x, y) = random_inputs::<Toy257>(&c, &mut r);
    let run = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(3), &Deviation::None).unwrap();
    assert!(run.result.is_ok());
    let constraints = c.perm_constraints::<Toy257>();
    let basis = perm_basis(&spec).unwrap();
    let width = constraints.rows.len();

    // honest rows pass
    let z: Vec<Toy257> = random_sum_zero_row(&spec, spec.k() + spec.w(), &mut r).unwrap().shares;
    for _ in 0..50 {
        let coin: Vec<Toy257> = random_vec(&mut r, width);
        let l = perm_combination(&basis, 2, &constraints, &run.states.rows, &coin, &[&z]);
        assert_eq!(check_broadcast(&spec, TestKind::Permutation, &l), Ok(()));
    }

    // left block of layer 1 re-encoded with a wrong value in slot 1
    let mut rows = run.states.rows.clone();
    let idx = c.trace_index(TraceBlock::Left { layer: 1, block: 0 });
    let mut vals = spec.decode(&rows[idx]).unwrap().secrets;
    vals[1] += Toy257::from_u64(5);
    rows[idx] = spec.encode(&vals, &mut r).unwrap().shares;
    let trials = 20_000;
    let mut rejected = 0u32;
    for _ in 0..trials {
        let coin: Vec<Toy257> = random_vec(&mut r, width);
        let l = perm_combination(&basis, 2, &constraints, &rows, &coin, &[&z]);
        if check_broadcast(&spec, TestKind::Permutation, &l).is_err() {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    assert!(rate >= 1.0 - 1.0 / 257.0 - 0.003, "reject rate {rate}");
}

#[test]
fn perm_test_empty_constraints_accept() {
    let spec = toy_spec();
    let mut r = rng(11);
    let c = LayeredCircuit {
        w: 2,
        inputs: vec![InputBlock { owner: Owner::Client0, used: 2 }],
        layers: vec![],
        outputs: vec![BlockRef::Input(0)],
    };
    let constraints = c.perm_constraints::<Toy257>();
    assert!(constraints.rows.is_empty());
    let rows = vec![spec.random_codeword(&mut r).shares];
    let z0: Vec<Toy257> = random_sum_zero_row(&spec, spec.k() + spec.w(), &mut r).unwrap().shares;
    let z1: Vec<Toy257> = random_sum_zero_row(&spec, spec.k() + spec.w(), &mut r).unwrap().shares;
    let l = perm_combination(&perm_basis(&spec).unwrap(), 2, &constraints, &rows, &[], &[&z0, &z1]);
    assert_eq!(check_broadcast(&spec, TestKind::Permutation, &l), Ok(()));
}

#[test]
fn equality_test_honest_bad_and_empty() {
    let params = ProtocolParams::toy();
    let spec = toy_spec();
    let c = mul_circuit(2);
    let mut r = rng(12);
    let (x, y) = random_inputs::<Toy257>(&c, &mut r);
    let run = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(4), &Deviation::None).unwrap();
    let z: Vec<Toy257> = random_zero_block_row(&spec, 2 * spec.k(), &mut r).unwrap().shares;
    for _ in 0..50 {
        let coin: Vec<Toy257> = random_vec(&mut r, 2);
        let l = equality_combination(&c, &run.states, &coin, &[&z]);
        assert_eq!(check_broadcast(&spec, TestKind::Equality, &l), Ok(()));
    }

    // out block 1 replaced by the reduction of a different codeword
    let mut states = run.states.clone();
    let other = eval_layer_mul(&spec.random_codeword(&mut r).shares, &spec.random_codeword(&mut r).shares);
    *states.row_mut(&c, TraceBlock::Out { layer: 0, block: 1 }) = degree_reduce(&spec, &other, &mut r).unwrap();
    let trials = 20_000;
    let mut rejected = 0u32;
    for _ in 0..trials {
        let coin: Vec<Toy257> = random_vec(&mut r, 2);
        let l = equality_combination(&c, &states, &coin, &[&z]);
        if check_broadcast(&spec, TestKind::Equality, &l).is_err() {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    assert!(rate >= 1.0 - 1.0 / 257.0 - 0.003, "reject rate {rate}");

    let linear = wiring_circuit(vec![Source::Input { block: 0, slot: 0 }, Source::Zero]);
    let empty = ServerStates::<Toy257>::new(&linear, spec.n());
    let l = equality_combination(&linear, &empty, &[], &[&z]);
    assert_eq!(check_broadcast(&spec, TestKind::Equality, &l), Ok(()));
}

#[test]
fn additive_perturbations_never_corrupt_silently() {
    let params = ProtocolParams::toy();
    let mut r = rng(13);
    let mut aborts = 0;
    for trial in 0..500 {
        let depth = r.gen_range(1..=4);
        let c = random_circuit(&mut r, params.w, depth, 3, 2);
        let (x, y) = random_inputs::<Goldilocks>(&c, &mut r);
        let count = r.gen_range(1..=params.e);
        let mut servers: Vec<usize> = (0..params.n).collect();
        for i in 0..count {
            let j = r.gen_range(i..params.n);
            servers.swap(i, j);
        }
        servers.truncate(count);
        let dev = Deviation::AdditiveShare {
            layer: r.gen_range(0..depth),
            servers,
            delta: r.gen_range(1..u64::MAX),
        };
        let run = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(trial), &dev).unwrap();
        match run.result {
            Ok(out) => assert_eq!(out, c.eval_plain(&x, &y).unwrap(), "silent corruption in trial {trial}"),
            Err(_) => aborts += 1,
        }
    }
    // every perturbed row leaves the code, so the degree test catches it
    assert_eq!(aborts, 500);
}

#[test]
fn bad_degree_reduction_is_caught_by_equality_test() {
    let params = ProtocolParams::toy();
    let c = mul_circuit(2);
    let mut r = rng(14);
    let (x, y) = random_inputs::<Goldilocks>(&c, &mut r);
    let run = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(5), &Deviation::BadDegreeReduction { layer: 0 }).unwrap();
    assert!(matches!(
        run.result,
        Err(OuterAbort::Test {
            test: TestKind::Equality,
            repetition: 0,
            failure: TestFailure::NonzeroBlock
        })
    ));
}

#[test]
fn skipped_blinding_keeps_outputs_correct() {
    let params = ProtocolParams::toy();
    let c = mul_circuit(2);
    let mut r = rng(15);
    let (x, y) = random_inputs::<Goldilocks>(&c, &mut r);
    let run = run_standalone(&c, &params, &x, &y, &[], &toy_seeds(6), &Deviation::SkipBlinding).unwrap();
    assert_eq!(run.result, Ok(c.eval_plain(&x, &y).unwrap()));
}

#[test]
fn public_blocks_are_encoded_deterministically() {
    let params = ProtocolParams::toy();
    let c = LayeredCircuit {
        w: 2,
        inputs: vec![
            InputBlock { owner: Owner::Client0, used: 2 },
            InputBlock { owner: Owner::Public, used: 2 },
        ],
        layers: vec![Layer {
            op: Op::Mul,
            left: vec![vec![Source::Input { block: 0, slot: 0 }, Source::Input { block: 0, slot: 1 }]],
            right: vec![vec![Source::Input { block: 1, slot: 0 }, Source::Input { block: 1, slot: 1 }]],
        }],
        outputs: vec![BlockRef::Out { layer: 0, block: 0 }],
    };
    let x = [Goldilocks::from_u64(3), Goldilocks::from_u64(4)];
    let public = [Goldilocks::from_u64(10), Goldilocks::from_u64(100)];
    let run = run_standalone(&c, &params, &x, &[], &public, &toy_seeds(7), &Deviation::None).unwrap();
    assert_eq!(run.result, Ok(vec![Goldilocks::from_u64(30), Goldilocks::from_u64(400)]));
}
