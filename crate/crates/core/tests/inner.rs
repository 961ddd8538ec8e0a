use std::net::TcpListener;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sac_core::crypto::{seed_from_u64, ObliviousTransfer, WatchKey, WatchlistSelection};
use sac_core::field::PrimeField;
use sac_core::inner::*;
use sac_core::transport::{mem_endpoints, MsgType};
use sac_core::{Goldilocks, Toy257};

fn g(v: u64) -> Goldilocks {
    Goldilocks::from_u64(v)
}

#[test]
fn ideal_ole_examples() {
    assert_eq!(ole_ideal(g(0), g(9), g(123)), g(9));
    assert_eq!(ole_ideal(g(4), g(9), g(1)), g(13));
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let (a, b, x) = (Goldilocks::random(&mut rng), Goldilocks::random(&mut rng), Goldilocks::random(&mut rng));
        assert_eq!(ole_ideal(a, b, x), a * x + b);
    }
}

#[test]
fn derandomization_worked_example() {
    let corr = RandomOle { seq: 0, a: g(3), v: g(5), u: g(2), w: g(11) };
    assert!(corr.holds());
    let (delta, alpha, gamma, out) = derandomize_ole(corr, g(4), g(7), g(6));
    assert_eq!((delta, alpha, gamma, out), (g(4), g(1), g(14), g(31)));
    assert_eq!(out, g(4 * 6 + 7));
}

#[test]
fn derandomization_matches_direct_evaluation() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for i in 0..10_000 {
        let corr = RandomOle::<Goldilocks>::sample(i, &mut rng);
        let (a, b, x) = (Goldilocks::random(&mut rng), Goldilocks::random(&mut rng), Goldilocks::random(&mut rng));
        assert_eq!(derandomize_ole(corr, a, b, x).3, a * x + b);
    }
    // live inputs equal to the correlation itself need no correction
    let corr = RandomOle::<Goldilocks>::sample(0, &mut rng);
    let (delta, alpha, gamma, out) = derandomize_ole(corr, corr.a, corr.v, corr.u);
    assert!(delta.is_zero() && alpha.is_zero() && gamma.is_zero());
    assert_eq!(out, corr.w);
}

use num_traits::Zero;

/// For fixed live inputs, the receiver's incoming pair (alpha, gamma) is
/// uniform over the correlation randomness: each of the p^2 values occurs
/// exactly p times among the p^3 correlations.
#[test]
fn receiver_view_is_uniform_on_toy_field() {
    let t = Toy257::from_u64;
    let (la, lb, lx) = (t(17), t(200), t(5));
    let mut counts = vec![0u32; 257 * 257];
    for a in 0..257 {
        for v in 0..257 {
            for u in 0..257 {
                let corr = RandomOle { seq: 0, a: t(a), v: t(v), u: t(u), w: t(a) * t(u) + t(v) };
                let (_, alpha, gamma, out) = derandomize_ole(corr, la, lb, lx);
                debug_assert_eq!(out, la * lx + lb);
                counts[(alpha.to_canonical() * 257 + gamma.to_canonical()) as usize] += 1;
            }
        }
    }
    assert!(counts.iter().all(|&c| c == 257));
}

#[test]
fn batching_accounting() {
    let seed = seed_from_u64(3);
    let mut backend = IdealOleBackend::new(&seed, 0);
    let v: Vec<RandomOle<Goldilocks>> = gen_random_oles(&mut backend, 1000, 64).unwrap();
    assert_eq!(v.len(), 1000);
    assert!(v.iter().all(RandomOle::holds));
    assert_eq!(OleBackend::<Goldilocks>::invocations(&backend), 16);
    let empty: Vec<RandomOle<Goldilocks>> = gen_random_oles(&mut backend, 0, 64).unwrap();
    assert!(empty.is_empty());
    assert_eq!(OleBackend::<Goldilocks>::invocations(&backend), 16);
}

#[test]
fn pool_rejects_reuse_and_exhaustion() {
    let mut pool = OlePool::<Goldilocks>::default();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let c = RandomOle::<Goldilocks>::sample(7, &mut rng);
    pool.push_sender(vec![c.split().0, c.split().0]);
    assert!(pool.take_sender(1).is_ok());
    assert_eq!(pool.take_sender(1), Err(InnerError::CorrelationReuse(7)));
    assert!(matches!(pool.take_receiver(1), Err(InnerError::Exhausted { need: 1, have: 0 })));
}

fn pools(seed: u64, count: usize) -> (OlePool<Goldilocks>, OlePool<Goldilocks>) {
    let s = seed_from_u64(seed);
    let mut out = Vec::new();
    for p in 0..2 {
        let mut src = IdealDealerSource::new(&s, p);
        let mut pool = OlePool::default();
        pool.fill(&mut src, count, 100).unwrap();
        out.push(pool);
    }
    let p1 = out.pop().unwrap();
    (out.pop().unwrap(), p1)
}

fn local_gmw(p0: &mut OlePool<Goldilocks>, p1: &mut OlePool<Goldilocks>, x: [Vec<Goldilocks>; 2], y: [Vec<Goldilocks>; 2], seed: u64) -> (Vec<Goldilocks>, Vec<Goldilocks>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut a, da) = gmw_start(p0, &x[0], &y[0], &mut rng).unwrap();
    let (mut b, db) = gmw_start(p1, &x[1], &y[1], &mut rng).unwrap();
    let ra = a.respond(&db).unwrap();
    let rb = b.respond(&da).unwrap();
    (a.finish(&rb).unwrap(), b.finish(&ra).unwrap())
}

#[test]
fn gmw_examples_and_random_products() {
    let (mut p0, mut p1) = pools(5, 10_002);
    let (s0, s1) = local_gmw(&mut p0, &mut p1, [vec![g(2)], vec![g(3)]], [vec![g(1)], vec![g(1)]], 0);
    assert_eq!(s0[0] + s1[0], g(10));
    let r = g(987654321);
    let (s0, s1) = local_gmw(&mut p0, &mut p1, [vec![r], vec![-r]], [vec![g(5)], vec![g(8)]], 1);
    assert!((s0[0] + s1[0]).is_zero());
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let m = 10_000;
    let rv = |rng: &mut ChaCha20Rng| -> Vec<Goldilocks> { (0..m).map(|_| Goldilocks::random(rng)).collect() };
    let (x0, x1, y0, y1) = (rv(&mut rng), rv(&mut rng), rv(&mut rng), rv(&mut rng));
    let (s0, s1) = local_gmw(&mut p0, &mut p1, [x0.clone(), x1.clone()], [y0.clone(), y1.clone()], 2);
    for i in 0..m {
        assert_eq!(s0[i] + s1[i], (x0[i] + x1[i]) * (y0[i] + y1[i]));
    }
    // each product consumed one sender and one receiver half on each side
    assert_eq!(p0.consumed(), 2 * 10_002);
    assert_eq!(p1.consumed(), 2 * 10_002);
}

#[test]
fn gmw_over_link_counts_messages() {
    let (mut p0, mut p1) = pools(7, 8);
    let (mut l0, mut l1) = mem_endpoints(0);
    let x = [vec![g(3); 8], vec![g(4); 8]];
    let y = [vec![g(5); 8], vec![g(6); 8]];
    let (x1, y1) = (x[1].clone(), y[1].clone());
    let h = thread::spawn(move || {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let out = gmw_mul(&mut l1, 1, &mut p1, &x1, &y1, &mut rng).unwrap();
        (out, l1.ledger().clone())
    });
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let s0 = gmw_mul(&mut l0, 0, &mut p0, &x[0], &y[0], &mut rng).unwrap();
    let (s1, ledger1) = h.join().unwrap();
    for i in 0..8 {
        assert_eq!(s0[i] + s1[i], g(7 * 11));
    }
    // 3 elements per product per party
    let e = l0.ledger().get(MsgType::Emulation);
    assert_eq!((e.frames, e.payload_bytes), (2, 8 * 3 * 8));
    assert_eq!(ledger1.get(MsgType::Emulation).payload_bytes, 8 * 3 * 8);
}

#[test]
fn tcp_dealer_serves_oles_and_ot() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || serve_dealer::<Goldilocks>(listener, seed_from_u64(9), Some(2)));
    let keys: Vec<WatchKey> = (0..5u8).map(|i| WatchKey([i; 32])).collect();
    let keys_c = keys.clone();
    let h = thread::spawn(move || {
        let mut c = DealerHandle::new(DealerClient::<Goldilocks>::connect(addr, 0, 1).unwrap());
        let mut pool = OlePool::default();
        pool.fill(&mut c, 10, 4).unwrap();
        let sel = WatchlistSelection::new(5, 2, vec![3, 0]).unwrap();
        let got = c.receive(0, &sel).unwrap();
        assert_eq!(got, vec![keys_c[0], keys_c[3]]);
        pool
    });
    let mut c = DealerHandle::new(DealerClient::<Goldilocks>::connect(addr, 0, 0).unwrap());
    let mut p0 = OlePool::default();
    p0.fill(&mut c, 10, 4).unwrap();
    assert_eq!(OleSource::<Goldilocks>::requests(&c), 6);
    c.send(0, &keys).unwrap();
    let mut p1 = h.join().unwrap();
    let (s0, s1) = local_gmw(&mut p0, &mut p1, [vec![g(2); 10], vec![g(3); 10]], [vec![g(4); 10], vec![g(5); 10]], 3);
    for i in 0..10 {
        assert_eq!(s0[i] + s1[i], g(45));
    }
    drop(c);
    drop(p0);
    server.join().unwrap().unwrap();
}
