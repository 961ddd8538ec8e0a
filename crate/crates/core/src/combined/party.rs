//! One party's side of the two-party protocol.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::circuit::{Op, Owner, TraceBlock};
use crate::crypto::{coin_toss_seed, exchange, seal, unseal, ObliviousTransfer, WatchKey, WatchlistSelection};
use crate::field::{decode_elements, encode_elements, random_vec};
use crate::inner::{gmw_mul, OleSource, OlePool};
use crate::outer::{
    blinding_row, check_broadcast, client_rearrange, client_reduce, coin_from_seed, coin_seed_share, coin_width,
    degree_combination, equality_combination, eval_layer_linear, eval_layer_mul, input_encoding, layer_sources,
    perm_basis, perm_combination, reveal_outputs, server_tape, setup, split_masks, zero_encodings, SplitSite, TestKind,
};
use crate::rscode::{CodeSpec, Matrix};
use crate::transport::{Endpoint, MsgType, Phase};

const VERDICT_OK: u8 = 0;

/// Split masks from per-server tape seeds, indexed `[block][server]`;
/// servers without a known tape get zeros.
pub fn masks_from_tapes<F: PrimeField>(tapes: &[Option<Seed>], layer: usize, site: SplitSite, count: usize) -> Vec<Vec<F>> {
    let per_server: Vec<Vec<F>> = tapes
        .iter()
        .map(|t| match t {
            Some(s) => split_masks(s, layer, site, count),
            None => vec![F::zero(); count],
        })
        .collect();
    (0..count).map(|b| per_server.iter().map(|m| m[b]).collect()).collect()
}

/// Runs one party to completion. On a local detection the peer is sent an
/// abort frame carrying the reason.
#[allow(clippy::too_many_arguments)]
pub fn run_party<F: PrimeField>(
    me: usize,
    circuit: &LayeredCircuit,
    own_inputs: &[F],
    public: &[F],
    seeds: &PartySeeds,
    config: &PartyConfig,
    link: &mut Endpoint,
    ot: &mut dyn ObliviousTransfer,
    ole: &mut dyn OleSource<F>,
) -> Result<PartyOutput<F>, CombinedError> {
    assert!(me < 2, "party index must be 0 or 1");
    let result = run_inner(me, circuit, own_inputs, public, seeds, config, link, ot, ole);
    if let Err(e) = &result {
        if e.is_local() {
            let _ = link.send(MsgType::Abort, e.to_string().into_bytes());
        }
    }
    result
}

struct Party<'a, F: PrimeField> {
    me: usize,
    circuit: LayeredCircuit,
    spec: CodeSpec<F>,
    seeds: PartySeeds,
    attack: Attack,
    link: &'a mut Endpoint,
    rng: ChaCha20Rng,
    shares: ServerStates<F>,
    /// Clear replay of the watched servers; other columns are meaningless.
    replay: ServerStates<F>,
    watched: Vec<usize>,
    own_keys: Vec<WatchKey>,
    peer_keys: Vec<Option<WatchKey>>,
    used_tapes: Vec<Option<Seed>>,
    peer_tapes: Vec<Option<Seed>>,
    send_ctr: u64,
    recv_ctr: u64,
    pool: OlePool<F>,
    broadcasts: Vec<Vec<F>>,
}

fn owner_of(me: usize) -> Owner {
    if me == 0 {
        Owner::Client0
    } else {
        Owner::Client1
    }
}

#[allow(clippy::too_many_arguments)]
fn run_inner<F: PrimeField>(
    me: usize,
    circuit: &LayeredCircuit,
    own_inputs: &[F],
    public: &[F],
    seeds: &PartySeeds,
    config: &PartyConfig,
    link: &mut Endpoint,
    ot: &mut dyn ObliviousTransfer,
    ole: &mut dyn OleSource<F>,
) -> Result<PartyOutput<F>, CombinedError> {
    let params = config.params;
    let owner = owner_of(me);
    let mut rng = ChaCha20Rng::from_seed(seeds.rng);
    circuit.validate()?;
    for (o, got) in [(owner, own_inputs.len()), (Owner::Public, public.len())] {
        let expected = circuit.input_count(o);
        if got != expected {
            return Err(CircuitError::InputLength { owner: o, expected, got }.into());
        }
    }
    let mac = if config.mac { Some(augment_with_mac(circuit)?) } else { None };
    let exec = mac.as_ref().map_or_else(|| circuit.clone(), |m| m.circuit.clone());
    let spec = setup::<F>(&params, &exec)?;
    let n = params.n;

    let mut own_vec = match &mac {
        Some(mc) => {
            let mut mi = MacInput::generate(own_inputs, &mut rng);
            mi.validate()?;
            if let Attack::TamperInputMac { element } = config.attack {
                if let Some(v) = mi.values.get_mut(element) {
                    *v += F::one();
                }
            }
            mc.party_inputs(owner, &mi)
        }
        None => own_inputs.to_vec(),
    };
    if mac.is_none() {
        if let Attack::TamperInputMac { element } = config.attack {
            if let Some(v) = own_vec.get_mut(element) {
                *v += F::one();
            }
        }
    }

    // setup: watchlists and tape reports
    let t0 = Instant::now();
    link.set_phase(Phase::Setup);
    let selection = WatchlistSelection::random(n, params.t, &mut rng);
    let own_keys: Vec<WatchKey> = (0..n).map(|_| WatchKey::random(&mut rng)).collect();
    let got_keys = if me == 0 {
        ot.send(0, &own_keys)?;
        ot.receive(1, &selection)?
    } else {
        let k = ot.receive(0, &selection)?;
        ot.send(1, &own_keys)?;
        k
    };
    let mut peer_keys = vec![None; n];
    for (&j, k) in selection.indices().iter().zip(got_keys) {
        peer_keys[j] = Some(k);
    }
    let evade: &[usize] = match &config.attack {
        Attack::WatchEvade { servers } => servers,
        _ => &[],
    };
    let used_tapes: Vec<Option<Seed>> = (0..n)
        .map(|j| {
            Some(if evade.contains(&j) {
                derive_seed(&seeds.server, "evade", &[j as u64])
            } else {
                server_tape(&seeds.server, j)
            })
        })
        .collect();

    let mut p = Party {
        me,
        shares: ServerStates::new(&exec, n),
        replay: ServerStates::new(&exec, n),
        circuit: exec,
        spec,
        seeds: *seeds,
        attack: config.attack.clone(),
        link,
        rng,
        watched: selection.indices().to_vec(),
        own_keys,
        peer_keys,
        used_tapes,
        peer_tapes: vec![None; n],
        send_ctr: 0,
        recv_ctr: 0,
        pool: OlePool::default(),
        broadcasts: Vec::new(),
    };
    let reported: Vec<Vec<u8>> = (0..n).map(|j| server_tape(&seeds.server, j).to_vec()).collect();
    let got = p.seal_exchange(reported)?;
    for (j, g) in got.into_iter().enumerate() {
        if let Some(bytes) = g {
            let seed: Seed = bytes
                .try_into()
                .map_err(|_| CombinedError::Malformed("tape seed must be 32 bytes".into()))?;
            p.peer_tapes[j] = Some(seed);
        }
    }
    let setup_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    p.link.set_phase(Phase::Offline);
    let products = n * p.circuit.mul_blocks();
    p.pool.fill(ole, products, config.ole_batch)?;
    let offline_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    p.link.set_phase(Phase::Online);
    let public_all = p.share_inputs(&own_vec, public, mac.as_ref())?;
    for j in 0..p.circuit.depth() {
        p.layer(j)?;
    }
    p.tests(params.sigma)?;
    let values = p.outputs()?;
    let (outputs, flag) = match &mac {
        Some(mc) if mc.coefficients > 0 => mc.split_outputs(&values),
        _ => (values, F::zero()),
    };
    if !flag.is_zero() {
        return Err(CombinedError::FlagRaised);
    }
    let verdict = exchange(p.link, me, MsgType::Abort, vec![VERDICT_OK])?;
    if verdict != [VERDICT_OK] {
        return Err(CombinedError::PeerAborted(String::from_utf8_lossy(&verdict).into_owned()));
    }
    let online_s = t2.elapsed().as_secs_f64();

    Ok(PartyOutput {
        outputs,
        flag,
        public: public_all,
        ole_sent: p.pool.consumed() / 2,
        watched: p.watched.clone(),
        ledger: p.link.ledger().clone(),
        times: PhaseTimes {
            setup_s,
            offline_s,
            online_s,
        },
        states: p.shares,
        broadcasts: p.broadcasts,
        circuit: p.circuit,
    })
}

impl<F: PrimeField> Party<'_, F> {
    fn n(&self) -> usize {
        self.spec.n()
    }

    fn exchange_elems(&mut self, t: MsgType, v: &[F], expect: usize) -> Result<Vec<F>, CombinedError> {
        let mut buf = Vec::with_capacity(v.len() * 8);
        encode_elements(v, &mut buf);
        let got = exchange(self.link, self.me, t, buf)?;
        let got: Vec<F> = decode_elements(&got).map_err(|e| CombinedError::Malformed(e.to_string()))?;
        if got.len() != expect {
            return Err(CombinedError::Malformed(format!(
                "{t} frame with {} elements, expected {expect}",
                got.len()
            )));
        }
        Ok(got)
    }

    /// Sends one sealed segment per server and opens the peer's segments
    /// for watched servers.
    fn seal_exchange(&mut self, plaintexts: Vec<Vec<u8>>) -> Result<Vec<Option<Vec<u8>>>, CombinedError> {
        let n = self.n();
        let mut payload = Vec::new();
        for (key, pt) in self.own_keys.iter().zip(&plaintexts) {
            payload.extend(seal(key, self.send_ctr, pt));
        }
        self.send_ctr += 1;
        let got = exchange(self.link, self.me, MsgType::WatchlistCiphertext, payload)?;
        if got.len() % n != 0 {
            return Err(CombinedError::Malformed("watchlist frame not split evenly".into()));
        }
        let seg = got.len() / n;
        let ctr = self.recv_ctr;
        self.recv_ctr += 1;
        self.peer_keys
            .iter()
            .enumerate()
            .map(|(j, k)| match k {
                Some(key) => unseal(key, ctr, &got[j * seg..(j + 1) * seg])
                    .map(Some)
                    .map_err(|_| CombinedError::WatchlistTag(j)),
                None => Ok(None),
            })
            .collect()
    }

    /// Sends this client's messages `rows[i][j]` to every server `j` over the
    /// watchlist channel; returns the peer's rows, zero where unwatched.
    fn client_messages(&mut self, rows: &[Vec<F>]) -> Result<Vec<Vec<F>>, CombinedError> {
        self.client_messages_with(rows, rows.len())
    }

    /// As `client_messages` when the peer sends `peer_rows` rows.
    fn client_messages_with(&mut self, rows: &[Vec<F>], peer_rows: usize) -> Result<Vec<Vec<F>>, CombinedError> {
        let n = self.n();
        let plaintexts = (0..n)
            .map(|j| {
                let col: Vec<F> = rows.iter().map(|r| r[j]).collect();
                let mut b = Vec::new();
                encode_elements(&col, &mut b);
                b
            })
            .collect();
        let got = self.seal_exchange(plaintexts)?;
        let mut peer = vec![vec![F::zero(); n]; peer_rows];
        for (j, g) in got.into_iter().enumerate() {
            if let Some(bytes) = g {
                let col: Vec<F> = decode_elements(&bytes).map_err(|e| CombinedError::Malformed(e.to_string()))?;
                if col.len() != peer_rows {
                    return Err(CombinedError::Watchlist {
                        server: j,
                        stage: "client message length".into(),
                    });
                }
                for (r, v) in peer.iter_mut().zip(col) {
                    r[j] = v;
                }
            }
        }
        Ok(peer)
    }

    fn check(&self, stage: &str, observed: &[Vec<F>], expected: &[Vec<F>]) -> Result<(), CombinedError> {
        for &j in &self.watched {
            if observed.iter().zip(expected).any(|(o, e)| o[j] != e[j]) {
                return Err(CombinedError::Watchlist {
                    server: j,
                    stage: stage.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Servers split `values` between the clients; returns the vectors this
    /// party's client receives, after checking the watched servers.
    fn split_round(
        &mut self,
        layer: usize,
        site: SplitSite,
        values: &[Vec<F>],
        replayed: &[Vec<F>],
        stage: &str,
    ) -> Result<Vec<Vec<F>>, CombinedError> {
        let n = self.n();
        let count = values.len();
        let own: Vec<Vec<F>> = masks_from_tapes(&self.used_tapes, layer, site, count);
        let payload: Vec<F> = if self.me == 0 {
            own.concat()
        } else {
            values.iter().zip(&own).flat_map(|(v, m)| sub(v, m)).collect()
        };
        let got = self.exchange_elems(MsgType::Emulation, &payload, count * n)?;
        let rec: Vec<Vec<F>> = got
            .chunks(n.max(1))
            .zip(values.iter().zip(&own))
            .map(|(g, (v, m))| if self.me == 0 { add(&sub(v, m), g) } else { add(m, g) })
            .collect();
        let peer: Vec<Vec<F>> = masks_from_tapes(&self.peer_tapes, layer, site, count);
        let expected: Vec<Vec<F>> = (0..count)
            .map(|s| {
                let rho = add(&own[s], &peer[s]);
                if self.me == 0 {
                    sub(&replayed[s], &rho)
                } else {
                    rho
                }
            })
            .collect();
        self.check(stage, &rec, &expected)?;
        Ok(rec)
    }

    fn share_inputs(&mut self, own_vec: &[F], public: &[F], mac: Option<&MacCircuit>) -> Result<Vec<F>, CombinedError> {
        let n = self.n();
        let w = self.circuit.w;
        let owner = owner_of(self.me);
        let blocks = self.circuit.inputs.clone();
        let mut cursor = 0;
        let mut own_rows = Vec::new();
        let mut masks = Vec::new();
        for (b, blk) in blocks.iter().enumerate() {
            if blk.owner != owner {
                continue;
            }
            let mut vals = own_vec[cursor..cursor + blk.used].to_vec();
            cursor += blk.used;
            vals.resize(w, F::zero());
            let u = input_encoding(&self.spec, &self.seeds.client, b, &vals).map_err(OuterError::from)?;
            let mask: Vec<F> = random_vec(&mut self.rng, n);
            *self.shares.row_mut(&self.circuit, TraceBlock::Input(b)) = sub(&u, &mask);
            *self.replay.row_mut(&self.circuit, TraceBlock::Input(b)) = u.clone();
            masks.extend(mask);
            own_rows.push(u);
        }
        let peer_blocks: Vec<usize> = blocks
            .iter()
            .enumerate()
            .filter(|(_, blk)| blk.owner != owner && blk.owner != Owner::Public)
            .map(|(b, _)| b)
            .collect();
        let got = self.exchange_elems(MsgType::InputShare, &masks, peer_blocks.len() * n)?;
        for (&b, chunk) in peer_blocks.iter().zip(got.chunks(n.max(1))) {
            *self.shares.row_mut(&self.circuit, TraceBlock::Input(b)) = chunk.to_vec();
        }
        let peer_rows = self.client_messages_with(&own_rows, peer_blocks.len())?;
        for (&b, row) in peer_blocks.iter().zip(peer_rows) {
            *self.replay.row_mut(&self.circuit, TraceBlock::Input(b)) = row;
        }

        let mut public_all = public.to_vec();
        if let Some(mc) = mac {
            if mc.coefficients > 0 {
                let share = derive_seed(&self.seeds.client, "mac-coin", &[]);
                let seed = coin_toss_seed(self.link, self.me, &share, &mut self.rng)?;
                public_all.extend(coin_from_seed::<F>(&seed, mc.coefficients));
            }
        }
        let mut cursor = 0;
        for (b, blk) in blocks.iter().enumerate() {
            if blk.owner != Owner::Public {
                continue;
            }
            let mut vals = public_all[cursor..cursor + blk.used].to_vec();
            cursor += blk.used;
            vals.resize(w, F::zero());
            let enc = self.spec.encode_deterministic(&vals).map_err(OuterError::from)?.shares;
            *self.shares.row_mut(&self.circuit, TraceBlock::Input(b)) = if self.me == 0 { enc.clone() } else { vec![F::zero(); n] };
            *self.replay.row_mut(&self.circuit, TraceBlock::Input(b)) = enc;
        }
        Ok(public_all)
    }

    fn layer(&mut self, j: usize) -> Result<(), CombinedError> {
        let n = self.n();
        let layer = self.circuit.layers[j].clone();
        let m = layer.block_count();
        let sources = layer_sources(&self.circuit, j);
        let vals: Vec<Vec<F>> = sources.iter().map(|r| self.shares.block_ref(&self.circuit, *r).to_vec()).collect();
        let rvals: Vec<Vec<F>> = sources.iter().map(|r| self.replay.block_ref(&self.circuit, *r).to_vec()).collect();
        let rec = self.split_round(j, SplitSite::Rearrange, &vals, &rvals, &format!("layer {j} rearrangement"))?;
        let zeros = zero_encodings(&self.spec, &self.seeds.client, j, SplitSite::Rearrange, 2 * m);
        let msgs = client_rearrange(&self.spec, &self.circuit, j, &rec, &zeros).map_err(OuterError::from)?;
        let peer = self.client_messages(&msgs)?;
        for b in 0..m {
            for (tb, i) in [
                (TraceBlock::Left { layer: j, block: b }, b),
                (TraceBlock::Right { layer: j, block: b }, m + b),
            ] {
                *self.shares.row_mut(&self.circuit, tb) = msgs[i].clone();
                *self.replay.row_mut(&self.circuit, tb) = add(&msgs[i], &peer[i]);
            }
        }
        let left = |s: &ServerStates<F>, c: &LayeredCircuit, b| s.row(c, TraceBlock::Left { layer: j, block: b }).to_vec();
        let right = |s: &ServerStates<F>, c: &LayeredCircuit, b| s.row(c, TraceBlock::Right { layer: j, block: b }).to_vec();
        let out = |b| TraceBlock::Out { layer: j, block: b };
        match layer.op {
            Op::Add | Op::Sub => {
                for b in 0..m {
                    let s = eval_layer_linear(layer.op, &left(&self.shares, &self.circuit, b), &right(&self.shares, &self.circuit, b));
                    let r = eval_layer_linear(layer.op, &left(&self.replay, &self.circuit, b), &right(&self.replay, &self.circuit, b));
                    *self.shares.row_mut(&self.circuit, out(b)) = s;
                    *self.replay.row_mut(&self.circuit, out(b)) = r;
                }
            }
            Op::Mul => {
                let x: Vec<F> = (0..m).flat_map(|b| left(&self.shares, &self.circuit, b)).collect();
                let y: Vec<F> = (0..m).flat_map(|b| right(&self.shares, &self.circuit, b)).collect();
                let prod = gmw_mul(self.link, self.me, &mut self.pool, &x, &y, &mut self.rng)?;
                for b in 0..m {
                    self.shares.prod[j][b] = prod[b * n..(b + 1) * n].to_vec();
                    self.replay.prod[j][b] = eval_layer_mul(&left(&self.replay, &self.circuit, b), &right(&self.replay, &self.circuit, b));
                }
                let vals = self.shares.prod[j].clone();
                let rvals = self.replay.prod[j].clone();
                let rec = self.split_round(j, SplitSite::Reduce, &vals, &rvals, &format!("layer {j} reduction"))?;
                let zeros = zero_encodings(&self.spec, &self.seeds.client, j, SplitSite::Reduce, m);
                let mut msgs = Vec::with_capacity(m);
                for b in 0..m {
                    let mut msg = client_reduce(&self.spec, &rec[b], &zeros[b]).map_err(OuterError::from)?;
                    if b == 0 && self.attack == (Attack::BadDegreeReduction { layer: j }) {
                        let mut unit = vec![F::zero(); self.spec.w()];
                        unit[0] = F::one();
                        msg = add(&msg, &self.spec.encode_deterministic(&unit).map_err(OuterError::from)?.shares);
                    }
                    msgs.push(msg);
                }
                let peer = self.client_messages(&msgs)?;
                for b in 0..m {
                    *self.shares.row_mut(&self.circuit, out(b)) = msgs[b].clone();
                    *self.replay.row_mut(&self.circuit, out(b)) = add(&msgs[b], &peer[b]);
                }
            }
        }
        if let Attack::AdditiveShare { layer, servers, delta } = &self.attack {
            if *layer == j {
                let d = F::from_u64(*delta);
                for b in 0..m {
                    let row = self.shares.row_mut(&self.circuit, out(b));
                    for &c in servers {
                        row[c] += d;
                    }
                }
            }
        }
        Ok(())
    }

    fn combination(
        &self,
        kind: TestKind,
        states: &ServerStates<F>,
        basis: &Matrix<F>,
        constraints: &crate::circuit::PermConstraints<F>,
        coin: &[F],
        blinds: &[&[F]],
    ) -> Vec<F> {
        match kind {
            TestKind::Degree => degree_combination(&states.rows, coin, blinds),
            TestKind::Permutation => perm_combination(basis, self.spec.w(), constraints, &states.rows, coin, blinds),
            TestKind::Equality => equality_combination(&self.circuit, states, coin, blinds),
        }
    }

    fn tests(&mut self, sigma: usize) -> Result<(), CombinedError> {
        let n = self.n();
        let constraints = self.circuit.perm_constraints::<F>();
        let basis = perm_basis(&self.spec).map_err(OuterError::from)?;
        for kind in TestKind::ALL {
            let width = coin_width(&self.circuit, &constraints, kind);
            for rep in 0..sigma {
                let z = if self.attack == Attack::SkipBlinding {
                    vec![F::zero(); n]
                } else {
                    blinding_row(&self.spec, &self.seeds.client, kind, rep).map_err(OuterError::from)?
                };
                let peer_z = self.client_messages(std::slice::from_ref(&z))?.remove(0);
                let share = coin_seed_share(&self.seeds.client, kind, rep);
                let seed = coin_toss_seed(self.link, self.me, &share, &mut self.rng)?;
                let coin: Vec<F> = coin_from_seed(&seed, width);
                let mine = self.combination(kind, &self.shares, &basis, &constraints, &coin, &[&z]);
                let theirs = self.exchange_elems(MsgType::TestBroadcast, &mine, n)?;
                let l = add(&mine, &theirs);
                let expected = self.combination(kind, &self.replay, &basis, &constraints, &coin, &[&z, &peer_z]);
                self.check(&format!("{} test {rep}", kind.name()), std::slice::from_ref(&l), &[expected])?;
                let verdict = check_broadcast(&self.spec, kind, &l);
                self.broadcasts.push(l);
                verdict.map_err(|failure| OuterAbort::Test {
                    test: kind,
                    repetition: rep,
                    failure,
                })?;
            }
        }
        Ok(())
    }

    fn outputs(&mut self) -> Result<Vec<F>, CombinedError> {
        let n = self.n();
        let refs = self.circuit.outputs.clone();
        let mine: Vec<F> = refs
            .iter()
            .flat_map(|r| self.shares.block_ref(&self.circuit, *r).to_vec())
            .collect();
        let theirs = self.exchange_elems(MsgType::Output, &mine, refs.len() * n)?;
        let rows: Vec<Vec<F>> = mine.chunks(n).zip(theirs.chunks(n)).map(|(a, b)| add(a, b)).collect();
        let expected: Vec<Vec<F>> = refs.iter().map(|r| self.replay.block_ref(&self.circuit, *r).to_vec()).collect();
        self.check("outputs", &rows, &expected)?;
        Ok(reveal_outputs(&self.spec, &rows)?.concat())
    }
}

fn add<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

fn sub<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}
