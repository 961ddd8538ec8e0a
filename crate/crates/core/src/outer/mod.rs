//! The honest-majority outer protocol with two clients and `n` servers.
//!
//! Server state is kept column-wise: every trace block is a length-`n` row
//! whose coordinate `c` belongs to server `c`. All server operations are
//! linear in these rows except the pointwise product, which is what lets the
//! two-party compiler run the same functions on additive shares.
//!
//! Randomness is derived from seeds so that a run can be replayed: client
//! encodings and blinding rows from the client seeds, server split masks from
//! per-party server tapes.

mod params;
mod standalone;

pub use params::{ParamsError, ProtocolParams};
pub use standalone::{party_masks, run_standalone, Deviation, StandaloneRun};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{BlockRef, CircuitError, LayeredCircuit, Op, PermConstraints, Source, TraceBlock};
use crate::crypto::{derive_rng, derive_seed, seed_from_u64, xor_seeds, Seed};
use crate::field::{lagrange_coefficients, random_vec, PrimeField};
use crate::rscode::{random_sum_zero_row, random_zero_block_row, CodeError, CodeSpec, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OuterError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("circuit width {circuit} differs from parameter width {params}")]
    WidthMismatch { params: usize, circuit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Degree,
    Permutation,
    Equality,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Degree, TestKind::Permutation, TestKind::Equality];

    fn index(self) -> u64 {
        match self {
            TestKind::Degree => 0,
            TestKind::Permutation => 1,
            TestKind::Equality => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Degree => "degree",
            TestKind::Permutation => "permutation",
            TestKind::Equality => "equality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFailure {
    /// The broadcast row is outside the code for this test.
    Degree,
    /// Decoded entries do not sum to zero.
    Sum,
    /// Decoded block is not all zeros.
    NonzeroBlock,
}

/// Why an honest party stopped.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum OuterAbort {
    #[error("{} test failed in repetition {repetition}: {failure:?}", test.name())]
    Test {
        test: TestKind,
        repetition: usize,
        failure: TestFailure,
    },
    #[error("output block {index} is not a codeword")]
    OutputNotCodeword { index: usize },
}

/// Master seeds of one run: one per client and one per party for the
/// server tapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSeeds {
    pub client: [Seed; 2],
    pub server: [Seed; 2],
}

impl SessionSeeds {
    pub fn from_u64(seed: u64) -> Self {
        let base = seed_from_u64(seed);
        SessionSeeds {
            client: [derive_seed(&base, "client", &[0]), derive_seed(&base, "client", &[1])],
            server: [derive_seed(&base, "server", &[0]), derive_seed(&base, "server", &[1])],
        }
    }

    /// Party `party`'s contribution to server `j`'s randomness.
    pub fn tape(&self, party: usize, j: usize) -> Seed {
        server_tape(&self.server[party], j)
    }
}

pub fn server_tape(master: &Seed, j: usize) -> Seed {
    derive_seed(master, "server-tape", &[j as u64])
}

/// Where a server splits a value between the two clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitSite {
    Rearrange,
    Reduce,
}

impl SplitSite {
    fn index(self) -> u64 {
        match self {
            SplitSite::Rearrange => 0,
            SplitSite::Reduce => 1,
        }
    }
}

/// One party's share of the masks a server uses at `(layer, site)`, one per block.
pub fn split_masks<F: PrimeField>(tape: &Seed, layer: usize, site: SplitSite, count: usize) -> Vec<F> {
    random_vec(&mut derive_rng(tape, "split", &[layer as u64, site.index()]), count)
}

/// A client's encoding of its input block `block`.
pub fn input_encoding<F: PrimeField>(
    spec: &CodeSpec<F>,
    client_seed: &Seed,
    block: usize,
    values: &[F],
) -> Result<Vec<F>, CodeError> {
    let aux = random_vec(&mut derive_rng(client_seed, "input", &[block as u64]), spec.k() - spec.w());
    Ok(spec.encode_with(values, &aux)?.shares)
}

/// Fresh encodings of the zero block that a client adds to its messages.
pub fn zero_encodings<F: PrimeField>(
    spec: &CodeSpec<F>,
    client_seed: &Seed,
    layer: usize,
    site: SplitSite,
    count: usize,
) -> Vec<Vec<F>> {
    let mut rng = derive_rng(client_seed, "zero", &[layer as u64, site.index()]);
    (0..count).map(|_| spec.random_zero_encoding(&mut rng).shares).collect()
}

/// A client's blinding row for one test repetition.
pub fn blinding_row<F: PrimeField>(
    spec: &CodeSpec<F>,
    client_seed: &Seed,
    kind: TestKind,
    rep: usize,
) -> Result<Vec<F>, CodeError> {
    let mut rng = derive_rng(client_seed, "blind", &[kind.index(), rep as u64]);
    let row = match kind {
        TestKind::Degree => spec.random_codeword(&mut rng),
        TestKind::Permutation => random_sum_zero_row(spec, spec.k() + spec.w(), &mut rng)?,
        TestKind::Equality => random_zero_block_row(spec, 2 * spec.k(), &mut rng)?,
    };
    Ok(row.shares)
}

/// A client's share of the coin seed for one test repetition.
pub fn coin_seed_share(client_seed: &Seed, kind: TestKind, rep: usize) -> Seed {
    derive_seed(client_seed, "coin", &[kind.index(), rep as u64])
}

/// Expands a tossed coin seed into `width` field elements.
pub fn coin_from_seed<F: PrimeField>(seed: &Seed, width: usize) -> Vec<F> {
    random_vec(&mut derive_rng(seed, "coin-expand", &[]), width)
}

/// Number of coin coordinates a test consumes.
pub fn coin_width<F: PrimeField>(circuit: &LayeredCircuit, constraints: &PermConstraints<F>, kind: TestKind) -> usize {
    match kind {
        TestKind::Degree => circuit.trace_blocks().len(),
        TestKind::Permutation => constraints.rows.len(),
        TestKind::Equality => circuit.mul_blocks(),
    }
}

/// Length-`n` rows of every server, in trace order, plus the pre-reduction
/// products of multiplication layers. The same type holds one party's
/// additive share in the compiled protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerStates<F> {
    pub rows: Vec<Vec<F>>,
    /// `prod[layer][block]`, empty for linear layers.
    pub prod: Vec<Vec<Vec<F>>>,
}

impl<F: PrimeField> ServerStates<F> {
    pub fn new(circuit: &LayeredCircuit, n: usize) -> Self {
        let rows = vec![vec![F::zero(); n]; circuit.trace_blocks().len()];
        let prod = circuit
            .layers
            .iter()
            .map(|l| match l.op {
                Op::Mul => vec![vec![F::zero(); n]; l.block_count()],
                _ => Vec::new(),
            })
            .collect();
        ServerStates { rows, prod }
    }

    pub fn row(&self, circuit: &LayeredCircuit, b: TraceBlock) -> &[F] {
        &self.rows[circuit.trace_index(b)]
    }

    pub fn row_mut(&mut self, circuit: &LayeredCircuit, b: TraceBlock) -> &mut Vec<F> {
        &mut self.rows[circuit.trace_index(b)]
    }

    pub fn block_ref(&self, circuit: &LayeredCircuit, r: BlockRef) -> &[F] {
        &self.rows[source_index(circuit, r)]
    }

    /// Coordinate-wise sum, used to reconstruct from two additive shares.
    pub fn add(&self, other: &Self) -> Self {
        let add_rows = |a: &Vec<Vec<F>>, b: &Vec<Vec<F>>| -> Vec<Vec<F>> { a.iter().zip(b).map(|(x, y)| add_vec(x, y)).collect() };
        ServerStates {
            rows: add_rows(&self.rows, &other.rows),
            prod: self.prod.iter().zip(&other.prod).map(|(a, b)| add_rows(a, b)).collect(),
        }
    }

    /// Everything server `c` holds, in the same layout.
    pub fn column(&self, c: usize) -> (Vec<F>, Vec<Vec<F>>) {
        (
            self.rows.iter().map(|r| r[c]).collect(),
            self.prod.iter().map(|l| l.iter().map(|r| r[c]).collect()).collect(),
        )
    }
}

pub(crate) fn add_vec<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub(crate) fn sub_vec<F: PrimeField>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Trace index of a revealable block.
pub fn source_index(circuit: &LayeredCircuit, r: BlockRef) -> usize {
    match r {
        BlockRef::Input(i) => circuit.trace_index(TraceBlock::Input(i)),
        BlockRef::Out { layer, block } => circuit.trace_index(TraceBlock::Out { layer, block }),
    }
}

/// Distinct blocks read by layer `j`, inputs first, then earlier outputs in order.
pub fn layer_sources(circuit: &LayeredCircuit, j: usize) -> Vec<BlockRef> {
    let layer = &circuit.layers[j];
    let mut refs: Vec<BlockRef> = layer
        .left
        .iter()
        .chain(&layer.right)
        .flatten()
        .filter_map(|s| match *s {
            Source::Input { block, .. } => Some(BlockRef::Input(block)),
            Source::Out { layer, block, .. } => Some(BlockRef::Out { layer, block }),
            Source::Zero => None,
        })
        .collect();
    refs.sort_by_key(|r| match *r {
        BlockRef::Input(i) => (0, 0, i),
        BlockRef::Out { layer, block } => (1, layer, block),
    });
    refs.dedup();
    refs
}

/// Client side of the rearrangement for layer `j`: decode each received
/// source vector, gather the wired slots and re-encode with no randomness,
/// then add the client's zero encodings. Returns left blocks then right blocks.
pub fn client_rearrange<F: PrimeField>(
    spec: &CodeSpec<F>,
    circuit: &LayeredCircuit,
    j: usize,
    received: &[Vec<F>],
    zeros: &[Vec<F>],
) -> Result<Vec<Vec<F>>, CodeError> {
    let sources = layer_sources(circuit, j);
    let decoded = received
        .iter()
        .map(|v| spec.decode(v).map(|b| b.secrets))
        .collect::<Result<Vec<_>, _>>()?;
    let lookup = |r: BlockRef, slot: usize| -> F {
        let pos = sources.binary_search_by_key(&key(r), |x| key(*x)).expect("source listed");
        decoded[pos][slot]
    };
    let layer = &circuit.layers[j];
    layer
        .left
        .iter()
        .chain(&layer.right)
        .zip(zeros)
        .map(|(wiring, z)| {
            let values: Vec<F> = wiring
                .iter()
                .map(|s| match *s {
                    Source::Zero => F::zero(),
                    Source::Input { block, slot } => lookup(BlockRef::Input(block), slot),
                    Source::Out { layer, block, slot } => lookup(BlockRef::Out { layer, block }, slot),
                })
                .collect();
            Ok(add_vec(&spec.encode_deterministic(&values)?.shares, z))
        })
        .collect()
}

fn key(r: BlockRef) -> (usize, usize, usize) {
    match r {
        BlockRef::Input(i) => (0, 0, i),
        BlockRef::Out { layer, block } => (1, layer, block),
    }
}

/// Client side of degree reduction: `A l + z`.
pub fn client_reduce<F: PrimeField>(spec: &CodeSpec<F>, received: &[F], zero: &[F]) -> Result<Vec<F>, CodeError> {
    Ok(add_vec(&spec.reduce_degree(received)?.shares, zero))
}

/// Encodes each block with fresh randomness; `result[b][c]` is server `c`'s
/// share of block `b`.
pub fn share_inputs<F: PrimeField, R: Rng + ?Sized>(
    spec: &CodeSpec<F>,
    blocks: &[Vec<F>],
    rng: &mut R,
) -> Result<Vec<Vec<F>>, CodeError> {
    blocks.iter().map(|b| Ok(spec.encode(b, rng)?.shares)).collect()
}

pub fn eval_layer_linear<F: PrimeField>(op: Op, left: &[F], right: &[F]) -> Vec<F> {
    match op {
        Op::Add => add_vec(left, right),
        Op::Sub => sub_vec(left, right),
        Op::Mul => panic!("eval_layer_linear called with Mul"),
    }
}

/// Pointwise product; the result lies in the code of dimension `2k`.
pub fn eval_layer_mul<F: PrimeField>(left: &[F], right: &[F]) -> Vec<F> {
    left.iter().zip(right).map(|(&a, &b)| a * b).collect()
}

/// One degree reduction with fresh randomness: the servers split `l` into
/// two additive shares, each client maps its share through `A` and adds a
/// random encoding of zero.
pub fn degree_reduce<F: PrimeField, R: Rng + ?Sized>(
    spec: &CodeSpec<F>,
    l: &[F],
    rng: &mut R,
) -> Result<Vec<F>, CodeError> {
    let rho: Vec<F> = random_vec(rng, l.len());
    let z0 = spec.random_zero_encoding(rng).shares;
    let z1 = spec.random_zero_encoding(rng).shares;
    degree_reduce_with(spec, l, &rho, &z0, &z1)
}

/// Degree reduction with explicit split masks and zero encodings.
pub fn degree_reduce_with<F: PrimeField>(
    spec: &CodeSpec<F>,
    l: &[F],
    rho: &[F],
    z0: &[F],
    z1: &[F],
) -> Result<Vec<F>, CodeError> {
    let m0 = client_reduce(spec, &sub_vec(l, rho), z0)?;
    let m1 = client_reduce(spec, rho, z1)?;
    Ok(add_vec(&m0, &m1))
}

/// One rearrangement with fresh randomness, from the trace rows in `rows`.
/// Returns left blocks then right blocks.
pub fn rearrange<F: PrimeField, R: Rng + ?Sized>(
    spec: &CodeSpec<F>,
    circuit: &LayeredCircuit,
    j: usize,
    rows: &[Vec<F>],
    rng: &mut R,
) -> Result<Vec<Vec<F>>, CodeError> {
    let sources = layer_sources(circuit, j);
    let count = 2 * circuit.layers[j].block_count();
    let mut rec0 = Vec::new();
    let mut rec1 = Vec::new();
    for r in &sources {
        let v = &rows[source_index(circuit, *r)];
        let rho: Vec<F> = random_vec(rng, v.len());
        rec0.push(sub_vec(v, &rho));
        rec1.push(rho);
    }
    let z0: Vec<Vec<F>> = (0..count).map(|_| spec.random_zero_encoding(rng).shares).collect();
    let z1: Vec<Vec<F>> = (0..count).map(|_| spec.random_zero_encoding(rng).shares).collect();
    let a = client_rearrange(spec, circuit, j, &rec0, &z0)?;
    let b = client_rearrange(spec, circuit, j, &rec1, &z1)?;
    Ok(a.iter().zip(&b).map(|(x, y)| add_vec(x, y)).collect())
}

/// `l = z0 + z1 + sum_i r_i U_i` over all trace rows.
pub fn degree_combination<F: PrimeField>(rows: &[Vec<F>], coin: &[F], blinds: &[&[F]]) -> Vec<F> {
    let mut l = sum_rows(blinds, row_len(rows, blinds));
    for (row, &r) in rows.iter().zip(coin) {
        axpy(&mut l, r, row);
    }
    l
}

/// Lagrange basis of the secret points evaluated at the share points:
/// entry `(c, s)` is `L_s(eta_c)` for the degree-`< w` basis on `zeta`.
pub fn perm_basis<F: PrimeField>(spec: &CodeSpec<F>) -> Result<Matrix<F>, CodeError> {
    let rows = spec
        .eta()
        .iter()
        .map(|&x| lagrange_coefficients(spec.zeta(), x))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CodeError::from)?;
    Ok(Matrix::from_rows(rows))
}

/// `l_c = z0_c + z1_c + sum_i r_i(eta_c) U_ic`, where `r_i` interpolates
/// the coefficients of `r^T A` that belong to trace block `i`.
pub fn perm_combination<F: PrimeField>(
    basis: &Matrix<F>,
    w: usize,
    constraints: &PermConstraints<F>,
    rows: &[Vec<F>],
    coin: &[F],
    blinds: &[&[F]],
) -> Vec<F> {
    let combined = constraints.combine(coin);
    let mut l = sum_rows(blinds, row_len(rows, blinds));
    for (i, row) in rows.iter().enumerate() {
        let coeffs = &combined[i * w..(i + 1) * w];
        if coeffs.iter().all(|c| c.is_zero()) {
            continue;
        }
        for (c, lc) in l.iter_mut().enumerate() {
            let rc: F = basis.row(c).iter().zip(coeffs).map(|(&b, &x)| b * x).sum();
            *lc += rc * row[c];
        }
    }
    l
}

/// `l = z0 + z1 + sum_i r_i (U_i - V_i)` over multiplication blocks, with `U`
/// the products and `V` the reduced outputs.
pub fn equality_combination<F: PrimeField>(
    circuit: &LayeredCircuit,
    states: &ServerStates<F>,
    coin: &[F],
    blinds: &[&[F]],
) -> Vec<F> {
    let mut l = sum_rows(blinds, row_len(&states.rows, blinds));
    let mut coins = coin.iter();
    for (j, layer) in circuit.layers.iter().enumerate() {
        if layer.op != Op::Mul {
            continue;
        }
        for b in 0..layer.block_count() {
            let r = *coins.next().expect("coin width matches multiplication blocks");
            axpy(&mut l, r, &states.prod[j][b]);
            axpy(&mut l, -r, states.row(circuit, TraceBlock::Out { layer: j, block: b }));
        }
    }
    l
}

fn row_len<F>(rows: &[Vec<F>], blinds: &[&[F]]) -> usize {
    rows.first()
        .map(Vec::len)
        .or_else(|| blinds.first().map(|b| b.len()))
        .unwrap_or(0)
}

fn sum_rows<F: PrimeField>(rows: &[&[F]], n: usize) -> Vec<F> {
    let mut l = vec![F::zero(); n];
    for r in rows {
        axpy(&mut l, F::one(), r);
    }
    l
}

fn axpy<F: PrimeField>(acc: &mut [F], a: F, x: &[F]) {
    if a.is_zero() {
        return;
    }
    for (y, &v) in acc.iter_mut().zip(x) {
        *y += a * v;
    }
}

/// The coin both clients agree on for one test repetition.
pub fn joint_coin<F: PrimeField>(client_seeds: &[Seed; 2], kind: TestKind, rep: usize, width: usize) -> Vec<F> {
    let seed = xor_seeds(
        &coin_seed_share(&client_seeds[0], kind, rep),
        &coin_seed_share(&client_seeds[1], kind, rep),
    );
    coin_from_seed(&seed, width)
}

/// Checks a reconstructed test broadcast.
pub fn check_broadcast<F: PrimeField>(spec: &CodeSpec<F>, kind: TestKind, l: &[F]) -> Result<(), TestFailure> {
    let k = spec.k();
    match kind {
        TestKind::Degree => spec.is_codeword(l, k).then_some(()).ok_or(TestFailure::Degree),
        TestKind::Permutation => {
            let bound = k + spec.w();
            if !spec.is_codeword(l, bound) {
                return Err(TestFailure::Degree);
            }
            let x = spec.decode_bound(l, bound).map_err(|_| TestFailure::Degree)?;
            x.iter().copied().sum::<F>().is_zero().then_some(()).ok_or(TestFailure::Sum)
        }
        TestKind::Equality => {
            if !spec.is_codeword(l, 2 * k) {
                return Err(TestFailure::Degree);
            }
            let x = spec.decode_bound(l, 2 * k).map_err(|_| TestFailure::Degree)?;
            x.iter().all(|v| v.is_zero()).then_some(()).ok_or(TestFailure::NonzeroBlock)
        }
    }
}

/// Decodes output rows; every row must be a codeword.
pub fn reveal_outputs<F: PrimeField>(spec: &CodeSpec<F>, rows: &[Vec<F>]) -> Result<Vec<Vec<F>>, OuterAbort> {
    rows.iter()
        .enumerate()
        .map(|(index, r)| {
            if !spec.is_codeword(r, spec.k()) {
                return Err(OuterAbort::OutputNotCodeword { index });
            }
            spec.decode(r)
                .map(|b| b.secrets)
                .map_err(|_| OuterAbort::OutputNotCodeword { index })
        })
        .collect()
}

/// Builds the code for validated parameters and checks the circuit against them.
pub fn setup<F: PrimeField>(params: &ProtocolParams, circuit: &LayeredCircuit) -> Result<CodeSpec<F>, OuterError> {
    params.validate()?;
    circuit.validate()?;
    if circuit.w != params.w {
        return Err(OuterError::WidthMismatch {
            params: params.w,
            circuit: circuit.w,
        });
    }
    Ok(CodeSpec::new(params.n, params.k, params.w)?)
}

