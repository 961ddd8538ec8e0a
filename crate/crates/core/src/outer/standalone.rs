//! In-process simulation of the two clients and `n` servers.

use super::*;
use crate::circuit::Op;

/// Misbehaviour injected into a standalone run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Deviation {
    #[default]
    None,
    /// Adds `delta` to the listed servers' shares of every output block of
    /// `layer` right after the layer is computed.
    AdditiveShare { layer: usize, servers: Vec<usize>, delta: u64 },
    /// Client 1 adds an encoding of the unit block to its reduction message
    /// for the first block of multiplication layer `layer`.
    BadDegreeReduction { layer: usize },
    /// Client 1 contributes all-zero blinding rows to every test.
    SkipBlinding,
}

#[derive(Debug, Clone)]
pub struct StandaloneRun<F> {
    /// Concatenated output blocks, or the reason the clients aborted.
    pub result: Result<Vec<F>, OuterAbort>,
    pub states: ServerStates<F>,
    /// Reconstructed test broadcasts in the order they were checked.
    pub broadcasts: Vec<Vec<F>>,
}

/// One party's share of the split masks at `(layer, site)`, indexed
/// `[block][server]`.
pub fn party_masks<F: PrimeField>(master: &Seed, n: usize, layer: usize, site: SplitSite, count: usize) -> Vec<Vec<F>> {
    let per_server: Vec<Vec<F>> = (0..n)
        .map(|c| split_masks(&server_tape(master, c), layer, site, count))
        .collect();
    (0..count).map(|b| per_server.iter().map(|m| m[b]).collect()).collect()
}

fn joint_masks<F: PrimeField>(seeds: &SessionSeeds, n: usize, layer: usize, site: SplitSite, count: usize) -> Vec<Vec<F>> {
    let a = party_masks::<F>(&seeds.server[0], n, layer, site, count);
    let b = party_masks::<F>(&seeds.server[1], n, layer, site, count);
    a.iter().zip(&b).map(|(x, y)| add_vec(x, y)).collect()
}

pub fn run_standalone<F: PrimeField>(
    circuit: &LayeredCircuit,
    params: &ProtocolParams,
    x: &[F],
    y: &[F],
    public: &[F],
    seeds: &SessionSeeds,
    deviation: &Deviation,
) -> Result<StandaloneRun<F>, OuterError> {
    let spec = setup::<F>(params, circuit)?;
    let n = params.n;
    let blocks = circuit.input_blocks(x, y, public)?;
    let mut states = ServerStates::new(circuit, n);
    for (b, (blk, vals)) in circuit.inputs.iter().zip(&blocks).enumerate() {
        let row = match blk.owner.party() {
            Some(i) => input_encoding(&spec, &seeds.client[i], b, vals)?,
            None => spec.encode_deterministic(vals)?.shares,
        };
        *states.row_mut(circuit, TraceBlock::Input(b)) = row;
    }
    for j in 0..circuit.depth() {
        run_layer(&spec, circuit, j, seeds, &mut states, deviation)?;
    }

    let constraints = circuit.perm_constraints::<F>();
    let basis = perm_basis(&spec)?;
    let mut broadcasts = Vec::new();
    let mut verdict = Ok(());
    'tests: for kind in TestKind::ALL {
        let width = coin_width(circuit, &constraints, kind);
        for rep in 0..params.sigma {
            let coin = joint_coin::<F>(&seeds.client, kind, rep, width);
            let z0 = blinding_row(&spec, &seeds.client[0], kind, rep)?;
            let z1 = match deviation {
                Deviation::SkipBlinding => vec![F::zero(); n],
                _ => blinding_row(&spec, &seeds.client[1], kind, rep)?,
            };
            let blinds = [z0.as_slice(), z1.as_slice()];
            // every server's value is computed before any is checked
            let l = match kind {
                TestKind::Degree => degree_combination(&states.rows, &coin, &blinds),
                TestKind::Permutation => perm_combination(&basis, params.w, &constraints, &states.rows, &coin, &blinds),
                TestKind::Equality => equality_combination(circuit, &states, &coin, &blinds),
            };
            let checked = check_broadcast(&spec, kind, &l);
            broadcasts.push(l);
            if let Err(failure) = checked {
                verdict = Err(OuterAbort::Test {
                    test: kind,
                    repetition: rep,
                    failure,
                });
                break 'tests;
            }
        }
    }
    let result = verdict.and_then(|()| {
        let rows: Vec<Vec<F>> = circuit
            .outputs
            .iter()
            .map(|&r| states.block_ref(circuit, r).to_vec())
            .collect();
        Ok(reveal_outputs(&spec, &rows)?.concat())
    });
    Ok(StandaloneRun {
        result,
        states,
        broadcasts,
    })
}

fn run_layer<F: PrimeField>(
    spec: &CodeSpec<F>,
    circuit: &LayeredCircuit,
    j: usize,
    seeds: &SessionSeeds,
    states: &mut ServerStates<F>,
    deviation: &Deviation,
) -> Result<(), OuterError> {
    let n = spec.n();
    let layer = &circuit.layers[j];
    let m = layer.block_count();

    let sources = layer_sources(circuit, j);
    let rho = joint_masks::<F>(seeds, n, j, SplitSite::Rearrange, sources.len());
    let rec1 = rho;
    let rec0: Vec<Vec<F>> = sources
        .iter()
        .zip(&rec1)
        .map(|(r, mask)| sub_vec(states.block_ref(circuit, *r), mask))
        .collect();
    let msg0 = client_rearrange(spec, circuit, j, &rec0, &zero_encodings(spec, &seeds.client[0], j, SplitSite::Rearrange, 2 * m))?;
    let msg1 = client_rearrange(spec, circuit, j, &rec1, &zero_encodings(spec, &seeds.client[1], j, SplitSite::Rearrange, 2 * m))?;
    for b in 0..m {
        *states.row_mut(circuit, TraceBlock::Left { layer: j, block: b }) = add_vec(&msg0[b], &msg1[b]);
        *states.row_mut(circuit, TraceBlock::Right { layer: j, block: b }) = add_vec(&msg0[m + b], &msg1[m + b]);
    }

    let left = |s: &ServerStates<F>, b| s.row(circuit, TraceBlock::Left { layer: j, block: b }).to_vec();
    let right = |s: &ServerStates<F>, b| s.row(circuit, TraceBlock::Right { layer: j, block: b }).to_vec();
    match layer.op {
        Op::Add | Op::Sub => {
            for b in 0..m {
                let out = eval_layer_linear(layer.op, &left(states, b), &right(states, b));
                *states.row_mut(circuit, TraceBlock::Out { layer: j, block: b }) = out;
            }
        }
        Op::Mul => {
            for b in 0..m {
                states.prod[j][b] = eval_layer_mul(&left(states, b), &right(states, b));
            }
            let rho = joint_masks::<F>(seeds, n, j, SplitSite::Reduce, m);
            let z0 = zero_encodings(spec, &seeds.client[0], j, SplitSite::Reduce, m);
            let z1 = zero_encodings(spec, &seeds.client[1], j, SplitSite::Reduce, m);
            for b in 0..m {
                let m0 = client_reduce(spec, &sub_vec(&states.prod[j][b], &rho[b]), &z0[b])?;
                let mut m1 = client_reduce(spec, &rho[b], &z1[b])?;
                if b == 0 && *deviation == (Deviation::BadDegreeReduction { layer: j }) {
                    let mut unit = vec![F::zero(); spec.w()];
                    unit[0] = F::one();
                    m1 = add_vec(&m1, &spec.encode_deterministic(&unit)?.shares);
                }
                *states.row_mut(circuit, TraceBlock::Out { layer: j, block: b }) = add_vec(&m0, &m1);
            }
        }
    }

    if let Deviation::AdditiveShare { layer, servers, delta } = deviation {
        if *layer == j {
            let d = F::from_u64(*delta);
            for b in 0..m {
                let row = states.row_mut(circuit, TraceBlock::Out { layer: j, block: b });
                for &c in servers {
                    row[c] += d;
                }
            }
        }
    }
    Ok(())
}
