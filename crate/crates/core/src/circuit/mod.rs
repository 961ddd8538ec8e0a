//! Layered arithmetic circuits over width-`w` blocks.
//!
//! Layer 0 holds the input blocks, each owned by one client or filled with
//! public coin values. Every computation layer applies a single operation to
//! aligned (left, right) block pairs; each slot of a left or right block names
//! its source: an input slot, an output slot of an earlier layer, or the
//! constant zero. Sources may be reused, which gives replication.

mod text;

pub use text::{parse_circuit, print_circuit};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::PrimeField;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("malformed circuit: {0}")]
    Malformed(String),
    #[error("{owner} supplied {got} input values, circuit expects {expected}")]
    InputLength {
        owner: Owner,
        expected: usize,
        got: usize,
    },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Client0,
    Client1,
    /// Filled with jointly tossed coins at run time.
    Public,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Owner::Client0 => "client0",
            Owner::Client1 => "client1",
            Owner::Public => "public",
        })
    }
}

impl Owner {
    pub fn party(self) -> Option<usize> {
        match self {
            Owner::Client0 => Some(0),
            Owner::Client1 => Some(1),
            Owner::Public => None,
        }
    }
}

/// Where the value of one left/right slot comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Input { block: usize, slot: usize },
    Out { layer: usize, block: usize, slot: usize },
    Zero,
}

/// A whole block that can be revealed: an input block or a layer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockRef {
    Input(usize),
    Out { layer: usize, block: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputBlock {
    pub owner: Owner,
    /// Number of leading slots carrying values; the rest are zero padding.
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub op: Op,
    /// `left[b][s]` is the source of slot `s` of left block `b`.
    pub left: Vec<Vec<Source>>,
    pub right: Vec<Vec<Source>>,
}

impl Layer {
    pub fn block_count(&self) -> usize {
        self.left.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    pub w: usize,
    pub inputs: Vec<InputBlock>,
    pub layers: Vec<Layer>,
    pub outputs: Vec<BlockRef>,
}

/// Position of a block in the concatenated trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceBlock {
    Input(usize),
    Left { layer: usize, block: usize },
    Right { layer: usize, block: usize },
    Out { layer: usize, block: usize },
}

/// Block values of an evaluation: inputs, then per layer its left, right and
/// output blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<F> {
    pub inputs: Vec<Vec<F>>,
    pub left: Vec<Vec<Vec<F>>>,
    pub right: Vec<Vec<Vec<F>>>,
    pub out: Vec<Vec<Vec<F>>>,
}

impl<F: PrimeField> Trace<F> {
    pub fn block(&self, b: TraceBlock) -> &[F] {
        match b {
            TraceBlock::Input(i) => &self.inputs[i],
            TraceBlock::Left { layer, block } => &self.left[layer][block],
            TraceBlock::Right { layer, block } => &self.right[layer][block],
            TraceBlock::Out { layer, block } => &self.out[layer][block],
        }
    }

    pub fn block_mut(&mut self, b: TraceBlock) -> &mut Vec<F> {
        match b {
            TraceBlock::Input(i) => &mut self.inputs[i],
            TraceBlock::Left { layer, block } => &mut self.left[layer][block],
            TraceBlock::Right { layer, block } => &mut self.right[layer][block],
            TraceBlock::Out { layer, block } => &mut self.out[layer][block],
        }
    }

    /// All values in trace order.
    pub fn flatten(&self, circuit: &LayeredCircuit) -> Vec<F> {
        circuit
            .trace_blocks()
            .into_iter()
            .flat_map(|b| self.block(b).to_vec())
            .collect()
    }

    pub fn block_ref(&self, r: BlockRef) -> &[F] {
        match r {
            BlockRef::Input(i) => &self.inputs[i],
            BlockRef::Out { layer, block } => &self.out[layer][block],
        }
    }
}

/// Sparse copy constraints `A x = b` over the flattened trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermConstraints<F> {
    /// Each row is a list of `(variable, coefficient)` pairs.
    pub rows: Vec<Vec<(usize, F)>>,
    pub b: Vec<F>,
    pub num_vars: usize,
}

impl<F: PrimeField> PermConstraints<F> {
    pub fn is_satisfied(&self, x: &[F]) -> bool {
        self.violated_rows(x).is_empty()
    }

    pub fn violated_rows(&self, x: &[F]) -> Vec<usize> {
        self.rows
            .iter()
            .zip(&self.b)
            .enumerate()
            .filter(|(_, (row, &b))| row.iter().map(|&(i, c)| c * x[i]).sum::<F>() != b)
            .map(|(i, _)| i)
            .collect()
    }

    /// `r^T A` as a dense vector over the trace variables.
    pub fn combine(&self, r: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.num_vars];
        for (row, &ri) in self.rows.iter().zip(r) {
            for &(i, c) in row {
                out[i] += ri * c;
            }
        }
        out
    }
}

impl LayeredCircuit {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_count(&self, owner: Owner) -> usize {
        self.inputs
            .iter()
            .filter(|b| b.owner == owner)
            .map(|b| b.used)
            .sum()
    }

    pub fn mul_blocks(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.op == Op::Mul)
            .map(Layer::block_count)
            .sum()
    }

    pub fn mul_layers(&self) -> usize {
        self.layers.iter().filter(|l| l.op == Op::Mul).count()
    }

    /// Trace blocks in canonical order.
    pub fn trace_blocks(&self) -> Vec<TraceBlock> {
        let mut out: Vec<TraceBlock> = (0..self.inputs.len()).map(TraceBlock::Input).collect();
        for (j, l) in self.layers.iter().enumerate() {
            for b in 0..l.block_count() {
                out.push(TraceBlock::Left { layer: j, block: b });
            }
            for b in 0..l.block_count() {
                out.push(TraceBlock::Right { layer: j, block: b });
            }
            for b in 0..l.block_count() {
                out.push(TraceBlock::Out { layer: j, block: b });
            }
        }
        out
    }

    /// Index of each trace block in [`Self::trace_blocks`].
    pub fn trace_index(&self, b: TraceBlock) -> usize {
        let base_of = |layer: usize| {
            self.inputs.len()
                + self.layers[..layer]
                    .iter()
                    .map(|l| 3 * l.block_count())
                    .sum::<usize>()
        };
        match b {
            TraceBlock::Input(i) => i,
            TraceBlock::Left { layer, block } => base_of(layer) + block,
            TraceBlock::Right { layer, block } => {
                base_of(layer) + self.layers[layer].block_count() + block
            }
            TraceBlock::Out { layer, block } => {
                base_of(layer) + 2 * self.layers[layer].block_count() + block
            }
        }
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let bad = |m: String| Err(CircuitError::Malformed(m));
        if self.w == 0 {
            return bad("block width must be positive".into());
        }
        for (i, b) in self.inputs.iter().enumerate() {
            if b.used > self.w {
                return bad(format!("input block {i} uses {} > w slots", b.used));
            }
        }
        for (j, l) in self.layers.iter().enumerate() {
            if l.left.len() != l.right.len() || l.left.is_empty() {
                return bad(format!("layer {j} needs equal, nonzero left/right block counts"));
            }
            for blk in l.left.iter().chain(&l.right) {
                if blk.len() != self.w {
                    return bad(format!("layer {j} has a block of width {}", blk.len()));
                }
                for src in blk {
                    self.check_source(*src, j)?;
                }
            }
        }
        for r in &self.outputs {
            match *r {
                BlockRef::Input(i) if i >= self.inputs.len() => {
                    return bad(format!("output references missing input block {i}"))
                }
                BlockRef::Out { layer, block }
                    if layer >= self.layers.len() || block >= self.layers[layer].block_count() =>
                {
                    return bad(format!("output references missing block {layer}.{block}"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn check_source(&self, src: Source, layer: usize) -> Result<(), CircuitError> {
        let ok = match src {
            Source::Zero => true,
            Source::Input { block, slot } => block < self.inputs.len() && slot < self.w,
            Source::Out { layer: l, block, slot } => {
                l < layer && block < self.layers[l].block_count() && slot < self.w
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CircuitError::Malformed(format!(
                "layer {layer} reads invalid source {src:?}"
            )))
        }
    }

    /// Arranges flat client inputs into input blocks. Public blocks are filled
    /// from `public` in order.
    pub fn input_blocks<F: PrimeField>(
        &self,
        x: &[F],
        y: &[F],
        public: &[F],
    ) -> Result<Vec<Vec<F>>, CircuitError> {
        let mut cursors = [0usize; 3];
        let sources = [x, y, public];
        for (owner, idx) in [(Owner::Client0, 0), (Owner::Client1, 1), (Owner::Public, 2)] {
            let expected = self.input_count(owner);
            if sources[idx].len() != expected {
                return Err(CircuitError::InputLength {
                    owner,
                    expected,
                    got: sources[idx].len(),
                });
            }
        }
        Ok(self
            .inputs
            .iter()
            .map(|b| {
                let idx = match b.owner {
                    Owner::Client0 => 0,
                    Owner::Client1 => 1,
                    Owner::Public => 2,
                };
                let mut v = sources[idx][cursors[idx]..cursors[idx] + b.used].to_vec();
                cursors[idx] += b.used;
                v.resize(self.w, F::zero());
                v
            })
            .collect())
    }

    /// Full trace from input blocks.
    pub fn eval_trace<F: PrimeField>(&self, inputs: Vec<Vec<F>>) -> Result<Trace<F>, CircuitError> {
        self.validate()?;
        if inputs.len() != self.inputs.len() || inputs.iter().any(|b| b.len() != self.w) {
            return Err(CircuitError::Malformed("input blocks do not match layout".into()));
        }
        let mut trace = Trace {
            inputs,
            left: Vec::new(),
            right: Vec::new(),
            out: Vec::new(),
        };
        for l in &self.layers {
            let gather = |blocks: &[Vec<Source>], t: &Trace<F>| -> Vec<Vec<F>> {
                blocks
                    .iter()
                    .map(|blk| blk.iter().map(|&s| read_source(t, s)).collect())
                    .collect()
            };
            let left = gather(&l.left, &trace);
            let right = gather(&l.right, &trace);
            let out = left
                .iter()
                .zip(&right)
                .map(|(a, b)| apply_op(l.op, a, b))
                .collect();
            trace.left.push(left);
            trace.right.push(right);
            trace.out.push(out);
        }
        Ok(trace)
    }

    /// Evaluates the circuit; outputs are the revealed blocks concatenated.
    pub fn eval_plain<F: PrimeField>(&self, x: &[F], y: &[F]) -> Result<Vec<F>, CircuitError> {
        self.eval_with_public(x, y, &[])
    }

    pub fn eval_with_public<F: PrimeField>(
        &self,
        x: &[F],
        y: &[F],
        public: &[F],
    ) -> Result<Vec<F>, CircuitError> {
        let trace = self.eval_trace(self.input_blocks(x, y, public)?)?;
        Ok(self
            .outputs
            .iter()
            .flat_map(|&r| trace.block_ref(r).to_vec())
            .collect())
    }

    /// Copy constraints over the flattened trace: one row per left/right slot.
    pub fn perm_constraints<F: PrimeField>(&self) -> PermConstraints<F> {
        let w = self.w;
        let var = |b: TraceBlock, s: usize| self.trace_index(b) * w + s;
        let mut rows = Vec::new();
        for (j, l) in self.layers.iter().enumerate() {
            for (side, blocks) in [(0, &l.left), (1, &l.right)] {
                for (b, blk) in blocks.iter().enumerate() {
                    let dst = if side == 0 {
                        TraceBlock::Left { layer: j, block: b }
                    } else {
                        TraceBlock::Right { layer: j, block: b }
                    };
                    for (s, &src) in blk.iter().enumerate() {
                        let mut row = vec![(var(dst, s), F::one())];
                        match src {
                            Source::Zero => {}
                            Source::Input { block, slot } => {
                                row.push((var(TraceBlock::Input(block), slot), -F::one()))
                            }
                            Source::Out { layer, block, slot } => {
                                row.push((var(TraceBlock::Out { layer, block }, slot), -F::one()))
                            }
                        }
                        rows.push(row);
                    }
                }
            }
        }
        let b = vec![F::zero(); rows.len()];
        PermConstraints {
            rows,
            b,
            num_vars: self.trace_blocks().len() * w,
        }
    }

    /// Worst-case magnitude of any wire under interval analysis, given
    /// per-slot bounds on each input block. Saturates at `u128::MAX`.
    pub fn check_no_overflow(&self, input_bounds: &[Vec<u128>]) -> Result<u128, CircuitError> {
        self.validate()?;
        if input_bounds.len() != self.inputs.len() || input_bounds.iter().any(|b| b.len() != self.w) {
            return Err(CircuitError::Malformed("bounds do not match input layout".into()));
        }
        let mut worst = input_bounds.iter().flatten().copied().max().unwrap_or(0);
        let mut outs: Vec<Vec<Vec<u128>>> = Vec::new();
        let read = |outs: &Vec<Vec<Vec<u128>>>, s: Source| match s {
            Source::Zero => 0,
            Source::Input { block, slot } => input_bounds[block][slot],
            Source::Out { layer, block, slot } => outs[layer][block][slot],
        };
        for l in &self.layers {
            let mut layer_out = Vec::with_capacity(l.block_count());
            for (lb, rb) in l.left.iter().zip(&l.right) {
                let blk: Vec<u128> = lb
                    .iter()
                    .zip(rb)
                    .map(|(&a, &b)| {
                        let (x, y) = (read(&outs, a), read(&outs, b));
                        match l.op {
                            Op::Add | Op::Sub => x.saturating_add(y),
                            Op::Mul => x.saturating_mul(y),
                        }
                    })
                    .collect();
                worst = worst.max(blk.iter().copied().max().unwrap_or(0));
                layer_out.push(blk);
            }
            outs.push(layer_out);
        }
        Ok(worst)
    }
}

fn read_source<F: PrimeField>(t: &Trace<F>, s: Source) -> F {
    match s {
        Source::Zero => F::zero(),
        Source::Input { block, slot } => t.inputs[block][slot],
        Source::Out { layer, block, slot } => t.out[layer][block][slot],
    }
}

pub fn apply_op<F: PrimeField>(op: Op, a: &[F], b: &[F]) -> Vec<F> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match op {
            Op::Add => x + y,
            Op::Sub => x - y,
            Op::Mul => x * y,
        })
        .collect()
}

/// Random well-formed circuit for tests and experiments. Inputs alternate
/// between the two clients; outputs are all blocks of the last layer.
pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    w: usize,
    depth: usize,
    max_blocks: usize,
    input_blocks: usize,
) -> LayeredCircuit {
    assert!(input_blocks >= 1 && max_blocks >= 1 && w >= 1);
    let inputs: Vec<InputBlock> = (0..input_blocks)
        .map(|i| InputBlock {
            owner: if i % 2 == 0 { Owner::Client0 } else { Owner::Client1 },
            used: w,
        })
        .collect();
    let mut layers: Vec<Layer> = Vec::new();
    for j in 0..depth {
        let m = rng.gen_range(1..=max_blocks);
        let op = match rng.gen_range(0..3) {
            0 => Op::Add,
            1 => Op::Sub,
            _ => Op::Mul,
        };
        let pick = |rng: &mut R| -> Source {
            // favour the previous layer so that depth matters
            let roll = rng.gen_range(0..10);
            if roll == 0 {
                Source::Zero
            } else if j == 0 || roll <= 2 {
                Source::Input {
                    block: rng.gen_range(0..input_blocks),
                    slot: rng.gen_range(0..w),
                }
            } else {
                let layer = if roll <= 7 { j - 1 } else { rng.gen_range(0..j) };
                Source::Out {
                    layer,
                    block: rng.gen_range(0..layers[layer].block_count()),
                    slot: rng.gen_range(0..w),
                }
            }
        };
        let left = (0..m).map(|_| (0..w).map(|_| pick(rng)).collect()).collect();
        let right = (0..m).map(|_| (0..w).map(|_| pick(rng)).collect()).collect();
        layers.push(Layer { op, left, right });
    }
    let outputs = if depth == 0 {
        (0..input_blocks).map(BlockRef::Input).collect()
    } else {
        (0..layers[depth - 1].block_count())
            .map(|b| BlockRef::Out {
                layer: depth - 1,
                block: b,
            })
            .collect()
    };
    LayeredCircuit {
        w,
        inputs,
        layers,
        outputs,
    }
}

