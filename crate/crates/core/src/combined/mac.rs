//! Input MACs and the circuit augmentation that computes the flag.
//!
//! Every client input element `x` carries an affine tag `m = k1*x + k2`.
//! The augmented circuit takes the keys and tags as extra inputs of the same
//! owner, public coefficients `r` from a coin toss, and reveals one more
//! output block whose slot 0 is `sum r_i (m_i - k1_i x_i - k2_i)`.

use rand::Rng;
use thiserror::Error;

use crate::circuit::{BlockRef, CircuitError, InputBlock, Layer, LayeredCircuit, Op, Owner, Source};
use crate::field::PrimeField;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MacError {
    #[error("MAC key k1 for element {0} is zero")]
    DegenerateKey(usize),
    #[error("MAC input has {values} values but {keys} key pairs and {tags} tags")]
    Length { values: usize, keys: usize, tags: usize },
}

pub fn mac_tag<F: PrimeField>(k1: F, k2: F, x: F) -> F {
    k1 * x + k2
}

/// One client's inputs with per-element keys and tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacInput<F> {
    pub values: Vec<F>,
    pub k1: Vec<F>,
    pub k2: Vec<F>,
    pub tags: Vec<F>,
}

impl<F: PrimeField> MacInput<F> {
    /// Fresh keys with `k1 != 0` and honest tags.
    pub fn generate<R: Rng + ?Sized>(values: &[F], rng: &mut R) -> Self {
        let k1: Vec<F> = values
            .iter()
            .map(|_| loop {
                let k = F::random(rng);
                if !k.is_zero() {
                    break k;
                }
            })
            .collect();
        let k2: Vec<F> = values.iter().map(|_| F::random(rng)).collect();
        let tags = values
            .iter()
            .zip(k1.iter().zip(&k2))
            .map(|(&x, (&a, &b))| mac_tag(a, b, x))
            .collect();
        MacInput {
            values: values.to_vec(),
            k1,
            k2,
            tags,
        }
    }

    pub fn validate(&self) -> Result<(), MacError> {
        let n = self.values.len();
        if self.k1.len() != n || self.k2.len() != n || self.tags.len() != n {
            return Err(MacError::Length {
                values: n,
                keys: self.k1.len().min(self.k2.len()),
                tags: self.tags.len(),
            });
        }
        match self.k1.iter().position(|k| k.is_zero()) {
            Some(i) => Err(MacError::DegenerateKey(i)),
            None => Ok(()),
        }
    }
}

/// A circuit extended with the flag computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacCircuit {
    pub circuit: LayeredCircuit,
    /// Outputs of the original circuit; the flag block follows them.
    pub base_outputs: usize,
    /// Public inputs of the original circuit; the coefficients follow them.
    pub base_public: usize,
    /// Number of flag coefficients, one per client input element.
    pub coefficients: usize,
    /// Client-owned input blocks of the original circuit, in order.
    client_blocks: Vec<(usize, Owner, usize)>,
}

impl MacCircuit {
    /// Inputs of `owner` in the augmented layout: values, then per block its
    /// `k1`, `k2` and tag slices.
    pub fn party_inputs<F: PrimeField>(&self, owner: Owner, mac: &MacInput<F>) -> Vec<F> {
        let mut out = mac.values.clone();
        let mut cursor = 0;
        for &(_, o, used) in &self.client_blocks {
            if o != owner {
                continue;
            }
            let r = cursor..cursor + used;
            out.extend_from_slice(&mac.k1[r.clone()]);
            out.extend_from_slice(&mac.k2[r.clone()]);
            out.extend_from_slice(&mac.tags[r]);
            cursor += used;
        }
        out
    }

    pub fn public_inputs<F: PrimeField>(&self, base: &[F], coefficients: &[F]) -> Vec<F> {
        let mut v = base.to_vec();
        v.extend_from_slice(coefficients);
        v
    }

    /// Splits revealed outputs into the original outputs and the flag.
    pub fn split_outputs<F: PrimeField>(&self, outputs: &[F]) -> (Vec<F>, F) {
        let w = self.circuit.w;
        let cut = self.base_outputs * w;
        (outputs[..cut].to_vec(), outputs[cut])
    }
}

/// Appends the flag computation to `c`. The extra layers read only input
/// blocks, so the original outputs keep their layer indices.
pub fn augment_with_mac(c: &LayeredCircuit) -> Result<MacCircuit, CircuitError> {
    c.validate()?;
    let w = c.w;
    let base_public = c.input_count(Owner::Public);
    let client_blocks: Vec<(usize, Owner, usize)> = c
        .inputs
        .iter()
        .enumerate()
        .filter(|(_, b)| b.owner != Owner::Public)
        .map(|(i, b)| (i, b.owner, b.used))
        .collect();
    let mut out = c.clone();
    let coefficients = client_blocks.iter().map(|b| b.2).sum();
    if client_blocks.is_empty() {
        return Ok(MacCircuit {
            circuit: out,
            base_outputs: c.outputs.len(),
            base_public,
            coefficients: 0,
            client_blocks,
        });
    }
    // key, tag and coefficient blocks per client block
    let mut aux = Vec::new();
    for &(_, owner, used) in &client_blocks {
        let base = out.inputs.len();
        out.inputs.push(InputBlock { owner, used });
        out.inputs.push(InputBlock { owner, used });
        out.inputs.push(InputBlock { owner, used });
        aux.push((base, base + 1, base + 2));
    }
    let coeff_blocks: Vec<usize> = client_blocks
        .iter()
        .map(|&(_, _, used)| {
            out.inputs.push(InputBlock {
                owner: Owner::Public,
                used,
            });
            out.inputs.len() - 1
        })
        .collect();

    let whole = |block: usize| -> Vec<Source> { (0..w).map(|slot| Source::Input { block, slot }).collect() };
    let from_layer = |layer: usize, block: usize| -> Vec<Source> {
        (0..w).map(|slot| Source::Out { layer, block, slot }).collect()
    };
    let nb = client_blocks.len();
    let l_kx = out.layers.len();
    out.layers.push(Layer {
        op: Op::Mul,
        left: aux.iter().map(|a| whole(a.0)).collect(),
        right: client_blocks.iter().map(|b| whole(b.0)).collect(),
    });
    let l_mk = out.layers.len();
    out.layers.push(Layer {
        op: Op::Sub,
        left: aux.iter().map(|a| whole(a.2)).collect(),
        right: aux.iter().map(|a| whole(a.1)).collect(),
    });
    let l_d = out.layers.len();
    out.layers.push(Layer {
        op: Op::Sub,
        left: (0..nb).map(|b| from_layer(l_mk, b)).collect(),
        right: (0..nb).map(|b| from_layer(l_kx, b)).collect(),
    });
    let mut last = out.layers.len();
    out.layers.push(Layer {
        op: Op::Mul,
        left: (0..nb).map(|b| from_layer(l_d, b)).collect(),
        right: coeff_blocks.iter().map(|&b| whole(b)).collect(),
    });
    let mut count = nb;
    while count > 1 {
        let half = count.div_ceil(2);
        let zero = vec![Source::Zero; w];
        out.layers.push(Layer {
            op: Op::Add,
            left: (0..half).map(|i| from_layer(last, 2 * i)).collect(),
            right: (0..half)
                .map(|i| if 2 * i + 1 < count { from_layer(last, 2 * i + 1) } else { zero.clone() })
                .collect(),
        });
        last = out.layers.len() - 1;
        count = half;
    }
    let mut width = w;
    while width > 1 {
        let half = width.div_ceil(2);
        let src = |slot: usize| Source::Out {
            layer: last,
            block: 0,
            slot,
        };
        out.layers.push(Layer {
            op: Op::Add,
            left: vec![(0..w).map(|s| if s < half { src(s) } else { Source::Zero }).collect()],
            right: vec![(0..w)
                .map(|s| if s < half && s + half < width { src(s + half) } else { Source::Zero })
                .collect()],
        });
        last = out.layers.len() - 1;
        width = half;
    }
    out.outputs.push(BlockRef::Out { layer: last, block: 0 });
    out.validate()?;
    Ok(MacCircuit {
        circuit: out,
        base_outputs: c.outputs.len(),
        base_public,
        coefficients,
        client_blocks,
    })
}

/// The functionality with the flag, evaluated in the clear: returns the
/// original outputs and the flag.
pub fn run_f_prime<F: PrimeField>(
    mc: &MacCircuit,
    x: &MacInput<F>,
    y: &MacInput<F>,
    public: &[F],
    coefficients: &[F],
) -> Result<(Vec<F>, F), CircuitError> {
    let xs = mc.party_inputs(Owner::Client0, x);
    let ys = mc.party_inputs(Owner::Client1, y);
    let all = mc.circuit.eval_with_public(&xs, &ys, &mc.public_inputs(public, coefficients))?;
    if mc.coefficients == 0 {
        return Ok((all, F::zero()));
    }
    Ok(mc.split_outputs(&all))
}
