//! Quantized MLPs with quadratic activations.
//!
//! Fixed-point scales grow instead of being truncated. With inputs and
//! weights at scale `f`, dense layer `l` produces values at scale
//! `s_0 = 2f`, `s_{l+1} = 2 s_l + f`; its bias is lifted by `2^(s_l - f)`.
//! Squaring doubles the scale. A three-layer model therefore emits logits at
//! scale `11f`, and `f` must be small enough for every wire to stay below
//! `p/2` so that the centered lift recovers the integer.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{BlockRef, CircuitError, InputBlock, Layer, LayeredCircuit, Op, Owner, Source};
use crate::field::PrimeField;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("features CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid model: {0}")]
    Schema(String),
    #[error("feature column `{0}` is missing")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not an integer")]
    BadValue { row: usize, column: String, value: String },
    #[error("expected {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("worst-case wire magnitude {bound} exceeds the field limit {limit}")]
    Overflow { bound: u128, limit: u128 },
    #[error("layer {layer} leaves the 63-bit signed range")]
    IntermediateOverflow { layer: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Dense layer with row-major `rows x cols` weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<i64>,
    pub bias: Vec<i64>,
}

impl DenseLayer {
    pub fn weight(&self, i: usize, j: usize) -> i64 {
        self.weights[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub party: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default)]
    pub float_acc: f64,
    #[serde(default)]
    pub quant_acc: f64,
}

fn default_bits() -> u32 {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantModel {
    pub layers: Vec<DenseLayer>,
    pub scale_f: u32,
    pub feature_schema: Vec<FeatureSpec>,
    #[serde(default)]
    pub metadata: ModelMetadata,
    /// Declared magnitude bound on quantized features, `2^input_bits - 1`.
    #[serde(default = "default_bits")]
    pub input_bits: u32,
    /// Declared magnitude bound on quantized weights and biases.
    #[serde(default = "default_bits")]
    pub weight_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceResult {
    /// Logits at scale `2^scale`.
    pub logits: Vec<i64>,
    pub class: usize,
    pub scale: u32,
}

/// Index of the largest logit; ties go to the lower index.
pub fn argmax(logits: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

impl QuantModel {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::Schema(m));
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        if self.scale_f > 62 || self.input_bits > 62 || self.weight_bits > 62 {
            return bad("scale or bit width out of range".into());
        }
        if self.layers[0].cols != self.feature_schema.len() {
            return bad(format!(
                "first layer has {} columns but the schema lists {} features",
                self.layers[0].cols,
                self.feature_schema.len()
            ));
        }
        let wmax = (1i64 << self.weight_bits) - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.rows == 0 || layer.cols == 0 {
                return bad(format!("layer {l} is empty"));
            }
            if l > 0 && layer.cols != self.layers[l - 1].rows {
                return bad(format!("layer {l} expects {} inputs, previous layer has {}", layer.cols, self.layers[l - 1].rows));
            }
            if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return bad(format!("layer {l} weight or bias length does not match {}x{}", layer.rows, layer.cols));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| v.abs() > wmax) {
                return bad(format!("layer {l} has a value wider than {} bits", self.weight_bits));
            }
        }
        let mut seen = HashSet::new();
        for f in &self.feature_schema {
            if f.party > 1 {
                return bad(format!("feature `{}` owned by party {}", f.name, f.party));
            }
            if !seen.insert(f.name.as_str()) {
                return bad(format!("feature `{}` listed twice", f.name));
            }
        }
        Ok(())
    }

    pub fn features(&self) -> usize {
        self.feature_schema.len()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    /// Names of the features owned by `party`, in schema order.
    pub fn party_features(&self, party: usize) -> Vec<&str> {
        self.feature_schema
            .iter()
            .filter(|f| f.party == party)
            .map(|f| f.name.as_str())
            .collect()
    }

    /// Pre-activation scale exponent of every layer.
    pub fn layer_scales(&self) -> Vec<u32> {
        let f = self.scale_f;
        let mut s = 2 * f;
        let mut out = Vec::with_capacity(self.layers.len());
        for _ in &self.layers {
            out.push(s);
            s = 2 * s + f;
        }
        out
    }

    /// Biases lifted to their layer's scale.
    pub fn scaled_biases(&self) -> Result<Vec<Vec<i64>>, NnError> {
        self.layers
            .iter()
            .zip(self.layer_scales())
            .enumerate()
            .map(|(l, (layer, s))| {
                let shift = s - self.scale_f;
                layer
                    .bias
                    .iter()
                    .map(|&b| fit_i64(1i128.checked_shl(shift).filter(|_| shift < 126).and_then(|m| m.checked_mul(i128::from(b))), l))
                    .collect()
            })
            .collect()
    }

    /// Splits a full feature row into the two parties' parts.
    pub fn split_features(&self, row: &[i64]) -> Result<[Vec<i64>; 2], NnError> {
        if row.len() != self.features() {
            return Err(NnError::FeatureCount {
                expected: self.features(),
                got: row.len(),
            });
        }
        let mut out = [Vec::new(), Vec::new()];
        for (f, &v) in self.feature_schema.iter().zip(row) {
            out[f.party].push(v);
        }
        Ok(out)
    }

    /// Inverse of `split_features`.
    pub fn merge_features(&self, p0: &[i64], p1: &[i64]) -> Result<Vec<i64>, NnError> {
        let parts = [p0, p1];
        for (party, part) in parts.iter().enumerate() {
            let expected = self.party_features(party).len();
            if part.len() != expected {
                return Err(NnError::FeatureCount { expected, got: part.len() });
            }
        }
        let mut cursor = [0usize; 2];
        Ok(self
            .feature_schema
            .iter()
            .map(|f| {
                let v = parts[f.party][cursor[f.party]];
                cursor[f.party] += 1;
                v
            })
            .collect())
    }
}

fn fit_i64(v: Option<i128>, layer: usize) -> Result<i64, NnError> {
    v.and_then(|v| i64::try_from(v).ok())
        .ok_or(NnError::IntermediateOverflow { layer })
}

/// Exact integer inference at the scales documented at module level.
pub fn infer_clear(model: &QuantModel, features: &[i64]) -> Result<InferenceResult, NnError> {
    model.validate()?;
    if features.len() != model.features() {
        return Err(NnError::FeatureCount {
            expected: model.features(),
            got: features.len(),
        });
    }
    let biases = model.scaled_biases()?;
    let mut act: Vec<i64> = features.to_vec();
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        let mut z = Vec::with_capacity(layer.rows);
        for i in 0..layer.rows {
            let mut acc = i128::from(biases[l][i]);
            for (j, &a) in act.iter().enumerate() {
                acc += i128::from(layer.weight(i, j)) * i128::from(a);
                fit_i64(Some(acc), l)?;
            }
            z.push(fit_i64(Some(acc), l)?);
        }
        act = if l == last {
            z
        } else {
            z.iter()
                .map(|&v| fit_i64(Some(i128::from(v) * i128::from(v)), l))
                .collect::<Result<_, _>>()?
        };
    }
    Ok(InferenceResult {
        class: argmax(&act),
        logits: act,
        scale: *model.layer_scales().last().unwrap(),
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<QuantModel, NnError> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let model: QuantModel = serde_json::from_str(&text)?;
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &QuantModel, path: impl AsRef<Path>) -> Result<(), NnError> {
    let mut f = File::create(path)?;
    f.write_all(serde_json::to_string_pretty(model)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// One party's feature rows, in schema order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTable {
    pub party: usize,
    pub names: Vec<String>,
    pub rows: Vec<Vec<i64>>,
    /// Present when the file has a `label` column.
    pub labels: Option<Vec<usize>>,
}

pub const LABEL_COLUMN: &str = "label";

/// Reads the columns of `party`'s features from a CSV with a header row.
/// Other columns are ignored, except `label`.
pub fn load_features(path: impl AsRef<Path>, model: &QuantModel, party: usize) -> Result<FeatureTable, NnError> {
    read_features(File::open(path)?, model, party)
}

pub fn read_features<R: Read>(reader: R, model: &QuantModel, party: usize) -> Result<FeatureTable, NnError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<String> = model.party_features(party).into_iter().map(String::from).collect();
    let cols: Vec<usize> = names
        .iter()
        .map(|n| header.iter().position(|h| h == n).ok_or_else(|| NnError::MissingColumn(n.clone())))
        .collect::<Result<_, _>>()?;
    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    let mut rows = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize, name: &str| -> Result<i64, NnError> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse().map_err(|_| NnError::BadValue {
                row: r + 1,
                column: name.to_string(),
                value: raw.to_string(),
            })
        };
        rows.push(cols.iter().zip(&names).map(|(&c, n)| parse(c, n)).collect::<Result<Vec<_>, _>>()?);
        if let (Some(c), Some(l)) = (label_col, labels.as_mut()) {
            let v = parse(c, LABEL_COLUMN)?;
            l.push(usize::try_from(v).map_err(|_| NnError::BadValue {
                row: r + 1,
                column: LABEL_COLUMN.into(),
                value: v.to_string(),
            })?);
        }
    }
    Ok(FeatureTable { party, names, rows, labels })
}

/// Writes a feature table with a header row; labels go last when present.
pub fn write_features<W: Write>(writer: W, table: &FeatureTable) -> Result<(), NnError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = table.names.iter().map(String::as_str).collect();
    if table.labels.is_some() {
        header.push(LABEL_COLUMN);
    }
    w.write_record(&header)?;
    for (i, row) in table.rows.iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(i64::to_string).collect();
        if let Some(l) = &table.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A model compiled to a circuit, with the input layout needed to feed it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModel {
    pub circuit: LayeredCircuit,
    pub model: QuantModel,
    /// Worst-case wire magnitude found by interval analysis.
    pub bound: u128,
}

impl CompiledModel {
    /// Private inputs of `party`: its features, then for party 0 every
    /// weight followed by every lifted bias.
    pub fn party_inputs<F: PrimeField>(&self, party: usize, features: &[i64]) -> Result<Vec<F>, NnError> {
        let expected = self.model.party_features(party).len();
        if features.len() != expected {
            return Err(NnError::FeatureCount { expected, got: features.len() });
        }
        let mut v: Vec<F> = features.iter().map(|&x| F::from_i64(x)).collect();
        if party == 0 {
            v.extend(self.parameters()?.into_iter().map(F::from_i64));
        }
        Ok(v)
    }

    fn parameters(&self) -> Result<Vec<i64>, NnError> {
        let mut p: Vec<i64> = self.model.layers.iter().flat_map(|l| l.weights.iter().copied()).collect();
        p.extend(self.model.scaled_biases()?.concat());
        Ok(p)
    }

    /// Reads logits from revealed circuit outputs.
    pub fn decode<F: PrimeField>(&self, outputs: &[F]) -> InferenceResult {
        let logits: Vec<i64> = outputs[..self.model.outputs()].iter().map(|v| v.to_signed()).collect();
        InferenceResult {
            class: argmax(&logits),
            logits,
            scale: *self.model.layer_scales().last().unwrap(),
        }
    }
}

struct Builder {
    w: usize,
    layers: Vec<Layer>,
}

impl Builder {
    /// Appends one layer over `pairs`, packed densely, and returns where
    /// each result lands.
    fn layer(&mut self, op: Op, pairs: &[(Source, Source)]) -> Vec<Source> {
        let w = self.w;
        let j = self.layers.len();
        let blocks = pairs.len().div_ceil(w).max(1);
        let mut left = vec![vec![Source::Zero; w]; blocks];
        let mut right = vec![vec![Source::Zero; w]; blocks];
        for (i, &(a, b)) in pairs.iter().enumerate() {
            left[i / w][i % w] = a;
            right[i / w][i % w] = b;
        }
        self.layers.push(Layer { op, left, right });
        (0..pairs.len())
            .map(|i| Source::Out {
                layer: j,
                block: i / w,
                slot: i % w,
            })
            .collect()
    }

    /// Sums each group with a tree of Add layers.
    fn sum_groups(&mut self, mut groups: Vec<Vec<Source>>) -> Vec<Source> {
        while groups.iter().any(|g| g.len() > 1) {
            let mut pairs = Vec::new();
            let mut sizes = Vec::new();
            for g in &groups {
                let before = pairs.len();
                for c in g.chunks(2) {
                    pairs.push((c[0], c.get(1).copied().unwrap_or(Source::Zero)));
                }
                sizes.push(pairs.len() - before);
            }
            let outs = self.layer(Op::Add, &pairs);
            let mut it = outs.into_iter();
            groups = sizes.iter().map(|&k| it.by_ref().take(k).collect()).collect();
        }
        groups.into_iter().map(|g| g[0]).collect()
    }
}

/// Input blocks for `count` values owned by `owner`, appended to `inputs`;
/// returns the source of each value.
fn input_group(inputs: &mut Vec<InputBlock>, w: usize, owner: Owner, count: usize) -> Vec<Source> {
    let first = inputs.len();
    for b in 0..count.div_ceil(w) {
        inputs.push(InputBlock {
            owner,
            used: (count - b * w).min(w),
        });
    }
    (0..count)
        .map(|i| Source::Input {
            block: first + i / w,
            slot: i % w,
        })
        .collect()
}

/// Compiles `model` to a width-`w` circuit and checks that no wire can wrap
/// around in `F`. Party 0 supplies the weights and biases.
pub fn compile_to_circuit<F: PrimeField>(model: &QuantModel, w: usize) -> Result<CompiledModel, NnError> {
    model.validate()?;
    if w == 0 {
        return Err(NnError::Schema("block width must be positive".into()));
    }
    let mut inputs = Vec::new();
    let counts = [model.party_features(0).len(), model.party_features(1).len()];
    let feat0 = input_group(&mut inputs, w, Owner::Client0, counts[0]);
    let feat1 = input_group(&mut inputs, w, Owner::Client1, counts[1]);
    let n_weights: usize = model.layers.iter().map(|l| l.weights.len()).sum();
    let n_bias: usize = model.layers.iter().map(|l| l.rows).sum();
    let params = input_group(&mut inputs, w, Owner::Client0, n_weights + n_bias);
    let (weight_src, bias_src) = params.split_at(n_weights);

    let mut cursor = [0usize; 2];
    let mut act: Vec<Source> = model
        .feature_schema
        .iter()
        .map(|f| {
            let src = if f.party == 0 { feat0[cursor[0]] } else { feat1[cursor[1]] };
            cursor[f.party] += 1;
            src
        })
        .collect();

    let mut b = Builder { w, layers: Vec::new() };
    let (mut wo, mut bo) = (0, 0);
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        let pairs: Vec<(Source, Source)> = (0..layer.rows)
            .flat_map(|i| (0..layer.cols).map(move |j| (i, j)))
            .map(|(i, j)| (weight_src[wo + i * layer.cols + j], act[j]))
            .collect();
        let prods = b.layer(Op::Mul, &pairs);
        let groups: Vec<Vec<Source>> = (0..layer.rows)
            .map(|i| {
                let mut g = prods[i * layer.cols..(i + 1) * layer.cols].to_vec();
                g.push(bias_src[bo + i]);
                g
            })
            .collect();
        let z = b.sum_groups(groups);
        wo += layer.weights.len();
        bo += layer.rows;
        act = if l == last {
            z
        } else {
            let sq: Vec<(Source, Source)> = z.iter().map(|&s| (s, s)).collect();
            b.layer(Op::Mul, &sq)
        };
    }
    let top = b.layers.len() - 1;
    let outputs = (0..b.layers[top].block_count())
        .map(|block| BlockRef::Out { layer: top, block })
        .collect();
    let circuit = LayeredCircuit {
        w,
        inputs,
        layers: b.layers,
        outputs,
    };
    circuit.validate()?;

    let feature_bound = (1u128 << model.input_bits) - 1;
    let mut values: Vec<u128> = vec![feature_bound; counts[0] + counts[1]];
    values.extend(model.layers.iter().flat_map(|l| l.weights.iter().map(|v| u128::from(v.unsigned_abs()))));
    values.extend(model.scaled_biases()?.concat().into_iter().map(|v| u128::from(v.unsigned_abs())));
    let mut bounds = Vec::with_capacity(circuit.inputs.len());
    let mut it = values.into_iter();
    for blk in &circuit.inputs {
        let mut slots: Vec<u128> = it.by_ref().take(blk.used).collect();
        slots.resize(w, 0);
        bounds.push(slots);
    }
    let bound = circuit.check_no_overflow(&bounds)?;
    let limit = u128::from((F::MODULUS - 1) / 2);
    if bound > limit {
        return Err(NnError::Overflow { bound, limit });
    }
    Ok(CompiledModel {
        circuit,
        model: model.clone(),
        bound,
    })
}

