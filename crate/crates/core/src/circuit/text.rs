//! Line-oriented circuit format.
//!
//! ```text
//! circuit v1
//! w 2
//! input client0 2
//! input client1 1
//! layer mul 1
//! left 0 i0.0 i0.1
//! right 0 i1.0 -
//! output o0.0
//! output i1
//! ```
//!
//! Sources are `-` (zero), `i<block>.<slot>` (input) or
//! `o<layer>.<block>.<slot>` (layer output). Output lines name whole blocks:
//! `i<block>` or `o<layer>.<block>`. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;

use super::{BlockRef, CircuitError, InputBlock, Layer, LayeredCircuit, Op, Owner, Source};

fn op_name(op: Op) -> &'static str {
    match op {
        Op::Add => "add",
        Op::Sub => "sub",
        Op::Mul => "mul",
    }
}

fn source_token(s: Source) -> String {
    match s {
        Source::Zero => "-".into(),
        Source::Input { block, slot } => format!("i{block}.{slot}"),
        Source::Out { layer, block, slot } => format!("o{layer}.{block}.{slot}"),
    }
}

pub fn print_circuit(c: &LayeredCircuit) -> String {
    let mut s = String::new();
    s.push_str("circuit v1\n");
    let _ = writeln!(s, "w {}", c.w);
    for b in &c.inputs {
        let _ = writeln!(s, "input {} {}", b.owner, b.used);
    }
    for l in &c.layers {
        let _ = writeln!(s, "layer {} {}", op_name(l.op), l.block_count());
        for (name, blocks) in [("left", &l.left), ("right", &l.right)] {
            for (i, blk) in blocks.iter().enumerate() {
                let toks: Vec<String> = blk.iter().map(|&x| source_token(x)).collect();
                let _ = writeln!(s, "{name} {i} {}", toks.join(" "));
            }
        }
    }
    for r in &c.outputs {
        match *r {
            BlockRef::Input(i) => {
                let _ = writeln!(s, "output i{i}");
            }
            BlockRef::Out { layer, block } => {
                let _ = writeln!(s, "output o{layer}.{block}");
            }
        }
    }
    s
}

fn nums(tok: &str, prefix: char, count: usize) -> Option<Vec<usize>> {
    let rest = tok.strip_prefix(prefix)?;
    let parts: Vec<usize> = rest
        .split('.')
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    (parts.len() == count).then_some(parts)
}

fn parse_source(tok: &str) -> Option<Source> {
    if tok == "-" {
        return Some(Source::Zero);
    }
    if let Some(v) = nums(tok, 'i', 2) {
        return Some(Source::Input {
            block: v[0],
            slot: v[1],
        });
    }
    nums(tok, 'o', 3).map(|v| Source::Out {
        layer: v[0],
        block: v[1],
        slot: v[2],
    })
}

pub fn parse_circuit(text: &str) -> Result<LayeredCircuit, CircuitError> {
    let mut w: Option<usize> = None;
    let mut inputs = Vec::new();
    let mut layers: Vec<Layer> = Vec::new();
    let mut outputs = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: &str| CircuitError::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !seen_header {
            if toks != ["circuit", "v1"] {
                return Err(err("expected header `circuit v1`"));
            }
            seen_header = true;
            continue;
        }
        match toks[0] {
            "w" => {
                let v = toks.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| err("bad width"))?;
                w = Some(v);
            }
            "input" => {
                let owner = match toks.get(1) {
                    Some(&"client0") => Owner::Client0,
                    Some(&"client1") => Owner::Client1,
                    Some(&"public") => Owner::Public,
                    _ => return Err(err("unknown input owner")),
                };
                let used = toks.get(2).and_then(|t| t.parse().ok()).ok_or_else(|| err("bad slot count"))?;
                inputs.push(InputBlock { owner, used });
            }
            "layer" => {
                let op = match toks.get(1) {
                    Some(&"add") => Op::Add,
                    Some(&"sub") => Op::Sub,
                    Some(&"mul") => Op::Mul,
                    _ => return Err(err("unknown op")),
                };
                let m: usize = toks.get(2).and_then(|t| t.parse().ok()).ok_or_else(|| err("bad block count"))?;
                layers.push(Layer {
                    op,
                    left: vec![Vec::new(); m],
                    right: vec![Vec::new(); m],
                });
            }
            "left" | "right" => {
                let layer = layers.last_mut().ok_or_else(|| err("wiring before any layer"))?;
                let b: usize = toks.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| err("bad block index"))?;
                let side = if toks[0] == "left" { &mut layer.left } else { &mut layer.right };
                let slot = side.get_mut(b).ok_or_else(|| err("block index out of range"))?;
                if !slot.is_empty() {
                    return Err(err("block wired twice"));
                }
                *slot = toks[2..]
                    .iter()
                    .map(|t| parse_source(t))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err("bad source token"))?;
            }
            "output" => {
                let tok = toks.get(1).ok_or_else(|| err("missing output block"))?;
                let r = if let Some(v) = nums(tok, 'i', 1) {
                    BlockRef::Input(v[0])
                } else if let Some(v) = nums(tok, 'o', 2) {
                    BlockRef::Out {
                        layer: v[0],
                        block: v[1],
                    }
                } else {
                    return Err(err("bad output token"));
                };
                outputs.push(r);
            }
            other => return Err(err(&format!("unknown directive `{other}`"))),
        }
    }
    let w = w.ok_or(CircuitError::Parse {
        line: 0,
        msg: "missing width".into(),
    })?;
    let c = LayeredCircuit {
        w,
        inputs,
        layers,
        outputs,
    };
    c.validate()?;
    Ok(c)
}
