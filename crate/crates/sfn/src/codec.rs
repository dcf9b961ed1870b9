//! Canonical text format for flow networks.
//!
//! The document is JSON with a fixed key order, splitters sorted by id, and
//! rationals rendered in lowest terms, so `serialize` is a fixed point of
//! `serialize . deserialize`:
//!
//! ```text
//! {
//!   "num_outputs": 2,
//!   "start": "s:0",
//!   "splitters": [
//!     { "id": 0, "bias": "1/2", "branch0": "s:1", "branch1": "o:0" },
//!     ...
//!   ]
//! }
//! ```
//!
//! Edge targets encode as `"s:<id>"` (splitter) or `"o:<label>"` (output).

use crate::network::{EdgeTarget, FlowNetwork, NodeId, Splitter};
use crate::rational::{format_rational, parse_rational, Rational};
use num::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at {field}: {message}")]
    Schema { field: String, message: String },
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> CodecError {
    CodecError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    num_outputs: usize,
    start: String,
    splitters: Vec<SplitterDoc>,
}

#[derive(Serialize, Deserialize)]
struct SplitterDoc {
    id: usize,
    bias: String,
    branch0: String,
    branch1: String,
}

fn encode_target(target: EdgeTarget) -> String {
    target.to_string()
}

fn decode_target(text: &str, field: &str, net: &NetworkDoc) -> Result<EdgeTarget, CodecError> {
    let (kind, value) = text
        .split_once(':')
        .ok_or_else(|| schema(field, format!("expected `s:<id>` or `o:<label>`, got `{text}`")))?;
    let index: usize = value
        .trim()
        .parse()
        .map_err(|_| schema(field, format!("invalid index `{value}`")))?;
    match kind.trim() {
        "s" => {
            if index >= net.splitters.len() {
                return Err(schema(
                    field,
                    format!(
                        "references splitter {index} but the network has {} splitters",
                        net.splitters.len()
                    ),
                ));
            }
            Ok(EdgeTarget::Splitter(NodeId(index)))
        }
        "o" => {
            if index >= net.num_outputs {
                return Err(schema(
                    field,
                    format!(
                        "references output {index} but num_outputs is {}",
                        net.num_outputs
                    ),
                ));
            }
            Ok(EdgeTarget::Output(index))
        }
        other => Err(schema(field, format!("unknown target kind `{other}`"))),
    }
}

fn decode_bias(text: &str, field: &str) -> Result<Rational, CodecError> {
    let bias = parse_rational(text).map_err(|e| schema(field, e.to_string()))?;
    if bias <= Rational::zero() || bias >= Rational::one() {
        return Err(schema(
            field,
            format!("bias must satisfy 0 < bias < 1, got {}", format_rational(&bias)),
        ));
    }
    Ok(bias)
}

/// Canonical serialization: splitters sorted by id, lowest-terms rationals,
/// pretty-printed with a trailing newline.
pub fn serialize(network: &FlowNetwork) -> String {
    let mut splitters: Vec<&Splitter> = network.splitters.iter().collect();
    splitters.sort_by_key(|s| s.id);
    let doc = NetworkDoc {
        num_outputs: network.num_outputs,
        start: encode_target(network.start),
        splitters: splitters
            .into_iter()
            .map(|s| SplitterDoc {
                id: s.id.0,
                bias: format_rational(&s.bias),
                branch0: encode_target(s.branch0),
                branch1: encode_target(s.branch1),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("document serialization");
    text.push('\n');
    text
}

pub fn deserialize(text: &str) -> Result<FlowNetwork, CodecError> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| CodecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    if doc.num_outputs == 0 {
        return Err(schema("num_outputs", "must be at least 1"));
    }

    // Ids must be exactly {0..n-1}; order in the document is free.
    let n = doc.splitters.len();
    let mut seen = vec![false; n];
    for (position, s) in doc.splitters.iter().enumerate() {
        let field = format!("splitters[{position}].id");
        if s.id >= n {
            return Err(schema(
                field,
                format!("id {} out of range for {n} splitters", s.id),
            ));
        }
        if seen[s.id] {
            return Err(schema(field, format!("duplicate id {}", s.id)));
        }
        seen[s.id] = true;
    }

    let mut splitters: Vec<Option<Splitter>> = (0..n).map(|_| None).collect();
    for (position, s) in doc.splitters.iter().enumerate() {
        let bias = decode_bias(&s.bias, &format!("splitters[{position}].bias"))?;
        let branch0 = decode_target(&s.branch0, &format!("splitters[{position}].branch0"), &doc)?;
        let branch1 = decode_target(&s.branch1, &format!("splitters[{position}].branch1"), &doc)?;
        splitters[s.id] = Some(Splitter {
            id: NodeId(s.id),
            bias,
            branch0,
            branch1,
        });
    }
    let start = decode_target(&doc.start, "start", &doc)?;

    Ok(FlowNetwork {
        splitters: splitters.into_iter().map(|s| s.expect("dense ids")).collect(),
        start,
        num_outputs: doc.num_outputs,
    })
}
