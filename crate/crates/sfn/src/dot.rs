//! Graphviz DOT export.

use crate::network::{Distribution, EdgeTarget, FlowNetwork};
use crate::rational::{format_rational, Rational};
use num::One;
use std::fmt::Write;

/// Renders the network as a DOT digraph. Splitters are circles labeled with
/// their bias, outputs are boxes labeled with their index and, when
/// `annotations` is given, their exact probability. Edges carry the branch
/// probability.
pub fn to_dot(network: &FlowNetwork, annotations: Option<&Distribution>) -> String {
    let mut out = String::new();
    out.push_str("digraph flow_network {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  start [shape=point, label=\"\"];\n");
    for splitter in &network.splitters {
        let _ = writeln!(
            out,
            "  s{} [shape=circle, label=\"{}\"];",
            splitter.id.0,
            format_rational(&splitter.bias)
        );
    }
    for label in 0..network.num_outputs {
        let text = match annotations {
            Some(dist) if label < dist.len() => {
                format!("out {label}\\n{}", format_rational(dist.get(label)))
            }
            _ => format!("out {label}"),
        };
        let _ = writeln!(out, "  o{label} [shape=box, label=\"{text}\"];");
    }
    let _ = writeln!(out, "  start -> {};", node_name(network.start));
    for splitter in &network.splitters {
        let complement: Rational = Rational::one() - &splitter.bias;
        for (target, gain) in [
            (splitter.branch0, &splitter.bias),
            (splitter.branch1, &complement),
        ] {
            let _ = writeln!(
                out,
                "  s{} -> {} [label=\"{}\"];",
                splitter.id.0,
                node_name(target),
                format_rational(gain)
            );
        }
    }
    out.push_str("}\n");
    out
}

fn node_name(target: EdgeTarget) -> String {
    match target {
        EdgeTarget::Splitter(id) => format!("s{}", id.0),
        EdgeTarget::Output(label) => format!("o{label}"),
    }
}
