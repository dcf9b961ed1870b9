//! Size-relaxed construction and the universal probability generator (UPG).
//!
//! The size-relaxed construction realizes `a/b` with at most `n + 3`
//! splitters and constant-bounded expected latency. A ladder of `n` fair
//! splitters produces terminals `A_1..A_{n+1}` with probabilities
//! `2^{-1}..2^{-n}, 2^{-n}`; each `A_i` is wired, by the bits of the
//! expansions of `a/2^n` and `c/2^n` (`c = b - a`), to one of three merge
//! splitters or to the residual output:
//!
//! * `a_i = c_i = 1` -> `B1` (splits between outputs 0 and 1),
//! * `a_i = 1, c_i = 0` -> `B2` (outputs 0 and 2),
//! * `a_i = 0, c_i = 1` -> `B3` (outputs 1 and 2),
//! * `a_i = c_i = 0` and `A_{n+1}` -> output 2,
//!
//! so output 0 collects `(P(B1) + P(B2))/2 = a/2^{n+1}` and output 1
//! collects `(P(B1) + P(B3))/2 = c/2^{n+1}`. Closing output 2 back to the
//! start leaves exactly `a/b`. Unused merge splitters are omitted.
//!
//! The UPG is the same skeleton with a two-level deterministic routing
//! device in front of each terminal, keyed on control bits `a_i` then
//! `c_i`. Routers move every token the same way, so instantiation resolves
//! them into direct wires and the resulting network contains only
//! probabilistic splitters; its output-0 probability is `a/(a+c)` for any
//! control vectors that are not both all-zero.

use super::{
    binary_expansion, bits_string, close_feedback, SynthesisError, SynthesisTrace,
    TargetProbability,
};
use crate::network::{EdgeTarget, FlowNetwork, NodeId, Splitter};

/// Merge splitters of the size-relaxed skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MergeSplitter {
    B1,
    B2,
    B3,
}

impl MergeSplitter {
    fn from_bits(a_bit: bool, c_bit: bool) -> Option<Self> {
        match (a_bit, c_bit) {
            (true, true) => Some(MergeSplitter::B1),
            (true, false) => Some(MergeSplitter::B2),
            (false, true) => Some(MergeSplitter::B3),
            (false, false) => None,
        }
    }

    /// Output pair split by this merge splitter, pre-feedback.
    fn outputs(self) -> (usize, usize) {
        match self {
            MergeSplitter::B1 => (0, 1),
            MergeSplitter::B2 => (0, 2),
            MergeSplitter::B3 => (1, 2),
        }
    }

    fn name(self) -> &'static str {
        match self {
            MergeSplitter::B1 => "B1",
            MergeSplitter::B2 => "B2",
            MergeSplitter::B3 => "B3",
        }
    }
}

/// Where a ladder terminal is routed, pre-feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TerminalRoute {
    Merge(MergeSplitter),
    Residual,
}

impl TerminalRoute {
    fn describe(self) -> String {
        match self {
            TerminalRoute::Merge(b) => b.name().to_string(),
            TerminalRoute::Residual => "out2".to_string(),
        }
    }
}

/// Builds the ladder-plus-merges network for the given terminal routes
/// (`routes[i]` is the destination of `A_{i+1}`, `A_{n+1}` is always the
/// residual output) and closes the residual output back to the start.
fn build_ladder(routes: &[TerminalRoute]) -> (FlowNetwork, Vec<String>) {
    let n = routes.len();
    debug_assert!(n >= 1);
    let mut used = [false; 3];
    for route in routes {
        if let TerminalRoute::Merge(b) = route {
            used[*b as usize] = true;
        }
    }
    let mut merge_ids = [None; 3];
    let mut next = n;
    for b in [MergeSplitter::B1, MergeSplitter::B2, MergeSplitter::B3] {
        if used[b as usize] {
            merge_ids[b as usize] = Some(NodeId(next));
            next += 1;
        }
    }
    let route_target = |route: TerminalRoute| match route {
        TerminalRoute::Merge(b) => EdgeTarget::Splitter(merge_ids[b as usize].expect("allocated")),
        TerminalRoute::Residual => EdgeTarget::Output(2),
    };

    let mut splitters = Vec::with_capacity(next);
    for (i, route) in routes.iter().enumerate() {
        let continuation = if i + 1 < n {
            EdgeTarget::Splitter(NodeId(i + 1))
        } else {
            EdgeTarget::Output(2) // A_{n+1}
        };
        splitters.push(Splitter::fair(i, route_target(*route), continuation));
    }
    for b in [MergeSplitter::B1, MergeSplitter::B2, MergeSplitter::B3] {
        if let Some(id) = merge_ids[b as usize] {
            let (first, second) = b.outputs();
            splitters.push(Splitter::fair(
                id.0,
                EdgeTarget::Output(first),
                EdgeTarget::Output(second),
            ));
        }
    }

    let mut connections: Vec<String> = routes
        .iter()
        .enumerate()
        .map(|(i, route)| format!("A{} -> {}", i + 1, route.describe()))
        .collect();
    connections.push(format!("A{} -> out2", n + 1));

    let mut network = FlowNetwork::new(splitters, EdgeTarget::Splitter(NodeId(0)), 3);
    close_feedback(&mut network, 2).expect("ladder start is a splitter");
    (network, connections)
}

fn routes_from_bits(a_bits: &[bool], c_bits: &[bool]) -> Vec<TerminalRoute> {
    a_bits
        .iter()
        .zip(c_bits)
        .map(|(&a, &c)| match MergeSplitter::from_bits(a, c) {
            Some(b) => TerminalRoute::Merge(b),
            None => TerminalRoute::Residual,
        })
        .collect()
}

/// Size-relaxed construction for `a/b` with `0 < a < b`: at most `n + 3`
/// splitters, expected latency at most `6 * 2^n / b`.
pub fn synth_size_relaxed(
    target: &TargetProbability,
) -> Result<(FlowNetwork, SynthesisTrace), SynthesisError> {
    let a = target.numerator();
    let b = target.denominator();
    if a == 0 || a == b {
        return Err(SynthesisError::OutOfRange(format!(
            "size-relaxed construction needs 0 < a < b, got {target}"
        )));
    }
    let n = target.level();
    let c = b - a;
    let a_bits = binary_expansion(a, n)?;
    let c_bits = binary_expansion(c, n)?;
    let (network, connections) = build_ladder(&routes_from_bits(&a_bits, &c_bits));
    let mut trace = SynthesisTrace::new("size-relaxed", n);
    trace.bit_expansions = vec![bits_string(&a_bits), bits_string(&c_bits)];
    trace.connections = connections;
    trace.splitter_count = network.splitter_count();
    Ok((network, trace))
}

/// Control signal of a deterministic router node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlBit {
    /// `a_{i+1}` for index `i`.
    A(usize),
    /// `c_{i+1}` for index `i`.
    C(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteTarget {
    Node(usize),
    Merge(MergeSplitter),
    Residual,
}

/// A deterministic node: every incoming token leaves on the edge selected
/// by the control bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicNode {
    pub control: ControlBit,
    pub on_one: RouteTarget,
    pub on_zero: RouteTarget,
}

/// Size-relaxed skeleton whose ladder terminals pass through deterministic
/// routing devices controlled by bit vectors `a`, `c`. Router nodes exist
/// only in the template; instantiation erases them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpgTemplate {
    pub bit_width: usize,
    pub routers: Vec<DeterministicNode>,
    /// Entry router per ladder terminal `A_{i+1}`, `i < bit_width`.
    pub entries: Vec<usize>,
}

/// Builds the UPG template for `bit_width`-bit control vectors: a two-level
/// router per terminal, keyed on `a_i` then `c_i`.
pub fn synth_upg(bit_width: usize) -> Result<UpgTemplate, SynthesisError> {
    if bit_width == 0 || bit_width > 62 {
        return Err(SynthesisError::OutOfRange(format!(
            "bit width {bit_width} out of range"
        )));
    }
    let mut routers = Vec::with_capacity(3 * bit_width);
    let mut entries = Vec::with_capacity(bit_width);
    for i in 0..bit_width {
        let when_a_set = routers.len();
        routers.push(DeterministicNode {
            control: ControlBit::C(i),
            on_one: RouteTarget::Merge(MergeSplitter::B1),
            on_zero: RouteTarget::Merge(MergeSplitter::B2),
        });
        let when_a_clear = routers.len();
        routers.push(DeterministicNode {
            control: ControlBit::C(i),
            on_one: RouteTarget::Merge(MergeSplitter::B3),
            on_zero: RouteTarget::Residual,
        });
        let entry = routers.len();
        routers.push(DeterministicNode {
            control: ControlBit::A(i),
            on_one: RouteTarget::Node(when_a_set),
            on_zero: RouteTarget::Node(when_a_clear),
        });
        entries.push(entry);
    }
    Ok(UpgTemplate {
        bit_width,
        routers,
        entries,
    })
}

/// Resolves the template's deterministic routers against concrete control
/// bits, producing a network with output-0 probability `a/(a+c)` where
/// `a = sum a_i 2^{-i}` and `c = sum c_i 2^{-i}`.
pub fn upg_instantiate(
    template: &UpgTemplate,
    a_bits: &[bool],
    c_bits: &[bool],
) -> Result<FlowNetwork, SynthesisError> {
    if a_bits.len() != template.bit_width || c_bits.len() != template.bit_width {
        return Err(SynthesisError::OutOfRange(format!(
            "control vectors must have {} bits",
            template.bit_width
        )));
    }
    if a_bits.iter().all(|b| !b) && c_bits.iter().all(|b| !b) {
        return Err(SynthesisError::DegenerateTarget);
    }
    let bit_of = |control: ControlBit| match control {
        ControlBit::A(i) => a_bits[i],
        ControlBit::C(i) => c_bits[i],
    };
    let routes: Vec<TerminalRoute> = template
        .entries
        .iter()
        .map(|&entry| {
            let mut at = entry;
            loop {
                let node = &template.routers[at];
                let next = if bit_of(node.control) {
                    node.on_one
                } else {
                    node.on_zero
                };
                match next {
                    RouteTarget::Node(index) => at = index,
                    RouteTarget::Merge(b) => return TerminalRoute::Merge(b),
                    RouteTarget::Residual => return TerminalRoute::Residual,
                }
            }
        })
        .collect();
    Ok(build_ladder(&routes).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{absorption_distribution, expected_latency};
    use crate::rational::{rat, rat_u64};

    #[test]
    fn size_relaxed_7_29_connections() {
        let target = TargetProbability::new(7, 29).unwrap();
        let (net, trace) = synth_size_relaxed(&target).unwrap();
        assert_eq!(trace.bit_expansions, vec!["00111", "10110"]);
        assert_eq!(
            trace.connections,
            vec![
                "A1 -> B3",
                "A2 -> out2",
                "A3 -> B1",
                "A4 -> B1",
                "A5 -> B2",
                "A6 -> out2",
            ]
        );
        assert_eq!(net.splitter_count(), 8); // ladder 5 + B1 + B2 + B3
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &[rat(7, 29), rat(22, 29)]
        );
    }

    #[test]
    fn size_relaxed_one_third_skips_b1() {
        let target = TargetProbability::new(1, 3).unwrap();
        let (net, trace) = synth_size_relaxed(&target).unwrap();
        assert!(trace.connections.iter().all(|c| !c.ends_with("B1")));
        assert!(net.splitter_count() <= 5);
        assert_eq!(
            absorption_distribution(&net).unwrap().get(0),
            &rat(1, 3)
        );
    }

    #[test]
    fn size_relaxed_bounds_hold_on_a_scan() {
        for b in 2..=64u64 {
            for a in 1..b {
                if num::integer::gcd(a, b) != 1 {
                    continue;
                }
                let target = TargetProbability::new(a, b).unwrap();
                let (net, _) = synth_size_relaxed(&target).unwrap();
                let n = target.level();
                assert!(net.splitter_count() <= n + 3);
                assert!(net.validate().passes());
                assert_eq!(
                    absorption_distribution(&net).unwrap().get(0),
                    &rat_u64(a, b)
                );
                let latency = expected_latency(&net).unwrap();
                assert!(latency <= rat_u64(6 << n, b), "{a}/{b}");
            }
        }
    }

    #[test]
    fn size_relaxed_rejects_endpoints() {
        assert!(synth_size_relaxed(&TargetProbability::new(0, 1).unwrap()).is_err());
        assert!(synth_size_relaxed(&TargetProbability::new(1, 1).unwrap()).is_err());
    }

    #[test]
    fn upg_reproduces_7_29() {
        let template = synth_upg(5).unwrap();
        let a_bits = [false, false, true, true, true];
        let c_bits = [true, false, true, true, false];
        let net = upg_instantiate(&template, &a_bits, &c_bits).unwrap();
        assert_eq!(
            absorption_distribution(&net).unwrap().get(0),
            &rat(7, 29)
        );
    }

    #[test]
    fn upg_equal_bits_give_one_half() {
        let template = synth_upg(4).unwrap();
        let bits = [true, false, true, false];
        let net = upg_instantiate(&template, &bits, &bits).unwrap();
        assert_eq!(absorption_distribution(&net).unwrap().get(0), &rat(1, 2));
    }

    #[test]
    fn upg_rejects_all_zero_controls() {
        let template = synth_upg(3).unwrap();
        assert_eq!(
            upg_instantiate(&template, &[false; 3], &[false; 3]),
            Err(SynthesisError::DegenerateTarget)
        );
    }

    #[test]
    fn upg_exhaustive_width_4() {
        let template = synth_upg(4).unwrap();
        for a in 0u64..16 {
            for c in 0u64..16 {
                if a == 0 && c == 0 {
                    continue;
                }
                let a_bits = binary_expansion(a, 4).unwrap();
                let c_bits = binary_expansion(c, 4).unwrap();
                let net = upg_instantiate(&template, &a_bits, &c_bits).unwrap();
                assert_eq!(
                    absorption_distribution(&net).unwrap().get(0),
                    &rat_u64(a, a + c),
                    "a = {a}, c = {c}"
                );
            }
        }
    }
}
