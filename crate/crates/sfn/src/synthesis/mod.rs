//! Constructions that realize rational probabilities and distributions with
//! fair splitters.
//!
//! Scalar targets `a/b` are realized three ways, trading network size
//! against expected latency:
//!
//! * [`synth_optimal`]: at most `n` splitters for `b <= 2^n`, by reducing a
//!   three-outcome dyadic distribution one splitter at a time and closing
//!   the residual outcome back to the start.
//! * [`synth_size_relaxed`](relaxed::synth_size_relaxed): at most `n + 3`
//!   splitters with expected latency below `6 * 2^n / b`.
//! * [`synth_latency_oriented`](distribution::synth_latency_oriented): a
//!   Knuth–Yao generating tree plus feedback, at most `2(n - 1)` splitters.
//!
//! Distribution targets use either the Knuth–Yao tree directly
//! ([`distribution::synth_distribution_ky`]) or a binary-tree composition of
//! scalar networks ([`distribution::synth_distribution_huffman`]).
//!
//! Every construction returns a [`SynthesisTrace`] recording the reduction
//! steps, so results are reproducible and auditable.

mod distribution;
mod relaxed;
mod trees;

pub use distribution::{synth_distribution_huffman, synth_distribution_ky, synth_latency_oriented};
pub use relaxed::{
    synth_size_relaxed, synth_upg, upg_instantiate, ControlBit, DeterministicNode, MergeSplitter,
    RouteTarget, UpgTemplate,
};
pub use trees::{
    brute_force_optimal_tree, huffman_tree, knuth_yao_tree, AtomSet, TreeNode, TreeStructure,
    WeightedTree,
};

use crate::network::{EdgeTarget, FlowNetwork, NodeId, Splitter};
use crate::rational::{format_rational, rat_u64, Rational};
use num::integer::gcd;
use num::{One, ToPrimitive, Zero};
use serde_json::json;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("target out of range: {0}")]
    OutOfRange(String),
    #[error("three-way target {x} + {y} + {z} does not sum to 2^{level}")]
    BadSum { x: u64, y: u64, z: u64, level: usize },
    #[error("probability is not dyadic: {0}")]
    NotDyadic(String),
    #[error("probabilities do not sum to 1: {0}")]
    NotNormalized(String),
    #[error("control bit vectors must not both be all-zero")]
    DegenerateTarget,
    #[error("brute-force tree search supports at most 6 leaves, got {0}")]
    TooManyLeaves(usize),
    #[error("tree does not match the target distribution: {0}")]
    TreeMismatch(String),
    #[error("weight list must not be empty")]
    EmptyInput,
}

/// A rational probability target `a/b`, stored in lowest terms with
/// `0 <= a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetProbability {
    a: u64,
    b: u64,
}

impl TargetProbability {
    pub fn new(a: u64, b: u64) -> Result<Self, SynthesisError> {
        if b == 0 {
            return Err(SynthesisError::OutOfRange(
                "denominator must be positive".into(),
            ));
        }
        if a > b {
            return Err(SynthesisError::OutOfRange(format!(
                "{a}/{b} exceeds 1"
            )));
        }
        let g = gcd(a, b);
        Ok(TargetProbability { a: a / g, b: b / g })
    }

    pub fn from_rational(value: &Rational) -> Result<Self, SynthesisError> {
        if value < &Rational::zero() || value > &Rational::one() {
            return Err(SynthesisError::OutOfRange(format!(
                "{} is not a probability",
                format_rational(value)
            )));
        }
        let a = value.numer().to_u64();
        let b = value.denom().to_u64();
        match (a, b) {
            (Some(a), Some(b)) => TargetProbability::new(a, b),
            _ => Err(SynthesisError::OutOfRange(format!(
                "{} exceeds the supported denominator range",
                format_rational(value)
            ))),
        }
    }

    pub fn numerator(&self) -> u64 {
        self.a
    }

    pub fn denominator(&self) -> u64 {
        self.b
    }

    pub fn as_rational(&self) -> Rational {
        rat_u64(self.a, self.b)
    }

    /// The smallest `n` with `b <= 2^n`.
    pub fn level(&self) -> usize {
        level_for(self.b)
    }
}

impl fmt::Display for TargetProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.a, self.b)
    }
}

pub(crate) fn level_for(denominator: u64) -> usize {
    if denominator <= 1 {
        0
    } else {
        64 - ((denominator - 1).leading_zeros() as usize)
    }
}

/// A rational distribution target `{a_1/b, ..., a_m/b}` with the common
/// denominator minimized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetDistribution {
    numerators: Vec<u64>,
    denominator: u64,
}

impl TargetDistribution {
    pub fn new(numerators: Vec<u64>, denominator: u64) -> Result<Self, SynthesisError> {
        if numerators.len() < 2 {
            return Err(SynthesisError::OutOfRange(
                "a distribution needs at least 2 outcomes".into(),
            ));
        }
        if denominator == 0 {
            return Err(SynthesisError::OutOfRange(
                "denominator must be positive".into(),
            ));
        }
        let mut sum: u64 = 0;
        for &a in &numerators {
            sum = sum
                .checked_add(a)
                .ok_or_else(|| SynthesisError::OutOfRange("numerator overflow".into()))?;
        }
        if sum != denominator {
            return Err(SynthesisError::NotNormalized(format!(
                "numerators sum to {sum}, denominator is {denominator}"
            )));
        }
        let g = numerators.iter().fold(denominator, |acc, &a| gcd(acc, a));
        Ok(TargetDistribution {
            numerators: numerators.into_iter().map(|a| a / g).collect(),
            denominator: denominator / g,
        })
    }

    pub fn from_rationals(probs: &[Rational]) -> Result<Self, SynthesisError> {
        if probs.len() < 2 {
            return Err(SynthesisError::OutOfRange(
                "a distribution needs at least 2 outcomes".into(),
            ));
        }
        let sum: Rational = probs.iter().sum();
        if !sum.is_one() {
            return Err(SynthesisError::NotNormalized(format!(
                "entries sum to {}",
                format_rational(&sum)
            )));
        }
        let mut denominator: u64 = 1;
        for p in probs {
            if p < &Rational::zero() {
                return Err(SynthesisError::OutOfRange(format!(
                    "negative entry {}",
                    format_rational(p)
                )));
            }
            let d = p.denom().to_u64().ok_or_else(|| {
                SynthesisError::OutOfRange("denominator exceeds supported range".into())
            })?;
            denominator = denominator
                .checked_mul(d / gcd(denominator, d))
                .ok_or_else(|| {
                    SynthesisError::OutOfRange("common denominator exceeds supported range".into())
                })?;
        }
        let numerators = probs
            .iter()
            .map(|p| {
                let d = p.denom().to_u64().expect("checked above");
                p.numer().to_u64().map(|a| a * (denominator / d))
            })
            .collect::<Option<Vec<u64>>>()
            .ok_or_else(|| SynthesisError::OutOfRange("numerator exceeds supported range".into()))?;
        TargetDistribution::new(numerators, denominator)
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn probs(&self) -> Vec<Rational> {
        self.numerators
            .iter()
            .map(|&a| rat_u64(a, self.denominator))
            .collect()
    }

    pub fn level(&self) -> usize {
        level_for(self.denominator)
    }
}

/// One step of the three-outcome reduction: the requested numerators over
/// `2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionStep {
    pub numerators: [u64; 3],
    pub level: usize,
}

impl ReductionStep {
    pub fn values(&self) -> [Rational; 3] {
        let total = 1u64 << self.level;
        self.numerators.map(|v| rat_u64(v, total))
    }
}

impl fmt::Display for ReductionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = 1u64 << self.level;
        write!(
            f,
            "{{{}/{total}, {}/{total}, {}/{total}}}",
            self.numerators[0], self.numerators[1], self.numerators[2]
        )
    }
}

/// One Huffman merge: the two weights taken and the resulting parent weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub left: Rational,
    pub right: Rational,
    pub merged: Rational,
}

/// Reproducible record of how a network was synthesized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthesisTrace {
    pub method: String,
    /// The `n` with `2^{n-1} < b <= 2^n` for the target denominator.
    pub level: usize,
    pub reduction_chain: Vec<ReductionStep>,
    /// Bit expansions driving ladder connections, most significant first.
    pub bit_expansions: Vec<String>,
    /// Ladder terminal connections, e.g. `"A1 -> B3"`.
    pub connections: Vec<String>,
    /// Dyadic atoms per output label.
    pub atoms: Vec<Vec<Rational>>,
    pub merge_order: Vec<MergeStep>,
    pub splitter_count: usize,
}

impl SynthesisTrace {
    fn new(method: &str, level: usize) -> Self {
        SynthesisTrace {
            method: method.to_string(),
            level,
            ..SynthesisTrace::default()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "method": self.method,
            "level": self.level,
            "reduction_chain": self
                .reduction_chain
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>(),
            "bit_expansions": self.bit_expansions,
            "connections": self.connections,
            "atoms": self
                .atoms
                .iter()
                .map(|list| list.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "merge_order": self
                .merge_order
                .iter()
                .map(|m| {
                    json!({
                        "left": format_rational(&m.left),
                        "right": format_rational(&m.right),
                        "merged": format_rational(&m.merged),
                    })
                })
                .collect::<Vec<_>>(),
            "splitter_count": self.splitter_count,
        })
    }
}

impl fmt::Display for SynthesisTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "level: {}", self.level)?;
        if !self.reduction_chain.is_empty() {
            let chain: Vec<String> = self.reduction_chain.iter().map(|s| s.to_string()).collect();
            writeln!(f, "reduction chain: {}", chain.join(" -> "))?;
        }
        if !self.bit_expansions.is_empty() {
            writeln!(f, "bit expansions: {}", self.bit_expansions.join(" / "))?;
        }
        for connection in &self.connections {
            writeln!(f, "connect {connection}")?;
        }
        for (label, atoms) in self.atoms.iter().enumerate() {
            if atoms.is_empty() {
                continue;
            }
            let parts: Vec<String> = atoms.iter().map(format_rational).collect();
            writeln!(f, "atoms[{label}]: {}", parts.join(", "))?;
        }
        for merge in &self.merge_order {
            writeln!(
                f,
                "merge {} + {} -> {}",
                format_rational(&merge.left),
                format_rational(&merge.right),
                format_rational(&merge.merged)
            )?;
        }
        writeln!(f, "splitters: {}", self.splitter_count)
    }
}

/// Bits `g_1..g_n` of `x / 2^n`, most significant first, so that
/// `x / 2^n = sum_i g_i 2^{-i}`.
pub fn binary_expansion(x: u64, n: usize) -> Result<Vec<bool>, SynthesisError> {
    if n > 62 {
        return Err(SynthesisError::OutOfRange(format!(
            "width {n} exceeds the supported range"
        )));
    }
    if x >= (1u64 << n) {
        return Err(SynthesisError::OutOfRange(format!("{x} >= 2^{n}")));
    }
    Ok((1..=n).map(|i| (x >> (n - i)) & 1 == 1).collect())
}

pub(crate) fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Loop-free chain realizing `x / 2^n` on output 0 with exactly `n` fair
/// splitters (zero when `x` is 0 or `2^n`). Splitter `i` exits to the
/// depth-`i+1` terminal on branch 0 and continues down the chain on
/// branch 1; the terminal routes to output 0 exactly when the corresponding
/// expansion bit is set.
pub fn synth_dyadic(x: u64, n: usize) -> Result<FlowNetwork, SynthesisError> {
    if n > 62 {
        return Err(SynthesisError::OutOfRange(format!(
            "depth {n} exceeds the supported range"
        )));
    }
    let total = 1u64 << n;
    if x > total {
        return Err(SynthesisError::OutOfRange(format!("{x} > 2^{n}")));
    }
    if x == 0 {
        return Ok(FlowNetwork::passthrough(1, 2));
    }
    if x == total {
        return Ok(FlowNetwork::passthrough(0, 2));
    }
    let bits = binary_expansion(x, n)?;
    let splitters = bits
        .iter()
        .enumerate()
        .map(|(i, &bit)| {
            let terminal = EdgeTarget::Output(if bit { 0 } else { 1 });
            let rest = if i + 1 < n {
                EdgeTarget::Splitter(NodeId(i + 1))
            } else {
                EdgeTarget::Output(1)
            };
            Splitter::fair(i, terminal, rest)
        })
        .collect();
    Ok(FlowNetwork::new(
        splitters,
        EdgeTarget::Splitter(NodeId(0)),
        2,
    ))
}

/// Realizes `{x, y, z} / 2^level` on three outputs with at most `level`
/// fair splitters.
///
/// Reduction: if all of x, y, z are even, halve them and drop a level with
/// no new splitter. Otherwise exactly one entry is even; halve it, replace
/// the larger odd entry `y` by `(y - z)/2` (ties: the earlier slot plays
/// `y`), keep the smaller odd entry `z`, recurse one level down, and route
/// the doubled `z` output through one fresh splitter that merges half of it
/// into the `y` output. Values stay in their original slots throughout, and
/// the trace records the requested tuple at every level.
pub fn synth_three_way(
    x: u64,
    y: u64,
    z: u64,
    level: usize,
) -> Result<(FlowNetwork, SynthesisTrace), SynthesisError> {
    if level > 62 {
        return Err(SynthesisError::OutOfRange(format!(
            "level {level} exceeds the supported range"
        )));
    }
    let total = 1u64 << level;
    let sum = x
        .checked_add(y)
        .and_then(|s| s.checked_add(z))
        .ok_or(SynthesisError::BadSum { x, y, z, level })?;
    if sum != total {
        return Err(SynthesisError::BadSum { x, y, z, level });
    }
    let mut splitters = Vec::new();
    let mut chain = Vec::new();
    let start = three_way_build([x, y, z], level, &mut splitters, &mut chain);
    let network = FlowNetwork::new(splitters, start, 3);
    let mut trace = SynthesisTrace::new("three-way", level);
    trace.reduction_chain = chain;
    trace.splitter_count = network.splitter_count();
    Ok((network, trace))
}

fn three_way_build(
    values: [u64; 3],
    level: usize,
    splitters: &mut Vec<Splitter>,
    chain: &mut Vec<ReductionStep>,
) -> EdgeTarget {
    if level == 0 {
        let label = values.iter().position(|&v| v == 1).expect("unit tuple");
        return EdgeTarget::Output(label);
    }
    chain.push(ReductionStep {
        numerators: values,
        level,
    });
    if values.iter().all(|v| v % 2 == 0) {
        return three_way_build(values.map(|v| v / 2), level - 1, splitters, chain);
    }
    // The sum 2^level is even, so exactly one entry is even here.
    let even = values.iter().position(|v| v % 2 == 0).expect("even entry");
    let odd: Vec<usize> = (0..3).filter(|&i| i != even).collect();
    let (big, small) = if values[odd[0]] >= values[odd[1]] {
        (odd[0], odd[1])
    } else {
        (odd[1], odd[0])
    };
    let mut inner = values;
    inner[even] = values[even] / 2;
    inner[big] = (values[big] - values[small]) / 2;
    inner[small] = values[small];
    let inner_start = three_way_build(inner, level - 1, splitters, chain);

    // The inner network emits `small` with doubled weight; split it, merging
    // one half into `big`.
    let merge = NodeId(splitters.len());
    let from_small = EdgeTarget::Output(small);
    for splitter in splitters.iter_mut() {
        if splitter.branch0 == from_small {
            splitter.branch0 = EdgeTarget::Splitter(merge);
        }
        if splitter.branch1 == from_small {
            splitter.branch1 = EdgeTarget::Splitter(merge);
        }
    }
    let start = if inner_start == from_small {
        EdgeTarget::Splitter(merge)
    } else {
        inner_start
    };
    splitters.push(Splitter::fair(
        merge.0,
        EdgeTarget::Output(big),
        EdgeTarget::Output(small),
    ));
    start
}

/// Rewires every edge targeting the last output label to the start target
/// and drops the label. Splitter count is unchanged; the remaining output
/// probabilities are renormalized by the chain's absorption.
pub fn close_feedback(network: &mut FlowNetwork, label: usize) -> Result<(), SynthesisError> {
    if network.num_outputs < 2 || label != network.num_outputs - 1 {
        return Err(SynthesisError::OutOfRange(format!(
            "feedback must close the last of {} outputs, got label {label}",
            network.num_outputs
        )));
    }
    let entry = network.start;
    let fed_back = EdgeTarget::Output(label);
    if entry == fed_back {
        return Err(SynthesisError::OutOfRange(
            "start edge targets the fed-back output".into(),
        ));
    }
    for splitter in &mut network.splitters {
        if splitter.branch0 == fed_back {
            splitter.branch0 = entry;
        }
        if splitter.branch1 == fed_back {
            splitter.branch1 = entry;
        }
    }
    network.num_outputs -= 1;
    Ok(())
}

/// Optimal-sized construction: at most `n` splitters for `a/b` with
/// `b <= 2^n`. Dyadic denominators use the loop-free chain directly; other
/// denominators realize `{a, b-a, 2^n-b}/2^n` and feed the residual output
/// back to the start.
pub fn synth_optimal(
    target: &TargetProbability,
) -> Result<(FlowNetwork, SynthesisTrace), SynthesisError> {
    let a = target.numerator();
    let b = target.denominator();
    let n = target.level();
    if b.is_power_of_two() {
        let network = synth_dyadic(a, n)?;
        let mut trace = SynthesisTrace::new("optimal", n);
        if a > 0 && a < b {
            trace.bit_expansions = vec![bits_string(&binary_expansion(a, n)?)];
        }
        trace.splitter_count = network.splitter_count();
        return Ok((network, trace));
    }
    let total = 1u64 << n;
    let (mut network, mut trace) = synth_three_way(a, b - a, total - b, n)?;
    close_feedback(&mut network, 2)?;
    trace.method = "optimal".into();
    trace.splitter_count = network.splitter_count();
    Ok((network, trace))
}

/// Adversarial in-family construction with high expected latency: start from
/// one splitter and repeatedly split the most probable output (ties: lowest
/// label), merging the freed half into the runner-up. Each added splitter is
/// reached with probability at least 1/3, so the expected latency of the
/// `n`-splitter result is at least `n/3 + 2/3`. The three-output network is
/// returned without feedback.
pub fn greedy_latency_witness(n: usize) -> FlowNetwork {
    assert!(n >= 1, "witness needs at least one splitter");
    let mut splitters = vec![Splitter::fair(0, EdgeTarget::Output(0), EdgeTarget::Output(1))];
    let half = rat_u64(1, 2);
    let mut mass = [half.clone(), half, Rational::zero()];
    for _ in 1..n {
        let mut top = 0;
        for label in 1..3 {
            if mass[label] > mass[top] {
                top = label;
            }
        }
        let mut runner_up = usize::MAX;
        for label in 0..3 {
            if label != top && (runner_up == usize::MAX || mass[label] > mass[runner_up]) {
                runner_up = label;
            }
        }
        let id = NodeId(splitters.len());
        let split_target = EdgeTarget::Output(top);
        for splitter in splitters.iter_mut() {
            if splitter.branch0 == split_target {
                splitter.branch0 = EdgeTarget::Splitter(id);
            }
            if splitter.branch1 == split_target {
                splitter.branch1 = EdgeTarget::Splitter(id);
            }
        }
        splitters.push(Splitter::fair(
            id.0,
            EdgeTarget::Output(top),
            EdgeTarget::Output(runner_up),
        ));
        let moved = &mass[top] / rat_u64(2, 1);
        mass[top] = moved.clone();
        mass[runner_up] += moved;
    }
    FlowNetwork::new(splitters, EdgeTarget::Splitter(NodeId(0)), 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{absorption_distribution, analyze, expected_latency};
    use crate::rational::{int, rat};

    #[test]
    fn binary_expansion_examples() {
        assert_eq!(
            bits_string(&binary_expansion(7, 5).unwrap()),
            "00111"
        );
        assert_eq!(
            bits_string(&binary_expansion(22, 5).unwrap()),
            "10110"
        );
        assert_eq!(bits_string(&binary_expansion(0, 4).unwrap()), "0000");
        assert!(binary_expansion(16, 4).is_err());
    }

    #[test]
    fn dyadic_trivial_targets() {
        let zero = synth_dyadic(0, 3).unwrap();
        assert_eq!(zero.splitter_count(), 0);
        assert_eq!(
            absorption_distribution(&zero).unwrap().probs(),
            &[int(0), int(1)]
        );
        let one = synth_dyadic(8, 3).unwrap();
        assert_eq!(one.splitter_count(), 0);
        assert_eq!(
            absorption_distribution(&one).unwrap().probs(),
            &[int(1), int(0)]
        );
    }

    #[test]
    fn dyadic_three_quarters() {
        let net = synth_dyadic(3, 2).unwrap();
        assert_eq!(net.splitter_count(), 2);
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &[rat(3, 4), rat(1, 4)]
        );
    }

    #[test]
    fn dyadic_exhaustive_sweep() {
        for n in 0..=6usize {
            for x in 0..=(1u64 << n) {
                let net = synth_dyadic(x, n).unwrap();
                assert!(net.splitter_count() <= n);
                assert!(net.validate().passes());
                let dist = absorption_distribution(&net).unwrap();
                assert_eq!(dist.get(0), &rat_u64(x, 1 << n));
            }
        }
    }

    #[test]
    fn three_way_base_cases() {
        let (net, _) = synth_three_way(1, 0, 1, 1).unwrap();
        assert_eq!(net.splitter_count(), 1);
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &[rat(1, 2), int(0), rat(1, 2)]
        );
    }

    #[test]
    fn three_way_rejects_bad_sum() {
        assert!(matches!(
            synth_three_way(1, 1, 1, 1),
            Err(SynthesisError::BadSum { .. })
        ));
    }

    #[test]
    fn three_way_reduction_chain_for_14_15_3() {
        let (net, trace) = synth_three_way(14, 15, 3, 5).unwrap();
        assert_eq!(net.splitter_count(), 5);
        let chain: Vec<([u64; 3], usize)> = trace
            .reduction_chain
            .iter()
            .map(|s| (s.numerators, s.level))
            .collect();
        assert_eq!(
            chain,
            vec![
                ([14, 15, 3], 5),
                ([7, 6, 3], 4),
                ([2, 3, 3], 3),
                ([1, 0, 3], 2),
                ([1, 0, 1], 1),
            ]
        );
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &[rat(14, 32), rat(15, 32), rat(3, 32)]
        );
    }

    #[test]
    fn three_way_exhaustive_sweep() {
        for level in 0..=6usize {
            let total = 1u64 << level;
            for x in 0..=total {
                for y in 0..=(total - x) {
                    let z = total - x - y;
                    let (net, _) = synth_three_way(x, y, z, level).unwrap();
                    assert!(net.splitter_count() <= level);
                    assert!(net.validate().passes());
                    let dist = absorption_distribution(&net).unwrap();
                    assert_eq!(dist.get(0), &rat_u64(x, total));
                    assert_eq!(dist.get(1), &rat_u64(y, total));
                    assert_eq!(dist.get(2), &rat_u64(z, total));
                }
            }
        }
    }

    #[test]
    fn optimal_14_29() {
        let target = TargetProbability::new(14, 29).unwrap();
        let (net, trace) = synth_optimal(&target).unwrap();
        assert_eq!(net.splitter_count(), 5);
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &[rat(14, 29), rat(15, 29)]
        );
        assert_eq!(trace.reduction_chain.len(), 5);
    }

    #[test]
    fn optimal_one_half_is_one_splitter() {
        let target = TargetProbability::new(1, 2).unwrap();
        let (net, _) = synth_optimal(&target).unwrap();
        assert_eq!(net.splitter_count(), 1);
    }

    #[test]
    fn optimal_trivial_endpoints() {
        for (a, b, expect) in [(0u64, 1u64, vec![int(0), int(1)]), (1, 1, vec![int(1), int(0)])] {
            let (net, _) = synth_optimal(&TargetProbability::new(a, b).unwrap()).unwrap();
            assert_eq!(net.splitter_count(), 0);
            assert_eq!(absorption_distribution(&net).unwrap().probs(), &expect[..]);
        }
    }

    #[test]
    fn feedback_identity_on_three_way() {
        let (open, _) = synth_three_way(14, 15, 3, 5).unwrap();
        let open_latency = expected_latency(&open).unwrap();
        let open_dist = absorption_distribution(&open).unwrap();
        let mut closed = open.clone();
        close_feedback(&mut closed, 2).unwrap();
        let closed_latency = expected_latency(&closed).unwrap();
        let kept = open_dist.get(0) + open_dist.get(1);
        assert_eq!(closed_latency, open_latency / kept);
    }

    #[test]
    fn mutated_merge_wiring_is_caught_by_the_analyzer() {
        // Swap the last merge splitter's outputs: the distribution must move
        // off the target, demonstrating the sweep would catch the mutant.
        let (mut net, _) = synth_three_way(14, 15, 3, 5).unwrap();
        let last = net.splitters.len() - 1;
        let (b0, b1) = (net.splitters[last].branch0, net.splitters[last].branch1);
        net.splitters[last].branch0 = b1;
        net.splitters[last].branch1 = b0;
        let dist = absorption_distribution(&net).unwrap();
        assert_ne!(dist.probs(), &[rat(14, 32), rat(15, 32), rat(3, 32)]);
    }

    #[test]
    fn witness_latency_grows_linearly() {
        for n in 1..=12usize {
            let net = greedy_latency_witness(n);
            assert_eq!(net.splitter_count(), n);
            assert!(net.validate().passes());
            let latency = expected_latency(&net).unwrap();
            assert!(latency >= rat((n as i64) + 2, 3), "n = {n}");
        }
    }

    #[test]
    fn optimal_random_targets_match_analyzer() {
        // Deterministic pseudo-random scan over denominators up to 256.
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = 2 + (state >> 33) % 255;
            let a = 1 + (state >> 13) % (b - 1);
            let target = TargetProbability::new(a, b).unwrap();
            let (net, _) = synth_optimal(&target).unwrap();
            let n = target.level();
            assert!(net.splitter_count() <= n);
            let report = analyze(&net).unwrap();
            assert_eq!(report.distribution.get(0), &target.as_rational());
        }
    }

    #[test]
    fn target_probability_normalizes() {
        let t = TargetProbability::new(14, 28).unwrap();
        assert_eq!((t.numerator(), t.denominator()), (1, 2));
        assert_eq!(t.level(), 1);
        assert_eq!(TargetProbability::new(14, 29).unwrap().level(), 5);
        assert!(TargetProbability::new(3, 2).is_err());
        assert!(TargetProbability::new(1, 0).is_err());
    }

    #[test]
    fn target_distribution_minimizes_denominator() {
        let t = TargetDistribution::new(vec![2, 4, 6], 12).unwrap();
        assert_eq!(t.numerators(), &[1, 2, 3]);
        assert_eq!(t.denominator(), 6);
        let u = TargetDistribution::from_rationals(&[rat(1, 2), rat(1, 6), rat(1, 4), rat(1, 12)])
            .unwrap();
        assert_eq!(u.numerators(), &[6, 2, 3, 1]);
        assert_eq!(u.denominator(), 12);
        assert!(TargetDistribution::new(vec![1, 1], 3).is_err());
    }
}
