//! The flow-network data model and structural validation.
//!
//! A [`FlowNetwork`] is a list of [`Splitter`]s plus a designated start edge
//! and a number of output labels. Outputs are labels rather than nodes:
//! several edges may target the same label, which generating-tree
//! constructions rely on. A network with no splitters whose start edge
//! targets an output directly is legal and represents the trivial
//! probabilities 0 and 1.

use crate::rational::{format_rational, half, Rational};
use num::{One, Zero};
use std::collections::VecDeque;
use std::fmt;

/// Index of a splitter, dense in `[0, splitter_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Destination of an edge: another splitter or an absorbing output label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTarget {
    Splitter(NodeId),
    Output(usize),
}

impl fmt::Display for EdgeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeTarget::Splitter(id) => write!(f, "s:{}", id.0),
            EdgeTarget::Output(label) => write!(f, "o:{label}"),
        }
    }
}

/// A two-way splitter. A token takes `branch0` with probability `bias` and
/// `branch1` with probability `1 - bias`. Synthesized networks always use
/// bias 1/2; the analyzer accepts any bias strictly between 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitter {
    pub id: NodeId,
    pub bias: Rational,
    pub branch0: EdgeTarget,
    pub branch1: EdgeTarget,
}

impl Splitter {
    pub fn fair(id: usize, branch0: EdgeTarget, branch1: EdgeTarget) -> Self {
        Splitter {
            id: NodeId(id),
            bias: half(),
            branch0,
            branch1,
        }
    }
}

/// A stochastic flow network.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub splitters: Vec<Splitter>,
    pub start: EdgeTarget,
    pub num_outputs: usize,
}

impl FlowNetwork {
    pub fn new(splitters: Vec<Splitter>, start: EdgeTarget, num_outputs: usize) -> Self {
        FlowNetwork {
            splitters,
            start,
            num_outputs,
        }
    }

    /// A zero-splitter network that routes every token straight to `label`.
    pub fn passthrough(label: usize, num_outputs: usize) -> Self {
        FlowNetwork {
            splitters: Vec::new(),
            start: EdgeTarget::Output(label),
            num_outputs,
        }
    }

    pub fn splitter_count(&self) -> usize {
        self.splitters.len()
    }

    fn target_in_range(&self, target: EdgeTarget) -> bool {
        match target {
            EdgeTarget::Splitter(id) => id.0 < self.splitters.len(),
            EdgeTarget::Output(label) => label < self.num_outputs,
        }
    }

    /// Splitters reachable from the start edge, as a per-index flag vector.
    /// Dangling splitter references are ignored during the walk.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.splitters.len()];
        let mut queue = VecDeque::new();
        if let EdgeTarget::Splitter(id) = self.start {
            if id.0 < seen.len() {
                seen[id.0] = true;
                queue.push_back(id.0);
            }
        }
        while let Some(index) = queue.pop_front() {
            let splitter = &self.splitters[index];
            for target in [splitter.branch0, splitter.branch1] {
                if let EdgeTarget::Splitter(next) = target {
                    if next.0 < seen.len() && !seen[next.0] {
                        seen[next.0] = true;
                        queue.push_back(next.0);
                    }
                }
            }
        }
        seen
    }

    /// Ids of reachable splitters in ascending order.
    pub fn reachable_ids(&self) -> Vec<NodeId> {
        self.reachable()
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .map(|(i, _)| NodeId(i))
            .collect()
    }

    /// Structural validation. Diagnostics are data: the report lists
    /// unreachable splitters, reachable splitters that cannot reach any
    /// output (traps), dangling references, and whether the reachable part
    /// of the network is loop-free.
    pub fn validate(&self) -> ValidationReport {
        let mut dangling = Vec::new();
        if !self.target_in_range(self.start) {
            dangling.push(DanglingRef {
                from: EdgeRef::Start,
                target: self.start,
            });
        }
        let mut misnumbered = Vec::new();
        for (index, splitter) in self.splitters.iter().enumerate() {
            if splitter.id.0 != index {
                misnumbered.push(splitter.id);
            }
            for (branch, target) in [(0u8, splitter.branch0), (1u8, splitter.branch1)] {
                if !self.target_in_range(target) {
                    dangling.push(DanglingRef {
                        from: EdgeRef::Branch(NodeId(index), branch),
                        target,
                    });
                }
            }
        }

        let reachable = self.reachable();
        let reachable_count = reachable.iter().filter(|r| **r).count();
        let unreachable: Vec<NodeId> = reachable
            .iter()
            .enumerate()
            .filter(|(_, r)| !**r)
            .map(|(i, _)| NodeId(i))
            .collect();

        // Splitters that can reach an output, via reverse reachability from
        // output edges over the reachable subgraph.
        let mut can_absorb = vec![false; self.splitters.len()];
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); self.splitters.len()];
        let mut queue = VecDeque::new();
        for (index, splitter) in self.splitters.iter().enumerate() {
            if !reachable[index] {
                continue;
            }
            for target in [splitter.branch0, splitter.branch1] {
                match target {
                    EdgeTarget::Output(label) if label < self.num_outputs => {
                        if !can_absorb[index] {
                            can_absorb[index] = true;
                            queue.push_back(index);
                        }
                    }
                    EdgeTarget::Splitter(next) if next.0 < self.splitters.len() => {
                        reverse[next.0].push(index);
                    }
                    _ => {}
                }
            }
        }
        while let Some(index) = queue.pop_front() {
            for &prev in &reverse[index] {
                if !can_absorb[prev] {
                    can_absorb[prev] = true;
                    queue.push_back(prev);
                }
            }
        }
        let traps: Vec<NodeId> = (0..self.splitters.len())
            .filter(|&i| reachable[i] && !can_absorb[i])
            .map(NodeId)
            .collect();

        let loop_free = self.reachable_subgraph_is_acyclic(&reachable);

        ValidationReport {
            unreachable,
            traps,
            dangling,
            misnumbered,
            loop_free,
            reachable_count,
        }
    }

    fn reachable_subgraph_is_acyclic(&self, reachable: &[bool]) -> bool {
        // Iterative three-color DFS over reachable splitters.
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; self.splitters.len()];
        for root in 0..self.splitters.len() {
            if !reachable[root] || color[root] != WHITE {
                continue;
            }
            let mut stack = vec![(root, 0u8)];
            color[root] = GRAY;
            while let Some(top) = stack.last_mut() {
                let (node, edge) = *top;
                if edge >= 2 {
                    color[node] = BLACK;
                    stack.pop();
                    continue;
                }
                top.1 += 1;
                let target = if edge == 0 {
                    self.splitters[node].branch0
                } else {
                    self.splitters[node].branch1
                };
                if let EdgeTarget::Splitter(next) = target {
                    if next.0 < self.splitters.len() {
                        match color[next.0] {
                            GRAY => return false,
                            WHITE => {
                                color[next.0] = GRAY;
                                stack.push((next.0, 0));
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        true
    }
}

/// Where a reference lives: the start edge or a branch of a splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRef {
    Start,
    Branch(NodeId, u8),
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeRef::Start => write!(f, "start"),
            EdgeRef::Branch(id, branch) => write!(f, "splitter {} branch{branch}", id.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DanglingRef {
    pub from: EdgeRef,
    pub target: EdgeTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub unreachable: Vec<NodeId>,
    pub traps: Vec<NodeId>,
    pub dangling: Vec<DanglingRef>,
    pub misnumbered: Vec<NodeId>,
    pub loop_free: bool,
    pub reachable_count: usize,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.traps.is_empty() && self.dangling.is_empty() && self.misnumbered.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "validation: {}",
            if self.passes() { "pass" } else { "FAIL" }
        )?;
        writeln!(f, "  loop-free: {}", self.loop_free)?;
        writeln!(f, "  reachable splitters: {}", self.reachable_count)?;
        if !self.unreachable.is_empty() {
            let ids: Vec<String> = self.unreachable.iter().map(|id| id.to_string()).collect();
            writeln!(f, "  unreachable splitters: {}", ids.join(", "))?;
        }
        for trap in &self.traps {
            writeln!(f, "  trap: splitter {trap} has no path to any output")?;
        }
        for dangle in &self.dangling {
            writeln!(
                f,
                "  dangling reference: {} -> {}",
                dangle.from, dangle.target
            )?;
        }
        for id in &self.misnumbered {
            writeln!(f, "  splitter id {id} does not match its position")?;
        }
        Ok(())
    }
}

/// An exact probability distribution over output labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("probability at label {label} is outside [0, 1]: {value}")]
    OutOfRange { label: usize, value: String },
    #[error("probabilities sum to {sum}, not 1")]
    BadSum { sum: String },
}

impl Distribution {
    pub fn new(probs: Vec<Rational>) -> Result<Self, DistributionError> {
        for (label, p) in probs.iter().enumerate() {
            if p < &Rational::zero() || p > &Rational::one() {
                return Err(DistributionError::OutOfRange {
                    label,
                    value: format_rational(p),
                });
            }
        }
        let sum: Rational = probs.iter().sum();
        if !sum.is_one() {
            return Err(DistributionError::BadSum {
                sum: format_rational(&sum),
            });
        }
        Ok(Distribution { probs })
    }

    /// The point distribution on `label` out of `num_outputs` labels.
    pub fn point(label: usize, num_outputs: usize) -> Self {
        let mut probs = vec![Rational::zero(); num_outputs];
        probs[label] = Rational::one();
        Distribution { probs }
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn get(&self, label: usize) -> &Rational {
        &self.probs[label]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(|p| format_rational(p)).collect();
        write!(f, "({})", parts.join(", "))
    }
}
