//! Weighted binary trees: Knuth–Yao generating trees, the Huffman
//! procedure, and a brute-force optimal-tree oracle.

use super::SynthesisError;
use crate::network::{EdgeTarget, FlowNetwork, NodeId, Splitter};
use crate::rational::{pow2, Rational};
use num::bigint::BigInt;
use num::{One, ToPrimitive, Zero};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// A node of a full binary tree with rational weights. Internal weights are
/// always the sum of the children's weights.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf { label: usize, weight: Rational },
    Internal { left: usize, right: usize, weight: Rational },
}

impl TreeNode {
    pub fn weight(&self) -> &Rational {
        match self {
            TreeNode::Leaf { weight, .. } => weight,
            TreeNode::Internal { weight, .. } => weight,
        }
    }
}

/// Arena-allocated full binary tree.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

impl WeightedTree {
    pub fn weight(&self, index: usize) -> &Rational {
        self.nodes[index].weight()
    }

    pub fn root_weight(&self) -> &Rational {
        self.weight(self.root)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Indices of internal nodes in arena order (for Huffman trees this is
    /// the merge order).
    pub fn internal_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], TreeNode::Internal { .. }))
            .collect()
    }

    /// Product of all internal-node weights; the multiplicative form of
    /// `sum log2 w_j`, compared exactly.
    pub fn internal_weight_product(&self) -> Rational {
        self.internal_nodes()
            .into_iter()
            .map(|i| self.weight(i).clone())
            .product()
    }

    /// `sum_leaves weight * depth`; for weights summing to 1 this is the
    /// expected root-to-leaf path length.
    pub fn expected_depth(&self) -> Rational {
        let mut total = Rational::zero();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((index, depth)) = stack.pop() {
            match &self.nodes[index] {
                TreeNode::Leaf { weight, .. } => {
                    total += weight * Rational::from_integer(BigInt::from(depth));
                }
                TreeNode::Internal { left, right, .. } => {
                    stack.push((*left, depth + 1));
                    stack.push((*right, depth + 1));
                }
            }
        }
        total
    }

    /// Leaves as `(label, weight)` in left-to-right order.
    pub fn leaves(&self) -> Vec<(usize, Rational)> {
        let mut out = Vec::new();
        // Right child pushed first, so leaves pop out left to right.
        let mut stack = vec![self.root];
        while let Some(index) = stack.pop() {
            match &self.nodes[index] {
                TreeNode::Leaf { label, weight } => out.push((*label, weight.clone())),
                TreeNode::Internal { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        out
    }

    /// Builds a weighted tree from a bare structure, taking leaf weights
    /// from `weights` by label. Every label in `0..weights.len()` must
    /// appear exactly once.
    pub fn from_structure(
        structure: &TreeStructure,
        weights: &[Rational],
    ) -> Result<Self, SynthesisError> {
        let mut nodes = Vec::new();
        let mut seen = vec![false; weights.len()];
        let root = build_from_structure(structure, weights, &mut nodes, &mut seen)?;
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(SynthesisError::TreeMismatch(format!(
                "label {missing} does not appear in the tree"
            )));
        }
        Ok(WeightedTree { nodes, root })
    }
}

/// Bare tree shape with leaf labels; weights come from the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeStructure {
    Leaf(usize),
    Node(Box<TreeStructure>, Box<TreeStructure>),
}

fn build_from_structure(
    structure: &TreeStructure,
    weights: &[Rational],
    nodes: &mut Vec<TreeNode>,
    seen: &mut [bool],
) -> Result<usize, SynthesisError> {
    match structure {
        TreeStructure::Leaf(label) => {
            if *label >= weights.len() {
                return Err(SynthesisError::TreeMismatch(format!(
                    "label {label} out of range for {} outcomes",
                    weights.len()
                )));
            }
            if seen[*label] {
                return Err(SynthesisError::TreeMismatch(format!(
                    "label {label} appears more than once"
                )));
            }
            seen[*label] = true;
            nodes.push(TreeNode::Leaf {
                label: *label,
                weight: weights[*label].clone(),
            });
            Ok(nodes.len() - 1)
        }
        TreeStructure::Node(left, right) => {
            let left_index = build_from_structure(left, weights, nodes, seen)?;
            let right_index = build_from_structure(right, weights, nodes, seen)?;
            let weight = nodes[left_index].weight() + nodes[right_index].weight();
            nodes.push(TreeNode::Internal {
                left: left_index,
                right: right_index,
                weight,
            });
            Ok(nodes.len() - 1)
        }
    }
}

/// Per-label multisets of dyadic atoms `2^{-j}`, stored as depths in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSet {
    pub depths: Vec<Vec<u32>>,
}

impl AtomSet {
    pub fn values(&self, label: usize) -> Vec<Rational> {
        self.depths[label]
            .iter()
            .map(|&d| pow2(-(d as i32)))
            .collect()
    }

    pub fn label_count(&self) -> usize {
        self.depths.len()
    }
}

/// Builds the Knuth–Yao generating tree for a dyadic distribution (label =
/// index) and the corresponding loop-free network of fair splitters.
///
/// Each probability is split into the atoms of its binary expansion; atoms
/// are allotted shallowest depth first, within a depth by ascending label,
/// into the leftmost free leaf, and the tree grows lazily below the leaves
/// that remain free. The Kraft equality guarantees the tree closes exactly.
pub fn knuth_yao_tree(
    probs: &[Rational],
) -> Result<(WeightedTree, AtomSet, FlowNetwork), SynthesisError> {
    if probs.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    let sum: Rational = probs.iter().sum();
    if !sum.is_one() {
        return Err(SynthesisError::NotNormalized(format!(
            "probabilities sum to {sum}"
        )));
    }
    let mut depth_limit = 0usize;
    let mut exponents = Vec::with_capacity(probs.len());
    for (label, p) in probs.iter().enumerate() {
        if p < &Rational::zero() {
            return Err(SynthesisError::OutOfRange(format!(
                "negative probability at label {label}"
            )));
        }
        let denom = p.denom();
        let exponent = (denom.bits() - 1) as usize;
        if (BigInt::one() << exponent) != *denom {
            return Err(SynthesisError::NotDyadic(format!(
                "label {label} has denominator {denom}"
            )));
        }
        if exponent > 62 {
            return Err(SynthesisError::OutOfRange(format!(
                "label {label} denominator exceeds the supported range"
            )));
        }
        exponents.push(exponent);
        depth_limit = depth_limit.max(exponent);
    }
    let n = depth_limit;

    // Numerators scaled to the common denominator 2^n.
    let scaled: Vec<u64> = probs
        .iter()
        .zip(&exponents)
        .map(|(p, &e)| (p.numer() << (n - e)).to_u64().expect("fits by range check"))
        .collect();

    let mut atom_depths: Vec<Vec<u32>> = vec![Vec::new(); probs.len()];
    for (label, &num) in scaled.iter().enumerate() {
        for depth in 1..=n {
            if (num >> (n - depth)) & 1 == 1 {
                atom_depths[label].push(depth as u32);
            }
        }
    }

    // A probability of exactly 1 is the whole root.
    if let Some(unit) = scaled.iter().position(|&v| v == (1u64 << n)) {
        let tree = WeightedTree {
            nodes: vec![TreeNode::Leaf {
                label: unit,
                weight: Rational::one(),
            }],
            root: 0,
        };
        let atoms = AtomSet {
            depths: {
                let mut d: Vec<Vec<u32>> = vec![Vec::new(); probs.len()];
                d[unit].push(0);
                d
            },
        };
        return Ok((tree, atoms, FlowNetwork::passthrough(unit, probs.len())));
    }

    // Lazy top-down growth. `pending` holds arena slots at the current
    // depth, left to right; each depth fills atoms into the leftmost slots
    // and splits the rest.
    let mut nodes: Vec<Option<TreeNode>> = vec![None];
    let mut pending: Vec<usize> = vec![0];
    for depth in 1..=n {
        let mut here: Vec<usize> = Vec::new();
        for (label, depths) in atom_depths.iter().enumerate() {
            if depths.binary_search(&(depth as u32)).is_ok() {
                here.push(label);
            }
        }
        debug_assert!(here.len() <= pending.len() * 2, "Kraft violation");
        let mut next_pending = Vec::new();
        // Split every pending node at depth-1 into two depth slots first.
        let mut slots = Vec::with_capacity(pending.len() * 2);
        for &parent in &pending {
            let left = nodes.len();
            nodes.push(None);
            let right = nodes.len();
            nodes.push(None);
            let weight = pow2(-((depth as i32) - 1));
            nodes[parent] = Some(TreeNode::Internal {
                left,
                right,
                weight,
            });
            slots.push(left);
            slots.push(right);
        }
        let mut slot_iter = slots.into_iter();
        for label in here {
            let slot = slot_iter.next().expect("Kraft equality");
            nodes[slot] = Some(TreeNode::Leaf {
                label,
                weight: pow2(-(depth as i32)),
            });
        }
        next_pending.extend(slot_iter);
        pending = next_pending;
        if depth == n {
            debug_assert!(pending.is_empty(), "Kraft equality leaves no free leaf");
        }
    }

    let nodes: Vec<TreeNode> = nodes
        .into_iter()
        .map(|n| n.expect("all slots resolved"))
        .collect();
    let tree = WeightedTree { nodes, root: 0 };

    // Internal nodes become fair splitters, numbered in arena (level) order.
    let mut splitter_index = vec![usize::MAX; tree.nodes.len()];
    let mut count = 0;
    for (i, node) in tree.nodes.iter().enumerate() {
        if matches!(node, TreeNode::Internal { .. }) {
            splitter_index[i] = count;
            count += 1;
        }
    }
    let target_of = |index: usize| match &tree.nodes[index] {
        TreeNode::Leaf { label, .. } => EdgeTarget::Output(*label),
        TreeNode::Internal { .. } => EdgeTarget::Splitter(NodeId(splitter_index[index])),
    };
    let mut splitters = Vec::with_capacity(count);
    for (i, node) in tree.nodes.iter().enumerate() {
        if let TreeNode::Internal { left, right, .. } = node {
            splitters.push(Splitter::fair(
                splitter_index[i],
                target_of(*left),
                target_of(*right),
            ));
        }
    }
    let network = FlowNetwork::new(splitters, target_of(tree.root), probs.len());
    let atoms = AtomSet {
        depths: atom_depths,
    };
    Ok((tree, atoms, network))
}

/// The Huffman procedure over exact rationals: repeatedly merge the two
/// minimum-weight parentless nodes. Ties select the smaller weight first,
/// then the earlier insertion index; the first node taken becomes the left
/// child.
pub fn huffman_tree(weights: &[Rational]) -> Result<WeightedTree, SynthesisError> {
    if weights.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    for (i, w) in weights.iter().enumerate() {
        if w <= &Rational::zero() {
            return Err(SynthesisError::OutOfRange(format!(
                "weight {i} must be positive"
            )));
        }
    }
    let mut nodes: Vec<TreeNode> = weights
        .iter()
        .enumerate()
        .map(|(label, weight)| TreeNode::Leaf {
            label,
            weight: weight.clone(),
        })
        .collect();
    let mut heap: BinaryHeap<Reverse<(Rational, usize, usize)>> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| Reverse((w.clone(), i, i)))
        .collect();
    let mut next_seq = weights.len();
    while heap.len() > 1 {
        let Reverse((left_weight, _, left)) = heap.pop().expect("len > 1");
        let Reverse((right_weight, _, right)) = heap.pop().expect("len > 1");
        let weight = &left_weight + &right_weight;
        nodes.push(TreeNode::Internal {
            left,
            right,
            weight: weight.clone(),
        });
        heap.push(Reverse((weight, next_seq, nodes.len() - 1)));
        next_seq += 1;
    }
    let root = nodes.len() - 1;
    Ok(WeightedTree { nodes, root })
}

/// Exhaustively minimizes the internal-weight product (equivalently
/// `sum log2 w_j`) over all full binary trees with the given labeled
/// leaves. Subset dynamic programming; limited to 6 leaves.
pub fn brute_force_optimal_tree(
    weights: &[Rational],
) -> Result<(WeightedTree, Rational), SynthesisError> {
    let m = weights.len();
    if m == 0 {
        return Err(SynthesisError::EmptyInput);
    }
    if m > 6 {
        return Err(SynthesisError::TooManyLeaves(m));
    }
    let full: u32 = (1 << m) - 1;
    let mut subset_weight = vec![Rational::zero(); (full + 1) as usize];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        subset_weight[mask as usize] =
            &subset_weight[(mask & (mask - 1)) as usize] + &weights[low];
    }

    // best[mask] = (minimal internal product over trees on `mask`, chosen
    // left-child subset).
    let mut best: Vec<Option<(Rational, u32)>> = vec![None; (full + 1) as usize];
    for mask in 1..=full {
        if mask.count_ones() == 1 {
            best[mask as usize] = Some((Rational::one(), 0));
            continue;
        }
        let low_bit = mask & mask.wrapping_neg();
        let mut choice: Option<(Rational, u32)> = None;
        // Proper nonempty submasks containing the lowest leaf.
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            if sub & low_bit != 0 && sub != mask {
                let rest = mask ^ sub;
                let left = &best[sub as usize].as_ref().expect("smaller mask").0;
                let right = &best[rest as usize].as_ref().expect("smaller mask").0;
                let product = &subset_weight[mask as usize] * left * right;
                if choice.as_ref().is_none_or(|(best_p, _)| product < *best_p) {
                    choice = Some((product, sub));
                }
            }
            sub = (sub - 1) & mask;
        }
        best[mask as usize] = choice;
    }

    let mut nodes = Vec::new();
    let root = materialize(full, weights, &subset_weight, &best, &mut nodes);
    let minimum = best[full as usize].as_ref().expect("full mask").0.clone();
    Ok((WeightedTree { nodes, root }, minimum))
}

fn materialize(
    mask: u32,
    weights: &[Rational],
    subset_weight: &[Rational],
    best: &[Option<(Rational, u32)>],
    nodes: &mut Vec<TreeNode>,
) -> usize {
    if mask.count_ones() == 1 {
        let label = mask.trailing_zeros() as usize;
        nodes.push(TreeNode::Leaf {
            label,
            weight: weights[label].clone(),
        });
        return nodes.len() - 1;
    }
    let split = best[mask as usize].as_ref().expect("computed").1;
    let left = materialize(split, weights, subset_weight, best, nodes);
    let right = materialize(mask ^ split, weights, subset_weight, best, nodes);
    nodes.push(TreeNode::Internal {
        left,
        right,
        weight: subset_weight[mask as usize].clone(),
    });
    nodes.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{absorption_distribution, entropy, expected_latency};
    use crate::network::Distribution;
    use crate::rational::{int, rat};
    use num::ToPrimitive;

    #[test]
    fn atoms_for_the_three_outcome_example() {
        let probs = vec![rat(14, 32), rat(15, 32), rat(3, 32)];
        let (_, atoms, net) = knuth_yao_tree(&probs).unwrap();
        assert_eq!(atoms.values(0), vec![rat(1, 4), rat(1, 8), rat(1, 16)]);
        assert_eq!(
            atoms.values(1),
            vec![rat(1, 4), rat(1, 8), rat(1, 16), rat(1, 32)]
        );
        assert_eq!(atoms.values(2), vec![rat(1, 16), rat(1, 32)]);
        assert_eq!(net.splitter_count(), 8);
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &probs[..]
        );
    }

    #[test]
    fn two_way_fair_coin_is_one_splitter() {
        let (tree, _, net) = knuth_yao_tree(&[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(net.splitter_count(), 1);
        assert_eq!(tree.leaf_count(), 2);
    }

    #[test]
    fn unit_probability_is_a_passthrough() {
        let (tree, atoms, net) = knuth_yao_tree(&[int(0), int(1)]).unwrap();
        assert_eq!(net.splitter_count(), 0);
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(atoms.depths[1], vec![0]);
        assert_eq!(
            absorption_distribution(&net).unwrap().probs(),
            &[int(0), int(1)]
        );
    }

    #[test]
    fn rejects_non_dyadic_and_unnormalized() {
        assert!(matches!(
            knuth_yao_tree(&[rat(1, 3), rat(2, 3)]),
            Err(SynthesisError::NotDyadic(_))
        ));
        assert!(matches!(
            knuth_yao_tree(&[rat(1, 2), rat(1, 4)]),
            Err(SynthesisError::NotNormalized(_))
        ));
    }

    #[test]
    fn random_dyadic_distributions_reproduce_and_meet_the_entropy_window() {
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            state >> 33
        };
        for _ in 0..300 {
            let m = 2 + (next() as usize) % 5;
            let n = 1 + (next() as usize) % 6;
            let total = 1u64 << n;
            // Random composition of 2^n into m non-negative parts.
            let mut parts = vec![0u64; m];
            for _ in 0..total {
                parts[(next() as usize) % m] += 1;
            }
            let probs: Vec<Rational> =
                parts.iter().map(|&p| crate::rational::rat_u64(p, total)).collect();
            let (tree, _, net) = knuth_yao_tree(&probs).unwrap();
            assert!(net.validate().passes());
            let dist = absorption_distribution(&net).unwrap();
            assert_eq!(dist.probs(), &probs[..]);
            let latency = expected_latency(&net).unwrap();
            assert_eq!(latency, tree.expected_depth());
            let h = entropy(&Distribution::new(probs).unwrap());
            let latency_f = latency.to_f64().unwrap();
            assert!(latency_f >= h - 1e-9, "ET {latency_f} < H {h}");
            assert!(latency_f <= h + 2.0 + 1e-9, "ET {latency_f} > H+2 {h}");
        }
    }

    #[test]
    fn huffman_merge_order_matches_the_classic_example() {
        let weights = vec![
            rat(10, 100),
            rat(10, 100),
            rat(15, 100),
            rat(15, 100),
            rat(20, 100),
            rat(30, 100),
        ];
        let tree = huffman_tree(&weights).unwrap();
        let merged: Vec<(Rational, Rational, Rational)> = tree
            .internal_nodes()
            .into_iter()
            .map(|i| match &tree.nodes[i] {
                TreeNode::Internal { left, right, weight } => (
                    tree.weight(*left).clone(),
                    tree.weight(*right).clone(),
                    weight.clone(),
                ),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            merged,
            vec![
                (rat(1, 10), rat(1, 10), rat(1, 5)),
                (rat(3, 20), rat(3, 20), rat(3, 10)),
                (rat(1, 5), rat(1, 5), rat(2, 5)),
                (rat(3, 10), rat(3, 10), rat(3, 5)),
                (rat(2, 5), rat(3, 5), int(1)),
            ]
        );
    }

    #[test]
    fn huffman_two_leaves() {
        let tree = huffman_tree(&[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.internal_nodes().len(), 1);
        assert_eq!(tree.root_weight(), &int(1));
    }

    #[test]
    fn brute_force_two_leaves_has_product_one() {
        let (_, product) = brute_force_optimal_tree(&[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(product, int(1));
    }

    #[test]
    fn brute_force_limits_leaves() {
        let weights = vec![rat(1, 7); 7];
        assert!(matches!(
            brute_force_optimal_tree(&weights),
            Err(SynthesisError::TooManyLeaves(7))
        ));
    }

    #[test]
    fn huffman_matches_brute_force_on_the_mixed_example() {
        let weights = vec![rat(1, 2), rat(1, 6), rat(1, 4), rat(1, 12)];
        let huffman = huffman_tree(&weights).unwrap();
        let (_, minimum) = brute_force_optimal_tree(&weights).unwrap();
        assert_eq!(huffman.internal_weight_product(), minimum);
    }

    #[test]
    fn huffman_matches_brute_force_on_random_five_leaf_instances() {
        let mut state = 0x452821e638d01377u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            state >> 33
        };
        for _ in 0..60 {
            let raw: Vec<u64> = (0..5).map(|_| 1 + next() % 50).collect();
            let total: u64 = raw.iter().sum();
            let weights: Vec<Rational> = raw
                .iter()
                .map(|&w| crate::rational::rat_u64(w, total))
                .collect();
            let huffman = huffman_tree(&weights).unwrap();
            let (_, minimum) = brute_force_optimal_tree(&weights).unwrap();
            assert_eq!(
                huffman.internal_weight_product(),
                minimum,
                "weights {raw:?}"
            );
        }
    }

    #[test]
    fn structure_round_trip_and_mismatch() {
        let weights = vec![rat(1, 2), rat(1, 4), rat(1, 4)];
        let structure = TreeStructure::Node(
            Box::new(TreeStructure::Leaf(0)),
            Box::new(TreeStructure::Node(
                Box::new(TreeStructure::Leaf(1)),
                Box::new(TreeStructure::Leaf(2)),
            )),
        );
        let tree = WeightedTree::from_structure(&structure, &weights).unwrap();
        assert_eq!(tree.root_weight(), &int(1));
        assert_eq!(tree.leaf_count(), 3);

        let duplicated = TreeStructure::Node(
            Box::new(TreeStructure::Leaf(0)),
            Box::new(TreeStructure::Leaf(0)),
        );
        assert!(matches!(
            WeightedTree::from_structure(&duplicated, &weights),
            Err(SynthesisError::TreeMismatch(_))
        ));
    }
}
