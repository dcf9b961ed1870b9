//! Mason's gain formula, used as an independent exact cross-check of the
//! matrix solver.
//!
//! The probability of reaching an output label is
//! `sum_k P_k D_k / D`, where the `P_k` are the gains of simple forward
//! paths from the start to the label, `D` is the graph determinant
//! `1 - sum L_i + sum L_i L_j - ...` over sets of pairwise non-touching
//! simple loops, and `D_k` is the determinant of the subgraph not touching
//! path `k`. Parallel branches between the same pair of nodes are merged by
//! summing gains, which leaves every term unchanged. Only the subgraph
//! reachable from the start participates.
//!
//! Enumeration is exponential in the worst case, so all work (cycles, paths
//! and determinant expansion steps) is charged against a budget; exceeding
//! it reports [`AnalysisError::CycleBudgetExceeded`], signalling that the
//! matrix method should be used instead.

use crate::analysis::AnalysisError;
use crate::network::{EdgeTarget, FlowNetwork};
use crate::rational::Rational;
use num::{One, Zero};
use std::collections::BTreeMap;

pub const DEFAULT_CYCLE_BUDGET: usize = 1 << 20;

struct Budget {
    remaining: usize,
    budget: usize,
}

impl Budget {
    fn new(budget: usize) -> Self {
        Budget {
            remaining: budget,
            budget,
        }
    }

    fn spend(&mut self) -> Result<(), AnalysisError> {
        if self.remaining == 0 {
            return Err(AnalysisError::CycleBudgetExceeded {
                budget: self.budget,
            });
        }
        self.remaining -= 1;
        Ok(())
    }
}

struct Cycle {
    nodes: Vec<usize>,
    gain: Rational,
}

struct ForwardPath {
    nodes: Vec<usize>,
    gain: Rational,
}

struct FlowGraph {
    /// Merged splitter-to-splitter gains, indexed by reachable-node index.
    succ: Vec<Vec<(usize, Rational)>>,
    /// Merged splitter-to-label gains.
    out: Vec<BTreeMap<usize, Rational>>,
    start: usize,
}

fn build_graph(network: &FlowNetwork) -> Option<FlowGraph> {
    let order = network.reachable_ids();
    let index_of = |id| order.binary_search(&id).ok();
    let start = match network.start {
        EdgeTarget::Splitter(id) => index_of(id)?,
        EdgeTarget::Output(_) => return None,
    };
    let n = order.len();
    let mut succ: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
    let mut out: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
    for (index, id) in order.iter().enumerate() {
        let splitter = &network.splitters[id.0];
        let complement: Rational = Rational::one() - &splitter.bias;
        for (target, gain) in [
            (splitter.branch0, splitter.bias.clone()),
            (splitter.branch1, complement),
        ] {
            match target {
                EdgeTarget::Splitter(next) => {
                    let next = index_of(next).expect("reachable");
                    *succ[index].entry(next).or_insert_with(Rational::zero) += gain;
                }
                EdgeTarget::Output(label) => {
                    *out[index].entry(label).or_insert_with(Rational::zero) += gain;
                }
            }
        }
    }
    Some(FlowGraph {
        succ: succ
            .into_iter()
            .map(|row| row.into_iter().collect())
            .collect(),
        out,
        start,
    })
}

/// All node-simple cycles, each found once (rooted at its minimum node).
fn simple_cycles(graph: &FlowGraph, budget: &mut Budget) -> Result<Vec<Cycle>, AnalysisError> {
    let n = graph.succ.len();
    let mut cycles = Vec::new();
    let mut visited = vec![false; n];
    let mut path = Vec::new();
    for root in 0..n {
        visited[root] = true;
        path.push(root);
        cycle_dfs(
            graph,
            root,
            root,
            &Rational::one(),
            &mut visited,
            &mut path,
            &mut cycles,
            budget,
        )?;
        path.pop();
        visited[root] = false;
    }
    Ok(cycles)
}

#[allow(clippy::too_many_arguments)]
fn cycle_dfs(
    graph: &FlowGraph,
    root: usize,
    current: usize,
    gain: &Rational,
    visited: &mut Vec<bool>,
    path: &mut Vec<usize>,
    cycles: &mut Vec<Cycle>,
    budget: &mut Budget,
) -> Result<(), AnalysisError> {
    budget.spend()?;
    for (next, edge_gain) in &graph.succ[current] {
        let extended = gain * edge_gain;
        if *next == root {
            budget.spend()?;
            cycles.push(Cycle {
                nodes: path.clone(),
                gain: extended,
            });
        } else if *next > root && !visited[*next] {
            visited[*next] = true;
            path.push(*next);
            cycle_dfs(graph, root, *next, &extended, visited, path, cycles, budget)?;
            path.pop();
            visited[*next] = false;
        }
    }
    Ok(())
}

/// All simple forward paths from the start to `label`.
fn forward_paths(
    graph: &FlowGraph,
    label: usize,
    budget: &mut Budget,
) -> Result<Vec<ForwardPath>, AnalysisError> {
    let mut paths = Vec::new();
    let mut visited = vec![false; graph.succ.len()];
    visited[graph.start] = true;
    let mut path = vec![graph.start];
    path_dfs(
        graph,
        graph.start,
        label,
        &Rational::one(),
        &mut visited,
        &mut path,
        &mut paths,
        budget,
    )?;
    Ok(paths)
}

#[allow(clippy::too_many_arguments)]
fn path_dfs(
    graph: &FlowGraph,
    current: usize,
    label: usize,
    gain: &Rational,
    visited: &mut Vec<bool>,
    path: &mut Vec<usize>,
    paths: &mut Vec<ForwardPath>,
    budget: &mut Budget,
) -> Result<(), AnalysisError> {
    budget.spend()?;
    if let Some(exit_gain) = graph.out[current].get(&label) {
        paths.push(ForwardPath {
            nodes: path.clone(),
            gain: gain * exit_gain,
        });
    }
    for (next, edge_gain) in &graph.succ[current] {
        if !visited[*next] {
            visited[*next] = true;
            path.push(*next);
            path_dfs(
                graph,
                *next,
                label,
                &(gain * edge_gain),
                visited,
                path,
                paths,
                budget,
            )?;
            path.pop();
            visited[*next] = false;
        }
    }
    Ok(())
}

/// Graph determinant over the cycles that avoid `blocked` nodes:
/// the signed sum over sets of pairwise non-touching loops.
fn determinant(
    cycles: &[Cycle],
    blocked: &mut [bool],
    budget: &mut Budget,
) -> Result<Rational, AnalysisError> {
    determinant_from(cycles, 0, blocked, budget)
}

fn determinant_from(
    cycles: &[Cycle],
    from: usize,
    blocked: &mut [bool],
    budget: &mut Budget,
) -> Result<Rational, AnalysisError> {
    budget.spend()?;
    if from == cycles.len() {
        return Ok(Rational::one());
    }
    let mut total = determinant_from(cycles, from + 1, blocked, budget)?;
    let cycle = &cycles[from];
    if cycle.nodes.iter().all(|&v| !blocked[v]) {
        for &v in &cycle.nodes {
            blocked[v] = true;
        }
        let rest = determinant_from(cycles, from + 1, blocked, budget)?;
        for &v in &cycle.nodes {
            blocked[v] = false;
        }
        total -= &cycle.gain * rest;
    }
    Ok(total)
}

/// Probability of absorbing at `label` by Mason's gain formula with the
/// default enumeration budget (overridable via
/// [`mason_probability_with_budget`]).
pub fn mason_probability(network: &FlowNetwork, label: usize) -> Result<Rational, AnalysisError> {
    mason_probability_with_budget(network, label, DEFAULT_CYCLE_BUDGET)
}

pub fn mason_probability_with_budget(
    network: &FlowNetwork,
    label: usize,
    budget: usize,
) -> Result<Rational, AnalysisError> {
    if label >= network.num_outputs {
        return Err(AnalysisError::PreconditionViolated(format!(
            "label {label} out of range for {} outputs",
            network.num_outputs
        )));
    }
    let graph = match build_graph(network) {
        Some(graph) => graph,
        None => {
            // Start edge absorbs immediately.
            return Ok(match network.start {
                EdgeTarget::Output(l) if l == label => Rational::one(),
                _ => Rational::zero(),
            });
        }
    };
    let mut budget = Budget::new(budget);
    let cycles = simple_cycles(&graph, &mut budget)?;
    let paths = forward_paths(&graph, label, &mut budget)?;

    let mut blocked = vec![false; graph.succ.len()];
    let delta = determinant(&cycles, &mut blocked, &mut budget)?;
    if delta.is_zero() {
        return Err(AnalysisError::SingularSystem);
    }
    let mut numerator = Rational::zero();
    for path in &paths {
        for &v in &path.nodes {
            blocked[v] = true;
        }
        let cofactor = determinant(&cycles, &mut blocked, &mut budget)?;
        for &v in &path.nodes {
            blocked[v] = false;
        }
        numerator += &path.gain * cofactor;
    }
    Ok(numerator / delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NodeId, Splitter};
    use crate::rational::{int, rat};

    fn feedback_pair() -> FlowNetwork {
        FlowNetwork::new(
            vec![
                Splitter::fair(0, EdgeTarget::Splitter(NodeId(1)), EdgeTarget::Output(0)),
                Splitter::fair(1, EdgeTarget::Splitter(NodeId(0)), EdgeTarget::Output(1)),
            ],
            EdgeTarget::Splitter(NodeId(0)),
            2,
        )
    }

    #[test]
    fn feedback_pair_by_mason() {
        // One loop of gain 1/4; one forward path each of gain 1/2 and 1/4.
        assert_eq!(mason_probability(&feedback_pair(), 0).unwrap(), rat(2, 3));
        assert_eq!(mason_probability(&feedback_pair(), 1).unwrap(), rat(1, 3));
    }

    #[test]
    fn loop_free_paths_sum_directly() {
        // Two-splitter chain for 3/4: delta = 1, paths 1/2 + 1/4.
        let net = FlowNetwork::new(
            vec![
                Splitter::fair(0, EdgeTarget::Output(0), EdgeTarget::Splitter(NodeId(1))),
                Splitter::fair(1, EdgeTarget::Output(0), EdgeTarget::Output(1)),
            ],
            EdgeTarget::Splitter(NodeId(0)),
            2,
        );
        assert_eq!(mason_probability(&net, 0).unwrap(), rat(3, 4));
        assert_eq!(mason_probability(&net, 1).unwrap(), rat(1, 4));
    }

    #[test]
    fn passthrough_start() {
        let net = FlowNetwork::passthrough(1, 2);
        assert_eq!(mason_probability(&net, 0).unwrap(), int(0));
        assert_eq!(mason_probability(&net, 1).unwrap(), int(1));
    }

    #[test]
    fn parallel_branches_merge() {
        // Both branches of splitter 1 return to splitter 0.
        let net = FlowNetwork::new(
            vec![
                Splitter::fair(0, EdgeTarget::Splitter(NodeId(1)), EdgeTarget::Output(0)),
                Splitter::fair(1, EdgeTarget::Splitter(NodeId(0)), EdgeTarget::Splitter(NodeId(0))),
            ],
            EdgeTarget::Splitter(NodeId(0)),
            1,
        );
        assert_eq!(mason_probability(&net, 0).unwrap(), int(1));
    }

    #[test]
    fn budget_exhaustion_reports() {
        assert!(matches!(
            mason_probability_with_budget(&feedback_pair(), 0, 2),
            Err(AnalysisError::CycleBudgetExceeded { budget: 2 })
        ));
    }

    #[test]
    fn agrees_with_matrix_solver_on_fixtures() {
        use crate::analysis::absorption_distribution;
        for net in [feedback_pair()] {
            let dist = absorption_distribution(&net).unwrap();
            for label in 0..net.num_outputs {
                assert_eq!(&mason_probability(&net, label).unwrap(), dist.get(label));
            }
        }
    }
}
