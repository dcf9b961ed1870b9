//! Exact verification engine.
//!
//! A network with transient splitter states and absorbing output states is
//! an absorbing Markov chain with transition blocks `Q` (transient to
//! transient) and `R` (transient to absorbing). The absorption distribution
//! from the start state is the start row of `(I - Q)^{-1} R`, and the
//! expected latency (splitter visits before absorption) is the row sum of
//! the same fundamental-matrix row. Everything here is computed exactly over
//! rationals; only splitters reachable from the start enter `Q` and `R`.

use crate::linalg;
use crate::network::{Distribution, EdgeTarget, FlowNetwork, NodeId};
use crate::rational::{format_rational, pow2, Rational};
use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    /// `det(I - Q) = 0`: the reachable chain does not absorb. Validation
    /// rejects such networks, so hitting this indicates an inconsistent
    /// caller.
    #[error("singular system: the reachable chain does not absorb")]
    SingularSystem,
    #[error("network has a reachable cycle")]
    NotLoopFree,
    #[error("cycle enumeration exceeded the budget of {budget}")]
    CycleBudgetExceeded { budget: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// The `Q`/`R` blocks of the chain restricted to reachable splitters, with
/// rows and columns in ascending splitter-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDecomposition {
    pub q: Vec<Vec<Rational>>,
    pub r: Vec<Vec<Rational>>,
    pub node_order: Vec<NodeId>,
}

pub fn transition_decomposition(network: &FlowNetwork) -> TransitionDecomposition {
    let node_order = network.reachable_ids();
    let index_of = |id: NodeId| node_order.binary_search(&id).ok();
    let n = node_order.len();
    let m = network.num_outputs;
    let mut q = vec![vec![Rational::zero(); n]; n];
    let mut r = vec![vec![Rational::zero(); m]; n];
    for (row, id) in node_order.iter().enumerate() {
        let splitter = &network.splitters[id.0];
        let complement: Rational = Rational::one() - &splitter.bias;
        for (target, gain) in [
            (splitter.branch0, splitter.bias.clone()),
            (splitter.branch1, complement),
        ] {
            match target {
                EdgeTarget::Splitter(next) => {
                    let col = index_of(next).expect("reachable target");
                    q[row][col] += gain;
                }
                EdgeTarget::Output(label) => r[row][label] += gain,
            }
        }
    }
    TransitionDecomposition { q, r, node_order }
}

fn i_minus_q(q: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = q.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Rational::one() - &q[i][j]
                    } else {
                        -q[i][j].clone()
                    }
                })
                .collect()
        })
        .collect()
}

/// Expected visit counts per transient state starting from the start state:
/// the start row of the fundamental matrix `(I - Q)^{-1}`.
fn visit_row(
    network: &FlowNetwork,
    td: &TransitionDecomposition,
) -> Result<Vec<Rational>, AnalysisError> {
    let start_id = match network.start {
        EdgeTarget::Splitter(id) => id,
        EdgeTarget::Output(_) => return Ok(vec![Rational::zero(); td.node_order.len()]),
    };
    let start_index = td
        .node_order
        .binary_search(&start_id)
        .expect("start splitter is reachable");
    let mut unit = vec![Rational::zero(); td.node_order.len()];
    unit[start_index] = Rational::one();
    linalg::solve_transposed(&i_minus_q(&td.q), &unit).ok_or(AnalysisError::SingularSystem)
}

/// Exact absorption distribution over output labels.
pub fn absorption_distribution(network: &FlowNetwork) -> Result<Distribution, AnalysisError> {
    if let EdgeTarget::Output(label) = network.start {
        return Ok(Distribution::point(label, network.num_outputs));
    }
    let td = transition_decomposition(network);
    let visits = visit_row(network, &td)?;
    let mut probs = vec![Rational::zero(); network.num_outputs];
    for (row, visit) in visits.iter().enumerate() {
        for (label, gain) in td.r[row].iter().enumerate() {
            if !gain.is_zero() {
                probs[label] += visit * gain;
            }
        }
    }
    Distribution::new(probs).map_err(|e| {
        AnalysisError::PreconditionViolated(format!("absorption distribution invalid: {e}"))
    })
}

/// Exact expected number of splitter visits before absorption.
pub fn expected_latency(network: &FlowNetwork) -> Result<Rational, AnalysisError> {
    if matches!(network.start, EdgeTarget::Output(_)) {
        return Ok(Rational::zero());
    }
    let td = transition_decomposition(network);
    Ok(visit_row(network, &td)?.into_iter().sum())
}

/// Exact variance of the number of splitter visits before absorption; used
/// to size Monte-Carlo confidence windows.
pub fn latency_variance(network: &FlowNetwork) -> Result<Rational, AnalysisError> {
    if matches!(network.start, EdgeTarget::Output(_)) {
        return Ok(Rational::zero());
    }
    let td = transition_decomposition(network);
    let visits = visit_row(network, &td)?;
    let matrix = i_minus_q(&td.q);
    let ones = vec![Rational::one(); td.q.len()];
    // t = (I - Q)^{-1} 1: expected remaining visits from each state.
    let remaining = linalg::solve(&matrix, &ones).ok_or(AnalysisError::SingularSystem)?;
    let mean: Rational = visits.iter().sum();
    // E[T^2] = 2 u . t - E[T] with u the start visit row.
    let cross: Rational = visits
        .iter()
        .zip(remaining.iter())
        .map(|(u, t)| u * t)
        .sum();
    let second_moment = Rational::from_integer(BigInt::from(2)) * cross - &mean;
    Ok(second_moment - &mean * &mean)
}

/// Combined exact report (one decomposition, one solve).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub distribution: Distribution,
    pub expected_latency: Rational,
    pub loop_free: bool,
    pub reachable_splitter_count: usize,
}

impl AnalysisReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "distribution": self
                .distribution
                .probs()
                .iter()
                .map(format_rational)
                .collect::<Vec<_>>(),
            "expected_latency": format_rational(&self.expected_latency),
            "loop_free": self.loop_free,
            "reachable_splitter_count": self.reachable_splitter_count,
        })
    }
}

pub fn analyze(network: &FlowNetwork) -> Result<AnalysisReport, AnalysisError> {
    let validation = network.validate();
    if !validation.passes() {
        return Err(AnalysisError::PreconditionViolated(format!(
            "network fails validation: {validation}"
        )));
    }
    let td = transition_decomposition(network);
    let (distribution, expected_latency) = match network.start {
        EdgeTarget::Output(label) => (
            Distribution::point(label, network.num_outputs),
            Rational::zero(),
        ),
        EdgeTarget::Splitter(_) => {
            let visits = visit_row(network, &td)?;
            let mut probs = vec![Rational::zero(); network.num_outputs];
            for (row, visit) in visits.iter().enumerate() {
                for (label, gain) in td.r[row].iter().enumerate() {
                    if !gain.is_zero() {
                        probs[label] += visit * gain;
                    }
                }
            }
            let dist = Distribution::new(probs).map_err(|e| {
                AnalysisError::PreconditionViolated(format!(
                    "absorption distribution invalid: {e}"
                ))
            })?;
            (dist, visits.into_iter().sum())
        }
    };
    Ok(AnalysisReport {
        distribution,
        expected_latency,
        loop_free: validation.loop_free,
        reachable_splitter_count: validation.reachable_count,
    })
}

/// Loop-free converse check: every output probability, in lowest terms, has
/// a denominator dividing `2^n` where `n` is the reachable splitter count.
pub fn verify_loop_free_dyadic(network: &FlowNetwork) -> Result<bool, AnalysisError> {
    let report = analyze(network)?;
    if !report.loop_free {
        return Err(AnalysisError::NotLoopFree);
    }
    let modulus = BigInt::one() << report.reachable_splitter_count;
    Ok(report
        .distribution
        .probs()
        .iter()
        .all(|p| (&modulus % p.denom()).is_zero()))
}

/// Feedback converse check: every output probability, in lowest terms, has a
/// denominator at most `2^n` where `n` is the reachable (fair) splitter
/// count.
pub fn verify_denominator_bound(network: &FlowNetwork) -> Result<bool, AnalysisError> {
    let report = analyze(network)?;
    let bound = BigInt::one() << report.reachable_splitter_count;
    Ok(report
        .distribution
        .probs()
        .iter()
        .all(|p| p.denom() <= &bound))
}

/// Exact `det(I - Q)` for a matrix with entries in {0, 1/2, 1} and row sums
/// at most 1. The bound 0 <= det(I - Q) <= 1 is asserted by the sweep
/// harness, not here.
pub fn det_bound_oracle(q: &[Vec<Rational>]) -> Result<Rational, AnalysisError> {
    let n = q.len();
    let allowed = [Rational::zero(), crate::rational::rat(1, 2), Rational::one()];
    for (i, row) in q.iter().enumerate() {
        if row.len() != n {
            return Err(AnalysisError::PreconditionViolated(format!(
                "row {i} has {} entries in a {n}x{n} matrix",
                row.len()
            )));
        }
        for (j, entry) in row.iter().enumerate() {
            if !allowed.contains(entry) {
                return Err(AnalysisError::PreconditionViolated(format!(
                    "entry ({i}, {j}) = {} is not in {{0, 1/2, 1}}",
                    format_rational(entry)
                )));
            }
        }
        let sum: Rational = row.iter().sum();
        if sum > Rational::one() {
            return Err(AnalysisError::PreconditionViolated(format!(
                "row {i} sums to {} > 1",
                format_rational(&sum)
            )));
        }
    }
    Ok(linalg::det(&i_minus_q(q)))
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(distribution: &Distribution) -> f64 {
    distribution
        .probs()
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| {
            let value = p.to_f64().expect("probability fits f64");
            -value * value.log2()
        })
        .sum()
}

/// First-order sensitivity of the output distribution to per-splitter bias
/// errors, via an exact difference quotient at step `h = 2^-40`: two exact
/// solves at `p` and `p + h` per splitter. The quotient approximates the
/// derivative to order `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// `derivatives[i][j]`: difference quotient of output `j`'s probability
    /// with respect to splitter `i`'s bias. Rows for unreachable splitters
    /// are zero.
    pub derivatives: Vec<Vec<Rational>>,
    pub epsilon: Rational,
}

impl SensitivityReport {
    /// Per-output first-order bound `eps * sum_i |dS_j/dp_i|`.
    pub fn first_order_error_bound(&self, epsilon: &Rational) -> Vec<Rational> {
        let outputs = self.derivatives.first().map_or(0, |row| row.len());
        (0..outputs)
            .map(|j| {
                let total: Rational = self.derivatives.iter().map(|row| row[j].abs()).sum();
                epsilon * total
            })
            .collect()
    }

    pub fn error_bound(&self) -> Vec<Rational> {
        self.first_order_error_bound(&self.epsilon)
    }
}

pub fn sensitivity(
    network: &FlowNetwork,
    epsilon: &Rational,
) -> Result<SensitivityReport, AnalysisError> {
    if epsilon.is_negative() {
        return Err(AnalysisError::PreconditionViolated(
            "epsilon must be non-negative".into(),
        ));
    }
    let step = pow2(-40);
    for splitter in &network.splitters {
        let margin = (Rational::one() - &splitter.bias).min(splitter.bias.clone());
        if epsilon >= &margin {
            return Err(AnalysisError::PreconditionViolated(format!(
                "epsilon {} is not below the bias margin {} of splitter {}",
                format_rational(epsilon),
                format_rational(&margin),
                splitter.id
            )));
        }
        if &splitter.bias + &step >= Rational::one() {
            return Err(AnalysisError::PreconditionViolated(format!(
                "splitter {} bias too close to 1 for the 2^-40 step",
                splitter.id
            )));
        }
    }
    let base = absorption_distribution(network)?;
    let reachable = network.reachable();
    let mut derivatives = Vec::with_capacity(network.splitters.len());
    for (index, is_reachable) in reachable.iter().enumerate() {
        if !is_reachable {
            derivatives.push(vec![Rational::zero(); network.num_outputs]);
            continue;
        }
        let mut perturbed = network.clone();
        perturbed.splitters[index].bias += &step;
        let shifted = absorption_distribution(&perturbed)?;
        derivatives.push(
            base.probs()
                .iter()
                .zip(shifted.probs())
                .map(|(p, q)| (q - p) / &step)
                .collect(),
        );
    }
    Ok(SensitivityReport {
        derivatives,
        epsilon: epsilon.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Splitter;
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

    /// Von Neumann's trick as a network: three p-splitters realizing a fair
    /// coin for any bias p.
    fn von_neumann_halver(bias: Rational) -> FlowNetwork {
        let splitter = |id, b0, b1| Splitter {
            id: NodeId(id),
            bias: bias.clone(),
            branch0: b0,
            branch1: b1,
        };
        FlowNetwork::new(
            vec![
                splitter(0, EdgeTarget::Splitter(NodeId(1)), EdgeTarget::Splitter(NodeId(2))),
                splitter(1, EdgeTarget::Splitter(NodeId(0)), EdgeTarget::Output(0)),
                splitter(2, EdgeTarget::Output(1), EdgeTarget::Splitter(NodeId(0))),
            ],
            EdgeTarget::Splitter(NodeId(0)),
            2,
        )
    }

    #[test]
    fn feedback_pair_distribution_and_latency() {
        let report = analyze(&feedback_pair()).unwrap();
        assert_eq!(report.distribution.probs(), &[rat(2, 3), rat(1, 3)]);
        assert_eq!(report.expected_latency, int(2));
        assert!(!report.loop_free);
        assert_eq!(report.reachable_splitter_count, 2);
    }

    #[test]
    fn feedback_pair_latency_variance() {
        assert_eq!(latency_variance(&feedback_pair()).unwrap(), int(2));
    }

    #[test]
    fn von_neumann_is_fair_for_any_bias() {
        for bias in [rat(1, 3), rat(2, 5), rat(9, 10)] {
            let dist = absorption_distribution(&von_neumann_halver(bias)).unwrap();
            assert_eq!(dist.probs(), &[rat(1, 2), rat(1, 2)]);
        }
    }

    #[test]
    fn passthrough_analysis() {
        let net = FlowNetwork::passthrough(1, 2);
        let report = analyze(&net).unwrap();
        assert_eq!(report.distribution.probs(), &[int(0), int(1)]);
        assert_eq!(report.expected_latency, int(0));
    }

    #[test]
    fn unreachable_splitter_changes_nothing() {
        let base = feedback_pair();
        let mut padded = base.clone();
        padded.splitters.push(Splitter::fair(
            2,
            EdgeTarget::Output(0),
            EdgeTarget::Output(1),
        ));
        let a = analyze(&base).unwrap();
        let b = analyze(&padded).unwrap();
        assert_eq!(a.distribution, b.distribution);
        assert_eq!(a.expected_latency, b.expected_latency);
    }

    #[test]
    fn trap_yields_singular_system() {
        let net = FlowNetwork::new(
            vec![Splitter::fair(
                0,
                EdgeTarget::Splitter(NodeId(0)),
                EdgeTarget::Splitter(NodeId(0)),
            )],
            EdgeTarget::Splitter(NodeId(0)),
            1,
        );
        // Bypassing validate: the raw solver must still flag the trap.
        assert_eq!(
            absorption_distribution(&net),
            Err(AnalysisError::SingularSystem)
        );
    }

    #[test]
    fn det_oracle_examples() {
        assert_eq!(det_bound_oracle(&[vec![int(0)]]).unwrap(), int(1));
        assert_eq!(det_bound_oracle(&[vec![int(1)]]).unwrap(), int(0));
        let q = vec![vec![int(0), rat(1, 2)], vec![rat(1, 2), int(0)]];
        assert_eq!(det_bound_oracle(&q).unwrap(), rat(3, 4));
    }

    #[test]
    fn det_oracle_rejects_bad_input() {
        assert!(matches!(
            det_bound_oracle(&[vec![rat(1, 3)]]),
            Err(AnalysisError::PreconditionViolated(_))
        ));
        assert!(matches!(
            det_bound_oracle(&[vec![int(1), rat(1, 2)], vec![int(0), int(0)]]),
            Err(AnalysisError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn entropy_values() {
        let half = Distribution::new(vec![rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(entropy(&half), 1.0);
        let point = Distribution::new(vec![int(1), int(0)]).unwrap();
        assert_eq!(entropy(&point), 0.0);
        let skewed = Distribution::new(vec![rat(2, 3), rat(1, 3)]).unwrap();
        let expected = 3f64.log2() - 2.0 / 3.0;
        assert!((entropy(&skewed) - expected).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_of_single_fair_splitter() {
        let net = FlowNetwork::new(
            vec![Splitter::fair(0, EdgeTarget::Output(0), EdgeTarget::Output(1))],
            EdgeTarget::Splitter(NodeId(0)),
            2,
        );
        let report = sensitivity(&net, &rat(1, 100)).unwrap();
        // S_0 = p exactly, so the quotient is exactly 1.
        assert_eq!(report.derivatives[0][0], int(1));
        assert_eq!(report.derivatives[0][1], int(-1));
    }

    #[test]
    fn sensitivity_rows_sum_to_zero_and_bound_covers_shift() {
        let net = feedback_pair();
        let eps = rat(1, 100);
        let report = sensitivity(&net, &eps).unwrap();
        for row in &report.derivatives {
            let sum: Rational = row.iter().sum();
            assert!(sum.is_zero());
        }
        // Shift every bias by +eps and compare against the bound.
        let mut shifted = net.clone();
        for splitter in &mut shifted.splitters {
            splitter.bias += &eps;
        }
        let base = absorption_distribution(&net).unwrap();
        let moved = absorption_distribution(&shifted).unwrap();
        let bounds = report.error_bound();
        for label in 0..2 {
            let actual = (moved.get(label) - base.get(label)).abs();
            assert!(actual <= bounds[label]);
        }
    }

    #[test]
    fn sensitivity_zero_splitter_network() {
        let report = sensitivity(&FlowNetwork::passthrough(0, 2), &int(0)).unwrap();
        assert!(report.derivatives.is_empty());
    }

    #[test]
    fn sensitivity_epsilon_range_enforced() {
        let net = feedback_pair();
        assert!(matches!(
            sensitivity(&net, &rat(1, 2)),
            Err(AnalysisError::PreconditionViolated(_))
        ));
    }
}
