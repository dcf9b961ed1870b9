//! Synthesis and exact verification of stochastic flow networks.
//!
//! A stochastic flow network is a directed graph of two-way splitters plus a
//! set of labeled outputs. A token enters at the start edge, takes branch 0
//! of each splitter it meets with that splitter's bias (1/2 for fair
//! splitters), and is absorbed when it reaches an output. This crate
//! provides:
//!
//! * a data model with structural validation and a canonical file format
//!   ([`network`]),
//! * exact analysis of the output distribution and expected latency via
//!   absorbing-Markov-chain algebra, with Mason's gain formula as an
//!   independent cross-check ([`analysis`], [`mason`]),
//! * constructions that realize arbitrary rational probabilities and
//!   distributions with fair splitters, including feedback-based optimal
//!   networks, Knuth–Yao generating trees, and Huffman-style compositions
//!   ([`synthesis`]),
//! * deterministic seeded Monte-Carlo simulation ([`simulation`]), and
//! * randomized/exhaustive bound-verification sweeps ([`sweep`]).
//!
//! All probabilities and latencies are exact arbitrary-precision rationals;
//! floating point only appears where a quantity is inherently real-valued
//! (entropy, empirical statistics).

pub mod analysis;
pub mod codec;
pub mod dot;
pub mod linalg;
pub mod mason;
pub mod network;
pub mod randgen;
pub mod rational;
pub mod simulation;
pub mod sweep;
pub mod synthesis;

pub use network::{Distribution, EdgeTarget, FlowNetwork, NodeId, Splitter, ValidationReport};
pub use rational::Rational;
