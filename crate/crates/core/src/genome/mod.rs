//! CPPN genomes and the NEAT genetic operators acting on them.
//!
//! A genome keeps its node list sorted by id and its connection list sorted by
//! innovation number, so the derived serde output is already the canonical
//! JSON document used for checkpoints and archives. Input nodes occupy ids
//! `0..input_count` and outputs the next `output_count` ids; hidden node ids
//! come from the [`InnovationRegistry`].
//!
//! Every genome keeps its *full* connection graph (disabled genes included)
//! acyclic. Any subset of an acyclic graph is acyclic, so toggling genes and
//! inheriting enable flags during crossover can never introduce recurrence.

mod crossover;
mod distance;
mod innovation;
mod mutation;
mod network;
mod params;

pub use crossover::crossover;
pub use distance::distance;
pub use innovation::InnovationRegistry;
pub use mutation::{mutate, mutate_logged, MutationLog};
pub use network::CompiledCppn;
pub use params::NeatParams;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::Activation;

pub type NodeId = u32;
pub type Innovation = u32;

/// CPPN arity for direct (NEAT) encoding: `(x, y, z) -> (presence, material)`.
pub const NEAT_INPUTS: usize = 3;
pub const NEAT_OUTPUTS: usize = 2;
/// CPPN arity for substrate painting: `(u1, v1, u2, v2, 1) -> weight`.
pub const HYPERNEAT_INPUTS: usize = 5;
pub const HYPERNEAT_OUTPUTS: usize = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenomeError {
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("genome modes differ: {a:?} vs {b:?} (inputs, outputs)")]
    ModeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("malformed genome: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
    pub activation: Activation,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CppnGenome {
    input_count: usize,
    output_count: usize,
    nodes: Vec<NodeGene>,
    connections: Vec<ConnectionGene>,
}

impl CppnGenome {
    /// Fully connected input→output genome with weights ~ U(-1, 1), zero
    /// biases and output activations drawn from the CPPN set.
    ///
    /// Initial connection innovations are `i * output_count + o`, identical in
    /// every genome of a run, so the starting population aligns gene-for-gene.
    pub fn initial<R: Rng + ?Sized>(input_count: usize, output_count: usize, rng: &mut R) -> Self {
        let mut nodes = Vec::with_capacity(input_count + output_count);
        for id in 0..input_count {
            nodes.push(NodeGene {
                id: id as NodeId,
                kind: NodeKind::Input,
                activation: Activation::Sigmoid,
                bias: 0.0,
            });
        }
        for o in 0..output_count {
            nodes.push(NodeGene {
                id: (input_count + o) as NodeId,
                kind: NodeKind::Output,
                activation: Activation::random_cppn(rng),
                bias: 0.0,
            });
        }
        let mut connections = Vec::with_capacity(input_count * output_count);
        for i in 0..input_count {
            for o in 0..output_count {
                connections.push(ConnectionGene {
                    innovation: (i * output_count + o) as Innovation,
                    source: i as NodeId,
                    target: (input_count + o) as NodeId,
                    weight: rng.random_range(-1.0..1.0),
                    enabled: true,
                });
            }
        }
        Self { input_count, output_count, nodes, connections }
    }

    /// Builds a genome from explicit genes, sorting and validating them.
    pub fn from_parts(
        input_count: usize,
        output_count: usize,
        mut nodes: Vec<NodeGene>,
        mut connections: Vec<ConnectionGene>,
    ) -> Result<Self, GenomeError> {
        nodes.sort_by_key(|n| n.id);
        connections.sort_by_key(|c| c.innovation);
        let genome = Self { input_count, output_count, nodes, connections };
        genome.validate()?;
        Ok(genome)
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    pub fn mode(&self) -> (usize, usize) {
        (self.input_count, self.output_count)
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn connections(&self) -> &[ConnectionGene] {
        &self.connections
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    pub(crate) fn node_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn connection(&self, innovation: Innovation) -> Option<&ConnectionGene> {
        self.connections
            .binary_search_by_key(&innovation, |c| c.innovation)
            .ok()
            .map(|i| &self.connections[i])
    }

    pub fn has_pair(&self, source: NodeId, target: NodeId) -> bool {
        self.connections.iter().any(|c| c.source == source && c.target == target)
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<NodeGene> {
        &mut self.nodes
    }

    pub(crate) fn connections_mut(&mut self) -> &mut Vec<ConnectionGene> {
        &mut self.connections
    }

    pub(crate) fn insert_node(&mut self, node: NodeGene) {
        let pos = self.nodes.partition_point(|n| n.id < node.id);
        self.nodes.insert(pos, node);
    }

    pub(crate) fn insert_connection(&mut self, conn: ConnectionGene) {
        let pos = self.connections.partition_point(|c| c.innovation < conn.innovation);
        self.connections.insert(pos, conn);
    }

    /// True if adding `source -> target` would close a directed cycle in the
    /// full (enabled and disabled) connection graph.
    pub fn would_create_cycle(&self, source: NodeId, target: NodeId) -> bool {
        if source == target {
            return true;
        }
        // Is `source` reachable from `target`?
        let mut stack = vec![target];
        let mut seen = std::collections::HashSet::new();
        while let Some(n) = stack.pop() {
            if n == source {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.extend(self.connections.iter().filter(|c| c.source == n).map(|c| c.target));
        }
        false
    }

    /// Checks every structural invariant: fixed input/output layout, unique
    /// sorted ids, dangling references and full-graph acyclicity.
    pub fn validate(&self) -> Result<(), GenomeError> {
        let io = self.input_count + self.output_count;
        if self.nodes.len() < io {
            return Err(GenomeError::Malformed("missing input/output nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let expected = if i < self.input_count {
                NodeKind::Input
            } else if i < io {
                NodeKind::Output
            } else {
                NodeKind::Hidden
            };
            if i < io && n.id as usize != i {
                return Err(GenomeError::Malformed(format!("node at position {i} has id {}", n.id)));
            }
            if n.kind != expected {
                return Err(GenomeError::Malformed(format!("node {} should be {:?}", n.id, expected)));
            }
            if i > 0 && self.nodes[i - 1].id >= n.id {
                return Err(GenomeError::Malformed("node ids not strictly increasing".into()));
            }
            if !n.bias.is_finite() {
                return Err(GenomeError::Malformed(format!("node {} has non-finite bias", n.id)));
            }
        }
        for (i, c) in self.connections.iter().enumerate() {
            if i > 0 && self.connections[i - 1].innovation >= c.innovation {
                return Err(GenomeError::Malformed("innovations not strictly increasing".into()));
            }
            let (Some(s), Some(t)) = (self.node(c.source), self.node(c.target)) else {
                return Err(GenomeError::Malformed(format!(
                    "connection {} references a missing node",
                    c.innovation
                )));
            };
            if c.source == c.target || t.kind == NodeKind::Input || s.kind == NodeKind::Output {
                return Err(GenomeError::Malformed(format!(
                    "connection {} has an illegal direction",
                    c.innovation
                )));
            }
            if !c.weight.is_finite() {
                return Err(GenomeError::Malformed(format!("connection {} weight", c.innovation)));
            }
        }
        if network::topological_order(self, false).is_none() {
            return Err(GenomeError::Malformed("connection graph contains a cycle".into()));
        }
        Ok(())
    }

    /// Feed-forward evaluation. Compiles the network on every call; use
    /// [`CompiledCppn`] when querying the same genome repeatedly.
    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>, GenomeError> {
        CompiledCppn::compile(self)?.activate(inputs)
    }

    /// Canonical JSON document (nodes by id, connections by innovation).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, GenomeError> {
        let g: CppnGenome = serde_json::from_str(s).map_err(|e| GenomeError::Malformed(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}
