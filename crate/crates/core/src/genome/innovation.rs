use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Innovation, NodeId};

/// Node and connection genes created by splitting one connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub node: NodeId,
    pub incoming: Innovation,
    pub outgoing: Innovation,
}

/// Run-wide source of innovation numbers and hidden node ids.
///
/// Within one generation the same structural change receives the same numbers
/// wherever it appears. Call [`InnovationRegistry::start_generation`] between
/// generations; only the counters survive serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnovationRegistry {
    next_innovation: Innovation,
    next_node: NodeId,
    #[serde(skip)]
    connections: HashMap<(NodeId, NodeId), Innovation>,
    #[serde(skip)]
    splits: HashMap<Innovation, Split>,
}

impl InnovationRegistry {
    /// Registry for genomes created by [`super::CppnGenome::initial`].
    pub fn new(input_count: usize, output_count: usize) -> Self {
        Self {
            next_innovation: (input_count * output_count) as Innovation,
            next_node: (input_count + output_count) as NodeId,
            connections: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    pub fn start_generation(&mut self) {
        self.connections.clear();
        self.splits.clear();
    }

    pub fn connection(&mut self, source: NodeId, target: NodeId) -> Innovation {
        *self.connections.entry((source, target)).or_insert_with(|| {
            let i = self.next_innovation;
            self.next_innovation += 1;
            i
        })
    }

    pub fn split(&mut self, split: Innovation, source: NodeId, target: NodeId) -> Split {
        if let Some(s) = self.splits.get(&split) {
            return *s;
        }
        let node = self.next_node;
        self.next_node += 1;
        let s = Split { node, incoming: self.connection(source, node), outgoing: self.connection(node, target) };
        self.splits.insert(split, s);
        s
    }

    pub fn next_innovation(&self) -> Innovation {
        self.next_innovation
    }

    pub fn next_node(&self) -> NodeId {
        self.next_node
    }
}
