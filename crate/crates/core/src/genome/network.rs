use std::collections::BTreeSet;

use super::{CppnGenome, GenomeError, NodeKind};
use crate::activation::Activation;

/// Kahn's algorithm over node positions. Ready nodes are taken in ascending id
/// order so the traversal (and hence every floating-point sum) is fixed.
/// Returns `None` on a cycle.
pub(super) fn topological_order(genome: &CppnGenome, enabled_only: bool) -> Option<Vec<usize>> {
    let nodes = genome.nodes();
    let mut indegree = vec![0usize; nodes.len()];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for c in genome.connections() {
        if enabled_only && !c.enabled {
            continue;
        }
        let (Some(s), Some(t)) = (genome.node_index(c.source), genome.node_index(c.target)) else {
            continue;
        };
        indegree[t] += 1;
        out[s].push(t);
    }
    let mut ready: BTreeSet<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &t in &out[i] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.insert(t);
            }
        }
    }
    (order.len() == nodes.len()).then_some(order)
}

#[derive(Debug, Clone)]
struct Step {
    slot: usize,
    activation: Activation,
    bias: f64,
    incoming: Vec<(usize, f64)>,
}

/// A genome flattened into an evaluation schedule.
#[derive(Debug, Clone)]
pub struct CompiledCppn {
    inputs: usize,
    outputs: Vec<usize>,
    slots: usize,
    steps: Vec<Step>,
}

impl CompiledCppn {
    pub fn compile(genome: &CppnGenome) -> Result<Self, GenomeError> {
        let order = topological_order(genome, true)
            .ok_or_else(|| GenomeError::Malformed("enabled connections form a cycle".into()))?;
        let nodes = genome.nodes();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
        for c in genome.connections().iter().filter(|c| c.enabled) {
            let s = genome
                .node_index(c.source)
                .ok_or_else(|| GenomeError::Malformed(format!("dangling source in {}", c.innovation)))?;
            let t = genome
                .node_index(c.target)
                .ok_or_else(|| GenomeError::Malformed(format!("dangling target in {}", c.innovation)))?;
            incoming[t].push((s, c.weight));
        }
        let steps = order
            .into_iter()
            .filter(|&i| nodes[i].kind != NodeKind::Input)
            .map(|i| Step {
                slot: i,
                activation: nodes[i].activation,
                bias: nodes[i].bias,
                incoming: std::mem::take(&mut incoming[i]),
            })
            .collect();
        let outputs = (genome.input_count()..genome.input_count() + genome.output_count()).collect();
        Ok(Self { inputs: genome.input_count(), outputs, slots: nodes.len(), steps })
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>, GenomeError> {
        let mut buf = vec![0.0; self.slots];
        let mut out = vec![0.0; self.outputs.len()];
        self.activate_into(inputs, &mut buf, &mut out)?;
        Ok(out)
    }

    /// Allocation-free variant; `scratch` is resized as needed.
    pub fn activate_into(&self, inputs: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<(), GenomeError> {
        if inputs.len() != self.inputs {
            return Err(GenomeError::InputLength { expected: self.inputs, got: inputs.len() });
        }
        scratch.clear();
        scratch.resize(self.slots, 0.0);
        scratch[..self.inputs].copy_from_slice(inputs);
        for step in &self.steps {
            let mut sum = step.bias;
            for &(src, w) in &step.incoming {
                sum += w * scratch[src];
            }
            // Sums of finite terms can overflow to +-inf but never reach NaN.
            scratch[step.slot] = step.activation.apply(sum.clamp(-f64::MAX, f64::MAX));
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[slot];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::testutil::random_genome;
    use crate::genome::{ConnectionGene, InnovationRegistry, NodeGene, NodeId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn io_nodes(inputs: usize, outputs: usize, act: Activation) -> Vec<NodeGene> {
        (0..inputs + outputs)
            .map(|i| NodeGene {
                id: i as NodeId,
                kind: if i < inputs { NodeKind::Input } else { NodeKind::Output },
                activation: act,
                bias: 0.0,
            })
            .collect()
    }

    /// Direct recursive definition of a node's value.
    fn naive_value(g: &CppnGenome, id: NodeId, inputs: &[f64]) -> f64 {
        let node = g.node(id).unwrap();
        if node.kind == NodeKind::Input {
            return inputs[id as usize];
        }
        let mut sum = node.bias;
        for c in g.connections().iter().filter(|c| c.enabled && c.target == id) {
            sum += c.weight * naive_value(g, c.source, inputs);
        }
        node.activation.apply(sum)
    }

    #[test]
    fn single_square_connection() {
        let conn = ConnectionGene { innovation: 0, source: 0, target: 3, weight: 1.0, enabled: true };
        let g = CppnGenome::from_parts(3, 2, io_nodes(3, 2, Activation::Square), vec![conn]).unwrap();
        assert_eq!(g.activate(&[2.0, 0.0, 0.0]).unwrap()[0], 4.0);
    }

    #[test]
    fn no_connections_sigmoid_half() {
        let g = CppnGenome::from_parts(3, 2, io_nodes(3, 2, Activation::Sigmoid), vec![]).unwrap();
        assert_eq!(g.activate(&[0.3, -1.0, 2.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let g = CppnGenome::from_parts(3, 2, io_nodes(3, 2, Activation::Sigmoid), vec![]).unwrap();
        assert_eq!(g.activate(&[1.0]), Err(GenomeError::InputLength { expected: 3, got: 1 }));
    }

    #[test]
    fn matches_recursive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..40 {
            let mut reg = InnovationRegistry::new(3, 2);
            let g = random_genome(3, 2, 10 + trial, &mut reg, &mut rng);
            let net = CompiledCppn::compile(&g).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let got = net.activate(&x).unwrap();
                for (o, &v) in got.iter().enumerate() {
                    let want = naive_value(&g, (3 + o) as NodeId, &x);
                    assert!((v - want).abs() <= 1e-12 * want.abs().max(1.0), "{v} vs {want}");
                }
            }
        }
    }

    #[test]
    fn activation_is_bitwise_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut reg = InnovationRegistry::new(3, 2);
        let g = random_genome(3, 2, 25, &mut reg, &mut rng);
        let x = [0.1, -0.7, 0.33];
        let a = g.activate(&x).unwrap();
        let b = g.activate(&x).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
