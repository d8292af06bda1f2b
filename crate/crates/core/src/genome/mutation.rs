use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{ConnectionGene, CppnGenome, InnovationRegistry, NodeGene, NodeKind, NeatParams};
use crate::activation::Activation;

const REPLACE_RANGE: f64 = 3.0;

/// Which operators fired during one [`mutate_logged`] call. An operator counts
/// as attempted when its Bernoulli draw succeeds, whether or not it could apply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MutationLog {
    pub add_node: bool,
    pub delete_node: bool,
    pub add_connection: bool,
    pub add_connection_applied: bool,
    pub delete_connection: bool,
    pub toggle_connection: bool,
    pub activations_changed: usize,
}

/// Returns a mutated copy of `genome`.
///
/// Structural operators (add/delete node, add/delete connection, toggle) fire
/// at most once each, with their configured per-genome probability. Activation
/// re-draws and weight/bias mutation are applied per gene.
pub fn mutate<R: Rng + ?Sized>(
    genome: &CppnGenome,
    params: &NeatParams,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> CppnGenome {
    mutate_logged(genome, params, registry, rng).0
}

pub fn mutate_logged<R: Rng + ?Sized>(
    genome: &CppnGenome,
    params: &NeatParams,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> (CppnGenome, MutationLog) {
    let mut g = genome.clone();
    let mut log = MutationLog::default();

    if fires(rng, params.add_node_rate) {
        log.add_node = true;
        add_node(&mut g, registry, rng);
    }
    if fires(rng, params.delete_node_rate) {
        log.delete_node = true;
        delete_node(&mut g, rng);
    }
    if fires(rng, params.add_connection_rate) {
        log.add_connection = true;
        log.add_connection_applied = add_connection(&mut g, registry, rng);
    }
    if fires(rng, params.delete_connection_rate) {
        log.delete_connection = true;
        if !g.connections.is_empty() {
            let i = rng.random_range(0..g.connections.len());
            g.connections.remove(i);
        }
    }
    if fires(rng, params.toggle_connection_rate) {
        log.toggle_connection = true;
        if !g.connections.is_empty() {
            let i = rng.random_range(0..g.connections.len());
            g.connections[i].enabled = !g.connections[i].enabled;
        }
    }
    if params.activation_mutate_rate > 0.0 {
        for node in g.nodes.iter_mut().filter(|n| n.kind != NodeKind::Input) {
            if fires(rng, params.activation_mutate_rate) {
                node.activation = Activation::random_cppn(rng);
                log.activations_changed += 1;
            }
        }
    }
    if params.weight_mutate_rate > 0.0 {
        let normal = Normal::new(0.0, params.weight_perturb_sigma).expect("sigma validated");
        let mutate_value = |v: &mut f64, rng: &mut R| {
            if fires(rng, params.weight_mutate_rate) {
                if fires(rng, params.weight_replace_rate) {
                    *v = rng.random_range(-REPLACE_RANGE..REPLACE_RANGE);
                } else {
                    *v += normal.sample(rng);
                }
            }
        };
        for c in g.connections.iter_mut() {
            mutate_value(&mut c.weight, rng);
        }
        for n in g.nodes.iter_mut().filter(|n| n.kind != NodeKind::Input) {
            mutate_value(&mut n.bias, rng);
        }
    }
    debug_assert!(g.validate().is_ok(), "mutation broke a genome invariant");
    (g, log)
}

#[inline]
fn fires<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

/// Splits a random enabled connection `a -> b` into `a -> n -> b`. The incoming
/// half gets weight 1 and the outgoing half inherits the old weight.
fn add_node<R: Rng + ?Sized>(g: &mut CppnGenome, registry: &mut InnovationRegistry, rng: &mut R) -> bool {
    let enabled: Vec<usize> = (0..g.connections.len()).filter(|&i| g.connections[i].enabled).collect();
    if enabled.is_empty() {
        return false;
    }
    let idx = enabled[rng.random_range(0..enabled.len())];
    let old = g.connections[idx].clone();
    let split = registry.split(old.innovation, old.source, old.target);
    if g.node(split.node).is_some() {
        return false;
    }
    g.connections[idx].enabled = false;
    g.insert_node(NodeGene {
        id: split.node,
        kind: NodeKind::Hidden,
        activation: Activation::random_cppn(rng),
        bias: 0.0,
    });
    g.insert_connection(ConnectionGene {
        innovation: split.incoming,
        source: old.source,
        target: split.node,
        weight: 1.0,
        enabled: true,
    });
    g.insert_connection(ConnectionGene {
        innovation: split.outgoing,
        source: split.node,
        target: old.target,
        weight: old.weight,
        enabled: true,
    });
    true
}

fn delete_node<R: Rng + ?Sized>(g: &mut CppnGenome, rng: &mut R) -> bool {
    let hidden: Vec<u32> = g.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).map(|n| n.id).collect();
    if hidden.is_empty() {
        return false;
    }
    let id = hidden[rng.random_range(0..hidden.len())];
    g.nodes.retain(|n| n.id != id);
    g.connections.retain(|c| c.source != id && c.target != id);
    true
}

/// One random draw of a (source, target) pair; skipped if the pair exists or
/// would close a cycle.
fn add_connection<R: Rng + ?Sized>(g: &mut CppnGenome, registry: &mut InnovationRegistry, rng: &mut R) -> bool {
    let sources: Vec<u32> = g.nodes.iter().filter(|n| n.kind != NodeKind::Output).map(|n| n.id).collect();
    let targets: Vec<u32> = g.nodes.iter().filter(|n| n.kind != NodeKind::Input).map(|n| n.id).collect();
    if sources.is_empty() || targets.is_empty() {
        return false;
    }
    let s = sources[rng.random_range(0..sources.len())];
    let t = targets[rng.random_range(0..targets.len())];
    let weight = rng.random_range(-1.0..1.0);
    if s == t || g.has_pair(s, t) || g.would_create_cycle(s, t) {
        return false;
    }
    let innovation = registry.connection(s, t);
    if g.connection(innovation).is_some() {
        return false;
    }
    g.insert_connection(ConnectionGene { innovation, source: s, target: t, weight, enabled: true });
    true
}
