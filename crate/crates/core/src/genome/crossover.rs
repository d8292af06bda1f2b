use rand::Rng;

use super::{CppnGenome, GenomeError};

/// NEAT crossover. The child takes the fitter parent's gene set; genes present
/// in both parents (same innovation, or same node id) take their attributes
/// from either parent with equal probability.
pub fn crossover<R: Rng + ?Sized>(fitter: &CppnGenome, other: &CppnGenome, rng: &mut R) -> Result<CppnGenome, GenomeError> {
    if fitter.mode() != other.mode() {
        return Err(GenomeError::ModeMismatch { a: fitter.mode(), b: other.mode() });
    }
    let mut child = fitter.clone();
    for c in child.connections_mut().iter_mut() {
        if let Some(o) = other.connection(c.innovation) {
            if rng.random::<bool>() {
                c.weight = o.weight;
                c.enabled = o.enabled;
            }
        }
    }
    for n in child.nodes_mut().iter_mut() {
        if let Some(o) = other.node(n.id) {
            if rng.random::<bool>() {
                n.activation = o.activation;
                n.bias = o.bias;
            }
        }
    }
    debug_assert!(child.validate().is_ok());
    Ok(child)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::testutil::random_genome;
    use crate::genome::{InnovationRegistry, HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn structure(g: &CppnGenome) -> (Vec<u32>, Vec<(u32, u32, u32)>) {
        (
            g.nodes().iter().map(|n| n.id).collect(),
            g.connections().iter().map(|c| (c.innovation, c.source, c.target)).collect(),
        )
    }

    #[test]
    fn self_crossover_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut reg = InnovationRegistry::new(3, 2);
        let g = random_genome(3, 2, 20, &mut reg, &mut rng);
        assert_eq!(crossover(&g, &g, &mut rng).unwrap(), g);
    }

    #[test]
    fn disjoint_only_parents_yield_fitter_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut reg = InnovationRegistry::new(3, 2);
        let a = random_genome(3, 2, 15, &mut reg, &mut rng);
        // Strip `b` down to genes `a` does not have.
        let b = random_genome(3, 2, 15, &mut reg, &mut rng);
        let conns: Vec<_> = b.connections().iter().filter(|c| a.connection(c.innovation).is_none()).cloned().collect();
        let mut nodes: Vec<_> = b.nodes().iter().filter(|n| (n.id as usize) < 5).cloned().collect();
        for c in &conns {
            for id in [c.source, c.target] {
                if !nodes.iter().any(|n| n.id == id) {
                    nodes.push(b.node(id).unwrap().clone());
                }
            }
        }
        let b = CppnGenome::from_parts(3, 2, nodes, conns).unwrap();
        let child = crossover(&a, &b, &mut rng).unwrap();
        assert_eq!(structure(&child), structure(&a));
        assert_eq!(child.connections(), a.connections());
    }

    #[test]
    fn child_genes_come_from_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let mut reg = InnovationRegistry::new(3, 2);
            let a = random_genome(3, 2, 12, &mut reg, &mut rng);
            let b = random_genome(3, 2, 12, &mut reg, &mut rng);
            let child = crossover(&a, &b, &mut rng).unwrap();
            child.validate().unwrap();
            let parents: HashSet<u32> =
                a.connections().iter().chain(b.connections()).map(|c| c.innovation).collect();
            assert!(child.connections().iter().all(|c| parents.contains(&c.innovation)));
        }
    }

    #[test]
    fn mode_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = CppnGenome::initial(3, 2, &mut rng);
        let b = CppnGenome::initial(HYPERNEAT_INPUTS, HYPERNEAT_OUTPUTS, &mut rng);
        assert!(matches!(crossover(&a, &b, &mut rng), Err(GenomeError::ModeMismatch { .. })));
    }
}
