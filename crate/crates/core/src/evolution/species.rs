use serde::{Deserialize, Serialize};

use super::Individual;
use crate::genome::{distance, CppnGenome, NeatParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u32,
    pub representative: CppnGenome,
    /// Indices into the population this species was built from.
    pub members: Vec<usize>,
    /// Generations since the best member fitness last improved.
    pub stagnation: u32,
    pub best_fitness_ever: f64,
}

/// Assigns every individual to the first species whose representative is
/// within the compatibility threshold, founding a new species otherwise.
///
/// Surviving species then take as representative the member closest to the
/// previous one, and update their stagnation counters.
pub fn speciate(population: &[Individual], previous: &[Species], params: &NeatParams) -> Vec<Species> {
    let mut next_id = previous.iter().map(|s| s.id + 1).max().unwrap_or(0);
    let mut species: Vec<Species> = previous
        .iter()
        .map(|s| Species { members: Vec::new(), ..s.clone() })
        .collect();
    let carried = species.len();

    for (i, ind) in population.iter().enumerate() {
        let home = species
            .iter()
            .position(|s| distance(&ind.genome, &s.representative, params) <= params.compatibility_threshold);
        match home {
            Some(k) => species[k].members.push(i),
            None => {
                species.push(Species {
                    id: next_id,
                    representative: ind.genome.clone(),
                    members: vec![i],
                    stagnation: 0,
                    best_fitness_ever: f64::NEG_INFINITY,
                });
                next_id += 1;
            }
        }
    }

    let mut out = Vec::with_capacity(species.len());
    for (k, mut s) in species.into_iter().enumerate() {
        if s.members.is_empty() {
            continue;
        }
        if k < carried {
            let closest = s
                .members
                .iter()
                .copied()
                .map(|m| (distance(&population[m].genome, &s.representative, params), population[m].id, m))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("non-empty species");
            s.representative = population[closest.2].genome.clone();
        }
        let best = s.members.iter().map(|&m| population[m].fitness).fold(f64::NEG_INFINITY, f64::max);
        if best > s.best_fitness_ever {
            s.best_fitness_ever = best;
            s.stagnation = 0;
        } else {
            s.stagnation += 1;
        }
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::testutil::random_genome;
    use crate::genome::{ConnectionGene, InnovationRegistry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn individual(id: u64, genome: CppnGenome, fitness: f64) -> Individual {
        Individual { id, genome, fitness, age: 0 }
    }

    fn shifted(g: &CppnGenome, by: f64) -> CppnGenome {
        let conns: Vec<ConnectionGene> =
            g.connections().iter().map(|c| ConnectionGene { weight: c.weight + by, ..c.clone() }).collect();
        CppnGenome::from_parts(g.input_count(), g.output_count(), g.nodes().to_vec(), conns).unwrap()
    }

    #[test]
    fn identical_genomes_form_one_species() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = CppnGenome::initial(3, 2, &mut rng);
        let pop: Vec<_> = (0..10).map(|i| individual(i, g.clone(), 0.0)).collect();
        let s = speciate(&pop, &[], &NeatParams::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].members.len(), 10);
    }

    #[test]
    fn two_separated_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = CppnGenome::initial(3, 2, &mut rng);
        // Mean weight shift of 8 gives distance 4 across clusters, 0.5 * 1 within.
        let pop: Vec<_> = (0..10)
            .map(|i| {
                let base = if i % 2 == 0 { 0.0 } else { 8.0 };
                individual(i, shifted(&g, base + (i as f64 % 3.0) * 0.5), 0.0)
            })
            .collect();
        let p = NeatParams::default();
        let s = speciate(&pop, &[], &p);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|sp| sp.members.iter().all(|&m| m % 2 == sp.members[0] % 2)));
    }

    #[test]
    fn members_are_within_threshold_of_their_representative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = NeatParams { compatibility_threshold: 1.5, ..Default::default() };
        let mut reg = InnovationRegistry::new(3, 2);
        let pop: Vec<_> = (0..60).map(|i| individual(i, random_genome(3, 2, 10, &mut reg, &mut rng), i as f64)).collect();
        let first = speciate(&pop, &[], &p);
        for s in &first {
            // Newly founded species keep their founder as representative.
            for &m in &s.members {
                assert!(distance(&pop[m].genome, &s.representative, &p) <= p.compatibility_threshold);
            }
        }
        let mut seen: Vec<usize> = first.iter().flat_map(|s| s.members.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..60).collect::<Vec<_>>());
    }

    #[test]
    fn stagnation_counts_and_resets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = CppnGenome::initial(3, 2, &mut rng);
        let p = NeatParams::default();
        let mut s = speciate(&[individual(0, g.clone(), 1.0)], &[], &p);
        assert_eq!(s[0].stagnation, 0);
        for k in 1..=3 {
            s = speciate(&[individual(k, g.clone(), 1.0)], &s, &p);
            assert_eq!(s[0].stagnation, k as u32);
        }
        s = speciate(&[individual(9, g, 1.5)], &s, &p);
        assert_eq!(s[0].stagnation, 0);
        assert_eq!(s[0].best_fitness_ever, 1.5);
    }
}
