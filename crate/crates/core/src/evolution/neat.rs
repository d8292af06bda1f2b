use rand::Rng;

use super::{
    best_index, evaluate_tail, speciate, EvolutionConfig, EvolutionError, GenomeEvaluator, Individual, LoopState,
    Optimizer, RunObserver, RunOutcome, Species,
};
use crate::genome::{crossover, mutate, InnovationRegistry, NeatParams};

/// Species larger than this copy their champion unchanged.
const ELITISM_MIN_SIZE: usize = 5;

/// Splits `total` proportionally to `shares` (largest remainder, ties to the
/// earlier entry). Equal split when every share is zero.
fn allocate(shares: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    let exact: Vec<f64> = if sum > 0.0 {
        shares.iter().map(|s| s / sum * total as f64).collect()
    } else {
        vec![total as f64 / shares.len() as f64; shares.len()]
    };
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - quota.iter().sum::<usize>().min(total);
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        quota[i] += 1;
        left -= 1;
    }
    quota
}

/// Builds the next population from the current one. Returned individuals have
/// `fitness = NaN` except elites, which keep their id and fitness.
pub fn reproduce<R: Rng + ?Sized>(
    population: &[Individual],
    species: &[Species],
    params: &NeatParams,
    registry: &mut InnovationRegistry,
    next_id: &mut u64,
    rng: &mut R,
) -> Vec<Individual> {
    let size = params.population_size;
    let best = best_index(population).expect("non-empty population");
    let kept: Vec<&Species> = species
        .iter()
        .filter(|s| s.stagnation < params.max_stagnation || s.members.contains(&best))
        .collect();
    let floor = kept
        .iter()
        .flat_map(|s| s.members.iter().map(|&m| population[m].fitness))
        .fold(f64::INFINITY, f64::min);
    let shares: Vec<f64> = kept
        .iter()
        .map(|s| s.members.iter().map(|&m| population[m].fitness - floor).sum::<f64>() / s.members.len() as f64)
        .collect();
    let mut quota = allocate(&shares, size);
    let home = kept.iter().position(|s| s.members.contains(&best)).expect("best species kept");
    if quota[home] == 0 {
        let donor = (0..quota.len()).max_by(|&a, &b| quota[a].cmp(&quota[b]).then(b.cmp(&a))).unwrap();
        quota[donor] -= 1;
        quota[home] += 1;
    }

    let mut next = Vec::with_capacity(size);
    for (s, &n) in kept.iter().zip(&quota) {
        if n == 0 {
            continue;
        }
        let mut ranked = s.members.clone();
        ranked.sort_by(|&a, &b| {
            if population[a].ranks_before(&population[b]) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        let mut made = 0;
        if s.members.len() > ELITISM_MIN_SIZE || ranked[0] == best {
            next.push(population[ranked[0]].clone());
            made += 1;
        }
        let eligible = ((params.survival_threshold * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len());
        let parents = &ranked[..eligible];
        while made < n {
            let a = &population[parents[rng.random_range(0..eligible)]];
            let b = &population[parents[rng.random_range(0..eligible)]];
            let (fitter, other) = if b.ranks_before(a) { (b, a) } else { (a, b) };
            let child = crossover(&fitter.genome, &other.genome, rng).expect("one genome mode per run");
            let genome = mutate(&child, params, registry, rng);
            next.push(Individual { id: *next_id, genome, fitness: f64::NAN, age: 0 });
            *next_id += 1;
            made += 1;
        }
    }
    debug_assert_eq!(next.len(), size);
    next
}

/// Runs NEAT for `params.generations` generations after the initial one.
pub fn evolve_neat(
    cfg: &EvolutionConfig,
    evaluator: &mut dyn GenomeEvaluator,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome, EvolutionError> {
    cfg.validate()?;
    let params = &cfg.params;
    let mut st = LoopState::new(Optimizer::Neat, cfg);
    st.population = (0..params.population_size).map(|_| st.fresh(cfg)).collect();
    evaluate_tail(evaluator, &mut st.population, 0, 0)?;
    st.species = speciate(&st.population, &[], params);
    st.record(observer, Some(st.species.len()), None);
    st.maybe_checkpoint(cfg, observer)?;

    for generation in 1..=params.generations {
        let (rng, registry, next_id) = (st.rng.clone(), st.registry.clone(), st.next_id);
        st.registry.start_generation();
        let mut children =
            reproduce(&st.population, &st.species, params, &mut st.registry, &mut st.next_id, &mut st.rng);
        // Elites are re-evaluated too, so a noisy evaluator is treated uniformly.
        if let Err(e) = evaluate_tail(evaluator, &mut children, 0, generation) {
            return Err(st.fail(observer, rng, registry, next_id, e));
        }
        st.population = children;
        st.species = speciate(&st.population, &st.species, params);
        st.generation = generation;
        st.record(observer, Some(st.species.len()), None);
        st.maybe_checkpoint(cfg, observer)?;
    }
    Ok(st.finish())
}
