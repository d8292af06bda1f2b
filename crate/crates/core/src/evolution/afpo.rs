use std::cmp::Ordering;

use rand::Rng;

use super::{
    evaluate_tail, pareto_front, EvolutionConfig, EvolutionError, GenomeEvaluator, Individual, LoopState, Optimizer,
    RunObserver, RunOutcome,
};
use crate::genome::mutate;

/// Age-fitness Pareto optimisation. Each generation ages everyone, keeps the
/// non-dominated set (best `N - 1` by fitness if larger), refills it with
/// mutated copies of random survivors and adds one fresh random genome.
/// Unchanged survivors are not re-evaluated.
pub fn evolve_afpo(
    cfg: &EvolutionConfig,
    evaluator: &mut dyn GenomeEvaluator,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome, EvolutionError> {
    cfg.validate()?;
    let params = &cfg.params;
    let size = params.population_size;
    let front_of = |pop: &[Individual]| pareto_front(&pop.iter().map(|i| (i.fitness, i.age)).collect::<Vec<_>>());
    let mut st = LoopState::new(Optimizer::Afpo, cfg);
    st.population = (0..size).map(|_| st.fresh(cfg)).collect();
    evaluate_tail(evaluator, &mut st.population, 0, 0)?;
    st.record(observer, None, Some(front_of(&st.population).len()));
    st.maybe_checkpoint(cfg, observer)?;

    for generation in 1..=params.generations {
        let (rng, registry, next_id) = (st.rng.clone(), st.registry.clone(), st.next_id);
        st.registry.start_generation();
        let mut aged = st.population.clone();
        for ind in &mut aged {
            ind.age += 1;
        }
        let mut next: Vec<Individual> = front_of(&aged).into_iter().map(|i| aged[i].clone()).collect();
        next.sort_by(|a, b| if a.ranks_before(b) { Ordering::Less } else { Ordering::Greater });
        next.truncate(size - 1);
        let kept = next.len();
        while next.len() < size - 1 {
            let parent = &next[st.rng.random_range(0..kept)];
            let genome = mutate(&parent.genome, params, &mut st.registry, &mut st.rng);
            let age = parent.age;
            next.push(Individual { id: st.next_id, genome, fitness: f64::NAN, age });
            st.next_id += 1;
        }
        next.push(st.fresh(cfg));
        if let Err(e) = evaluate_tail(evaluator, &mut next, kept, generation) {
            return Err(st.fail(observer, rng, registry, next_id, e));
        }
        st.population = next;
        st.generation = generation;
        st.record(observer, None, Some(front_of(&st.population).len()));
        st.maybe_checkpoint(cfg, observer)?;
    }
    Ok(st.finish())
}
