/// Indices (ascending) of the points not dominated under maximised fitness
/// and minimised age. `a` dominates `b` iff `a.f >= b.f`, `a.age <= b.age`
/// and at least one is strict.
pub fn pareto_front(points: &[(f64, u32)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].1.cmp(&points[j].1).then(points[j].0.total_cmp(&points[i].0)));
    let mut front = Vec::new();
    let mut best_younger = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        let age = points[order[k]].1;
        let group_max = points[order[k]].0;
        let mut end = k;
        while end < order.len() && points[order[end]].1 == age {
            let f = points[order[end]].0;
            if f == group_max && f > best_younger {
                front.push(order[end]);
            }
            end += 1;
        }
        best_younger = best_younger.max(group_max);
        k = end;
    }
    front.sort_unstable();
    front
}
