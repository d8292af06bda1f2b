use super::{CppnGenome, NeatParams};

/// Genomes with fewer connection genes than this are not size-normalised.
const SMALL_GENOME: usize = 20;

/// NEAT compatibility distance.
///
/// `disjoint_coefficient * (D + E) / N + weight_coefficient * W`, where `D + E`
/// counts unmatched connection genes, `N` is the larger connection-gene count
/// (1 when both genomes are small) and `W` is the mean absolute weight
/// difference over matching connections plus one per matching node whose
/// activation differs.
pub fn distance(a: &CppnGenome, b: &CppnGenome, params: &NeatParams) -> f64 {
    let (ca, cb) = (a.connections(), b.connections());
    let (mut i, mut j) = (0, 0);
    let mut unmatched = 0usize;
    let mut matched = 0usize;
    let mut weight_diff = 0.0;
    while i < ca.len() && j < cb.len() {
        match ca[i].innovation.cmp(&cb[j].innovation) {
            std::cmp::Ordering::Less => {
                unmatched += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                unmatched += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                matched += 1;
                weight_diff += (ca[i].weight - cb[j].weight).abs();
                i += 1;
                j += 1;
            }
        }
    }
    unmatched += (ca.len() - i) + (cb.len() - j);

    let (na, nb) = (a.nodes(), b.nodes());
    let (mut i, mut j) = (0, 0);
    let mut activation_mismatch = 0usize;
    while i < na.len() && j < nb.len() {
        match na[i].id.cmp(&nb[j].id) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if na[i].activation != nb[j].activation {
                    activation_mismatch += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }

    let longest = ca.len().max(cb.len());
    let norm = if longest < SMALL_GENOME { 1.0 } else { longest as f64 };
    let mean_weight = if matched > 0 { weight_diff / matched as f64 } else { 0.0 };
    params.disjoint_coefficient * unmatched as f64 / norm
        + params.weight_coefficient * (mean_weight + activation_mismatch as f64)
}
