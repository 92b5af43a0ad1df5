//! Empirical check of the first-order Markov assumption on tabular data.
//!
//! For each transition `j → j+1` with `j ≥ 2`, compares the empirical law
//! of the next level given the last two levels with the law given only the
//! last one. The total-variation distance between the two is reported per
//! observed `(x_{j−1}, x_j)` context; 0 everywhere means the data look
//! exactly stepwise. Purely diagnostic.

use std::collections::BTreeMap;

use markov_anova_core::PathDataset;

use crate::report::StepDiscrepancyRow;

pub fn markov_discrepancy(data: &PathDataset) -> Vec<StepDiscrepancyRow> {
    let levels = &data.spec().levels;
    let mut rows = Vec::new();
    for j in 1..levels.len().saturating_sub(1) {
        let next = levels[j + 1];
        // (previous, current) -> counts of next
        let mut pair: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        let mut single = vec![vec![0.0; next]; levels[j]];
        for rec in data {
            let l = rec.path.levels();
            pair.entry((l[j - 1], l[j])).or_insert_with(|| vec![0.0; next])[l[j + 1]] += 1.0;
            single[l[j]][l[j + 1]] += 1.0;
        }
        let (mut max, mut weighted, mut total) = (0.0f64, 0.0, 0.0);
        for ((_, cur), counts) in &pair {
            let n: f64 = counts.iter().sum();
            let m: f64 = single[*cur].iter().sum();
            let tv = 0.5
                * counts.iter().zip(&single[*cur]).map(|(a, b)| (a / n - b / m).abs()).sum::<f64>();
            max = max.max(tv);
            weighted += n * tv;
            total += n;
        }
        rows.push(StepDiscrepancyRow {
            step: j + 1,
            max_total_variation: max,
            mean_total_variation: if total > 0.0 { weighted / total } else { 0.0 },
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use markov_anova_core::{DagSpec, Path};

    fn data(paths: &[[usize; 3]]) -> PathDataset {
        let mut d = PathDataset::new(DagSpec::new(vec![2, 2, 2]).unwrap()).unwrap();
        for p in paths {
            d.push(Path::from_one_based(p), 0.0).unwrap();
        }
        d
    }

    #[test]
    fn product_design_has_no_discrepancy() {
        let all: Vec<[usize; 3]> =
            (0..8).map(|k| [1 + (k >> 2 & 1), 1 + (k >> 1 & 1), 1 + (k & 1)]).collect();
        let rows = markov_discrepancy(&data(&all));
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].step, 2);
        assert_eq!(rows[0].max_total_variation, 0.0);
    }

    #[test]
    fn memory_of_two_steps_is_detected() {
        // third level copies the first
        let rows = markov_discrepancy(&data(&[[1, 1, 1], [2, 1, 2], [1, 2, 1], [2, 2, 2]]));
        assert!((rows[0].max_total_variation - 0.5).abs() < 1e-12);
        assert!(markov_discrepancy(&data(&[[1, 1, 1]]))[0].max_total_variation == 0.0);
    }
}
