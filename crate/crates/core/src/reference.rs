//! Ready-made models for tests, demos and calibration runs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dag::DagSpec;
use crate::kernel::TransitionKernel;
use crate::quality::QualityModel;

/// Two factors with two levels each, levels persisting with probability 3/4.
///
/// Node means `[[0, 1], [-2, 2]]` and variances `[[2, 1], [1, 1]]` (rows are
/// levels, columns are factors), all Gaussian. Under the uniform target the
/// within-column differences are `2` for mean and `1` for variance in column
/// 1, and `-1` and `0` in column 2.
pub fn correlated_2x2() -> (DagSpec, TransitionKernel, QualityModel) {
    let spec = DagSpec::new(vec![2, 2]).expect("valid shape");
    let kernel = TransitionKernel::new(
        vec![0.5, 0.5],
        vec![vec![vec![0.75, 0.25], vec![0.25, 0.75]]],
    )
    .expect("valid kernel");
    let quality = QualityModel::gaussian_grid(
        &spec.levels,
        &[vec![0.0, 1.0], vec![-2.0, 2.0]],
        &[vec![2.0, 1.0], vec![1.0, 1.0]],
    )
    .expect("valid quality");
    (spec, kernel, quality)
}

/// A pair of random kernels on `levels` sharing one random support pattern.
///
/// Each entry is zeroed with probability `sparsity`, keeping at least one
/// positive entry per row; the surviving entries get independent weights in
/// each kernel.
pub fn random_equivalent_pair<R: Rng + ?Sized>(
    levels: &[usize],
    sparsity: f64,
    rng: &mut R,
) -> (TransitionKernel, TransitionKernel) {
    let mask = |rng: &mut R, width: usize| -> Vec<bool> {
        let mut row: Vec<bool> = (0..width).map(|_| !rng.random_bool(sparsity)).collect();
        if !row.iter().any(|&b| b) {
            row[rng.random_range(0..width)] = true;
        }
        row
    };
    let weights = |rng: &mut R, mask: &[bool]| -> Vec<f64> {
        let raw: Vec<f64> = mask
            .iter()
            .map(|&on| if on { rng.random_range(0.05..1.0) } else { 0.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    };
    let init_mask = mask(rng, levels[0]);
    let step_masks: Vec<Vec<Vec<bool>>> = levels
        .windows(2)
        .map(|w| (0..w[0]).map(|_| mask(rng, w[1])).collect())
        .collect();
    let build = |rng: &mut R| {
        let initial = weights(rng, &init_mask);
        let steps = step_masks
            .iter()
            .map(|rows| rows.iter().map(|m| weights(rng, m)).collect())
            .collect();
        TransitionKernel::new(initial, steps).expect("rows normalised")
    };
    let a = build(rng);
    let b = build(rng);
    (a, b)
}
