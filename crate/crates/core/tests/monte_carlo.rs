//! Statistical checks at fixed seeds. Tolerances are several standard errors
//! wide; a failure means a real discrepancy, not bad luck, unless a seed
//! changes.

mod common;

use common::*;
use markov_anova_core::asymptotics::{closed_form_asym_var, plugin_asym_var};
use markov_anova_core::estimators::{pairwise_difference, Estimator, EstimatorKind, Moment};
use markov_anova_core::kernel::{estimate_kernel, TransitionKernel};
use markov_anova_core::oracle::exact_conditional_moments;
use markov_anova_core::quality::{NodeDistribution, QualityModel};
use markov_anova_core::reference::{correlated_2x2, random_equivalent_pair};
use markov_anova_core::simulation::{
    anscombe_study, coverage_study, sample_dataset, sample_path, AvSource, ExperimentConfig,
};
use markov_anova_core::{Node, Path};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reference_config(
    estimator: EstimatorKind,
    moment: Moment,
    node: Node,
    n: usize,
    replicates: usize,
    seed: u64,
) -> ExperimentConfig {
    let (spec, q, quality) = correlated_2x2();
    ExperimentConfig {
        target: TransitionKernel::uniform(&spec).unwrap(),
        sampling: q,
        quality,
        n,
        seed,
        replicates,
        node,
        estimator,
        moment,
        level: 0.95,
        av_source: AvSource::ClosedForm,
    }
}

#[test]
fn estimates_are_within_four_standard_errors() {
    let (spec, q, quality) = correlated_2x2();
    let u = TransitionKernel::uniform(&spec).unwrap();
    let data = sample_dataset(&q, &quality, 100_000, 31).unwrap();
    for est in [Estimator::Weighted { sampling: &q, target: &u }, Estimator::Plugin { target: &u }] {
        for node in spec.nodes() {
            let cell = est.estimate_node(&data, node).unwrap();
            let truth = exact_conditional_moments(&u, &quality, node, 1).unwrap()[1];
            let av = closed_form_asym_var(&q, &est, &quality, node, Moment::Mean).unwrap().value;
            let se = (av / cell.count as f64).sqrt();
            assert!((cell.mean - truth).abs() < 4.0 * se, "{:?} {node}", est.kind());
        }
    }
    // naive estimates converge to the sampling-kernel conditional means
    for node in spec.nodes() {
        let cell = Estimator::Naive.estimate_node(&data, node).unwrap();
        let m = exact_conditional_moments(&q, &quality, node, 2).unwrap();
        let se = ((m[2] - m[1] * m[1]) / cell.count as f64).sqrt();
        assert!((cell.mean - m[1]).abs() < 4.0 * se, "naive {node}");
    }
}

#[test]
fn reweighting_removes_the_confounding_bias() {
    let (spec, q, quality) = correlated_2x2();
    let u = TransitionKernel::uniform(&spec).unwrap();
    let data = sample_dataset(&q, &quality, 100_000, 32).unwrap();
    let weighted = Estimator::Weighted { sampling: &q, target: &u };
    let w2 = pairwise_difference(&data, &weighted, 1, 0, 1, Moment::Mean).unwrap();
    let n2 = pairwise_difference(&data, &Estimator::Naive, 1, 0, 1, Moment::Mean).unwrap();
    let n1 = pairwise_difference(&data, &Estimator::Naive, 0, 0, 1, Moment::Mean).unwrap();
    assert!((w2 + 1.0).abs() < 0.05, "{w2}");
    assert!((n2 + 1.0).abs() > 0.8, "{n2}");
    assert!((n1 - 1.5).abs() < 0.05, "{n1}");
}

#[test]
fn estimated_kernel_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let levels = [3, 4, 2];
    let (k, _) = random_equivalent_pair(&levels, 0.2, &mut rng);
    let mut quality = QualityModel::empty(&levels);
    for node in spec(&levels).nodes() {
        quality.set(node, NodeDistribution::PointMass { value: 0.0 }).unwrap();
    }
    let data = sample_dataset(&k, &quality, 100_000, 34).unwrap();
    let est = estimate_kernel(&data, 0.0).unwrap().kernel;
    let mut worst: f64 = 0.0;
    for (a, b) in est.initial().iter().zip(k.initial()) {
        worst = worst.max((a - b).abs());
    }
    for s in 0..levels.len() - 1 {
        for (a, b) in est.step(s).to_rows().iter().flatten().zip(k.step(s).to_rows().iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn uniform_path_counts_pass_chi_square() {
    let levels = [4, 3, 2];
    let u = TransitionKernel::uniform(&spec(&levels)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let n = 100_000;
    let mut counts = [0usize; 24];
    for _ in 0..n {
        let p = sample_path(&u, &mut rng);
        counts[p.level(0) * 6 + p.level(1) * 2 + p.level(2)] += 1;
    }
    let e = n as f64 / 24.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99th percentile of chi-square with 23 degrees of freedom
    assert!(chi2 < 41.638, "{chi2}");
}

#[test]
fn path_moments_match_sampled_moments() {
    let levels = [2, 2, 2];
    let mut quality = QualityModel::empty(&levels);
    quality.set(Node::new(0, 0), NodeDistribution::Gaussian { mean: 0.5, variance: 1.5 }).unwrap();
    quality.set(Node::new(1, 1), NodeDistribution::Bernoulli { p: 0.3 }).unwrap();
    quality.set(Node::new(0, 2), NodeDistribution::PointMass { value: -1.0 }).unwrap();
    let path = Path::new(vec![0, 1, 0]);
    let exact = quality.path_raw_moments(&path, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let n = 1_000_000;
    let mut sums = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..n {
        let b = quality.sample_response(&path, &mut rng).unwrap();
        for k in 0..4 {
            let x = b.powi(k as i32 + 1);
            sums[k] += x;
            sq[k] += x * x;
        }
    }
    for k in 0..4 {
        let m = sums[k] / n as f64;
        let se = ((sq[k] / n as f64 - m * m) / n as f64).sqrt();
        assert!((m - exact[k + 1]).abs() < 4.0 * se, "order {}: {m} vs {}", k + 1, exact[k + 1]);
    }
}

#[test]
fn plugin_asymptotic_variances_converge_to_closed_forms() {
    let (spec, q, quality) = correlated_2x2();
    let u = TransitionKernel::uniform(&spec).unwrap();
    let data = sample_dataset(&q, &quality, 100_000, 37).unwrap();
    for est in [Estimator::Weighted { sampling: &q, target: &u }, Estimator::Plugin { target: &u }] {
        for moment in [Moment::Mean, Moment::Variance] {
            for node in spec.nodes() {
                let exact = closed_form_asym_var(&q, &est, &quality, node, moment).unwrap().value;
                let plug = plugin_asym_var(&data, &est, node, moment).unwrap().value;
                assert!(
                    (plug / exact - 1.0).abs() < 0.10,
                    "{:?} {:?} {node}: {plug} vs {exact}",
                    est.kind(),
                    moment
                );
            }
        }
    }
}

/// Replicate variance of `√|D| (estimate − limit)` against the closed form,
/// for both moments and both regimes, at nodes where the response mean is
/// non-zero so the sign of the cross term matters.
#[test]
fn closed_form_variances_match_replicate_variance() {
    for (k, estimator) in [EstimatorKind::Weighted, EstimatorKind::Plugin].into_iter().enumerate() {
        for (m, moment) in [Moment::Mean, Moment::Variance].into_iter().enumerate() {
            for node in [Node::new(0, 0), Node::new(1, 1)] {
                let seed = 1000 + 10 * k as u64 + m as u64 + node.column as u64 * 100;
                let config = reference_config(estimator, moment, node, 2000, 2000, seed);
                let r = anscombe_study(&config).unwrap();
                assert_eq!(r.skipped, 0);
                let ratio = r.scaled_error_variance / r.closed_av;
                assert!(
                    (ratio - 1.0).abs() < 0.10,
                    "{estimator:?} {moment:?} {node}: replicate {} vs closed form {}",
                    r.scaled_error_variance,
                    r.closed_av
                );
            }
        }
    }
}

#[test]
fn half_level_intervals_cover_half_the_time() {
    let mut config = reference_config(EstimatorKind::Plugin, Moment::Mean, Node::new(0, 1), 2000, 2000, 38);
    config.level = 0.5;
    config.av_source = AvSource::PlugIn;
    let r = coverage_study(&config).unwrap();
    assert_eq!(r.skipped, 0);
    assert!((0.47..=0.53).contains(&r.coverage), "{}", r.coverage);
}

#[test]
fn equal_gaussian_nodes_give_the_classical_variance_of_the_variance() {
    // all nodes N(m, v) and a uniform sampling kernel: given the node, b is
    // N(2m, 2v), so the variance estimator has asymptotic variance
    // μ4 − σ⁴ = 2 (2v)²
    let levels = [3, 2];
    let (m, v) = (0.7, 1.3);
    let mut quality = QualityModel::empty(&levels);
    for node in spec(&levels).nodes() {
        quality.set(node, NodeDistribution::Gaussian { mean: m, variance: v }).unwrap();
    }
    let u = TransitionKernel::uniform(&spec(&levels)).unwrap();
    let node = Node::new(2, 0);
    let weighted = Estimator::Weighted { sampling: &u, target: &u };
    let av = closed_form_asym_var(&u, &weighted, &quality, node, Moment::Variance).unwrap().value;
    assert!((av - 2.0 * (2.0 * v) * (2.0 * v)).abs() < 1e-9, "{av}");
    let config = ExperimentConfig {
        sampling: u.clone(),
        target: u.clone(),
        quality,
        n: 3000,
        seed: 39,
        replicates: 2000,
        node,
        estimator: EstimatorKind::Weighted,
        moment: Moment::Variance,
        level: 0.95,
        av_source: AvSource::ClosedForm,
    };
    let r = anscombe_study(&config).unwrap();
    assert!((r.scaled_error_variance / av - 1.0).abs() < 0.10, "{} vs {av}", r.scaled_error_variance);
}
