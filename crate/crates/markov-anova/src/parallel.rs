//! Multi-threaded versions of the sampling and replicate loops. Work is
//! split by record block or replicate index and reassembled in index order,
//! so results do not depend on the number of threads.

use markov_anova_core::quality::QualityModel;
use markov_anova_core::simulation::{
    self, AnscombeReport, CoverageReport, ExperimentConfig, PreparedExperiment, ReplicateOutcome,
};
use markov_anova_core::{DagSpec, PathDataset, TransitionKernel};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Thread pool with `threads` workers (`None`: one per core).
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Error::Usage(e.to_string()))
}

pub fn sample_dataset(
    kernel: &TransitionKernel,
    quality: &QualityModel,
    n: usize,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<PathDataset> {
    quality.validate_for(kernel)?;
    let blocks: Vec<_> = pool.install(|| {
        (0..simulation::block_count(n))
            .into_par_iter()
            .map(|b| simulation::sample_block(kernel, quality, n, seed, b))
            .collect::<Vec<_>>()
    });
    let mut records = Vec::with_capacity(n);
    for b in blocks {
        records.extend(b?);
    }
    Ok(simulation::assemble(DagSpec::new(kernel.levels().to_vec())?, records)?)
}

/// Runs every replicate of `prepared`; results are in replicate order.
pub fn run_replicates(
    prepared: &PreparedExperiment<'_>,
    pool: &rayon::ThreadPool,
) -> Vec<markov_anova_core::Result<ReplicateOutcome>> {
    pool.install(|| {
        (0..prepared.config.replicates)
            .into_par_iter()
            .map(|r| prepared.run_replicate(r))
            .collect()
    })
}

pub fn coverage_study(config: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<CoverageReport> {
    simulation::check_coverage_replicates(config)?;
    let prepared = config.prepare()?;
    let results = run_replicates(&prepared, pool);
    Ok(simulation::summarize_coverage(&prepared, results))
}

pub fn anscombe_study(config: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<AnscombeReport> {
    simulation::check_anscombe_replicates(config)?;
    let prepared = config.prepare()?;
    let results = run_replicates(&prepared, pool);
    Ok(simulation::summarize_anscombe(&prepared, &results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use markov_anova_core::estimators::{EstimatorKind, Moment};
    use markov_anova_core::reference::correlated_2x2;
    use markov_anova_core::simulation::AvSource;
    use markov_anova_core::Node;

    #[test]
    fn thread_count_does_not_change_results() {
        let (spec, q, quality) = correlated_2x2();
        let one = pool(Some(1)).unwrap();
        let four = pool(Some(4)).unwrap();
        let a = sample_dataset(&q, &quality, 20_000, 5, &one).unwrap();
        let b = sample_dataset(&q, &quality, 20_000, 5, &four).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, simulation::sample_dataset(&q, &quality, 20_000, 5).unwrap());

        let config = ExperimentConfig {
            target: TransitionKernel::uniform(&spec).unwrap(),
            sampling: q,
            quality,
            n: 300,
            seed: 8,
            replicates: 120,
            node: Node::new(1, 1),
            estimator: EstimatorKind::Plugin,
            moment: Moment::Mean,
            level: 0.9,
            av_source: AvSource::PlugIn,
        };
        let x = coverage_study(&config, &one).unwrap();
        let y = coverage_study(&config, &four).unwrap();
        assert_eq!(x, y);
        assert_eq!(x, simulation::coverage_study(&config).unwrap());
    }
}
