use super::model::{matrix_rows, pow_m};
use super::{
    compute_distances, init_partition, update_covariances, update_memberships, update_prototypes,
    ClusterError, ClusterModel, Distances, FeatureMatrix, FuzzyPartition, GkbParams, ModelExport,
};

/// Outcome of a clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ClusterModel,
    pub partition: FuzzyPartition,
    pub iterations: usize,
    /// Max-abs change of the partition in the last iteration.
    pub final_delta: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn export(&self, params: &GkbParams) -> ModelExport {
        ModelExport {
            prototypes: self.model.prototypes.clone(),
            covariances: self.model.covariances.iter().map(matrix_rows).collect(),
            params: params.clone(),
            iterations: self.iterations,
            final_delta: self.final_delta,
        }
    }
}

/// State exposed to observers after each iteration.
#[derive(Debug)]
pub struct IterationSnapshot<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Model computed from the previous partition.
    pub model: &'a ClusterModel,
    pub distances: &'a Distances,
    /// Partition produced by this iteration.
    pub partition: &'a FuzzyPartition,
    pub delta: f64,
    /// `Σ_i Σ_k μ_ik^m D²_ik` for this partition and model.
    pub objective: f64,
}

/// Runs GK-B from a seeded random partition.
pub fn fit(data: &FeatureMatrix, params: &GkbParams) -> Result<FitResult, ClusterError> {
    fit_observed(data, params, |_| {})
}

/// Like [`fit`], calling `observer` after every iteration.
pub fn fit_observed<F>(
    data: &FeatureMatrix,
    params: &GkbParams,
    observer: F,
) -> Result<FitResult, ClusterError>
where
    F: FnMut(&IterationSnapshot<'_>),
{
    check_data(data, params)?;
    let initial = init_partition(data.len(), params)?;
    fit_from(data, params, initial, observer)
}

/// Runs GK-B starting from an explicit partition.
pub fn fit_from<F>(
    data: &FeatureMatrix,
    params: &GkbParams,
    initial: FuzzyPartition,
    mut observer: F,
) -> Result<FitResult, ClusterError>
where
    F: FnMut(&IterationSnapshot<'_>),
{
    check_data(data, params)?;
    if initial.clusters() != params.c || initial.points() != data.len() {
        return Err(ClusterError::DimensionMismatch(format!(
            "initial partition is {}x{}, expected {}x{}",
            initial.clusters(),
            initial.points(),
            params.c,
            data.len()
        )));
    }
    initial.check()?;

    let mut partition = initial;
    let mut iteration = 0;
    loop {
        iteration += 1;
        let prototypes = update_prototypes(data, &partition, params.m)?;
        let covariances = update_covariances(data, &partition, &prototypes, params)?;
        let model = ClusterModel::new(prototypes, covariances, &params.rho)?;
        let distances = compute_distances(data, &model)?;
        let next = update_memberships(&distances, params.m, params.exponent);
        let delta = next.max_abs_diff(&partition);

        observer(&IterationSnapshot {
            iteration,
            model: &model,
            distances: &distances,
            partition: &next,
            delta,
            objective: objective(&next, &distances, params.m),
        });

        partition = next;
        let converged = delta < params.epsilon;
        if converged || iteration >= params.max_iters {
            log::debug!("GK-B stopped after {iteration} iterations (delta {delta:e})");
            return Ok(FitResult {
                model,
                partition,
                iterations: iteration,
                final_delta: delta,
                converged,
            });
        }
    }
}

/// Fuzzy c-means style objective `Σ_i Σ_k μ_ik^m D²_ik`.
pub fn objective(partition: &FuzzyPartition, distances: &Distances, m: f64) -> f64 {
    (0..partition.clusters())
        .map(|i| {
            partition
                .row(i)
                .iter()
                .zip(distances.row(i))
                .map(|(mu, d)| pow_m(*mu, m) * d)
                .sum::<f64>()
        })
        .sum()
}

fn check_data(data: &FeatureMatrix, params: &GkbParams) -> Result<(), ClusterError> {
    params.validate()?;
    if data.len() <= params.c {
        return Err(ClusterError::TooFewPoints {
            points: data.len(),
            clusters: params.c,
        });
    }
    if !data.is_finite() {
        return Err(ClusterError::NonFiniteData);
    }
    Ok(())
}
