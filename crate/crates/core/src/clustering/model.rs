use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ClusterError, Distances, FeatureMatrix, FuzzyPartition, GkbParams};

#[inline]
pub(crate) fn pow_m(mu: f64, m: f64) -> f64 {
    if m == 2.0 {
        mu * mu
    } else {
        mu.powf(m)
    }
}

/// Membership-weighted means of the data, one per cluster.
pub fn update_prototypes(
    data: &FeatureMatrix,
    partition: &FuzzyPartition,
    m: f64,
) -> Result<Vec<Vec<f64>>, ClusterError> {
    check_shapes(data, partition)?;
    let dim = data.dim();
    (0..partition.clusters())
        .map(|i| {
            let mut sum = vec![0.0; dim];
            let mut mass = 0.0;
            for (mu, z) in partition.row(i).iter().zip(data.rows()) {
                let w = pow_m(*mu, m);
                if w == 0.0 {
                    continue;
                }
                mass += w;
                for (s, x) in sum.iter_mut().zip(z) {
                    *s += w * x;
                }
            }
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(ClusterError::DegenerateCluster { cluster: i });
            }
            sum.iter_mut().for_each(|s| *s /= mass);
            Ok(sum)
        })
        .collect()
}

/// Fuzzy covariance of one cluster around its prototype, before conditioning.
pub fn raw_covariance(
    data: &FeatureMatrix,
    memberships: &[f64],
    prototype: &[f64],
    m: f64,
) -> Option<DMatrix<f64>> {
    let dim = data.dim();
    let mut acc = vec![0.0; dim * dim];
    let mut diff = vec![0.0; dim];
    let mut mass = 0.0;
    for (mu, z) in memberships.iter().zip(data.rows()) {
        let w = pow_m(*mu, m);
        if w == 0.0 {
            continue;
        }
        mass += w;
        for ((d, x), v) in diff.iter_mut().zip(z).zip(prototype) {
            *d = x - v;
        }
        for r in 0..dim {
            let wr = w * diff[r];
            for s in r..dim {
                acc[r * dim + s] += wr * diff[s];
            }
        }
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return None;
    }
    let mut f = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in r..dim {
            let v = acc[r * dim + s] / mass;
            f[(r, s)] = v;
            f[(s, r)] = v;
        }
    }
    Some(f)
}

/// Babuška conditioning of a covariance matrix.
///
/// Blends in `γ·det(F)^{1/n}·I`, then raises every eigenvalue below
/// `λ_max/β` to `λ_max/β`. The matrix is rebuilt from its eigenpairs only when
/// some eigenvalue was raised, so a well-conditioned input with `γ = 0` comes
/// back unchanged. A covariance with no positive eigenvalue (all points on the
/// prototype) is replaced by the identity.
pub fn condition_covariance(raw: &DMatrix<f64>, gamma: f64, beta: f64) -> DMatrix<f64> {
    let n = raw.nrows();
    let mut f = raw.clone();
    if gamma > 0.0 {
        let det = f.determinant().max(0.0);
        let scale = det.powf(1.0 / n as f64);
        f = f * (1.0 - gamma) + DMatrix::identity(n, n) * (gamma * scale);
    }

    let eig = SymmetricEigen::new(f.clone());
    let lambda_max = eig.eigenvalues.max();
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return DMatrix::identity(n, n);
    }
    let floor = lambda_max / beta;
    let mut clipped = false;
    let mut eigenvalues = eig.eigenvalues.clone();
    for lambda in eigenvalues.iter_mut() {
        if *lambda * beta < lambda_max || *lambda <= 0.0 {
            *lambda = floor;
            clipped = true;
        }
    }
    if !clipped {
        return f;
    }
    let q = &eig.eigenvectors;
    let rebuilt = q * DMatrix::from_diagonal(&eigenvalues) * q.transpose();
    symmetrize(rebuilt)
}

/// The norm-inducing matrix `ρ·det(F)^{1/n}·F⁻¹`, whose determinant is `ρ^n`.
pub fn norm_matrix(covariance: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>, ClusterError> {
    let n = covariance.nrows();
    let eig = SymmetricEigen::new(covariance.clone());
    if eig
        .eigenvalues
        .iter()
        .any(|l| !(*l > 0.0) || !l.is_finite())
    {
        return Err(ClusterError::Conditioning(format!(
            "covariance is not positive definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    // Geometric mean of the eigenvalues = det(F)^{1/n}, computed in log space.
    let log_mean = eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>() / n as f64;
    let volume = rho * log_mean.exp();
    let inv = eig.eigenvalues.map(|l| volume / l);
    let q = &eig.eigenvectors;
    Ok(symmetrize(q * DMatrix::from_diagonal(&inv) * q.transpose()))
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for r in 0..n {
        for s in r + 1..n {
            let v = 0.5 * (m[(r, s)] + m[(s, r)]);
            m[(r, s)] = v;
            m[(s, r)] = v;
        }
    }
    m
}

/// Fuzzy covariances followed by conditioning, one per cluster.
pub fn update_covariances(
    data: &FeatureMatrix,
    partition: &FuzzyPartition,
    prototypes: &[Vec<f64>],
    params: &GkbParams,
) -> Result<Vec<DMatrix<f64>>, ClusterError> {
    check_shapes(data, partition)?;
    prototypes
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let raw = raw_covariance(data, partition.row(i), v, params.m)
                .ok_or(ClusterError::DegenerateCluster { cluster: i })?;
            Ok(condition_covariance(&raw, params.gamma, params.beta))
        })
        .collect()
}

/// Fitted cluster prototypes with their conditioned covariances and the
/// derived norm matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub prototypes: Vec<Vec<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub norm_matrices: Vec<DMatrix<f64>>,
}

impl ClusterModel {
    pub fn new(
        prototypes: Vec<Vec<f64>>,
        covariances: Vec<DMatrix<f64>>,
        rho: &[f64],
    ) -> Result<Self, ClusterError> {
        if prototypes.len() != covariances.len() || prototypes.len() != rho.len() {
            return Err(ClusterError::DimensionMismatch(format!(
                "{} prototypes, {} covariances, {} volumes",
                prototypes.len(),
                covariances.len(),
                rho.len()
            )));
        }
        let norm_matrices = covariances
            .iter()
            .zip(rho)
            .map(|(f, r)| norm_matrix(f, *r))
            .collect::<Result<_, _>>()?;
        Ok(ClusterModel {
            prototypes,
            covariances,
            norm_matrices,
        })
    }

    pub fn clusters(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.first().map(Vec::len).unwrap_or(0)
    }
}

/// Squared Mahalanobis-type distances of every point to every prototype.
pub fn compute_distances(
    data: &FeatureMatrix,
    model: &ClusterModel,
) -> Result<Distances, ClusterError> {
    let dim = data.dim();
    if model.dim() != dim {
        return Err(ClusterError::DimensionMismatch(format!(
            "data has {dim} features, model has {}",
            model.dim()
        )));
    }
    if !data.is_finite() {
        return Err(ClusterError::NonFiniteData);
    }
    let n = data.len();
    let c = model.clusters();
    let mut values = vec![0.0; c * n];
    let mut diff = vec![0.0; dim];
    for (i, (v, a)) in model
        .prototypes
        .iter()
        .zip(&model.norm_matrices)
        .enumerate()
    {
        // column-major storage; A is symmetric so row/column order is moot.
        let a = a.as_slice();
        let out = &mut values[i * n..(i + 1) * n];
        for (slot, z) in out.iter_mut().zip(data.rows()) {
            for ((d, x), p) in diff.iter_mut().zip(z).zip(v) {
                *d = x - p;
            }
            let mut q = 0.0;
            for r in 0..dim {
                let row = &a[r * dim..(r + 1) * dim];
                let mut t = 0.0;
                for (s, d) in diff.iter().enumerate() {
                    t += row[s] * d;
                }
                q += diff[r] * t;
            }
            *slot = q.max(0.0);
        }
    }
    if values.iter().any(|d| !d.is_finite()) {
        return Err(ClusterError::NonFiniteData);
    }
    Ok(Distances::from_raw(c, n, values))
}

fn check_shapes(data: &FeatureMatrix, partition: &FuzzyPartition) -> Result<(), ClusterError> {
    if data.len() != partition.points() {
        return Err(ClusterError::DimensionMismatch(format!(
            "{} data points but partition covers {}",
            data.len(),
            partition.points()
        )));
    }
    Ok(())
}

/// JSON-friendly view of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub prototypes: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub params: GkbParams,
    pub iterations: usize,
    pub final_delta: f64,
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
