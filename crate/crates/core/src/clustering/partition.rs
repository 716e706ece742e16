use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterError, GkbParams, MembershipExponent};

/// Tolerance on `|Σ_i μ_ik − 1|` for a valid partition.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Row-major `N × n` matrix of feature vectors, one row per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self, ClusterError> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(ClusterError::DimensionMismatch(format!(
                "{} values cannot be split into rows of width {dim}",
                values.len()
            )));
        }
        Ok(FeatureMatrix {
            rows: values.len() / dim,
            dim,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ClusterError> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(ClusterError::DimensionMismatch(format!(
                    "ragged rows: expected width {dim}, found {}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        FeatureMatrix::new(dim, values)
    }

    /// Number of data points `N`.
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Feature dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A `c × N` membership matrix whose columns each sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPartition {
    clusters: usize,
    points: usize,
    // cluster-major: values[i * points + k] = μ_ik
    values: Vec<f64>,
}

impl FuzzyPartition {
    /// Builds a partition from its rows (one per cluster), checking the
    /// column-stochastic invariant.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let clusters = rows.len();
        let points = rows.first().map(Vec::len).unwrap_or(0);
        if clusters == 0 || points == 0 || rows.iter().any(|r| r.len() != points) {
            return Err(ClusterError::DimensionMismatch(
                "membership rows must be non-empty and of equal length".into(),
            ));
        }
        let partition = FuzzyPartition {
            clusters,
            points,
            values: rows.into_iter().flatten().collect(),
        };
        partition.check()?;
        Ok(partition)
    }

    pub(crate) fn from_raw(clusters: usize, points: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), clusters * points);
        FuzzyPartition {
            clusters,
            points,
            values,
        }
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn get(&self, cluster: usize, point: usize) -> f64 {
        self.values[cluster * self.points + point]
    }

    /// Memberships of every point in one cluster.
    pub fn row(&self, cluster: usize) -> &[f64] {
        &self.values[cluster * self.points..(cluster + 1) * self.points]
    }

    pub fn column(&self, point: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.clusters).map(move |i| self.get(i, point))
    }

    /// Cluster with the largest membership for `point`; ties go to the lowest
    /// index.
    pub fn argmax(&self, point: usize) -> usize {
        let mut best = 0;
        let mut best_value = self.get(0, point);
        for i in 1..self.clusters {
            let v = self.get(i, point);
            if v > best_value {
                best = i;
                best_value = v;
            }
        }
        best
    }

    /// `max_ik |μ_ik − μ'_ik|`.
    pub fn max_abs_diff(&self, other: &FuzzyPartition) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of a column sum from one.
    pub fn max_column_error(&self) -> f64 {
        (0..self.points)
            .map(|k| (self.column(k).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<(), ClusterError> {
        if let Some(v) = self.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ClusterError::InvalidPartition(format!(
                "membership {v} outside [0, 1]"
            )));
        }
        let err = self.max_column_error();
        if !(err < STOCHASTIC_TOLERANCE) {
            return Err(ClusterError::InvalidPartition(format!(
                "column sums deviate from 1 by {err:e}"
            )));
        }
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks_exact(self.points)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// A `c × N` matrix of squared distances `D²_ik`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distances {
    clusters: usize,
    points: usize,
    values: Vec<f64>,
}

impl Distances {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let clusters = rows.len();
        let points = rows.first().map(Vec::len).unwrap_or(0);
        if clusters == 0 || points == 0 || rows.iter().any(|r| r.len() != points) {
            return Err(ClusterError::DimensionMismatch(
                "distance rows must be non-empty and of equal length".into(),
            ));
        }
        if rows
            .iter()
            .flatten()
            .any(|d| !(*d >= 0.0) || !d.is_finite())
        {
            return Err(ClusterError::NonFiniteData);
        }
        Ok(Distances {
            clusters,
            points,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn from_raw(clusters: usize, points: usize, values: Vec<f64>) -> Self {
        Distances {
            clusters,
            points,
            values,
        }
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn get(&self, cluster: usize, point: usize) -> f64 {
        self.values[cluster * self.points + point]
    }

    pub fn row(&self, cluster: usize) -> &[f64] {
        &self.values[cluster * self.points..(cluster + 1) * self.points]
    }
}

/// Seeded random initial partition: uniform draws renormalized per column.
pub fn init_partition(n_points: usize, params: &GkbParams) -> Result<FuzzyPartition, ClusterError> {
    params.validate()?;
    let c = params.c;
    if c >= n_points {
        return Err(ClusterError::TooFewPoints {
            points: n_points,
            clusters: c,
        });
    }
    let mut values = vec![0.0; c * n_points];
    if c == 1 {
        values.fill(1.0);
        return Ok(FuzzyPartition::from_raw(c, n_points, values));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut column = vec![0.0; c];
    for k in 0..n_points {
        for slot in column.iter_mut() {
            *slot = rng.random::<f64>();
        }
        let sum: f64 = column.iter().sum();
        for (i, &v) in column.iter().enumerate() {
            values[i * n_points + k] = if sum > 0.0 { v / sum } else { 1.0 / c as f64 };
        }
    }
    Ok(FuzzyPartition::from_raw(c, n_points, values))
}

/// Membership update from squared distances.
///
/// A point at zero distance from one or more prototypes is split evenly among
/// those prototypes and gets zero membership elsewhere.
pub fn update_memberships(
    distances: &Distances,
    m: f64,
    exponent: MembershipExponent,
) -> FuzzyPartition {
    let c = distances.clusters;
    let n = distances.points;
    let power = exponent.power(m);
    let mut values = vec![0.0; c * n];
    let mut column = vec![0.0; c];
    for k in 0..n {
        for (i, slot) in column.iter_mut().enumerate() {
            *slot = distances.get(i, k);
        }
        let zeros = column.iter().filter(|d| **d <= 0.0).count();
        if zeros > 0 {
            let share = 1.0 / zeros as f64;
            for (i, d) in column.iter().enumerate() {
                if *d <= 0.0 {
                    values[i * n + k] = share;
                }
            }
            continue;
        }
        // Scale by the nearest distance so the ratios stay in (0, 1].
        let nearest = column.iter().copied().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for slot in column.iter_mut() {
            let ratio = nearest / *slot;
            *slot = if power == 1.0 {
                ratio
            } else {
                ratio.powf(power)
            };
            total += *slot;
        }
        for (i, t) in column.iter().enumerate() {
            values[i * n + k] = t / total;
        }
    }
    FuzzyPartition::from_raw(c, n, values)
}
