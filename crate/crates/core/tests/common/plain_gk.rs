//! Textbook Gustafson-Kessel iteration with unit cluster volumes and no
//! covariance conditioning, written directly against nalgebra. Used as an
//! independent reference for the conditioned implementation.

use nalgebra::{DMatrix, DVector};

pub struct PlainGk {
    points: Vec<DVector<f64>>,
    m: f64,
}

impl PlainGk {
    pub fn new(rows: &[Vec<f64>], m: f64) -> Self {
        PlainGk {
            points: rows.iter().map(|r| DVector::from_column_slice(r)).collect(),
            m,
        }
    }

    /// One full update `U -> U'`; `u` is `c × N`.
    pub fn step(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let (c, n_points) = u.shape();
        let n = self.points[0].len();
        let mut d2 = DMatrix::zeros(c, n_points);
        for i in 0..c {
            let weights: Vec<f64> = (0..n_points).map(|k| u[(i, k)].powf(self.m)).collect();
            let mass: f64 = weights.iter().sum();
            let mut v = DVector::zeros(n);
            for (w, z) in weights.iter().zip(&self.points) {
                v += z * *w;
            }
            v /= mass;
            let mut f = DMatrix::zeros(n, n);
            for (w, z) in weights.iter().zip(&self.points) {
                let d = z - &v;
                f += &d * d.transpose() * *w;
            }
            f /= mass;
            let a = f.clone().try_inverse().expect("invertible covariance")
                * f.determinant().powf(1.0 / n as f64);
            for (k, z) in self.points.iter().enumerate() {
                let d = z - &v;
                d2[(i, k)] = (d.transpose() * &a * &d)[(0, 0)];
            }
        }
        let p = 1.0 / (self.m - 1.0);
        DMatrix::from_fn(c, n_points, |i, k| {
            1.0 / (0..c)
                .map(|j| (d2[(i, k)] / d2[(j, k)]).powf(p))
                .sum::<f64>()
        })
    }
}
