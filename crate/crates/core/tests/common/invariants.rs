//! Randomized fit configurations and the per-iteration invariants every fit
//! must keep.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use dehesa_core::clustering::{fit_observed, FeatureMatrix, GkbParams, MembershipExponent};
use dehesa_core::synthetic::gaussian_blobs;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub data: FeatureMatrix,
    pub params: GkbParams,
}

pub fn fuzz_case(seed: u64) -> FuzzCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=4);
    let c = rng.random_range(1..=4);
    let groups = rng.random_range(1..=4);
    let per_group = rng.random_range(8..40);
    let sigma = rng.random_range(1.0..30.0);
    let centers: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..255.0)).collect())
        .collect();
    let (data, _) = gaussian_blobs(&centers, sigma, per_group.max(c + 1), rng.random());
    let beta = match rng.random_range(0..3) {
        0 => 1.0,
        1 => 1.0 + rng.random_range(0.0..10.0),
        _ => 10f64.powf(rng.random_range(0.0..6.0)),
    };
    let mut params = GkbParams::new(c)
        .with_m(rng.random_range(1.3..3.0))
        .with_gamma(if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(0.0..=1.0)
        })
        .with_beta(beta)
        .with_seed(rng.random())
        .with_max_iters(60)
        .with_exponent(if rng.random_bool(0.8) {
            MembershipExponent::Standard
        } else {
            MembershipExponent::Literal
        });
    params.rho = (0..c).map(|_| rng.random_range(0.2..5.0)).collect();
    FuzzCase { data, params }
}

pub fn check_iterations(case: &FuzzCase) -> Result<usize, String> {
    let FuzzCase { data, params } = case;
    let n = data.dim() as i32;
    let mut failure = None;
    let mut iterations = 0;
    fit_observed(data, params, |snap| {
        iterations += 1;
        if failure.is_some() {
            return;
        }
        let col = snap.partition.max_column_error();
        if !(col < 1e-9) {
            failure = Some(format!(
                "iteration {}: column error {col:e}",
                snap.iteration
            ));
        }
        for (i, (f, a)) in snap
            .model
            .covariances
            .iter()
            .zip(&snap.model.norm_matrices)
            .enumerate()
        {
            let expected = params.rho[i].powi(n);
            let det = a.determinant();
            if !((det - expected).abs() <= 1e-6 * expected) {
                failure = Some(format!("cluster {i}: det(A) {det} vs {expected}"));
            }
            let eig = SymmetricEigen::new(f.clone()).eigenvalues;
            let (lo, hi) = (eig.min(), eig.max());
            if !(lo > 0.0) || hi / lo > params.beta * (1.0 + 1e-9) {
                failure = Some(format!(
                    "cluster {i}: eigenvalues {lo:e}..{hi:e}, beta {}",
                    params.beta
                ));
            }
        }
    })
    .map_err(|e| e.to_string())?;
    failure.map_or(Ok(iterations), Err)
}
