//! Fixture builders shared by the benchmark targets. Sizes are chosen so
//! one iteration stays in the millisecond range while keeping the shapes
//! close to the desk-scale pipeline, so relative timings carry over.

use fdnn_core::fracnet::{Batch, NetConfig, Theta};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Network with the default architecture but a reduced-basis sized output.
pub fn surrogate_net(output_dim: usize) -> (NetConfig, Theta) {
    let cfg = NetConfig {
        output_dim,
        ..NetConfig::default()
    };
    let theta = Theta::init(&cfg, 1).expect("fixture init");
    (cfg, theta)
}

/// Random batch with rows drawn uniformly from the unit box shifted to
/// roughly the parameter range the surrogate sees in practice.
pub fn random_batch(cfg: &NetConfig, samples: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs =
        Array2::from_shape_fn((samples, cfg.input_dim), |_| rng.random_range(0.01..10.0));
    let targets = Array2::from_shape_fn((samples, cfg.output_dim), |_| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    Batch { inputs, targets }
}

/// Dense Gaussian matrix, used to exercise the thin SVD path.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    })
}

/// AR(1) series with autocorrelation `rho`, the standard stress test for
/// the autocorrelation-time estimator.
pub fn ar1_series(n: usize, rho: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (1.0 - rho * rho).sqrt();
    let mut x = 0.0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        x = rho * x + scale * z;
        out.push(x);
    }
    out
}
