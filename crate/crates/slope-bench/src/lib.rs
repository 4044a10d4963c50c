//! Shared fixtures for the criterion benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use slope_core::{standardize, Design, GenSpec, LambdaSeq, Response};

/// Sorted random magnitudes and a matching weight sequence.
pub fn sorted_instance(seed: u64, p: usize) -> (Vec<f64>, LambdaSeq) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..3.0)).collect();
    c.sort_by(|a, b| b.total_cmp(a));
    let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..3.0)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    (c, LambdaSeq::new(w).unwrap())
}

/// Unsorted random vector for prox benchmarks.
pub fn prox_instance(seed: u64, p: usize) -> (Vec<f64>, LambdaSeq) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..2.0)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    (v, LambdaSeq::new(w).unwrap())
}

/// A standardized synthetic regression instance.
pub fn standardized_instance(spec: &GenSpec) -> (Design, Response) {
    let data = slope_core::generate_dataset(spec).expect("generation");
    standardize(&data.design, &data.response).expect("standardization")
}
