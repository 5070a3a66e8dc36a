//! Reproducible randomness.
//!
//! Every stochastic routine draws from a ChaCha20 stream identified by a
//! 64-bit seed and a 64-bit stream number, so independent probes or seeds
//! never share state and reruns are bit-identical.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, CVector, Ray};

pub type SimRng = ChaCha20Rng;

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF draw over `weights` in item order. Weights need not be
/// normalized; returns `None` when their sum is not positive.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

/// Ray uniformly distributed on `P(ℂ^d)` (normalized complex Gaussian).
pub fn random_ray<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Ray {
    loop {
        let v: Vec<_> = (0..d)
            .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(r) = Ray::new(CVector::from_vec(v)) {
            return r;
        }
    }
}
