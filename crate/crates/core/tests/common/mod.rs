#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcgain::lti::spectral_radius;
use rcgain::{RationalTransferFunction, StateSpace, SystemModel};

/// High-precision peak gain of the resonant delayed example, computed offline
/// with 50-digit arithmetic on a dense grid plus local refinement.
pub const EXAMPLE_HINF: f64 = 1.9547706345854523;
pub const EXAMPLE_PEAK_OMEGA: f64 = 1.2077304677574846;

pub fn example_tf() -> RationalTransferFunction {
    RationalTransferFunction::new(vec![0.0, 5.0, 4.0], vec![10.0, -5.0, 6.0], 50).unwrap()
}

pub fn example() -> SystemModel {
    SystemModel::Transfer(example_tf())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stable state-space system with order in `1..=max_order` and
/// spectral radius in `[0.1, 0.95)`.
pub fn random_stable(rng: &mut ChaCha8Rng, max_order: usize) -> StateSpace {
    let n = rng.random_range(1..=max_order);
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let rho = spectral_radius(&a).unwrap();
    let target = rng.random_range(0.1..0.95);
    if rho > 0.0 {
        a *= target / rho;
    }
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let d = rng.random_range(-1.0..1.0);
    StateSpace::new(a, b, c, d).unwrap()
}

/// Random stable transfer function built from real and conjugate pole pairs.
pub fn random_stable_tf(rng: &mut ChaCha8Rng, max_pairs: usize, max_delay: usize) -> RationalTransferFunction {
    let mut den = vec![1.0];
    for _ in 0..rng.random_range(1..=max_pairs) {
        let r: f64 = rng.random_range(0.05..0.95);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let factor = [1.0, -2.0 * r * theta.cos(), r * r];
        let mut next = vec![0.0; den.len() + 2];
        for (i, d) in den.iter().enumerate() {
            for (k, f) in factor.iter().enumerate() {
                next[i + k] += d * f;
            }
        }
        den = next;
    }
    let num: Vec<f64> = (0..rng.random_range(1..=den.len())).map(|_| rng.random_range(-2.0..2.0)).collect();
    RationalTransferFunction::new(num, den, rng.random_range(0..=max_delay)).unwrap()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
