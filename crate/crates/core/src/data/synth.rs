use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::{Dataset, FeatureMeta};
use crate::approx::sigmoid;
use crate::train::MonotoneDirection;

/// Marginal distribution of every synthetic feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureDistribution {
    /// Independent standard normals.
    Normal,
    /// Independent uniforms on `[low, high)`.
    Uniform { low: f64, high: f64 },
}

/// A logistic data-generating process: `y ~ Bernoulli(σ(bias + β·x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub bias: f64,
    pub coefficients: Vec<f64>,
    pub distribution: FeatureDistribution,
    pub samples: usize,
}

/// Draws a dataset from `spec` with a ChaCha8 stream seeded by `seed`.
///
/// Features are named `x1..xd`. Each is declared increasing or decreasing
/// according to the sign of its true coefficient, unconstrained when zero.
/// Rows are drawn feature by feature and then the label, so the stream
/// layout is fixed for a given `d`.
pub fn synth_logistic(spec: &SynthSpec, seed: u64) -> Dataset {
    let d = spec.coefficients.len();
    let m = spec.samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = match spec.distribution {
        FeatureDistribution::Uniform { low, high } => Some(Uniform::new(low, high).expect("low < high")),
        FeatureDistribution::Normal => None,
    };
    let mut x = Array2::zeros((m, d));
    let mut y = Vec::with_capacity(m);
    for i in 0..m {
        let mut z = spec.bias;
        for j in 0..d {
            let v: f64 = match &uniform {
                Some(u) => u.sample(&mut rng),
                None => StandardNormal.sample(&mut rng),
            };
            x[[i, j]] = v;
            z += spec.coefficients[j] * v;
        }
        let u: f64 = rng.random();
        y.push(u8::from(u < sigmoid(z)));
    }
    let features = spec
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let dir = if b > 0.0 {
                MonotoneDirection::Increasing
            } else if b < 0.0 {
                MonotoneDirection::Decreasing
            } else {
                MonotoneDirection::Unconstrained
            };
            FeatureMeta::continuous(format!("x{}", j + 1), dir)
        })
        .collect();
    Dataset::new(format!("synth-{seed}"), features, x, y).expect("generator output is well formed")
}
