use rand::Rng;

use super::vocab::Vocabulary;

/// Draws token indices with `P(i) ∝ count(i)^power`.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    cdf: Vec<f64>,
}

impl NoiseSampler {
    pub fn from_counts(counts: &[u64], power: f64) -> NoiseSampler {
        assert!(power >= 0.0, "noise power must be non-negative");
        assert!(!counts.is_empty());
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        NoiseSampler { cdf }
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn probability(&self, i: usize) -> f64 {
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

pub fn noise_distribution(v: &Vocabulary, power: f64) -> NoiseSampler {
    NoiseSampler::from_counts(v.counts(), power)
}
