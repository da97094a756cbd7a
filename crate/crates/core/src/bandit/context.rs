use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A single draw from the context distribution.
///
/// Finite spaces always carry an index; feature vectors are present for
/// sphere contexts and for finite spaces that were given an embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    pub index: Option<usize>,
    pub features: Vec<f64>,
}

impl Context {
    pub fn indexed(index: usize) -> Self {
        Context {
            index: Some(index),
            features: Vec::new(),
        }
    }

    pub fn point(features: Vec<f64>) -> Self {
        Context {
            index: None,
            features,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FiniteContexts {
    weights: Vec<f64>,
    features: Option<Vec<Vec<f64>>>,
    sampler: WeightedIndex<f64>,
}

impl FiniteContexts {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    pub fn context(&self, index: usize) -> Context {
        Context {
            index: Some(index),
            features: self
                .features
                .as_ref()
                .map(|f| f[index].clone())
                .unwrap_or_default(),
        }
    }
}

/// The context distribution `d0`.
#[derive(Clone, Debug)]
pub enum ContextSpace {
    Finite(FiniteContexts),
    /// Standard Gaussian in `dim` dimensions projected onto the unit sphere.
    SphereGaussian { dim: usize },
}

impl ContextSpace {
    pub fn finite(weights: Vec<f64>, features: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInstance("no contexts".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInstance(
                "context weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInstance(format!(
                "context weights sum to {total}, expected 1"
            )));
        }
        if let Some(features) = &features {
            if features.len() != weights.len() {
                return Err(Error::InvalidInstance(
                    "one feature vector per context required".into(),
                ));
            }
            let dim = features[0].len();
            if dim == 0 {
                return Err(Error::InvalidInstance("empty feature vectors".into()));
            }
            for f in features {
                if f.len() != dim {
                    return Err(Error::InvalidInstance(
                        "feature vectors have mixed dimensions".into(),
                    ));
                }
                if norm(f) > 1.0 + 1e-9 {
                    return Err(Error::InvalidInstance(
                        "context features must lie in the unit ball".into(),
                    ));
                }
            }
        }
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidInstance(format!("context weights: {e}")))?;
        Ok(ContextSpace::Finite(FiniteContexts {
            weights,
            features,
            sampler,
        }))
    }

    pub fn finite_uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInstance("no contexts".into()));
        }
        Self::finite(vec![1.0 / count as f64; count], None)
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInstance("sphere dimension must be positive".into()));
        }
        Ok(ContextSpace::SphereGaussian { dim })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ContextSpace::Finite(_))
    }

    pub fn count(&self) -> Option<usize> {
        match self {
            ContextSpace::Finite(f) => Some(f.weights.len()),
            ContextSpace::SphereGaussian { .. } => None,
        }
    }

    pub fn feature_dim(&self) -> Option<usize> {
        match self {
            ContextSpace::Finite(f) => f.features.as_ref().map(|v| v[0].len()),
            ContextSpace::SphereGaussian { dim } => Some(*dim),
        }
    }

    /// All contexts with their probabilities, for finite spaces.
    pub fn support(&self) -> Option<Vec<(f64, Context)>> {
        match self {
            ContextSpace::Finite(f) => Some(
                f.weights
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| (w, f.context(i)))
                    .collect(),
            ),
            ContextSpace::SphereGaussian { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        match self {
            ContextSpace::Finite(f) => f.context(f.sampler.sample(rng)),
            ContextSpace::SphereGaussian { dim } => Context::point(sphere_point(*dim, 1.0, rng)),
        }
    }
}

/// Gaussian direction scaled to the sphere of the given radius.
pub fn sphere_point<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| radius * x / n).collect();
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn single_context_is_certain() {
        let space = ContextSpace::finite_uniform(1).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            assert_eq!(space.sample(&mut rng).index, Some(0));
        }
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let space = ContextSpace::sphere(10).unwrap();
        let mut rng = rng_from_seed(2);
        for _ in 0..1000 {
            let x = space.sample(&mut rng);
            assert!((norm(&x.features) - 1.0).abs() <= 1e-12);
            assert_eq!(x.features.len(), 10);
        }
    }

    #[test]
    fn uniform_frequencies() {
        let space = ContextSpace::finite_uniform(4).unwrap();
        let mut rng = rng_from_seed(3);
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[space.sample(&mut rng).index.unwrap()] += 1;
        }
        let mut chi2 = 0.0;
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.25).abs() <= 0.002, "frequency {freq}");
            chi2 += (c as f64 - n as f64 / 4.0).powi(2) / (n as f64 / 4.0);
        }
        // 3 degrees of freedom, 0.999 quantile
        assert!(chi2 < 16.27, "chi-square {chi2}");
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(ContextSpace::finite(vec![0.5, 0.4], None).is_err());
        assert!(ContextSpace::finite(vec![1.5, -0.5], None).is_err());
        assert!(ContextSpace::finite(vec![0.5, 0.5], Some(vec![vec![2.0], vec![0.0]])).is_err());
    }
}
