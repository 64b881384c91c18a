use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Curvature, Dataset, QuadraticObjective};

/// Gaussian class clusters: each class mean is a random unit direction scaled
/// by `separation`, samples add unit-variance isotropic noise. Sample `i` has
/// label `i mod classes`.
pub fn synth_mixture(classes: usize, per_class: usize, dim: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 {
        return Err(Error::Config("synthetic mixture needs ≥ 2 classes".into()));
    }
    if per_class == 0 || dim == 0 {
        return Err(Error::Config("synthetic mixture needs per_class ≥ 1 and dim ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| separation * x / norm).collect()
        })
        .collect();
    let n = classes * per_class;
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        labels.push(c);
        for mu in &means[c] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(mu + noise);
        }
    }
    Dataset::new(format!("synth-{classes}x{per_class}-d{dim}"), features, dim, labels, classes)
}

/// Parameters of a random family of client quadratics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticEnsemble {
    pub clients: usize,
    pub dim: usize,
    pub curvature_min: f64,
    pub curvature_max: f64,
    pub center_scale: f64,
    /// Axis-aligned curvature instead of a random rotation.
    pub diagonal: bool,
}

impl QuadraticEnsemble {
    /// Client `i` gets eigenvalues uniform in `[curvature_min, curvature_max]`,
    /// eigenvectors from the QR factor of a Gaussian matrix, and a center
    /// uniform in `[-center_scale, center_scale]^d`.
    pub fn generate(&self, seed: u64) -> Result<Vec<QuadraticObjective>> {
        if self.clients == 0 || self.dim == 0 {
            return Err(Error::Config("quadratic ensemble needs clients ≥ 1 and dim ≥ 1".into()));
        }
        if !(self.curvature_min >= 0.0 && self.curvature_max >= self.curvature_min) {
            return Err(Error::Config("quadratic ensemble needs 0 ≤ curvature_min ≤ curvature_max".into()));
        }
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.clients)
            .map(|_| {
                let eig: Vec<f64> = (0..d)
                    .map(|_| self.curvature_min + (self.curvature_max - self.curvature_min) * rng.random::<f64>())
                    .collect();
                let curvature = if self.diagonal {
                    Curvature::Diagonal(eig)
                } else {
                    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
                    let q = g.qr().q();
                    let a = &q * DMatrix::from_diagonal(&eig.into()) * q.transpose();
                    let sym = (&a + a.transpose()) * 0.5;
                    Curvature::Full((0..d * d).map(|k| sym[(k / d, k % d)]).collect())
                };
                let center = (0..d)
                    .map(|_| self.center_scale * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                QuadraticObjective::new(curvature, center, 0.0)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_respects_curvature_range() {
        let ensemble = QuadraticEnsemble {
            clients: 4,
            dim: 6,
            curvature_min: 0.2,
            curvature_max: 1.5,
            center_scale: 2.0,
            diagonal: false,
        };
        let qs = ensemble.generate(3).unwrap();
        assert_eq!(qs.len(), 4);
        for q in &qs {
            let l = q.lipschitz();
            assert!((0.2 - 1e-9..=1.5 + 1e-9).contains(&l), "{l}");
        }
        assert_eq!(qs, ensemble.generate(3).unwrap());
    }

    #[test]
    fn balanced_and_sized() {
        let d = synth_mixture(10, 100, 5, 3.0, 1).unwrap();
        assert_eq!(d.len(), 1000);
        for c in 0..10 {
            assert_eq!(d.labels().iter().filter(|&&l| l == c).count(), 100);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_mixture(3, 20, 4, 2.0, 9).unwrap();
        let b = synth_mixture(3, 20, 4, 2.0, 9).unwrap();
        let bits = |d: &Dataset| d.features().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&synth_mixture(3, 20, 4, 2.0, 10).unwrap()));
    }

    #[test]
    fn rejects_single_class() {
        assert!(synth_mixture(1, 10, 2, 1.0, 0).is_err());
    }
}
