//! Objective functions, their gradients and smoothness constants.

mod dataset;
mod logistic;
mod quadratic;
mod smallnet;
mod softmax;

pub use dataset::{Batch, Dataset};
pub use logistic::LogisticObjective;
pub use quadratic::{consensus_minimizer, Curvature, QuadraticObjective};
pub use smallnet::SmallNetObjective;

use crate::error::{Error, Result};
use crate::param::ParamVector;

/// A client's local loss `f_i`.
///
/// Quadratics do not read samples: the dataset and batch arguments are only
/// validated, so a full batch over [`Dataset::unit`] is the usual carrier.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Quadratic(QuadraticObjective),
    Logistic(LogisticObjective),
    SmallNet(SmallNetObjective),
}

/// Smoothness constant of an objective's gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lipschitz {
    pub value: f64,
    /// Set when the value is a configured guess rather than a proven bound.
    pub heuristic: bool,
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic(q) => q.dim(),
            Objective::Logistic(l) => l.dim(),
            Objective::SmallNet(n) => n.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Objective::Quadratic(_) => "quadratic",
            Objective::Logistic(_) => "logistic",
            Objective::SmallNet(_) => "smallnet",
        }
    }

    fn check_inputs(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<()> {
        w.check_dim(self.dim())?;
        let needed = match self {
            Objective::Quadratic(_) => None,
            Objective::Logistic(l) => Some(l.features),
            Objective::SmallNet(n) => Some(n.inputs),
        };
        if let Some(p) = needed {
            if data.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: data.dim(),
                });
            }
        }
        if let Some(&bad) = batch.indices().iter().find(|&&i| i >= data.len()) {
            return Err(Error::Config(format!(
                "batch index {bad} out of range for dataset of {} samples",
                data.len()
            )));
        }
        Ok(())
    }

    /// Mean per-sample loss over `batch` plus `(λ/2)‖w‖²`.
    pub fn eval_loss(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<f64> {
        self.check_inputs(w, data, batch)?;
        let value = match self {
            Objective::Quadratic(q) => q.loss(w),
            Objective::Logistic(l) => l.loss(w, data, batch)?,
            Objective::SmallNet(n) => n.loss(w, data, batch)?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite {
                context: "loss",
                sample: batch.indices()[0],
            })
        }
    }

    pub fn eval_grad(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<ParamVector> {
        self.check_inputs(w, data, batch)?;
        let g = match self {
            Objective::Quadratic(q) => q.grad(w),
            Objective::Logistic(l) => l.grad(w, data, batch)?,
            Objective::SmallNet(n) => n.grad(w, data, batch)?,
        };
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::NonFinite {
                context: "gradient",
                sample: batch.indices()[0],
            })
        }
    }

    pub fn lipschitz_bound(&self, data: &Dataset) -> Lipschitz {
        match self {
            Objective::Quadratic(q) => Lipschitz {
                value: q.lipschitz(),
                heuristic: false,
            },
            Objective::Logistic(l) => Lipschitz {
                value: l.lipschitz(data),
                heuristic: false,
            },
            Objective::SmallNet(n) => Lipschitz {
                value: n.declared_lipschitz,
                heuristic: true,
            },
        }
    }

    /// Classification accuracy; `None` for objectives without a label head.
    pub fn accuracy(&self, w: &ParamVector, data: &Dataset) -> Option<f64> {
        match self {
            Objective::Quadratic(_) => None,
            Objective::Logistic(l) => Some(l.accuracy(w, data)),
            Objective::SmallNet(n) => Some(n.accuracy(w, data)),
        }
    }

    /// A valid lower bound on this objective when one is known without solving.
    pub fn trivial_lower_bound(&self) -> Option<f64> {
        match self {
            Objective::Quadratic(_) => None,
            Objective::Logistic(_) | Objective::SmallNet(_) => Some(0.0),
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        match self {
            Objective::Quadratic(q) => Some(q),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Central differences with step `1e-6 (1 + |w_j|)`, independent of the
    /// analytic gradient code.
    fn finite_difference(obj: &Objective, w: &ParamVector, data: &Dataset, batch: &Batch) -> ParamVector {
        let mut out = ParamVector::zeros(w.dim());
        let mut probe = w.clone();
        for j in 0..w.dim() {
            let h = 1e-6 * (1.0 + w[j].abs());
            probe[j] = w[j] + h;
            let up = obj.eval_loss(&probe, data, batch).unwrap();
            probe[j] = w[j] - h;
            let down = obj.eval_loss(&probe, data, batch).unwrap();
            probe[j] = w[j];
            out[j] = (up - down) / (2.0 * h);
        }
        out
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, classes: usize) -> Dataset {
        let features = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..n).map(|i| i % classes).collect();
        Dataset::new("rand", features, p, labels, classes).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> ParamVector {
        (0..dim).map(|_| rng.random_range(-scale..scale)).collect::<Vec<_>>().into()
    }

    fn rel_err(g: &ParamVector, fd: &ParamVector) -> f64 {
        g.distance_sq(fd).sqrt() / fd.norm().max(1e-12)
    }

    fn check_objective(obj: &Objective, data: &Dataset, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = Batch::full(data);
        for _ in 0..100 {
            let w = random_point(&mut rng, obj.dim(), scale);
            let g = obj.eval_grad(&w, data, &batch).unwrap();
            let fd = finite_difference(obj, &w, data, &batch);
            let err = rel_err(&g, &fd);
            assert!(err <= 1e-5, "{}: relative error {err:e}", obj.kind_name());
        }
    }

    #[test]
    fn quadratic_examples() {
        let q = Objective::Quadratic(QuadraticObjective::scalar(1.0, 3.0).unwrap());
        let unit = Dataset::unit();
        let b = Batch::full(&unit);
        assert_eq!(q.eval_loss(&vec![3.0].into(), &unit, &b).unwrap(), 0.0);
        assert_eq!(q.eval_loss(&vec![1.0].into(), &unit, &b).unwrap(), 2.0);
        assert_eq!(q.eval_grad(&vec![1.5].into(), &unit, &b).unwrap()[0], -1.5);
        let diag = Objective::Quadratic(
            QuadraticObjective::new(Curvature::Diagonal(vec![2.0, 5.0]), vec![1.0, -1.0], 0.0).unwrap(),
        );
        assert_eq!(diag.lipschitz_bound(&unit).value, 5.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let q = Objective::Quadratic(QuadraticObjective::scalar(1.0, 3.0).unwrap());
        let unit = Dataset::unit();
        let err = q.eval_loss(&ParamVector::zeros(2), &unit, &Batch::full(&unit)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn logistic_at_zero_is_ln2_per_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_dataset(&mut rng, 7, 3, 2);
        let obj = Objective::Logistic(LogisticObjective::new(3, 2, 0.0).unwrap());
        let loss = obj
            .eval_loss(&ParamVector::zeros(obj.dim()), &data, &Batch::new(vec![0, 4, 6], &data).unwrap())
            .unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn logistic_symmetric_batch_has_zero_gradient() {
        // Each feature vector appears once with each label.
        let data = Dataset::new("sym", vec![0.3, -1.0, 0.3, -1.0, 2.0, 0.5, 2.0, 0.5], 2, vec![0, 1, 0, 1], 2).unwrap();
        let obj = Objective::Logistic(LogisticObjective::new(2, 2, 0.0).unwrap());
        let g = obj.eval_grad(&ParamVector::zeros(obj.dim()), &data, &Batch::full(&data)).unwrap();
        assert!(g.norm() <= 1e-15, "{g:?}");
    }

    #[test]
    fn logistic_lipschitz_for_orthonormal_design() {
        // X̃ = [[1, 1], [-1, 1]] gives X̃ᵀX̃/n = I.
        let data = Dataset::new("orth", vec![1.0, -1.0], 1, vec![0, 1], 2).unwrap();
        let obj = Objective::Logistic(LogisticObjective::new(1, 2, 0.25).unwrap());
        let l = obj.lipschitz_bound(&data);
        assert!((l.value - 0.75).abs() < 1e-12);
        assert!(!l.heuristic);
    }

    #[test]
    fn logistic_curvature_exceeds_binary_sigmoid_constant() {
        // Along (v, −v) at w = 0 the softmax curvature is ½ λ_max, so a ¼ factor
        // would not be a valid bound for the two-row parameterization.
        let data = Dataset::new("orth", vec![1.0, -1.0], 1, vec![0, 1], 2).unwrap();
        let obj = Objective::Logistic(LogisticObjective::new(1, 2, 0.0).unwrap());
        let batch = Batch::full(&data);
        let t = 1e-4;
        let dir: ParamVector = vec![1.0, 0.0, -1.0, 0.0].into();
        let g0 = obj.eval_grad(&ParamVector::zeros(4), &data, &batch).unwrap();
        let g1 = obj.eval_grad(&dir.scale(t), &data, &batch).unwrap();
        let ratio = g1.sub(&g0).norm() / (t * dir.norm());
        assert!(ratio > 0.45 && ratio <= obj.lipschitz_bound(&data).value + 1e-9, "{ratio}");
    }

    #[test]
    fn smallnet_reports_heuristic_lipschitz() {
        let obj = Objective::SmallNet(SmallNetObjective::new(4, 3, 2, 0.0, 10.0).unwrap());
        let l = obj.lipschitz_bound(&Dataset::unit());
        assert_eq!(l.value, 10.0);
        assert!(l.heuristic);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let data = random_dataset(&mut rng, 12, 4, 3);

        let full = {
            let m: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
            // A = MᵀM is PSD.
            let mut a = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    a[i * 3 + j] = (0..3).map(|k| m[k * 3 + i] * m[k * 3 + j]).sum();
                }
            }
            QuadraticObjective::new(Curvature::Full(a), vec![0.5, -1.0, 2.0], 0.1).unwrap()
        };
        check_objective(&Objective::Quadratic(full), &Dataset::unit(), 1, 3.0);
        check_objective(&Objective::Logistic(LogisticObjective::new(4, 3, 0.01).unwrap()), &data, 2, 1.0);
        check_objective(&Objective::SmallNet(SmallNetObjective::new(4, 5, 3, 0.01, 10.0).unwrap()), &data, 3, 1.0);
    }

    #[test]
    fn non_finite_loss_names_sample() {
        let data = Dataset::new("big", vec![1.0, 1e300], 1, vec![0, 1], 2).unwrap();
        let obj = Objective::Logistic(LogisticObjective::new(1, 2, 0.0).unwrap());
        let w: ParamVector = vec![1e10, 0.0, -1e10, 0.0].into();
        let err = obj.eval_loss(&w, &data, &Batch::full(&data)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { sample: 1, .. }), "{err}");
    }

    proptest! {
        #[test]
        fn quadratic_gradient_is_lipschitz(
            diag in proptest::collection::vec(0.0f64..4.0, 3),
            w in proptest::collection::vec(-10.0f64..10.0, 3),
            v in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let q = Objective::Quadratic(QuadraticObjective::new(Curvature::Diagonal(diag), vec![1.0, 2.0, 3.0], 0.0).unwrap());
            let unit = Dataset::unit();
            let b = Batch::full(&unit);
            let (w, v): (ParamVector, ParamVector) = (w.into(), v.into());
            let gd = q.eval_grad(&w, &unit, &b).unwrap().sub(&q.eval_grad(&v, &unit, &b).unwrap());
            let l = q.lipschitz_bound(&unit).value;
            prop_assert!(gd.norm() <= l * w.distance_sq(&v).sqrt() * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn cross_entropy_losses_are_nonnegative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 6, 3, 3);
            let b = Batch::full(&data);
            for obj in [
                Objective::Logistic(LogisticObjective::new(3, 3, 0.0).unwrap()),
                Objective::SmallNet(SmallNetObjective::new(3, 4, 3, 0.0, 1.0).unwrap()),
            ] {
                let w = random_point(&mut rng, obj.dim(), 5.0);
                prop_assert!(obj.eval_loss(&w, &data, &b).unwrap() >= 0.0);
            }
        }
    }
}
