//! `f(w) = ½ (w − c)ᵀ A (w − c) + (λ/2)‖w‖²` with `A` symmetric PSD.
//!
//! Quadratics carry exact smoothness constants and closed-form minimizers, so
//! they serve as the reference family for the convergence diagnostics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::param::ParamVector;

const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Curvature {
    Diagonal(Vec<f64>),
    /// Row-major `d × d`.
    Full(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    dim: usize,
    curvature: Curvature,
    center: Vec<f64>,
    lambda: f64,
}

impl QuadraticObjective {
    pub fn new(curvature: Curvature, center: Vec<f64>, lambda: f64) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(Error::Config("quadratic objective needs dimension ≥ 1".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("regularization must be ≥ 0, got {lambda}")));
        }
        match &curvature {
            Curvature::Diagonal(diag) => {
                if diag.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: diag.len(),
                    });
                }
                if diag.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
                    return Err(Error::Config("diagonal curvature must be finite and ≥ 0".into()));
                }
            }
            Curvature::Full(a) => {
                if a.len() != dim * dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim * dim,
                        got: a.len(),
                    });
                }
                for i in 0..dim {
                    for j in 0..i {
                        let (x, y) = (a[i * dim + j], a[j * dim + i]);
                        if (x - y).abs() > PSD_TOLERANCE * (1.0 + x.abs().max(y.abs())) {
                            return Err(Error::Config("curvature matrix is not symmetric".into()));
                        }
                    }
                }
                let min_eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, a))
                    .eigenvalues
                    .min();
                if min_eig < -PSD_TOLERANCE {
                    return Err(Error::Config(format!(
                        "curvature matrix is not positive semidefinite (λ_min = {min_eig:e})"
                    )));
                }
            }
        }
        Ok(QuadraticObjective {
            dim,
            curvature,
            center,
            lambda,
        })
    }

    /// Scalar convenience: `½ a (w − c)²`.
    pub fn scalar(a: f64, c: f64) -> Result<Self> {
        Self::new(Curvature::Diagonal(vec![a]), vec![c], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn curvature(&self) -> &Curvature {
        &self.curvature
    }

    fn apply_curvature(&self, v: &[f64]) -> Vec<f64> {
        match &self.curvature {
            Curvature::Diagonal(diag) => diag.iter().zip(v).map(|(a, x)| a * x).collect(),
            Curvature::Full(a) => (0..self.dim)
                .map(|i| {
                    a[i * self.dim..(i + 1) * self.dim]
                        .iter()
                        .zip(v)
                        .map(|(aij, x)| aij * x)
                        .sum()
                })
                .collect(),
        }
    }

    pub fn loss(&self, w: &ParamVector) -> f64 {
        let diff: Vec<f64> = w.iter().zip(&self.center).map(|(w, c)| w - c).collect();
        let a_diff = self.apply_curvature(&diff);
        let quad: f64 = diff.iter().zip(&a_diff).map(|(d, ad)| d * ad).sum();
        0.5 * quad + 0.5 * self.lambda * w.norm_sq()
    }

    pub fn grad(&self, w: &ParamVector) -> ParamVector {
        let diff: Vec<f64> = w.iter().zip(&self.center).map(|(w, c)| w - c).collect();
        let mut g = self.apply_curvature(&diff);
        if self.lambda != 0.0 {
            for (gi, wi) in g.iter_mut().zip(w.iter()) {
                *gi += self.lambda * wi;
            }
        }
        ParamVector::from_vec(g)
    }

    /// `A + λI` as a dense matrix.
    pub fn hessian(&self) -> DMatrix<f64> {
        let mut h = match &self.curvature {
            Curvature::Diagonal(diag) => DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            Curvature::Full(a) => DMatrix::from_row_slice(self.dim, self.dim, a),
        };
        for i in 0..self.dim {
            h[(i, i)] += self.lambda;
        }
        h
    }

    /// Exact smoothness constant `λ_max(A) + λ`.
    pub fn lipschitz(&self) -> f64 {
        match &self.curvature {
            Curvature::Diagonal(diag) => diag.iter().copied().fold(0.0, f64::max) + self.lambda,
            Curvature::Full(_) => SymmetricEigen::new(self.hessian()).eigenvalues.max(),
        }
    }

    /// Minimizer of `f(w) + yᵀ(w − θ) + (ρ/2)‖w − θ‖²`:
    /// `(A + λI + ρI)⁻¹ (A c + ρθ − y)`.
    pub fn prox_minimizer(&self, y: &ParamVector, theta: &ParamVector, rho: f64) -> Result<ParamVector> {
        let ac = self.apply_curvature(&self.center);
        let rhs: Vec<f64> = (0..self.dim)
            .map(|i| ac[i] + rho * theta[i] - y[i])
            .collect();
        match &self.curvature {
            Curvature::Diagonal(diag) => {
                let mut out = Vec::with_capacity(self.dim);
                for (i, (&a, r)) in diag.iter().zip(&rhs).enumerate() {
                    let denom = a + self.lambda + rho;
                    if !(denom > 0.0) {
                        return Err(Error::InvalidHyperparameter(format!(
                            "A + ρI is singular at coordinate {i}"
                        )));
                    }
                    out.push(r / denom);
                }
                Ok(ParamVector::from_vec(out))
            }
            Curvature::Full(_) => {
                let mut h = self.hessian();
                for i in 0..self.dim {
                    h[(i, i)] += rho;
                }
                let chol = h.cholesky().ok_or_else(|| {
                    Error::InvalidHyperparameter("A + ρI is not positive definite".into())
                })?;
                let sol = chol.solve(&DVector::from_vec(rhs));
                Ok(ParamVector::from_vec(sol.iter().copied().collect()))
            }
        }
    }
}

/// Closed-form solution of `min_θ Σ_i f_i(θ)`: `θ* = (Σ H_i)⁻¹ Σ A_i c_i`.
pub fn consensus_minimizer(objectives: &[&QuadraticObjective]) -> Result<ParamVector> {
    let dim = objectives
        .first()
        .ok_or_else(|| Error::Config("need at least one objective".into()))?
        .dim;
    if let Some(mismatch) = objectives.iter().find(|o| o.dim != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mismatch.dim,
        });
    }
    if objectives.iter().all(|o| matches!(o.curvature, Curvature::Diagonal(_))) {
        let mut h = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        for obj in objectives {
            let Curvature::Diagonal(diag) = &obj.curvature else { unreachable!() };
            for i in 0..dim {
                h[i] += diag[i] + obj.lambda;
                b[i] += diag[i] * obj.center[i];
            }
        }
        if let Some(i) = h.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::InvalidHyperparameter(format!(
                "Σ A_i is singular at coordinate {i}; consensus minimizer is not unique"
            )));
        }
        return Ok(ParamVector::from_vec(b.iter().zip(&h).map(|(b, h)| b / h).collect()));
    }
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    for obj in objectives {
        h += obj.hessian();
        b += DVector::from_vec(obj.apply_curvature(&obj.center));
    }
    let sol = h
        .clone()
        .cholesky()
        .map(|c| c.solve(&b))
        .or_else(|| h.lu().solve(&b))
        .ok_or_else(|| Error::InvalidHyperparameter("Σ A_i is singular; consensus minimizer is not unique".into()))?;
    Ok(ParamVector::from_vec(sol.iter().copied().collect()))
}
