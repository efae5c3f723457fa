//! Analytic loss surfaces with exact gradients and Hessians.
//!
//! All problems implement [`Problem`], which the optimizers and the oracle
//! consume. Analytic landscapes ignore the batch key.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{DeoError, Result};
use crate::numeric::{gaussian_vec, ParamVector, RngSeed};
use crate::oracle::SymMatrix;

/// Identifies the minibatch used for an evaluation. Problems that are not
/// stochastic ignore it; `None` means "full data".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BatchKey(pub u64);

/// An evaluable loss surface.
///
/// Implementations must be deterministic: identical `(theta, batch)` gives
/// identical outputs.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn loss(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<f64>;

    fn grad(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<ParamVector>;

    fn loss_and_grad(
        &self,
        theta: &ParamVector,
        batch: Option<BatchKey>,
    ) -> Result<(f64, ParamVector)> {
        Ok((self.loss(theta, batch)?, self.grad(theta, batch)?))
    }

    /// Exact Hessian, when the problem has one in closed form.
    fn hessian(&self, _theta: &ParamVector) -> Option<SymMatrix> {
        None
    }
}

pub(crate) fn check_dim(expected: usize, theta: &ParamVector) -> Result<()> {
    if theta.dim() != expected {
        return Err(DeoError::DimensionMismatch {
            left: theta.dim(),
            right: expected,
        });
    }
    Ok(())
}

pub(crate) fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(DeoError::numeric(what))
    }
}

/// Eigenvalues of a diagonal quadratic.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    pub lambdas: Vec<f64>,
}

/// `f(x) = ½ xᵀHx` for a constant symmetric `H`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: SymMatrix,
}

impl Quadratic {
    pub fn new(hessian: SymMatrix) -> Self {
        Quadratic { hessian }
    }

    /// `H = Q diag(lambdas) Qᵀ` for an orthogonal `basis` whose columns are
    /// the eigenvectors.
    pub fn with_spectrum(lambdas: &[f64], basis: &[Vec<f64>]) -> Result<Self> {
        let n = lambdas.len();
        if basis.len() != n {
            return Err(DeoError::DimensionMismatch {
                left: basis.len(),
                right: n,
            });
        }
        let h = SymMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| basis[k][i] * lambdas[k] * basis[k][j]).sum()
        });
        Ok(Quadratic { hessian: h })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.hessian
    }
}

/// Diagonal quadratic `½ Σ λᵢ xᵢ²`.
pub fn make_quadratic(spec: &QuadraticSpec) -> Result<Quadratic> {
    if spec.lambdas.is_empty() {
        return Err(DeoError::EmptyVector);
    }
    if spec.lambdas.iter().any(|l| !l.is_finite()) {
        return Err(DeoError::numeric("quadratic eigenvalue"));
    }
    let l = &spec.lambdas;
    Ok(Quadratic::new(SymMatrix::from_fn(l.len(), |i, j| {
        if i == j {
            l[i]
        } else {
            0.0
        }
    })))
}

/// Seeded orthogonal matrix (modified Gram-Schmidt on Gaussian columns).
/// Returned as a list of orthonormal column vectors.
pub fn random_orthogonal(dim: usize, seed: &RngSeed) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = gaussian_vec(&mut rng, dim);
        for q in &cols {
            let p: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        cols.push(v);
    }
    cols
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.hessian.n()
    }

    fn loss(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> Result<f64> {
        check_dim(self.dim(), theta)?;
        let hx = self.hessian.mul_vec(theta.as_slice());
        finite(
            0.5 * theta.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>(),
            "quadratic loss",
        )
    }

    fn grad(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> Result<ParamVector> {
        check_dim(self.dim(), theta)?;
        ParamVector::new(self.hessian.mul_vec(theta.as_slice()))
    }

    fn hessian(&self, _theta: &ParamVector) -> Option<SymMatrix> {
        Some(self.hessian.clone())
    }
}

/// `f(x, y) = x³ − 3xy²`, a degenerate saddle at the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct MonkeySaddle;

pub fn make_monkey_saddle() -> MonkeySaddle {
    MonkeySaddle
}

impl Problem for MonkeySaddle {
    fn name(&self) -> &str {
        "monkey"
    }

    fn dim(&self) -> usize {
        2
    }

    fn loss(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> Result<f64> {
        check_dim(2, theta)?;
        let (x, y) = (theta[0], theta[1]);
        finite(x * x * x - 3.0 * x * y * y, "monkey loss")
    }

    fn grad(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> Result<ParamVector> {
        check_dim(2, theta)?;
        let (x, y) = (theta[0], theta[1]);
        ParamVector::new(vec![3.0 * x * x - 3.0 * y * y, -6.0 * x * y])
    }

    fn hessian(&self, theta: &ParamVector) -> Option<SymMatrix> {
        let (x, y) = (theta[0], theta[1]);
        Some(SymMatrix::from_rows(&[
            vec![6.0 * x, -6.0 * y],
            vec![-6.0 * y, -6.0 * x],
        ]))
    }
}

/// Chained Rosenbrock `Σ (1 − xᵢ)² + 100 (xᵢ₊₁ − xᵢ²)²`.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    dim: usize,
}

pub fn make_rosenbrock(dim: usize) -> Result<Rosenbrock> {
    if dim < 2 {
        return Err(DeoError::config("dim", "rosenbrock needs dim >= 2"));
    }
    Ok(Rosenbrock { dim })
}

impl Problem for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> Result<f64> {
        check_dim(self.dim, theta)?;
        let x = theta.as_slice();
        let f = x
            .windows(2)
            .map(|w| (1.0 - w[0]).powi(2) + 100.0 * (w[1] - w[0] * w[0]).powi(2))
            .sum();
        finite(f, "rosenbrock loss")
    }

    fn grad(&self, theta: &ParamVector, _batch: Option<BatchKey>) -> Result<ParamVector> {
        check_dim(self.dim, theta)?;
        let x = theta.as_slice();
        let mut g = vec![0.0; self.dim];
        for i in 0..self.dim - 1 {
            let r = x[i + 1] - x[i] * x[i];
            g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * r;
            g[i + 1] += 200.0 * r;
        }
        ParamVector::new(g)
    }

    fn hessian(&self, theta: &ParamVector) -> Option<SymMatrix> {
        let x = theta.as_slice();
        let n = self.dim;
        let mut h = vec![0.0; n * n];
        for i in 0..n - 1 {
            h[i * n + i] += 2.0 - 400.0 * x[i + 1] + 1200.0 * x[i] * x[i];
            h[i * n + i + 1] += -400.0 * x[i];
            h[(i + 1) * n + i] += -400.0 * x[i];
            h[(i + 1) * n + i + 1] += 200.0;
        }
        Some(SymMatrix::symmetrize(n, h).0)
    }
}

/// Wraps a problem and counts loss and gradient evaluations.
pub struct Counting<P> {
    inner: P,
    losses: AtomicU64,
    grads: AtomicU64,
}

impl<P: Problem> Counting<P> {
    pub fn new(inner: P) -> Self {
        Counting {
            inner,
            losses: AtomicU64::new(0),
            grads: AtomicU64::new(0),
        }
    }

    pub fn loss_evals(&self) -> u64 {
        self.losses.load(Ordering::Relaxed)
    }

    pub fn grad_evals(&self) -> u64 {
        self.grads.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Problem> Problem for Counting<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn loss(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<f64> {
        self.losses.fetch_add(1, Ordering::Relaxed);
        self.inner.loss(theta, batch)
    }

    fn grad(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<ParamVector> {
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.grad(theta, batch)
    }

    fn loss_and_grad(
        &self,
        theta: &ParamVector,
        batch: Option<BatchKey>,
    ) -> Result<(f64, ParamVector)> {
        self.losses.fetch_add(1, Ordering::Relaxed);
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.loss_and_grad(theta, batch)
    }

    fn hessian(&self, theta: &ParamVector) -> Option<SymMatrix> {
        self.inner.hessian(theta)
    }
}

impl<P: Problem + ?Sized> Problem for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn loss(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<f64> {
        (**self).loss(theta, batch)
    }
    fn grad(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<ParamVector> {
        (**self).grad(theta, batch)
    }
    fn loss_and_grad(
        &self,
        theta: &ParamVector,
        batch: Option<BatchKey>,
    ) -> Result<(f64, ParamVector)> {
        (**self).loss_and_grad(theta, batch)
    }
    fn hessian(&self, theta: &ParamVector) -> Option<SymMatrix> {
        (**self).hessian(theta)
    }
}
