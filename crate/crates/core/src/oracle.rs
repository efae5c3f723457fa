//! Brute-force ground truth: finite-difference Hessians, a cyclic Jacobi
//! eigensolver for dense symmetric matrices, and direction alignment.
//!
//! None of this is used by the optimizers themselves; it exists to check the
//! dimer direction against the true extremal eigenvectors.

use crate::error::{DeoError, Result};
use crate::landscapes::{BatchKey, Problem};
use crate::numeric::ParamVector;

/// Largest dimension the dense oracle accepts.
pub const MAX_ORACLE_DIM: usize = 500;

/// Default finite-difference step (scaled per coordinate by `1 + |θᵢ|`).
pub const DEFAULT_FD_STEP: f64 = 1e-5;

const MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from the upper triangle of `f(i, j)` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = f(i, j);
                data[i * n + j] = x;
                data[j * n + i] = x;
            }
        }
        SymMatrix { n, data }
    }

    /// Symmetrizes the given rows as `(A + Aᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::symmetrize(n, data).0
    }

    /// `(A + Aᵀ)/2` together with the pre-symmetrization defect `max |Aᵢⱼ − Aⱼᵢ|`.
    pub fn symmetrize(n: usize, raw: Vec<f64>) -> (Self, f64) {
        assert_eq!(raw.len(), n * n, "matrix data must be n*n");
        let mut defect = 0.0_f64;
        let m = Self::from_fn(n, |i, j| {
            let (a, b) = (raw[i * n + j], raw[j * n + i]);
            defect = defect.max((a - b).abs());
            0.5 * (a + b)
        });
        (m, defect)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Finite-difference Hessian with its symmetry defect.
#[derive(Debug, Clone)]
pub struct FdHessian {
    pub matrix: SymMatrix,
    /// `max |Aᵢⱼ − Aⱼᵢ|` of the raw difference quotients.
    pub asymmetry: f64,
}

/// Central-difference Hessian from gradients: column `i` is
/// `(∇L(θ + hᵢeᵢ) − ∇L(θ − hᵢeᵢ)) / 2hᵢ` with `hᵢ = h (1 + |θᵢ|)`.
pub fn hessian_fd(
    problem: &dyn Problem,
    theta: &ParamVector,
    h: f64,
    batch: Option<BatchKey>,
) -> Result<FdHessian> {
    let n = theta.dim();
    if n > MAX_ORACLE_DIM {
        return Err(DeoError::TooLarge {
            dim: n,
            max: MAX_ORACLE_DIM,
        });
    }
    let mut raw = vec![0.0; n * n];
    let mut probe = theta.as_slice().to_vec();
    for i in 0..n {
        let hi = h * (1.0 + theta[i].abs());
        probe[i] = theta[i] + hi;
        let gp = problem.grad(&ParamVector::from_slice(&probe)?, batch)?;
        probe[i] = theta[i] - hi;
        let gm = problem.grad(&ParamVector::from_slice(&probe)?, batch)?;
        probe[i] = theta[i];
        for j in 0..n {
            // column i of the Hessian
            raw[j * n + i] = (gp[j] - gm[j]) / (2.0 * hi);
        }
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(DeoError::numeric("finite-difference Hessian"));
    }
    let (matrix, asymmetry) = SymMatrix::symmetrize(n, raw);
    Ok(FdHessian { matrix, asymmetry })
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<ParamVector>,
}

impl EigenPairs {
    pub fn min_vector(&self) -> &ParamVector {
        &self.vectors[0]
    }

    pub fn max_vector(&self) -> &ParamVector {
        &self.vectors[self.vectors.len() - 1]
    }

    /// `Σ λᵢ vᵢ vᵢᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_fn(n, |i, j| {
            self.values
                .iter()
                .zip(&self.vectors)
                .map(|(l, v)| l * v[i] * v[j])
                .sum()
        })
    }

    /// Whether the two smallest eigenvalues are too close for the minimum
    /// eigenvector to be well defined.
    pub fn min_is_degenerate(&self, tol: f64) -> bool {
        self.values.len() > 1 && (self.values[1] - self.values[0]).abs() <= tol
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvectors are sign-normalized so their first component with magnitude
/// above `1e-12` is positive.
pub fn eig_sym(h: &SymMatrix) -> Result<EigenPairs> {
    let n = h.n();
    if n == 0 {
        return Err(DeoError::EmptyVector);
    }
    if n > MAX_ORACLE_DIM {
        return Err(DeoError::TooLarge {
            dim: n,
            max: MAX_ORACLE_DIM,
        });
    }
    if h.data.iter().any(|x| !x.is_finite()) {
        return Err(DeoError::numeric("eigensolver input"));
    }
    let mut a = h.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = h.frobenius();
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off = off_norm(&a);
        if off == 0.0 || off <= 1e-15 * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (arp, arq) = (a[r * n + p], a[r * n + q]);
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let (vrp, vrq) = (v[r * n + p], v[r * n + q]);
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    if !converged {
        if off_norm(&a) > 1e-10 * norm {
            return Err(DeoError::NoConvergence { sweeps: MAX_SWEEPS });
        }
        log::debug!("eig_sym: accepted at sweep limit");
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|r| v[r * n + k]).collect();
            if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    col.iter_mut().for_each(|x| *x = -*x);
                }
            }
            ParamVector::new(col)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenPairs { values, vectors })
}

/// Sign-insensitive cosine `|a·b| / (‖a‖‖b‖)`, in `[0, 1]`.
pub fn alignment(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    let ab = a.dot(b)?;
    let aa = a.dot(a)?;
    let bb = b.dot(b)?;
    if aa == 0.0 {
        return Err(DeoError::ZeroVector { norm: 0.0 });
    }
    if bb == 0.0 {
        return Err(DeoError::ZeroVector { norm: 0.0 });
    }
    Ok((ab.abs() / (aa * bb).sqrt()).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{make_monkey_saddle, make_quadratic, make_rosenbrock, QuadraticSpec};
    use crate::numeric::{gaussian_vec, RngSeed};
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = RngSeed::new(seed, "sym").rng();
        let g = gaussian_vec(&mut rng, n * n);
        SymMatrix::symmetrize(n, g).0
    }

    #[test]
    fn fd_hessian_of_quadratic() {
        let q = make_quadratic(&QuadraticSpec { lambdas: vec![1.0, 2.0, -1.0] }).unwrap();
        let fd = hessian_fd(&q, &pv(&[0.4, -3.0, 1.7]), DEFAULT_FD_STEP, None).unwrap();
        let want = SymMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ]);
        assert!(fd.matrix.max_abs_diff(&want) <= 1e-9);
    }

    #[test]
    fn fd_hessian_of_rosenbrock_at_minimum() {
        let r = make_rosenbrock(2).unwrap();
        let fd = hessian_fd(&r, &pv(&[1.0, 1.0]), DEFAULT_FD_STEP, None).unwrap();
        let want = SymMatrix::from_rows(&[vec![802.0, -400.0], vec![-400.0, 200.0]]);
        assert!(fd.matrix.max_abs_diff(&want) / want.max_abs() <= 1e-4);
    }

    #[test]
    fn fd_hessian_of_monkey_at_origin() {
        let fd = hessian_fd(&make_monkey_saddle(), &pv(&[0.0, 0.0]), DEFAULT_FD_STEP, None).unwrap();
        assert!(fd.matrix.max_abs() <= 1e-8);
    }

    #[test]
    fn fd_hessian_refuses_large_dims() {
        let q = make_quadratic(&QuadraticSpec { lambdas: vec![1.0; 501] }).unwrap();
        let err = hessian_fd(&q, &ParamVector::zeros(501), DEFAULT_FD_STEP, None).unwrap_err();
        assert_eq!(err, DeoError::TooLarge { dim: 501, max: 500 });
    }

    #[test]
    fn eig_of_diagonal() {
        let h = SymMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ]);
        let e = eig_sym(&h).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0, 2.0]);
        assert_eq!(e.min_vector().as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn eig_of_swap_matrix() {
        let h = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = eig_sym(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = e.min_vector();
        assert!((v[0] - s).abs() < 1e-15 && (v[1] + s).abs() < 1e-15);
    }

    #[test]
    fn eig_of_zero_matrix() {
        let e = eig_sym(&SymMatrix::from_fn(3, |_, _| 0.0)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert!(e.min_is_degenerate(1e-6));
    }

    #[test]
    fn eig_reconstructs_random_50() {
        let h = random_sym(50, 9);
        let e = eig_sym(&h).unwrap();
        let rec = e.reconstruct();
        let diff = SymMatrix::symmetrize(
            50,
            rec.data.iter().zip(&h.data).map(|(a, b)| a - b).collect(),
        )
        .0;
        assert!(diff.frobenius() / h.frobenius() <= 1e-8);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenpairs_satisfy_residual_and_orthonormality() {
        let h = random_sym(30, 4);
        let e = eig_sym(&h).unwrap();
        for (i, (l, v)) in e.values.iter().zip(&e.vectors).enumerate() {
            let hv = h.mul_vec(v.as_slice());
            let r: f64 = hv
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - l * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-8 * (1.0 + l.abs()));
            for w in &e.vectors[i + 1..] {
                assert!(v.dot(w).unwrap().abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn eig_agrees_with_nalgebra() {
        let h = random_sym(12, 77);
        let e = eig_sym(&h).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(12, 12, &h.data);
        let mut theirs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in e.values.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn eig_recovers_quadratic_spectrum() {
        let q = make_quadratic(&QuadraticSpec { lambdas: vec![0.5, -2.0, 3.0, 1.0] }).unwrap();
        let fd = hessian_fd(&q, &pv(&[1.0, -1.0, 0.5, 2.0]), DEFAULT_FD_STEP, None).unwrap();
        let e = eig_sym(&fd.matrix).unwrap();
        for (got, want) in e.values.iter().zip([-2.0, 0.5, 1.0, 3.0]) {
            assert!((got - want).abs() <= 1e-8);
        }
        for (v, axis) in e.vectors.iter().zip([1, 0, 3, 2]) {
            let a = alignment(v, &ParamVector::basis(4, axis)).unwrap();
            assert!(a >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn alignment_examples() {
        assert_eq!(alignment(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(alignment(&pv(&[2.0, 0.0]), &pv(&[-1.0, 0.0])).unwrap(), 1.0);
        let a = alignment(&pv(&[1.0, 1.0]), &pv(&[1.0, 0.0])).unwrap();
        assert!((a - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(alignment(&pv(&[0.0, 0.0]), &pv(&[1.0, 0.0])).is_err());
    }

    proptest! {
        #[test]
        fn self_alignment_is_exactly_one(v in prop::collection::vec(-1e3..1e3f64, 1..30)
            .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))) {
            let p = pv(&v);
            prop_assert_eq!(alignment(&p, &p).unwrap(), 1.0);
        }
    }
}
