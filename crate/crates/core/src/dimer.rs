//! Dimer direction tracking and gradient correction.
//!
//! A dimer is the pair `(θ, θ + ΔR·N̂)`. The gradient difference across the
//! pair, with its component along `N̂` removed, is the rotational force `F_R`;
//! one step `N̂ ← normalize(N̂ + η_rot F_R)` turns the direction toward an
//! extremal-curvature eigenvector. On a quadratic `g₂ − g = ΔR·H·N̂`, so the
//! rotation is a shifted power iteration on `H`:
//!
//! * [`SignConvention::AsWritten`] uses `g₂ − g` and climbs the Rayleigh
//!   quotient, converging to the largest-eigenvalue eigenvector.
//! * [`SignConvention::ForceConvention`] uses forces, `−(g₂ − g)`, and
//!   descends it, converging to the smallest-eigenvalue eigenvector.
//!
//! The corrected gradient is `g − α (g·N̂) N̂`. With `α > 1` the component
//! along `N̂` is reversed, not just removed.

use serde::{Deserialize, Serialize};

use crate::error::{DeoError, Result};
use crate::landscapes::{BatchKey, Problem};
use crate::numeric::{normalize, random_unit_vector, ParamVector, RngSeed};

/// Which gradient difference drives the rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `d = g₂ − g`.
    #[default]
    AsWritten,
    /// `d = −(g₂ − g)`: forces are negative gradients.
    ForceConvention,
}

impl SignConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            SignConvention::AsWritten => "as-written",
            SignConvention::ForceConvention => "force-convention",
        }
    }
}

impl std::str::FromStr for SignConvention {
    type Err = DeoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-written" | "as_written" => Ok(SignConvention::AsWritten),
            "force-convention" | "force_convention" | "force" => {
                Ok(SignConvention::ForceConvention)
            }
            _ => Err(DeoError::config(
                "sign",
                format!("`{s}` (expected as-written or force-convention)"),
            )),
        }
    }
}

/// Dimer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerConfig {
    /// Displacement `ΔR` of the second dimer point.
    pub delta_r: f64,
    /// Rotation step `η_rot`.
    pub eta_rot: f64,
    /// Correction coefficient `α`.
    pub alpha: f64,
    pub sign_convention: SignConvention,
}

impl Default for DimerConfig {
    fn default() -> Self {
        DimerConfig {
            delta_r: 6e-3,
            eta_rot: 1e-3,
            alpha: 5.0,
            sign_convention: SignConvention::AsWritten,
        }
    }
}

impl DimerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_r.is_finite() && self.delta_r > 0.0) {
            return Err(DeoError::config("delta_r", "must be finite and > 0"));
        }
        if !(self.eta_rot.is_finite() && self.eta_rot > 0.0) {
            return Err(DeoError::config("eta_rot", "must be finite and > 0"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(DeoError::config("alpha", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Everything measured during one rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationDiagnostics {
    /// `F_R`, orthogonal to the direction before the update.
    pub rotational_force: ParamVector,
    /// `(L(θ₂) − L(θ)) / ΔR`.
    pub curvature_paper: f64,
    /// `(g₂ − g)·N̂ / ΔR`.
    pub curvature_grad: f64,
    /// `2 (L(θ₂) − L(θ) − ΔR g·N̂) / ΔR²`.
    pub curvature_second_order: f64,
    pub loss_at_theta: f64,
    pub loss_at_theta2: f64,
    /// `‖N̂ + η_rot F_R‖` before normalization; at least 1 since `F_R ⊥ N̂`.
    pub pre_normalization_norm: f64,
    /// Signed cosine between the direction before and after the update.
    pub refresh_cosine: f64,
}

/// Cached unit direction plus configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DimerState {
    direction: ParamVector,
    pub config: DimerConfig,
    pub last_diag: Option<RotationDiagnostics>,
}

impl DimerState {
    /// Starts from a seeded random unit direction.
    pub fn random(config: DimerConfig, dim: usize, seed: &RngSeed) -> Result<Self> {
        Ok(DimerState {
            direction: random_unit_vector(dim, seed)?,
            config,
            last_diag: None,
        })
    }

    /// Starts from `direction`, normalized.
    pub fn with_direction(config: DimerConfig, direction: &ParamVector) -> Result<Self> {
        Ok(DimerState {
            direction: normalize(direction)?,
            config,
            last_diag: None,
        })
    }

    pub fn direction(&self) -> &ParamVector {
        &self.direction
    }
}

/// One dimer rotation at `theta`, where `g` is the gradient at `theta` on the
/// same `batch`. Costs one extra gradient and two loss evaluations.
pub fn rotate_once(
    problem: &dyn Problem,
    theta: &ParamVector,
    g: &ParamVector,
    state: &DimerState,
    batch: Option<BatchKey>,
) -> Result<(DimerState, RotationDiagnostics)> {
    let cfg = state.config;
    let n = &state.direction;
    let delta_r = cfg.delta_r;

    let theta2 = theta.add_scaled(delta_r, n)?;
    let g2 = problem.grad(&theta2, batch)?;
    let loss = problem.loss(theta, batch)?;
    let loss2 = problem.loss(&theta2, batch)?;

    let diff = g2.sub(g)?;
    let d = match cfg.sign_convention {
        SignConvention::AsWritten => diff.clone(),
        SignConvention::ForceConvention => diff.scale(-1.0)?,
    };
    let along = d.dot(n)?;
    let force = d.add_scaled(-along, n)?;
    let pre = n.add_scaled(cfg.eta_rot, &force)?;
    let pre_norm = pre.norm();
    let new_dir = normalize(&pre)?;

    let g_dot_n = g.dot(n)?;
    let curvature_paper = (loss2 - loss) / delta_r;
    let curvature_grad = diff.dot(n)? / delta_r;
    let curvature_second_order = 2.0 * (loss2 - loss - delta_r * g_dot_n) / (delta_r * delta_r);
    for (x, what) in [
        (curvature_paper, "curvature_paper"),
        (curvature_grad, "curvature_grad"),
        (curvature_second_order, "curvature_second_order"),
    ] {
        if !x.is_finite() {
            return Err(DeoError::numeric(what));
        }
    }

    let diag = RotationDiagnostics {
        rotational_force: force,
        curvature_paper,
        curvature_grad,
        curvature_second_order,
        loss_at_theta: loss,
        loss_at_theta2: loss2,
        pre_normalization_norm: pre_norm,
        refresh_cosine: n.dot(&new_dir)?,
    };
    let next = DimerState {
        direction: new_dir,
        config: cfg,
        last_diag: Some(diag.clone()),
    };
    Ok((next, diag))
}

/// `g − α (g·N̂) N̂`. With `α = 0`, returns `g` unchanged bit-for-bit.
pub fn project_gradient(g: &ParamVector, direction: &ParamVector, alpha: f64) -> Result<ParamVector> {
    debug_assert!((direction.norm() - 1.0).abs() <= 1e-12, "direction must be unit");
    if alpha == 0.0 {
        return Ok(g.clone());
    }
    let along = g.dot(direction)?;
    g.add_scaled(-alpha * along, direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{make_quadratic, QuadraticSpec};
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_slice(v).unwrap()
    }

    fn saddle() -> crate::landscapes::Quadratic {
        make_quadratic(&QuadraticSpec { lambdas: vec![1.0, -1.0] }).unwrap()
    }

    fn cfg(delta_r: f64, eta_rot: f64, sign: SignConvention) -> DimerConfig {
        DimerConfig { delta_r, eta_rot, alpha: 5.0, sign_convention: sign }
    }

    #[test]
    fn defaults() {
        let c = DimerConfig::default();
        assert_eq!((c.delta_r, c.eta_rot, c.alpha), (6e-3, 1e-3, 5.0));
        assert_eq!(c.sign_convention, SignConvention::AsWritten);
    }

    #[test]
    fn validate_rejects_bad_values() {
        let c = DimerConfig { alpha: -1.0, ..DimerConfig::default() };
        assert!(matches!(c.validate(), Err(DeoError::Config { field, .. }) if field == "alpha"));
        let c = DimerConfig { delta_r: 0.0, ..DimerConfig::default() };
        assert!(c.validate().is_err());
        let c = DimerConfig { eta_rot: f64::INFINITY, ..DimerConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn eigenvector_is_fixed_point() {
        let q = saddle();
        let theta = pv(&[0.3, -0.7]);
        let g = q.grad(&theta, None).unwrap();
        let state = DimerState::with_direction(DimerConfig::default(), &pv(&[1.0, 0.0])).unwrap();
        let (next, diag) = rotate_once(&q, &theta, &g, &state, None).unwrap();
        assert!(diag.rotational_force.norm() <= 1e-12);
        assert_eq!(next.direction().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn curvature_at_saddle_along_negative_mode() {
        let q = saddle();
        let theta = pv(&[0.0, 0.0]);
        let g = q.grad(&theta, None).unwrap();
        let dr = 6e-3;
        let state =
            DimerState::with_direction(cfg(dr, 1e-3, SignConvention::AsWritten), &pv(&[0.0, 1.0]))
                .unwrap();
        let (_, diag) = rotate_once(&q, &theta, &g, &state, None).unwrap();
        assert_eq!(diag.curvature_grad, -1.0);
        assert!((diag.curvature_paper + dr / 2.0).abs() <= 1e-15);
        assert!(diag.curvature_paper < 0.0);
        assert!((diag.curvature_second_order + 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rotation_conventions_pick_opposite_modes() {
        let q = saddle();
        let theta = pv(&[0.0, 0.0]);
        let g = q.grad(&theta, None).unwrap();
        let start = pv(&[1.0, 1.0]);
        for (sign, want) in [
            (SignConvention::AsWritten, [1.0, 0.0]),
            (SignConvention::ForceConvention, [0.0, 1.0]),
        ] {
            let mut s = DimerState::with_direction(cfg(1e-2, 10.0, sign), &start).unwrap();
            for _ in 0..5000 {
                s = rotate_once(&q, &theta, &g, &s, None).unwrap().0;
            }
            let a = crate::oracle::alignment(s.direction(), &pv(&want)).unwrap();
            assert!(a >= 0.99, "{sign:?}: {a}");
        }
    }

    #[test]
    fn direction_stays_unit_and_force_is_orthogonal() {
        let q = make_quadratic(&QuadraticSpec { lambdas: vec![2.0, -0.5, 0.1, 1.3] }).unwrap();
        let theta = pv(&[0.5, -1.0, 2.0, 0.1]);
        let g = q.grad(&theta, None).unwrap();
        let mut s = DimerState::random(
            cfg(6e-3, 1.0, SignConvention::ForceConvention),
            4,
            &RngSeed::new(1, "dimer"),
        )
        .unwrap();
        for _ in 0..200 {
            let before = s.direction().clone();
            let (next, diag) = rotate_once(&q, &theta, &g, &s, None).unwrap();
            let f = &diag.rotational_force;
            assert!(f.dot(&before).unwrap().abs() <= 1e-10 * f.norm().max(f64::MIN_POSITIVE));
            assert!(diag.pre_normalization_norm >= 1.0);
            assert!((next.direction().norm() - 1.0).abs() <= 1e-12);
            s = next;
        }
    }

    #[test]
    fn curvature_estimators_on_quadratic() {
        let q = make_quadratic(&QuadraticSpec { lambdas: vec![1.5, -0.5, 0.25] }).unwrap();
        let h = q.matrix().clone();
        let theta = pv(&[0.2, 1.0, -0.4]);
        let g = q.grad(&theta, None).unwrap();
        let dr = 1e-2;
        let s = DimerState::with_direction(
            cfg(dr, 1e-3, SignConvention::AsWritten),
            &pv(&[1.0, 2.0, -1.0]),
        )
        .unwrap();
        let n = s.direction().clone();
        let rho = h.quadratic_form(n.as_slice());
        let (_, d) = rotate_once(&q, &theta, &g, &s, None).unwrap();
        assert!((d.curvature_grad - rho).abs() <= 1e-12);
        assert!((d.curvature_second_order - rho).abs() <= 1e-9);
        let closed = g.dot(&n).unwrap() + dr * rho / 2.0;
        assert!((d.curvature_paper - closed).abs() <= 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_numeric_failure() {
        struct Blowup;
        impl Problem for Blowup {
            fn name(&self) -> &str {
                "blowup"
            }
            fn dim(&self) -> usize {
                1
            }
            fn loss(&self, t: &ParamVector, _: Option<BatchKey>) -> Result<f64> {
                Ok(t[0])
            }
            fn grad(&self, t: &ParamVector, _: Option<BatchKey>) -> Result<ParamVector> {
                ParamVector::new(vec![if t[0] > 0.0 { f64::INFINITY } else { 1.0 }])
            }
        }
        let s = DimerState::with_direction(DimerConfig::default(), &pv(&[1.0])).unwrap();
        let err = rotate_once(&Blowup, &pv(&[0.0]), &pv(&[1.0]), &s, None).unwrap_err();
        assert!(matches!(err, DeoError::NumericFailure { .. }));
    }

    #[test]
    fn projection_examples() {
        let out = project_gradient(&pv(&[3.0, 4.0]), &pv(&[1.0, 0.0]), 5.0).unwrap();
        assert_eq!(out.as_slice(), &[-12.0, 4.0]);
        let g = pv(&[-0.0, 1.5, -2.25]);
        let n = normalize(&pv(&[1.0, 1.0, 1.0])).unwrap();
        let out = project_gradient(&g, &n, 0.0).unwrap();
        for (a, b) in out.iter().zip(g.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let c = -3.7;
        let par = n.scale(c).unwrap();
        let out = project_gradient(&par, &n, 1.0).unwrap();
        assert!(out.max_abs() <= 1e-15 * c.abs());
    }

    fn unit_and_vec(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (
            prop::collection::vec(-10.0..10.0f64, dim),
            prop::collection::vec(-1.0..1.0f64, dim)
                .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3)),
            0.0..10.0f64,
        )
    }

    proptest! {
        #[test]
        fn projection_algebra((g, n, alpha) in unit_and_vec(6)) {
            let g = pv(&g);
            let n = normalize(&pv(&n)).unwrap();
            let out = project_gradient(&g, &n, alpha).unwrap();
            let gn = g.dot(&n).unwrap();
            let scale = g.norm().max(1e-300);
            prop_assert!((out.dot(&n).unwrap() - (1.0 - alpha) * gn).abs() <= 1e-12 * scale * (1.0 + alpha));
            let perp_in = g.add_scaled(-gn, &n).unwrap();
            let perp_out = out.add_scaled(-out.dot(&n).unwrap(), &n).unwrap();
            prop_assert!(perp_in.sub(&perp_out).unwrap().norm() <= 1e-12 * scale * (1.0 + alpha));
        }
    }
}
