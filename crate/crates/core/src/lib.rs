//! Dimer-enhanced optimization (DEO).
//!
//! A dimer probe `θ₂ = θ + ΔR·N̂` gives a first-order estimate of how the
//! gradient turns along `N̂`; rotating `N̂` with the resulting force tracks an
//! extremal-curvature eigenvector of the Hessian without ever forming it. Every
//! `f` steps the direction is refreshed, and on every step the gradient handed to
//! the base optimizer (SGD, Adam or AdamW) is corrected to
//! `g − α (g·N̂) N̂`.
//!
//! Modules:
//!
//! - [`numeric`]: vectors, seeded streams, cosine schedule
//! - [`landscapes`]: analytic test surfaces behind the [`Problem`] trait
//! - [`mlp`]: a small tanh MLP on two-moons data as a stochastic problem
//! - [`dimer`]: direction rotation, curvature estimates, gradient correction
//! - [`optim`]: SGD / Adam / AdamW and the periodic dimer wrapper
//! - [`oracle`]: finite-difference Hessians, Jacobi eigensolver, alignment
//! - [`config`] and [`runner`]: experiment configuration, runs, CSV/JSON output
//!
//! ```
//! use deo::prelude::*;
//!
//! let saddle = make_quadratic(&QuadraticSpec { lambdas: vec![1.0, -1.0] }).unwrap();
//! let theta = ParamVector::from_slice(&[0.5, 1e-3]).unwrap();
//! let g = saddle.grad(&theta, None).unwrap();
//! let state = DimerState::with_direction(
//!     DimerConfig::default(),
//!     &ParamVector::from_slice(&[0.0, 1.0]).unwrap(),
//! )
//! .unwrap();
//! let (_, diag) = rotate_once(&saddle, &theta, &g, &state, None).unwrap();
//! assert!((diag.curvature_grad + 1.0).abs() < 1e-12);
//! ```

pub mod config;
pub mod dimer;
pub mod error;
pub mod landscapes;
pub mod mlp;
pub mod numeric;
pub mod optim;
pub mod oracle;
pub mod runner;

pub use error::{DeoError, Result};
pub use landscapes::Problem;
pub use numeric::ParamVector;

pub mod prelude {
    pub use crate::config::{parse_config, parse_invocation, Invocation, LandscapeName, OptimizerName, RunConfig};
    pub use crate::dimer::{project_gradient, rotate_once, DimerConfig, DimerState, RotationDiagnostics, SignConvention};
    pub use crate::error::{DeoError, Result};
    pub use crate::landscapes::{
        make_monkey_saddle, make_quadratic, make_rosenbrock, random_orthogonal, BatchKey, Counting, Problem,
        Quadratic, QuadraticSpec,
    };
    pub use crate::mlp::{batch_indices, init_params, Dataset, Mlp, MlpProblem, MlpShape};
    pub use crate::numeric::{cosine_lr, dot, normalize, random_unit_vector, ParamVector, RngSeed};
    pub use crate::optim::{
        adam_step, adamw_step, base_step, deo_step, sgd_step, AdamConfig, AdamState, BaseKind, BaseOptimizer,
        DeoConfig, Frequency, Schedule, SgdConfig, SgdState, StepRecord,
    };
    pub use crate::oracle::{alignment, eig_sym, hessian_fd, EigenPairs, SymMatrix};
    pub use crate::runner::{compare, run, Comparison, RunOutcome, RunRecord, Summary};
}
