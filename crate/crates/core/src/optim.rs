//! Base first-order optimizers and the dimer-enhanced wrapper.
//!
//! [`deo_step`] runs one step of the periodic scheme: every `f`-th step is
//! "expensive" (one dimer rotation, one extra gradient), the others reuse the
//! cached direction. The corrected gradient is handed to the base optimizer.

use serde::{Deserialize, Serialize};

use crate::dimer::{project_gradient, rotate_once, DimerConfig, DimerState};
use crate::error::{DeoError, Result};
use crate::landscapes::{BatchKey, Problem};
use crate::numeric::{cosine_lr, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled weight decay; used by AdamW only.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.95,
            epsilon: 1e-8,
            weight_decay: 0.1,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(DeoError::config("beta1", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(DeoError::config("beta2", "must be in [0, 1)"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(DeoError::config("epsilon", "must be finite and > 0"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(DeoError::config("weight_decay", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Adam moments.
///
/// The bias-corrected estimates `m̂ = m / (1 − β₁ᵗ)` and `v̂ = v / (1 − β₂ᵗ)` are
/// stored directly and advanced with the equivalent running-mean recursion
/// `m̂ₜ = m̂ₜ₋₁ + (1 − β₁)/(1 − β₁ᵗ) · (g − m̂ₜ₋₁)`, whose gain is exactly 1 at
/// `t = 1`. The raw moments are recovered by [`AdamState::first_moment`] and
/// [`AdamState::second_moment`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_hat: Vec<f64>,
    v_hat: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m_hat: vec![0.0; dim],
            v_hat: vec![0.0; dim],
            t: 0,
        }
    }

    /// `m̂`, the bias-corrected first moment (zero before the first step).
    pub fn m_hat(&self) -> &[f64] {
        &self.m_hat
    }

    /// `v̂`, the bias-corrected second moment (zero before the first step).
    pub fn v_hat(&self) -> &[f64] {
        &self.v_hat
    }

    /// Raw first moment `m = m̂ (1 − β₁ᵗ)`.
    pub fn first_moment(&self, cfg: &AdamConfig) -> Vec<f64> {
        let c = 1.0 - cfg.beta1.powi(self.t as i32);
        self.m_hat.iter().map(|x| x * c).collect()
    }

    /// Raw second moment `v = v̂ (1 − β₂ᵗ)`.
    pub fn second_moment(&self, cfg: &AdamConfig) -> Vec<f64> {
        let c = 1.0 - cfg.beta2.powi(self.t as i32);
        self.v_hat.iter().map(|x| x * c).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SgdConfig {
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SgdState {
    /// Allocated on the first step when `momentum > 0`.
    pub velocity: Option<Vec<f64>>,
}

fn check_lengths(theta: &ParamVector, g: &ParamVector) -> Result<()> {
    if theta.dim() != g.dim() {
        return Err(DeoError::DimensionMismatch {
            left: theta.dim(),
            right: g.dim(),
        });
    }
    Ok(())
}

/// `θ − lr·g`, or heavy-ball `vel ← μ vel + g; θ − lr·vel` when `μ > 0`.
pub fn sgd_step(
    theta: &ParamVector,
    g: &ParamVector,
    lr: f64,
    cfg: &SgdConfig,
    state: &mut SgdState,
) -> Result<ParamVector> {
    check_lengths(theta, g)?;
    if cfg.momentum > 0.0 {
        let vel = state.velocity.get_or_insert_with(|| vec![0.0; g.dim()]);
        for (v, gi) in vel.iter_mut().zip(g.iter()) {
            *v = cfg.momentum * *v + gi;
        }
        ParamVector::new(
            theta
                .iter()
                .zip(vel.iter())
                .map(|(x, v)| x - lr * v)
                .collect(),
        )
    } else {
        theta.add_scaled(-lr, g)
    }
}

/// One Adam step; increments `state.t`.
pub fn adam_step(
    theta: &ParamVector,
    g: &ParamVector,
    lr: f64,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<ParamVector> {
    check_lengths(theta, g)?;
    if state.m_hat.len() != g.dim() {
        return Err(DeoError::DimensionMismatch {
            left: state.m_hat.len(),
            right: g.dim(),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let gain1 = (1.0 - cfg.beta1) / (1.0 - cfg.beta1.powi(t));
    let gain2 = (1.0 - cfg.beta2) / (1.0 - cfg.beta2.powi(t));
    let mut next = Vec::with_capacity(theta.dim());
    for (i, (x, gi)) in theta.iter().zip(g.iter()).enumerate() {
        let m = &mut state.m_hat[i];
        *m += gain1 * (gi - *m);
        let v = &mut state.v_hat[i];
        *v += gain2 * (gi * gi - *v);
        next.push(x - lr * *m / (v.sqrt() + cfg.epsilon));
    }
    ParamVector::new(next)
}

/// Adam followed by decoupled weight decay on the pre-step parameters.
pub fn adamw_step(
    theta: &ParamVector,
    g: &ParamVector,
    lr: f64,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<ParamVector> {
    let stepped = adam_step(theta, g, lr, state, cfg)?;
    if cfg.weight_decay == 0.0 {
        return Ok(stepped);
    }
    stepped.add_scaled(-lr * cfg.weight_decay, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Sgd,
    Adam,
    AdamW,
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::Sgd => "sgd",
            BaseKind::Adam => "adam",
            BaseKind::AdamW => "adamw",
        }
    }
}

/// A base optimizer together with its state.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseOptimizer {
    Sgd(SgdConfig, SgdState),
    Adam(AdamConfig, AdamState),
    AdamW(AdamConfig, AdamState),
}

impl BaseOptimizer {
    pub fn new(kind: BaseKind, dim: usize, adam: AdamConfig, sgd: SgdConfig) -> Self {
        match kind {
            BaseKind::Sgd => BaseOptimizer::Sgd(sgd, SgdState::default()),
            BaseKind::Adam => BaseOptimizer::Adam(adam, AdamState::new(dim)),
            BaseKind::AdamW => BaseOptimizer::AdamW(adam, AdamState::new(dim)),
        }
    }

    pub fn kind(&self) -> BaseKind {
        match self {
            BaseOptimizer::Sgd(..) => BaseKind::Sgd,
            BaseOptimizer::Adam(..) => BaseKind::Adam,
            BaseOptimizer::AdamW(..) => BaseKind::AdamW,
        }
    }

    pub fn step(&mut self, theta: &ParamVector, g: &ParamVector, lr: f64) -> Result<ParamVector> {
        match self {
            BaseOptimizer::Sgd(cfg, state) => sgd_step(theta, g, lr, cfg, state),
            BaseOptimizer::Adam(cfg, state) => adam_step(theta, g, lr, state, cfg),
            BaseOptimizer::AdamW(cfg, state) => adamw_step(theta, g, lr, state, cfg),
        }
    }
}

/// How often the dimer direction is refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frequency {
    Every(u64),
    /// Never refresh; the initial direction is used throughout.
    Never,
}

impl Frequency {
    pub fn every(f: u64) -> Result<Self> {
        if f == 0 {
            return Err(DeoError::config("f", "must be >= 1 or inf"));
        }
        Ok(Frequency::Every(f))
    }

    /// Expensive steps among `1..=t` with the default (`t mod f = 0`) rule.
    pub fn refreshes_up_to(self, t: u64) -> u64 {
        match self {
            Frequency::Every(f) => t / f,
            Frequency::Never => 0,
        }
    }
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frequency::Every(n) => write!(f, "{n}"),
            Frequency::Never => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Frequency {
    type Err = DeoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "never" | "∞" => Ok(Frequency::Never),
            other => {
                let f: u64 = other
                    .parse()
                    .map_err(|_| DeoError::config("f", format!("`{other}` is not an integer or inf")))?;
                Frequency::every(f)
            }
        }
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Frequency::Every(n) => s.serialize_u64(*n),
            Frequency::Never => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeoConfig {
    pub frequency: Frequency,
    pub dimer: DimerConfig,
    pub base: BaseKind,
    /// Refresh on steps `1, 1 + f, …` instead of `f, 2f, …`.
    pub refresh_at_start: bool,
}

impl Default for DeoConfig {
    fn default() -> Self {
        DeoConfig {
            frequency: Frequency::Every(10),
            dimer: DimerConfig::default(),
            base: BaseKind::Adam,
            refresh_at_start: false,
        }
    }
}

impl DeoConfig {
    /// Whether 1-based step `t` is an expensive (dimer refresh) step.
    pub fn is_refresh_step(&self, t: u64) -> bool {
        match self.frequency {
            Frequency::Never => false,
            Frequency::Every(f) if self.refresh_at_start => (t - 1).is_multiple_of(f),
            Frequency::Every(f) => t.is_multiple_of(f),
        }
    }
}

/// Cosine learning-rate schedule over `total` steps; step `t` (1-based) uses
/// the value at offset `t − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub lr_max: f64,
    pub lr_min: f64,
    pub total: u64,
}

impl Schedule {
    pub fn lr(&self, t: u64) -> f64 {
        cosine_lr(t.saturating_sub(1), self.total, self.lr_max, self.lr_min)
    }
}

/// Telemetry of one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub lr: f64,
    /// Loss at the pre-step parameters on the step's batch.
    pub loss: f64,
    pub grad_norm: f64,
    pub g_dot_n: Option<f64>,
    pub curvature_paper: Option<f64>,
    pub curvature_grad: Option<f64>,
    pub curvature_second_order: Option<f64>,
    pub dimer_refreshed: bool,
    /// Gradient evaluations spent in this step.
    pub grad_evals: u64,
    /// Signed cosine between the previous and the refreshed direction.
    pub refresh_cosine: Option<f64>,
}

/// Plain base-optimizer step with telemetry.
pub fn base_step(
    problem: &dyn Problem,
    theta: &ParamVector,
    t: u64,
    lr: f64,
    base: &mut BaseOptimizer,
    batch: Option<BatchKey>,
) -> Result<(ParamVector, StepRecord)> {
    let (loss, g) = problem.loss_and_grad(theta, batch)?;
    let next = base.step(theta, &g, lr)?;
    Ok((
        next,
        StepRecord {
            t,
            lr,
            loss,
            grad_norm: g.norm(),
            g_dot_n: None,
            curvature_paper: None,
            curvature_grad: None,
            curvature_second_order: None,
            dimer_refreshed: false,
            grad_evals: 1,
            refresh_cosine: None,
        },
    ))
}

/// One step of dimer-enhanced optimization at 1-based step `t`.
///
/// On refresh steps the direction is rotated once (same batch as `g`) and the
/// new direction corrects the gradient; otherwise the cached direction is used.
/// Curvature fields carry the most recent rotation's values.
#[allow(clippy::too_many_arguments)]
pub fn deo_step(
    problem: &dyn Problem,
    theta: &ParamVector,
    t: u64,
    lr: f64,
    cfg: &DeoConfig,
    dimer: &mut DimerState,
    base: &mut BaseOptimizer,
    batch: Option<BatchKey>,
) -> Result<(ParamVector, StepRecord)> {
    if t == 0 {
        return Err(DeoError::config("t", "steps are numbered from 1"));
    }
    let (loss, g) = problem.loss_and_grad(theta, batch)?;
    let mut grad_evals = 1;
    let refreshed = cfg.is_refresh_step(t);
    let mut refresh_cosine = None;
    if refreshed {
        let (next, diag) = rotate_once(problem, theta, &g, dimer, batch)?;
        *dimer = next;
        grad_evals += 1;
        refresh_cosine = Some(diag.refresh_cosine);
    }
    let n = dimer.direction();
    let g_mod = project_gradient(&g, n, cfg.dimer.alpha)?;
    let next = base.step(theta, &g_mod, lr)?;
    let diag = dimer.last_diag.as_ref();
    Ok((
        next,
        StepRecord {
            t,
            lr,
            loss,
            grad_norm: g.norm(),
            g_dot_n: Some(g.dot(n)?),
            curvature_paper: diag.map(|d| d.curvature_paper),
            curvature_grad: diag.map(|d| d.curvature_grad),
            curvature_second_order: diag.map(|d| d.curvature_second_order),
            dimer_refreshed: refreshed,
            grad_evals,
            refresh_cosine,
        },
    ))
}
