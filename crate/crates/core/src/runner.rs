//! Seeded optimization runs, comparisons, and their CSV/JSON outputs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::config::{LandscapeName, RunConfig};
use crate::dimer::DimerState;
use crate::error::{DeoError, Result};
use crate::landscapes::{make_monkey_saddle, make_quadratic, make_rosenbrock, BatchKey, Problem, QuadraticSpec};
use crate::mlp::{init_params, Dataset, Mlp, MlpProblem};
use crate::numeric::{ParamVector, RngSeed};
use crate::optim::{base_step, deo_step, BaseOptimizer, StepRecord};
use crate::oracle::{alignment, eig_sym, hessian_fd, DEFAULT_FD_STEP};

/// Exact CSV header of run and compare outputs.
pub const CSV_HEADER: &str =
    "step,optimizer,lr,loss,grad_norm,g_dot_n,curv_paper,curv_grad,curv_2nd,dimer_refreshed,grad_evals,align_vmin";

/// Eigenvalue gap below which the minimum eigenvector is considered undefined.
pub const DEGENERATE_GAP: f64 = 1e-6;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub step: u64,
    pub optimizer: String,
    pub lr: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub g_dot_n: Option<f64>,
    pub curv_paper: Option<f64>,
    pub curv_grad: Option<f64>,
    pub curv_2nd: Option<f64>,
    pub dimer_refreshed: bool,
    pub grad_evals: u64,
    pub align_vmin: Option<f64>,
}

/// Shortest round-trip decimal form.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

impl RunRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.optimizer,
            fmt_num(self.lr),
            fmt_num(self.loss),
            fmt_num(self.grad_norm),
            fmt_opt(self.g_dot_n),
            fmt_opt(self.curv_paper),
            fmt_opt(self.curv_grad),
            fmt_opt(self.curv_2nd),
            u8::from(self.dimer_refreshed),
            self.grad_evals,
            fmt_opt(self.align_vmin),
        )
    }
}

pub fn write_csv(mut w: impl Write, records: &[RunRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("in-memory write");
    String::from_utf8(buf).expect("ascii csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `None` when the direction is undefined (no dimer, or degenerate spectrum).
    pub final_align_vmin: Option<f64>,
    pub final_align_vmax: Option<f64>,
}

/// End-of-run JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub status: RunStatus,
    pub failed_step: Option<u64>,
    pub error: Option<String>,
    pub optimizer: String,
    pub landscape: String,
    pub steps_completed: u64,
    /// Full-data loss at the initial parameters.
    pub initial_loss: f64,
    /// Full-data loss at the final parameters.
    pub final_loss: Option<f64>,
    /// Smallest per-step loss.
    pub min_loss: Option<f64>,
    pub total_grad_evals: u64,
    pub wall_time_s: f64,
    /// Smallest signed cosine between consecutive refreshed dimer directions.
    pub min_refresh_cosine: Option<f64>,
    pub oracle: Option<OracleSummary>,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub final_params: ParamVector,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.summary.status {
            RunStatus::Ok => 0,
            RunStatus::NumericFailure => 3,
        }
    }
}

/// Builds the configured problem.
pub fn build_problem(cfg: &RunConfig) -> Result<Box<dyn Problem>> {
    Ok(match cfg.landscape {
        LandscapeName::Quadratic => Box::new(make_quadratic(&QuadraticSpec {
            lambdas: cfg.lambdas.clone(),
        })?),
        LandscapeName::Monkey => Box::new(make_monkey_saddle()),
        LandscapeName::Rosenbrock => Box::new(make_rosenbrock(cfg.dim)?),
        LandscapeName::Mlp => {
            let dataset = match &cfg.data_file {
                Some(path) => Dataset::read_csv(path)?,
                None => Dataset::two_moons(200, 0.1, &RngSeed::new(cfg.seeds.data, "data")),
            };
            Box::new(MlpProblem::new(
                Mlp::default(),
                dataset,
                cfg.batch_size,
                RngSeed::new(cfg.seeds.data, "batch"),
            )?)
        }
    })
}

/// Initial parameters: MLP weight init, or uniform in `[-2, 2]^d` for the
/// analytic landscapes.
pub fn initial_params(cfg: &RunConfig, problem: &dyn Problem) -> Result<ParamVector> {
    let seed = RngSeed::new(cfg.seeds.init, "init");
    match cfg.landscape {
        LandscapeName::Mlp => Ok(init_params(&Mlp::default().shape, &seed)),
        _ => {
            let mut rng = seed.rng();
            ParamVector::new((0..problem.dim()).map(|_| rng.random_range(-2.0..2.0)).collect())
        }
    }
}

fn oracle_eigen(problem: &dyn Problem, theta: &ParamVector) -> Result<crate::oracle::EigenPairs> {
    let h = match problem.hessian(theta) {
        Some(h) => h,
        None => hessian_fd(problem, theta, DEFAULT_FD_STEP, None)?.matrix,
    };
    eig_sym(&h)
}

/// Runs one configuration. Numeric failures do not return `Err`: the records
/// up to the failing step are kept and the summary status says so.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    run_on(cfg, problem.as_ref())
}

/// Like [`run`] on an already-built problem.
pub fn run_on(cfg: &RunConfig, problem: &dyn Problem) -> Result<RunOutcome> {
    let started = Instant::now();
    let label = cfg.label();
    let schedule = cfg.schedule();
    let stochastic = cfg.landscape == LandscapeName::Mlp;
    let dim = problem.dim();

    let mut theta = initial_params(cfg, problem)?;
    let initial_loss = problem.loss(&theta, None)?;
    let mut base = BaseOptimizer::new(cfg.opt.base, dim, cfg.adam_config(), cfg.sgd_config());
    let deo = cfg.deo_config();
    let mut dimer = if cfg.opt.dimer {
        Some(DimerState::random(
            deo.dimer,
            dim,
            &RngSeed::new(cfg.seeds.dimer, "dimer"),
        )?)
    } else {
        None
    };

    let mut records = Vec::with_capacity(cfg.steps as usize);
    let mut total_evals = 0u64;
    let mut failure: Option<(u64, DeoError)> = None;
    let mut min_refresh: Option<f64> = None;

    for t in 1..=cfg.steps {
        let batch = stochastic.then_some(BatchKey(t - 1));
        let lr = schedule.lr(t);
        let step: Result<(ParamVector, StepRecord)> = match dimer.as_mut() {
            Some(d) => deo_step(problem, &theta, t, lr, &deo, d, &mut base, batch),
            None => base_step(problem, &theta, t, lr, &mut base, batch),
        };
        let (next, rec) = match step {
            Ok(x) => x,
            Err(e @ DeoError::NumericFailure { .. }) => {
                failure = Some((t, e));
                break;
            }
            Err(e) => return Err(e),
        };
        total_evals += rec.grad_evals;
        if let Some(c) = rec.refresh_cosine {
            min_refresh = Some(min_refresh.map_or(c, |m: f64| m.min(c)));
        }
        let align_vmin = match (&dimer, cfg.oracle) {
            (Some(d), true) => {
                let eig = oracle_eigen(problem, &theta)?;
                if eig.min_is_degenerate(DEGENERATE_GAP) {
                    None
                } else {
                    Some(alignment(d.direction(), eig.min_vector())?)
                }
            }
            _ => None,
        };
        records.push(RunRecord {
            step: t,
            optimizer: label.clone(),
            lr,
            loss: rec.loss,
            grad_norm: rec.grad_norm,
            g_dot_n: rec.g_dot_n,
            curv_paper: rec.curvature_paper,
            curv_grad: rec.curvature_grad,
            curv_2nd: rec.curvature_second_order,
            dimer_refreshed: rec.dimer_refreshed,
            grad_evals: total_evals,
            align_vmin,
        });
        theta = next;
    }

    let min_loss = records.iter().map(|r| r.loss).reduce(f64::min);
    let (status, failed_step, error, final_loss) = match &failure {
        Some((t, e)) => (RunStatus::NumericFailure, Some(*t), Some(e.to_string()), None),
        None => match problem.loss(&theta, None) {
            Ok(l) => (RunStatus::Ok, None, None, Some(l)),
            Err(e) => (
                RunStatus::NumericFailure,
                Some(cfg.steps),
                Some(e.to_string()),
                None,
            ),
        },
    };
    let oracle = if cfg.oracle && status == RunStatus::Ok {
        let eig = oracle_eigen(problem, &theta)?;
        let degenerate = eig.min_is_degenerate(DEGENERATE_GAP);
        let (amin, amax) = match &dimer {
            Some(d) if !degenerate => (
                Some(alignment(d.direction(), eig.min_vector())?),
                Some(alignment(d.direction(), eig.max_vector())?),
            ),
            _ => (None, None),
        };
        Some(OracleSummary {
            lambda_min: eig.values[0],
            lambda_max: eig.values[eig.values.len() - 1],
            final_align_vmin: amin,
            final_align_vmax: amax,
        })
    } else {
        None
    };

    let summary = Summary {
        status,
        failed_step,
        error,
        optimizer: label,
        landscape: cfg.landscape.as_str().to_string(),
        steps_completed: records.len() as u64,
        initial_loss,
        final_loss,
        min_loss,
        total_grad_evals: total_evals,
        wall_time_s: started.elapsed().as_secs_f64(),
        min_refresh_cosine: min_refresh,
        oracle,
        config: cfg.clone(),
    };
    Ok(RunOutcome {
        records,
        summary,
        final_params: theta,
    })
}

pub fn summary_json(summary: &Summary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes")
}

/// Result of running several configurations side by side.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub outcomes: Vec<RunOutcome>,
}

impl Comparison {
    /// All runs' records in configuration order.
    pub fn merged_records(&self) -> Vec<RunRecord> {
        self.outcomes
            .iter()
            .flat_map(|o| o.records.iter().cloned())
            .collect()
    }

    pub fn exit_code(&self) -> i32 {
        self.outcomes.iter().map(RunOutcome::exit_code).max().unwrap_or(0)
    }

    pub fn summaries(&self) -> Vec<&Summary> {
        self.outcomes.iter().map(|o| &o.summary).collect()
    }

    /// Plain-text table of final and minimum losses per optimizer.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<20} {:>14} {:>14} {:>10} {:>8}\n",
            "optimizer", "final_loss", "min_loss", "grad_evals", "status"
        );
        for o in &self.outcomes {
            let m = &o.summary;
            let num = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
            s.push_str(&format!(
                "{:<20} {:>14} {:>14} {:>10} {:>8}\n",
                m.optimizer,
                num(m.final_loss),
                num(m.min_loss),
                m.total_grad_evals,
                if m.status == RunStatus::Ok { "ok" } else { "failed" }
            ));
        }
        s
    }
}

/// Runs `configs` in parallel; they must share landscape, steps, seeds and
/// batch size. Duplicate labels get a `#k` suffix.
pub fn compare(configs: &[RunConfig]) -> Result<Comparison> {
    let first = configs
        .first()
        .ok_or_else(|| DeoError::config("opts", "compare needs at least one configuration"))?;
    for c in &configs[1..] {
        let checks: [(&str, bool); 7] = [
            ("landscape", c.landscape == first.landscape),
            ("lambdas", c.lambdas == first.lambdas),
            ("dim", c.dim == first.dim),
            ("data-file", c.data_file == first.data_file),
            ("steps", c.steps == first.steps),
            ("seed", c.seeds == first.seeds),
            ("batch-size", c.batch_size == first.batch_size),
        ];
        if let Some((field, _)) = checks.iter().find(|(_, same)| !same) {
            return Err(DeoError::config(*field, "compared runs must share this setting"));
        }
    }
    let mut configs = configs.to_vec();
    let mut seen: Vec<String> = Vec::new();
    for c in &mut configs {
        c.validate()?;
        let base = c.label();
        let mut label = base.clone();
        let mut k = 2;
        while seen.contains(&label) {
            label = format!("{base}#{k}");
            k += 1;
        }
        seen.push(label.clone());
        c.label = Some(label);
    }
    let outcomes = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Comparison { outcomes })
}

/// CSV path and matching `.json` summary path for a run.
///
/// Uses `out` when set, else `$DEO_OUT_DIR/<label>-<landscape>-s<seed>.csv`,
/// else `None` (write to stdout).
pub fn output_paths(cfg: &RunConfig, env_dir: Option<&Path>) -> Option<(PathBuf, PathBuf)> {
    let csv = match (&cfg.out, env_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join(format!(
            "{}-{}-s{}.csv",
            cfg.label(),
            cfg.landscape.as_str(),
            cfg.seeds.init
        )),
        (None, None) => return None,
    };
    let json = csv.with_extension("json");
    Some((csv, json))
}
