//! Run configuration: defaults, flat `key = value` files and command-line
//! flags. Every key accepted in a file is also a `--key` flag; flags override
//! file values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dimer::{DimerConfig, SignConvention};
use crate::error::{DeoError, Result};
use crate::optim::{AdamConfig, BaseKind, DeoConfig, Frequency, Schedule, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LandscapeName {
    Quadratic,
    Monkey,
    Rosenbrock,
    Mlp,
}

impl LandscapeName {
    pub const ALL: [&'static str; 4] = ["quadratic", "monkey", "rosenbrock", "mlp"];

    pub fn as_str(self) -> &'static str {
        match self {
            LandscapeName::Quadratic => "quadratic",
            LandscapeName::Monkey => "monkey",
            LandscapeName::Rosenbrock => "rosenbrock",
            LandscapeName::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for LandscapeName {
    type Err = DeoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(LandscapeName::Quadratic),
            "monkey" => Ok(LandscapeName::Monkey),
            "rosenbrock" => Ok(LandscapeName::Rosenbrock),
            "mlp" => Ok(LandscapeName::Mlp),
            _ => Err(DeoError::config(
                "landscape",
                format!("`{s}` (supported: {})", Self::ALL.join(", ")),
            )),
        }
    }
}

/// Base optimizer, optionally wrapped with the dimer correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerName {
    pub base: BaseKind,
    pub dimer: bool,
}

impl OptimizerName {
    pub const ALL: [&'static str; 6] = ["sgd", "adam", "adamw", "deo-sgd", "deo-adam", "deo-adamw"];

    pub fn as_string(self) -> String {
        if self.dimer {
            format!("deo-{}", self.base.as_str())
        } else {
            self.base.as_str().to_string()
        }
    }
}

impl std::str::FromStr for OptimizerName {
    type Err = DeoError;
    fn from_str(s: &str) -> Result<Self> {
        let (dimer, base) = match s.strip_prefix("deo-") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let base = match base {
            "sgd" => BaseKind::Sgd,
            "adam" => BaseKind::Adam,
            "adamw" => BaseKind::AdamW,
            _ => {
                return Err(DeoError::config(
                    "opt",
                    format!("`{s}` is not supported (supported: {})", Self::ALL.join(", ")),
                ))
            }
        };
        Ok(OptimizerName { base, dimer })
    }
}

impl Serialize for OptimizerName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedBundle {
    pub data: u64,
    pub init: u64,
    pub dimer: u64,
}

/// Everything that determines one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub landscape: LandscapeName,
    /// Eigenvalues of the diagonal quadratic landscape.
    pub lambdas: Vec<f64>,
    /// Dimension of the Rosenbrock landscape.
    pub dim: usize,
    /// Two-moons CSV to train on instead of the generated dataset.
    pub data_file: Option<PathBuf>,
    pub opt: OptimizerName,
    /// Name used in the CSV `optimizer` column; defaults to the optimizer name.
    pub label: Option<String>,
    pub steps: u64,
    pub lr: f64,
    pub lr_min: f64,
    pub seeds: SeedBundle,
    pub f: Frequency,
    pub alpha: f64,
    pub delta_r: f64,
    pub eta_rot: f64,
    pub sign: SignConvention,
    pub refresh_at_start: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub oracle: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let dimer = DimerConfig::default();
        let adam = AdamConfig::default();
        RunConfig {
            landscape: LandscapeName::Quadratic,
            lambdas: vec![1.0, -1.0],
            dim: 2,
            data_file: None,
            opt: OptimizerName {
                base: BaseKind::Adam,
                dimer: true,
            },
            label: None,
            steps: 1000,
            lr: 6e-4,
            lr_min: 0.0,
            seeds: SeedBundle {
                data: 0,
                init: 0,
                dimer: 0,
            },
            f: Frequency::Every(10),
            alpha: dimer.alpha,
            delta_r: dimer.delta_r,
            eta_rot: dimer.eta_rot,
            sign: dimer.sign_convention,
            refresh_at_start: false,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.epsilon,
            weight_decay: adam.weight_decay,
            momentum: 0.0,
            batch_size: 32,
            oracle: false,
            out: None,
        }
    }
}

/// Keys accepted in config files and as `--key` flags.
pub const KEYS: &[&str] = &[
    "landscape",
    "lambdas",
    "dim",
    "data-file",
    "opt",
    "label",
    "steps",
    "lr",
    "lr-min",
    "seed",
    "data-seed",
    "init-seed",
    "dimer-seed",
    "f",
    "alpha",
    "delta-r",
    "eta-rot",
    "sign",
    "refresh-at-start",
    "beta1",
    "beta2",
    "eps",
    "weight-decay",
    "momentum",
    "batch-size",
    "oracle",
    "out",
];

fn parse_num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| DeoError::config(field, format!("`{v}` is not a valid number")))
}

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(DeoError::config(field, format!("`{v}` is not a boolean"))),
    }
}

impl RunConfig {
    /// Sets one key from its string form. Values are checked by [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "landscape" => self.landscape = value.parse()?,
            "lambdas" => {
                self.lambdas = value
                    .split(',')
                    .map(|x| parse_num::<f64>("lambdas", x))
                    .collect::<Result<_>>()?
            }
            "dim" => self.dim = parse_num("dim", value)?,
            "data-file" => self.data_file = Some(PathBuf::from(value)),
            "opt" => self.opt = value.parse()?,
            "label" => self.label = Some(value.to_string()),
            "steps" => self.steps = parse_num("steps", value)?,
            "lr" => self.lr = parse_num("lr", value)?,
            "lr-min" => self.lr_min = parse_num("lr-min", value)?,
            "seed" => {
                let s = parse_num("seed", value)?;
                self.seeds = SeedBundle {
                    data: s,
                    init: s,
                    dimer: s,
                };
            }
            "data-seed" => self.seeds.data = parse_num("data-seed", value)?,
            "init-seed" => self.seeds.init = parse_num("init-seed", value)?,
            "dimer-seed" => self.seeds.dimer = parse_num("dimer-seed", value)?,
            "f" => self.f = value.parse()?,
            "alpha" => self.alpha = parse_num("alpha", value)?,
            "delta-r" => self.delta_r = parse_num("delta-r", value)?,
            "eta-rot" => self.eta_rot = parse_num("eta-rot", value)?,
            "sign" => self.sign = value.parse()?,
            "refresh-at-start" => self.refresh_at_start = parse_bool("refresh-at-start", value)?,
            "beta1" => self.beta1 = parse_num("beta1", value)?,
            "beta2" => self.beta2 = parse_num("beta2", value)?,
            "eps" => self.eps = parse_num("eps", value)?,
            "weight-decay" => self.weight_decay = parse_num("weight-decay", value)?,
            "momentum" => self.momentum = parse_num("momentum", value)?,
            "batch-size" => self.batch_size = parse_num("batch-size", value)?,
            "oracle" => self.oracle = parse_bool("oracle", value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(DeoError::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                DeoError::config(format!("line {}", i + 1), "expected `key = value`")
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DeoError::config("config", format!("{}: {e}", path.display())))?;
        self.apply_file_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(DeoError::config("steps", "must be >= 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(DeoError::config("lr", "must be finite and > 0"));
        }
        if !(self.lr_min.is_finite() && self.lr_min >= 0.0 && self.lr_min <= self.lr) {
            return Err(DeoError::config("lr-min", "must satisfy 0 <= lr-min <= lr"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(DeoError::config("lambdas", "need at least one finite value"));
        }
        if self.landscape == LandscapeName::Rosenbrock && self.dim < 2 {
            return Err(DeoError::config("dim", "rosenbrock needs dim >= 2"));
        }
        if self.batch_size == 0 {
            return Err(DeoError::config("batch-size", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(DeoError::config("momentum", "must be in [0, 1)"));
        }
        self.dimer_config().validate().map_err(rename_field)?;
        self.adam_config().validate().map_err(rename_field)?;
        Ok(())
    }

    pub fn dimer_config(&self) -> DimerConfig {
        DimerConfig {
            delta_r: self.delta_r,
            eta_rot: self.eta_rot,
            alpha: self.alpha,
            sign_convention: self.sign,
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn sgd_config(&self) -> SgdConfig {
        SgdConfig {
            momentum: self.momentum,
        }
    }

    pub fn deo_config(&self) -> DeoConfig {
        DeoConfig {
            frequency: self.f,
            dimer: self.dimer_config(),
            base: self.opt.base,
            refresh_at_start: self.refresh_at_start,
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            lr_max: self.lr,
            lr_min: self.lr_min,
            total: self.steps,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.opt.as_string())
    }
}

// internal field names -> flag names
fn rename_field(e: DeoError) -> DeoError {
    match e {
        DeoError::Config { field, message } => {
            let flag = match field.as_str() {
                "delta_r" => "delta-r",
                "eta_rot" => "eta-rot",
                "epsilon" => "eps",
                "weight_decay" => "weight-decay",
                other => other,
            };
            DeoError::config(flag, message)
        }
        other => other,
    }
}

/// Flags shared by `run` and `compare`. All values are strings so that files
/// and flags go through the same validation.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    #[arg(long)]
    pub landscape: Option<String>,
    /// Comma-separated eigenvalues for the quadratic landscape.
    #[arg(long, allow_hyphen_values = true)]
    pub lambdas: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub data_file: Option<String>,
    #[arg(long)]
    pub opt: Option<String>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lr: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lr_min: Option<String>,
    /// Sets the data, init and dimer seeds at once.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub data_seed: Option<String>,
    #[arg(long)]
    pub init_seed: Option<String>,
    #[arg(long)]
    pub dimer_seed: Option<String>,
    /// Dimer refresh frequency (integer or `inf`).
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_r: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta_rot: Option<String>,
    /// as-written | force-convention
    #[arg(long)]
    pub sign: Option<String>,
    #[arg(long)]
    pub refresh_at_start: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub beta1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub weight_decay: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub momentum: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    /// Track alignment of the dimer direction with the true minimum eigenvector.
    #[arg(long)]
    pub oracle: bool,
    /// CSV output path; the JSON summary goes next to it.
    #[arg(long)]
    pub out: Option<String>,
}

impl ConfigFlags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("landscape", &self.landscape);
        push("lambdas", &self.lambdas);
        push("dim", &self.dim);
        push("data-file", &self.data_file);
        push("opt", &self.opt);
        push("label", &self.label);
        push("steps", &self.steps);
        push("lr", &self.lr);
        push("lr-min", &self.lr_min);
        push("seed", &self.seed);
        push("data-seed", &self.data_seed);
        push("init-seed", &self.init_seed);
        push("dimer-seed", &self.dimer_seed);
        push("f", &self.f);
        push("alpha", &self.alpha);
        push("delta-r", &self.delta_r);
        push("eta-rot", &self.eta_rot);
        push("sign", &self.sign);
        push("beta1", &self.beta1);
        push("beta2", &self.beta2);
        push("eps", &self.eps);
        push("weight-decay", &self.weight_decay);
        push("momentum", &self.momentum);
        push("batch-size", &self.batch_size);
        push("out", &self.out);
        if self.refresh_at_start {
            out.push(("refresh-at-start", "true".into()));
        }
        if self.oracle {
            out.push(("oracle", "true".into()));
        }
        out
    }

    /// Applies the flags on top of `cfg`; `seed` is applied before the
    /// individual seed flags so those can refine it.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        for (k, v) in self.pairs() {
            cfg.set(k, &v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "deo", version, about = "Dimer-enhanced optimization benchmark runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run one optimizer and write per-step CSV plus a JSON summary.
    Run {
        /// Flat key=value config file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Run several optimizers on the same landscape and seeds.
    Compare {
        /// Comma-separated optimizer list, e.g. `adam,deo-adam`.
        #[arg(long)]
        opts: Option<String>,
        /// One config file per member run (repeatable).
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Write the seeded two-moons dataset as CSV.
    Dataset {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A parsed and validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run(RunConfig),
    Compare {
        configs: Vec<RunConfig>,
        out: Option<PathBuf>,
    },
    Dataset {
        seed: u64,
        n: usize,
        noise: f64,
        out: PathBuf,
    },
}

fn clap_error(e: clap::Error) -> DeoError {
    let text = e.to_string();
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ")
        .to_string();
    DeoError::config("args", line)
}

/// Builds a run configuration from `run`-style flags (no program name or
/// subcommand), e.g. `["--landscape", "quadratic", "--opt", "deo-adam"]`.
pub fn parse_config<S: AsRef<str>>(args: &[S]) -> Result<RunConfig> {
    let mut argv = vec!["deo".to_string(), "run".to_string()];
    argv.extend(args.iter().map(|s| s.as_ref().to_string()));
    match parse_invocation(&argv)? {
        Invocation::Run(cfg) => Ok(cfg),
        _ => unreachable!("run subcommand"),
    }
}

/// Parses a full command line (including the program name).
pub fn parse_invocation<S: AsRef<str>>(argv: &[S]) -> Result<Invocation> {
    let argv: Vec<&str> = argv.iter().map(AsRef::as_ref).collect();
    let cli = Cli::try_parse_from(argv).map_err(clap_error)?;
    match cli.command {
        CliCommand::Run { config, flags } => {
            let mut cfg = RunConfig::default();
            if let Some(path) = config {
                cfg.apply_file(&path)?;
            }
            flags.apply(&mut cfg)?;
            cfg.validate()?;
            Ok(Invocation::Run(cfg))
        }
        CliCommand::Compare {
            opts,
            configs,
            flags,
        } => {
            let mut members = Vec::new();
            for path in &configs {
                let mut cfg = RunConfig::default();
                cfg.apply_file(path)?;
                flags.apply(&mut cfg)?;
                members.push(cfg);
            }
            if let Some(list) = opts {
                for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let mut cfg = RunConfig::default();
                    flags.apply(&mut cfg)?;
                    cfg.set("opt", name)?;
                    members.push(cfg);
                }
            }
            if members.is_empty() {
                return Err(DeoError::config("opts", "compare needs at least one optimizer"));
            }
            for cfg in &mut members {
                cfg.validate()?;
                // member outputs are merged; only the compare-level path is used
                cfg.out = None;
            }
            Ok(Invocation::Compare {
                configs: members,
                out: flags.out.map(PathBuf::from),
            })
        }
        CliCommand::Dataset {
            seed,
            n,
            noise,
            out,
        } => Ok(Invocation::Dataset {
            seed,
            n,
            noise,
            out,
        }),
    }
}
