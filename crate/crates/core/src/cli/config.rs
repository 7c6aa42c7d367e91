use std::path::PathBuf;
use std::str::FromStr;

use super::CliError;
use crate::linsolve::{KrylovConfig, LinearSolverConfig, MultigridConfig, PreconditionerKind, Smoother, SolverKind};
use crate::newton::TimeStepperConfig;
use crate::problem::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Converge,
    Iterations,
    Spectrum,
    Solve,
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as clap::ValueEnum>::from_str(s, true).map_err(|_| CliError::Config(format!("unknown command '{s}'")))
    }
}

/// Smoother family; the damping factor is kept separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherKind {
    Jacobi,
    GaussSeidel,
    RedBlack,
}

impl FromStr for SmootherKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jacobi" => Ok(Self::Jacobi),
            "gs" | "gauss-seidel" => Ok(Self::GaussSeidel),
            "rbgs" | "red-black" => Ok(Self::RedBlack),
            other => Err(CliError::Config(format!("unknown smoother '{other}'"))),
        }
    }
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dimension: Dimension,
    pub m: f64,
    pub n_list: Vec<usize>,
    pub dt_coefficient: f64,
    pub t0: f64,
    pub duration: f64,
    pub solver: SolverKind,
    pub preconditioner: PreconditionerKind,
    /// `None` keeps the per-dimension default smoother.
    pub smoother: Option<SmootherKind>,
    pub omega: Option<f64>,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: Option<usize>,
    pub inner_tol: f64,
    pub newton_epsilon: f64,
    pub newton_max_iters: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ts = TimeStepperConfig::default();
        Self {
            command: Command::Converge,
            dimension: Dimension::One,
            m: 2.0,
            n_list: vec![31, 63, 127, 255, 511],
            dt_coefficient: ts.dt_coefficient,
            t0: ts.t0,
            duration: ts.duration,
            solver: SolverKind::Gmres,
            preconditioner: PreconditionerKind::None,
            smoother: None,
            omega: None,
            pre_smooth: 1,
            post_smooth: 0,
            tol: ts.linear.krylov.tol,
            max_iter: ts.linear.krylov.max_iter,
            restart: None,
            inner_tol: ts.linear.inner_tol,
            newton_epsilon: ts.newton_epsilon_coefficient,
            newton_max_iters: ts.newton_max_iters,
            seed: 0,
            output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("bad value '{value}' for '{key}'")))
}

/// Parses a comma-separated size list.
pub fn parse_size_list(value: &str) -> Result<Vec<usize>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse::<usize>("N", s))
        .collect()
}

/// Accepts plain numbers and simple fractions such as `1/32`.
fn parse_real(key: &str, value: &str) -> Result<f64, CliError> {
    match value.split_once('/') {
        Some((a, b)) => Ok(parse::<f64>(key, a.trim())? / parse::<f64>(key, b.trim())?),
        None => parse(key, value),
    }
}

/// Nearest member of `2^k - 1`, rounding in `log2(N + 1)`.
pub fn snap_size(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    let k = ((n + 1) as f64).log2().round().max(1.0) as u32;
    (1usize << k) - 1
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key.trim() {
            "command" => self.command = value.parse()?,
            "dim" | "dimension" => {
                self.dimension = Dimension::from_usize(parse(key, value)?).map_err(|e| CliError::Config(e.to_string()))?
            }
            "m" => self.m = parse_real(key, value)?,
            "N" | "n" | "sizes" => self.n_list = parse_size_list(value)?,
            "dt_coeff" | "dt-coeff" | "dt_coefficient" => self.dt_coefficient = parse_real(key, value)?,
            "t0" => self.t0 = parse_real(key, value)?,
            "duration" => self.duration = parse_real(key, value)?,
            "solver" => self.solver = value.parse().map_err(|e: crate::linsolve::LinsolveError| CliError::Config(e.to_string()))?,
            "precond" | "preconditioner" => {
                self.preconditioner = value.parse().map_err(|e: crate::linsolve::LinsolveError| CliError::Config(e.to_string()))?
            }
            "smoother" => self.smoother = Some(value.parse()?),
            "omega" => self.omega = Some(parse_real(key, value)?),
            "pre_smooth" => self.pre_smooth = parse(key, value)?,
            "post_smooth" => self.post_smooth = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "restart" => {
                self.restart = match value {
                    "none" | "0" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "inner_tol" => self.inner_tol = parse(key, value)?,
            "newton_eps" | "newton_epsilon" => self.newton_epsilon = parse_real(key, value)?,
            "newton_max_iters" => self.newton_max_iters = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" | "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| CliError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Replaces sizes outside the `2^k - 1` family by their nearest member.
    pub fn snap_sizes(&mut self) {
        for n in &mut self.n_list {
            let s = snap_size(*n);
            if s != *n {
                log::info!("N = {n} snapped to {s} for the coarsening hierarchy");
                *n = s;
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_list.is_empty() {
            return Err(CliError::Config("empty N list".into()));
        }
        if self.n_list.contains(&0) {
            return Err(CliError::Config("N must be positive".into()));
        }
        let positive = [
            ("m", self.m),
            ("dt_coeff", self.dt_coefficient),
            ("t0", self.t0),
            ("tol", self.tol),
            ("inner_tol", self.inner_tol),
            ("newton_eps", self.newton_epsilon),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{k} = {v} must be positive")));
            }
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(CliError::Config(format!("duration = {} must be non-negative", self.duration)));
        }
        if self.m <= 1.0 {
            return Err(CliError::Config(format!(
                "the Barenblatt reference needs m > 1, got {}",
                self.m
            )));
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(CliError::Config(format!("omega = {w} must lie in (0, 2)")));
            }
        }
        if self.max_iter == 0 || self.newton_max_iters == 0 || self.pre_smooth + self.post_smooth == 0 {
            return Err(CliError::Config("iteration limits and smoothing sweeps must be positive".into()));
        }
        self.linear_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Multigrid settings, or `None` when everything is at its default.
    pub fn multigrid_config(&self) -> Option<MultigridConfig> {
        let base = MultigridConfig::for_dimension(self.dimension);
        let smoother = match (self.smoother, self.omega) {
            (None, None) => base.smoother,
            (kind, omega) => {
                let kind = kind.unwrap_or(match base.smoother {
                    Smoother::DampedJacobi { .. } => SmootherKind::Jacobi,
                    Smoother::GaussSeidel { .. } => SmootherKind::GaussSeidel,
                    Smoother::RedBlackGaussSeidel { .. } => SmootherKind::RedBlack,
                });
                match kind {
                    SmootherKind::Jacobi => Smoother::DampedJacobi {
                        omega: omega.unwrap_or(2.0 / 3.0),
                    },
                    SmootherKind::GaussSeidel => Smoother::GaussSeidel {
                        omega: omega.unwrap_or(1.0),
                    },
                    SmootherKind::RedBlack => Smoother::RedBlackGaussSeidel {
                        omega: omega.unwrap_or(1.0),
                    },
                }
            }
        };
        let cfg = MultigridConfig {
            smoother,
            pre_smooth: self.pre_smooth,
            post_smooth: self.post_smooth,
            ..base
        };
        (cfg != base).then_some(cfg)
    }

    pub fn linear_config(&self) -> LinearSolverConfig {
        LinearSolverConfig {
            solver: self.solver,
            preconditioner: self.preconditioner,
            krylov: KrylovConfig {
                tol: self.tol,
                max_iter: self.max_iter,
                restart: self.restart,
            },
            multigrid: self.multigrid_config(),
            inner_tol: self.inner_tol,
        }
    }

    pub fn time_stepper(&self) -> TimeStepperConfig {
        TimeStepperConfig {
            dt_coefficient: self.dt_coefficient,
            t0: self.t0,
            duration: self.duration,
            newton_epsilon_coefficient: self.newton_epsilon,
            newton_max_iters: self.newton_max_iters,
            linear: self.linear_config(),
        }
    }

    /// `key=value` lines echoed at the top of every output file.
    pub fn describe(&self) -> Vec<String> {
        let sizes: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
        let mut lines = vec![
            format!("command={:?}", self.command).to_lowercase(),
            format!("dim={}", self.dimension.as_usize()),
            format!("m={}", self.m),
            format!("N={}", sizes.join(",")),
            format!("dt_coeff={}", self.dt_coefficient),
            format!("t0={}", self.t0),
            format!("duration={}", self.duration),
            format!("solver={}", self.solver),
            format!("precond={}", self.preconditioner),
            format!("tol={:e}", self.tol),
            format!("newton_eps={}", self.newton_epsilon),
            format!("seed={}", self.seed),
        ];
        if let Some(mg) = self.multigrid_config() {
            lines.push(format!(
                "multigrid={:?} pre={} post={}",
                mg.smoother, mg.pre_smooth, mg.post_smooth
            ));
        }
        lines
    }
}
