//! Implicit Euler time stepping with a Newton solve per step.

use thiserror::Error;

use crate::discretization::{assemble_jacobian, residual, AssemblyContext, AssemblyError, StructuredMatrix};
use crate::linsolve::{solve_jacobian_system, KrylovReport, LinearSolverConfig, LinsolveError};
use crate::problem::{Problem, ProblemError, StateVector, UniformGrid};

/// Step-size multiples above this trigger a warning.
pub const DT_WARNING_THRESHOLD: f64 = 5.0;

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("linear solve failed at Newton iteration {iteration}: {source}")]
    Linear {
        iteration: usize,
        #[source]
        source: LinsolveError,
    },
    #[error("linear solver did not converge at Newton iteration {iteration} (relative residual {residual:.3e})")]
    LinearNotConverged { iteration: usize, residual: f64 },
    #[error("Newton did not converge in {iterations} iterations (last correction {last_correction:.3e}, tolerance {epsilon:.3e})")]
    NotConverged {
        iterations: usize,
        last_correction: f64,
        epsilon: f64,
        report: Box<NewtonReport>,
    },
    #[error("non-finite iterate at Newton iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid time stepping configuration: {0}")]
    Configuration(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepperConfig {
    /// `dt = dt_coefficient * h`.
    pub dt_coefficient: f64,
    pub t0: f64,
    pub duration: f64,
    /// Newton stops once `||du||_inf <= newton_epsilon_coefficient * h`.
    pub newton_epsilon_coefficient: f64,
    pub newton_max_iters: usize,
    pub linear: LinearSolverConfig,
}

impl Default for TimeStepperConfig {
    fn default() -> Self {
        Self {
            dt_coefficient: 1.0,
            t0: 1.0 / 32.0,
            duration: 20.0 / 32.0,
            newton_epsilon_coefficient: 0.1,
            newton_max_iters: 50,
            linear: LinearSolverConfig::default(),
        }
    }
}

impl TimeStepperConfig {
    pub fn validate(&self) -> Result<(), NewtonError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.dt_coefficient) {
            return Err(NewtonError::Configuration(format!(
                "step coefficient {} must be positive",
                self.dt_coefficient
            )));
        }
        if !positive(self.t0) || !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(NewtonError::Configuration(format!(
                "t0 = {} must be positive and duration = {} non-negative",
                self.t0, self.duration
            )));
        }
        if !positive(self.newton_epsilon_coefficient) || self.newton_max_iters == 0 {
            return Err(NewtonError::Configuration(
                "Newton tolerance coefficient and iteration limit must be positive".into(),
            ));
        }
        self.linear.validate().map_err(|e| NewtonError::Configuration(e.to_string()))
    }

    pub fn dt(&self, grid: &UniformGrid) -> f64 {
        self.dt_coefficient * grid.spacing()
    }

    pub fn epsilon(&self, grid: &UniformGrid) -> f64 {
        self.newton_epsilon_coefficient * grid.spacing()
    }

    /// Number of full steps needed to cover `duration`; at least one unless
    /// the duration is zero.
    pub fn step_count(&self, grid: &UniformGrid) -> usize {
        if self.duration == 0.0 {
            return 0;
        }
        let ratio = self.duration / self.dt(grid);
        ((ratio - 1e-9).ceil() as usize).max(1)
    }
}

/// Newton history for one implicit step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    /// Corrections larger than the tolerance; the final, accepted correction
    /// is not counted.
    pub iterations: usize,
    /// `||u^{s+1} - u^s||_inf`, one per linear solve.
    pub corrections_inf: Vec<f64>,
    /// `||u^{s+1} - u^s||_2 / ||u^{s+1}||_2`.
    pub corrections_rel_l2: Vec<f64>,
    /// `||F(u^s)||_inf` before each solve.
    pub residuals_inf: Vec<f64>,
    pub linear: Vec<KrylovReport>,
    pub converged: bool,
    pub epsilon: f64,
}

impl NewtonReport {
    pub fn linear_solves(&self) -> usize {
        self.linear.len()
    }

    pub fn linear_iterations(&self) -> impl Iterator<Item = usize> + '_ {
        self.linear.iter().map(|r| r.iterations)
    }
}

/// State handed to a Jacobian observer before each linear solve.
pub struct JacobianSample<'a> {
    /// Time step index assigned by [`integrate`]; zero for a lone step.
    pub step: usize,
    pub newton_iteration: usize,
    pub ctx: &'a AssemblyContext<'a>,
    pub u: &'a [f64],
    pub jacobian: &'a StructuredMatrix,
}

pub type JacobianObserver<'o> = dyn FnMut(&JacobianSample<'_>) + 'o;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `F(u) = 0` for one implicit step starting from `ctx.previous`.
pub fn newton_step_solve(
    ctx: &AssemblyContext<'_>,
    config: &TimeStepperConfig,
    observer: Option<&mut JacobianObserver<'_>>,
) -> Result<(Vec<f64>, NewtonReport), NewtonError> {
    newton_step_impl(ctx, config, 0, observer)
}

fn newton_step_impl(
    ctx: &AssemblyContext<'_>,
    config: &TimeStepperConfig,
    step: usize,
    mut observer: Option<&mut JacobianObserver<'_>>,
) -> Result<(Vec<f64>, NewtonReport), NewtonError> {
    let epsilon = config.epsilon(ctx.grid);
    let mut u = ctx.previous.to_vec();
    let mut report = NewtonReport {
        epsilon,
        ..Default::default()
    };
    for s in 0..=config.newton_max_iters {
        let f = residual(ctx, &u)?;
        let jac = assemble_jacobian(ctx, &u)?;
        if let Some(obs) = observer.as_mut() {
            obs(&JacobianSample {
                step,
                newton_iteration: s,
                ctx,
                u: &u,
                jacobian: &jac,
            });
        }
        report.residuals_inf.push(inf_norm(&f));
        let (delta, lin) = solve_jacobian_system(ctx, &u, &jac, &f, &config.linear)
            .map_err(|source| NewtonError::Linear { iteration: s, source })?;
        let lin_converged = lin.converged;
        let lin_residual = lin.final_residual;
        report.linear.push(lin);
        if !lin_converged {
            return Err(NewtonError::LinearNotConverged {
                iteration: s,
                residual: lin_residual,
            });
        }
        for (uk, dk) in u.iter_mut().zip(&delta) {
            *uk -= dk;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(NewtonError::NonFinite { iteration: s });
        }
        let step_inf = inf_norm(&delta);
        let un = l2_norm(&u);
        report.corrections_inf.push(step_inf);
        report
            .corrections_rel_l2
            .push(if un > 0.0 { l2_norm(&delta) / un } else { l2_norm(&delta) });
        if step_inf <= epsilon {
            report.converged = true;
            return Ok((u, report));
        }
        report.iterations += 1;
    }
    Err(NewtonError::NotConverged {
        iterations: report.iterations,
        last_correction: report.corrections_inf.last().copied().unwrap_or(f64::NAN),
        epsilon,
        report: Box::new(report),
    })
}

/// Minimum, mean and maximum of a sample of iteration counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IterationSummary {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
    pub count: usize,
}

impl IterationSummary {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self {
            min: usize::MAX,
            ..Default::default()
        };
        let mut total = 0usize;
        for c in counts {
            s.min = s.min.min(c);
            s.max = s.max.max(c);
            total += c;
            s.count += 1;
        }
        if s.count == 0 {
            return Self::default();
        }
        s.mean = total as f64 / s.count as f64;
        s
    }
}

/// Run-level statistics of an integration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub steps_completed: usize,
    pub steps_planned: usize,
    pub dt: f64,
    pub final_time: f64,
    pub newton: IterationSummary,
    pub linear: IterationSummary,
    pub reports: Vec<NewtonReport>,
    /// Steps whose state dipped below `-1e-8 ||u||_inf`.
    pub positivity_violations: usize,
    pub min_value: f64,
    /// Some linear solve ran CG on a nonsymmetric Jacobian.
    pub nonsymmetric_cg: bool,
}

impl SolveStats {
    fn refresh(&mut self) {
        self.newton = IterationSummary::from_counts(self.reports.iter().map(|r| r.iterations));
        self.linear = IterationSummary::from_counts(self.reports.iter().flat_map(|r| r.linear_iterations()));
        self.nonsymmetric_cg = self
            .reports
            .iter()
            .any(|r| r.linear.iter().any(|l| l.nonsymmetric_cg));
    }

    pub fn newton_counts(&self) -> Vec<usize> {
        self.reports.iter().map(|r| r.iterations).collect()
    }
}

#[derive(Debug, Error)]
#[error("integration stopped at step {step} of {}: {source}", stats.steps_planned)]
pub struct IntegrationError {
    pub step: usize,
    pub stats: Box<SolveStats>,
    #[source]
    pub source: NewtonError,
}

/// Runs `step_count` implicit steps of size `dt` from `problem.initial`.
///
/// The final time is `t0 + steps * dt`, which may exceed `t0 + duration`
/// when `dt` does not divide the duration.
pub fn integrate(
    problem: &Problem,
    grid: &UniformGrid,
    config: &TimeStepperConfig,
    mut observer: Option<&mut JacobianObserver<'_>>,
) -> Result<(StateVector, SolveStats), IntegrationError> {
    let fail = |step, stats: SolveStats, source| IntegrationError {
        step,
        stats: Box::new(stats),
        source,
    };
    let dt = config.dt(grid);
    let steps = config.step_count(grid);
    let mut stats = SolveStats {
        steps_planned: steps,
        dt,
        final_time: problem.initial.time,
        min_value: f64::INFINITY,
        ..Default::default()
    };
    if let Err(e) = config.validate() {
        return Err(fail(0, stats, e));
    }
    if problem.initial.len() != grid.order() {
        let e = ProblemError::LengthMismatch {
            expected: grid.order(),
            actual: problem.initial.len(),
        };
        return Err(fail(0, stats, e.into()));
    }
    if config.dt_coefficient > DT_WARNING_THRESHOLD {
        log::warn!(
            "dt = {:.3} h exceeds {DT_WARNING_THRESHOLD} h; Newton convergence may degrade",
            config.dt_coefficient
        );
    }
    let t_end = problem.initial.time + steps as f64 * dt;
    if let Err(e) = problem.check_support_interior(grid, t_end) {
        return Err(fail(0, stats, e.into()));
    }

    let mut u = problem.initial.values.clone();
    let mut t = problem.initial.time;
    stats.min_value = u.iter().copied().fold(f64::INFINITY, f64::min);
    for n in 1..=steps {
        let ctx = match AssemblyContext::new(grid, problem.law.as_ref(), dt, &u) {
            Ok(c) => c,
            Err(e) => return Err(fail(n, stats, e.into())),
        };
        let (next, report) = match newton_step_impl(&ctx, config, n, observer.as_deref_mut()) {
            Ok(v) => v,
            Err(e) => {
                stats.refresh();
                return Err(fail(n, stats, e));
            }
        };
        stats.reports.push(report);
        u = next;
        t += dt;
        let sup = inf_norm(&u);
        let low = u.iter().copied().fold(f64::INFINITY, f64::min);
        stats.min_value = stats.min_value.min(low);
        if low < -1e-8 * sup {
            stats.positivity_violations += 1;
            log::warn!("step {n}: minimum value {low:.3e} below zero (sup {sup:.3e})");
        }
        stats.steps_completed = n;
        stats.final_time = t;
    }
    stats.refresh();
    if stats.nonsymmetric_cg {
        log::warn!("conjugate gradients was applied to nonsymmetric Jacobians");
    }
    Ok((StateVector { values: u, time: t }, stats))
}
