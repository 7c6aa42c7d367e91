use std::path::PathBuf;

use super::config::{Command, ExperimentConfig};
use super::output::{sibling_path, write_atomic, CsvTable};
use super::CliError;
use crate::analysis::{
    fit_iteration_growth, fit_order, grid_error, spectral_report, verify_sigma_min_bound, ConvergenceRow,
    ConvergenceTable, SpectralDiagnostics, SPECTRAL_ORDER_LIMIT,
};
use crate::linsolve::{
    symmetric_part_preconditioner, vcycle_preconditioner, MultigridConfig, MultigridHierarchy, Preconditioner,
    PreconditionerKind,
};
use crate::newton::{integrate, IntegrationError, JacobianSample, SolveStats};
use crate::problem::{sample_on_grid, Dimension, Problem, StateVector, UniformGrid};

/// Tables produced by one command; `suffix` distinguishes sibling files.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<(Option<String>, CsvTable)>,
    pub converged: bool,
}

impl Report {
    /// Writes every table under `out`, or to stdout when `out` is `None`.
    /// Returns the paths written.
    pub fn write(&self, out: Option<&PathBuf>) -> Result<Vec<PathBuf>, CliError> {
        let single = self.tables.len() == 1;
        let mut written = Vec::new();
        for (suffix, table) in &self.tables {
            match out {
                Some(base) => {
                    let path = match suffix {
                        Some(s) if !single => sibling_path(base, s),
                        _ => base.clone(),
                    };
                    write_atomic(&path, &table.render())?;
                    written.push(path);
                }
                None => {
                    if let (Some(s), false) = (suffix, single) {
                        println!("# file: {s}");
                    }
                    print!("{}", table.render());
                }
            }
        }
        Ok(written)
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn header(table: &mut CsvTable, cfg: &ExperimentConfig) {
    for line in cfg.describe() {
        table.comment(line);
    }
}

/// Runs `f` for every size concurrently; results keep the input order.
fn per_size<T: Send>(sizes: &[usize], f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = sizes.iter().map(|&n| s.spawn(move || f(n))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

struct Run {
    grid: UniformGrid,
    problem: Problem,
    outcome: Result<(StateVector, SolveStats), IntegrationError>,
}

fn run_size(cfg: &ExperimentConfig, n: usize) -> Result<Run, CliError> {
    let grid = UniformGrid::standard(cfg.dimension, n)?;
    let problem = Problem::barenblatt(cfg.m, &grid, cfg.t0)?;
    let outcome = integrate(&problem, &grid, &cfg.time_stepper(), None);
    Ok(Run { grid, problem, outcome })
}

fn checked(cfg: &ExperimentConfig, expected: Command) -> Result<(), CliError> {
    if cfg.command != expected {
        log::debug!("running {expected:?} for a config that names {:?}", cfg.command);
    }
    cfg.validate()
}

/// Error table against the Barenblatt solution at the final time.
pub fn run_converge(cfg: &ExperimentConfig) -> Result<(ConvergenceTable, Report), CliError> {
    checked(cfg, Command::Converge)?;
    let runs = per_size(&cfg.n_list, |n| run_size(cfg, n));
    let mut table = CsvTable::new(&["N", "h", "l2_error", "linf_error", "status"]);
    header(&mut table, cfg);
    let mut conv = ConvergenceTable::new();
    let mut converged = true;
    for (n, run) in cfg.n_list.iter().zip(runs) {
        let run = run?;
        let h = run.grid.spacing();
        match &run.outcome {
            Ok((u, stats)) => {
                let exact = run.problem.exact.as_ref().expect("Barenblatt problem");
                let reference = sample_on_grid(exact, &run.grid, u.time)?;
                let e = grid_error(&run.grid, u, &reference)?;
                conv.push(ConvergenceRow {
                    n: *n,
                    h,
                    error_l2: e.l2,
                    error_linf: e.linf,
                });
                table.push(vec![n.to_string(), num(h), num(e.l2), num(e.linf), "ok".into()]);
                table.comment(format!("N={n}: {} steps of dt={}, final time {}", stats.steps_completed, num(stats.dt), u.time));
            }
            Err(e) => {
                converged = false;
                table.push(vec![n.to_string(), num(h), "nan".into(), "nan".into(), "failed".into()]);
                table.comment(format!("N={n}: {e}"));
            }
        }
    }
    match (fit_order(&conv), conv.slope_linf()) {
        (Ok(s2), Ok(si)) => {
            table.footer(format!("slope_l2={s2:.4}"));
            table.footer(format!("slope_linf={si:.4}"));
        }
        _ => table.footer(format!("slope unavailable from {} converged rows", conv.len())),
    }
    Ok((
        conv,
        Report {
            tables: vec![(None, table)],
            converged,
        },
    ))
}

/// Per-size outcome of [`run_iterations`].
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub n: usize,
    pub stats: SolveStats,
    pub error: Option<String>,
}

/// Newton and linear iteration counts per size, plus a per-step table.
pub fn run_iterations(cfg: &ExperimentConfig) -> Result<(Vec<IterationRecord>, Report), CliError> {
    checked(cfg, Command::Iterations)?;
    let runs = per_size(&cfg.n_list, |n| run_size(cfg, n));
    let mut summary = CsvTable::new(&[
        "N",
        "h",
        "dt",
        "steps",
        "newton_mean",
        "newton_min",
        "newton_max",
        "linear_mean",
        "linear_min",
        "linear_max",
        "status",
    ]);
    let mut per_step = CsvTable::new(&["N", "step", "newton_iterations", "linear_mean", "linear_min", "linear_max"]);
    header(&mut summary, cfg);
    header(&mut per_step, cfg);
    let mut records = Vec::new();
    let mut converged = true;
    for (n, run) in cfg.n_list.iter().zip(runs) {
        let run = run?;
        let (stats, error) = match run.outcome {
            Ok((_, s)) => (s, None),
            Err(e) => {
                converged = false;
                summary.comment(format!("N={n}: {e}"));
                let msg = e.to_string();
                (*e.stats, Some(msg))
            }
        };
        summary.push(vec![
            n.to_string(),
            num(run.grid.spacing()),
            num(stats.dt),
            stats.steps_completed.to_string(),
            num(stats.newton.mean),
            stats.newton.min.to_string(),
            stats.newton.max.to_string(),
            num(stats.linear.mean),
            stats.linear.min.to_string(),
            stats.linear.max.to_string(),
            if error.is_some() { "failed" } else { "ok" }.into(),
        ]);
        for (k, rep) in stats.reports.iter().enumerate() {
            let lin = crate::newton::IterationSummary::from_counts(rep.linear_iterations());
            per_step.push(vec![
                n.to_string(),
                (k + 1).to_string(),
                rep.iterations.to_string(),
                num(lin.mean),
                lin.min.to_string(),
                lin.max.to_string(),
            ]);
        }
        if stats.nonsymmetric_cg {
            summary.comment(format!("N={n}: conjugate gradients ran on nonsymmetric Jacobians"));
        }
        records.push(IterationRecord { n: *n, stats, error });
    }
    if cfg.preconditioner == PreconditionerKind::None {
        let pts: Vec<_> = records
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| (r.n, r.stats.linear.mean))
            .collect();
        match fit_iteration_growth(&pts) {
            Ok(q) => summary.footer(format!("growth_exponent={q:.4}")),
            Err(e) => summary.footer(format!("growth exponent unavailable: {e}")),
        }
    }
    Ok((
        records,
        Report {
            tables: vec![(Some("summary".into()), summary), (Some("steps".into()), per_step)],
            converged,
        },
    ))
}

/// Spectra of the Jacobian at the first Newton iterate of one time step.
#[derive(Debug, Clone)]
pub struct SpectrumSample {
    pub n: usize,
    pub step: usize,
    pub jacobian: SpectralDiagnostics,
    pub sigma_bound_holds: bool,
    pub preconditioned: Option<SpectralDiagnostics>,
}

fn preconditioned_report(
    cfg: &ExperimentConfig,
    s: &JacobianSample<'_>,
) -> Result<Option<SpectralDiagnostics>, CliError> {
    let mg = cfg
        .multigrid_config()
        .unwrap_or_else(|| MultigridConfig::for_dimension(s.ctx.grid.dimension()));
    let pc: Box<dyn Preconditioner> = match cfg.preconditioner {
        PreconditionerKind::None => return Ok(None),
        PreconditionerKind::SymmetricPart => Box::new(symmetric_part_preconditioner(s.ctx, s.u)?),
        PreconditionerKind::Vcycle => {
            Box::new(vcycle_preconditioner(MultigridHierarchy::new(s.jacobian, s.ctx.grid, mg)?))
        }
    };
    Ok(Some(spectral_report(s.jacobian, Some(pc.as_ref()), None)?))
}

fn spectrum_table(cfg: &ExperimentConfig, sample: &SpectrumSample) -> CsvTable {
    let mut t = CsvTable::new(&["matrix", "index", "re", "im", "distance_to_target"]);
    header(&mut t, cfg);
    t.comment(format!("N={} step={}", sample.n, sample.step));
    let add = |label: &str, d: &SpectralDiagnostics, t: &mut CsvTable| {
        t.comment(format!(
            "{label}: order={} sigma_min={} sigma_max={} kappa2={} lambda_min_sym={} lambda_max_sym={}",
            d.order(),
            num(d.sigma_min()),
            num(d.sigma_max()),
            num(d.condition_number()),
            num(d.lambda_min_sym),
            num(d.lambda_max_sym)
        ));
        t.comment(format!(
            "{label}: rectangle re=[{}, {}] im=[-{}, {}] outside={}",
            num(d.rectangle.re_min),
            num(d.rectangle.re_max),
            num(d.rectangle.im_bound),
            num(d.rectangle.im_bound),
            d.bendixson_violations(1e-10 * d.sigma_max().max(1.0))
        ));
        let counts: Vec<String> = d.clusters.iter().map(|(e, q)| format!("q({e})={q}")).collect();
        t.comment(format!("{label}: target={:?} {}", d.target, counts.join(" ")));
        for (k, z) in d.eigenvalues.iter().enumerate() {
            t.push(vec![label.into(), k.to_string(), num(z.re), num(z.im), num(d.target.distance(*z))]);
        }
    };
    add("jacobian", &sample.jacobian, &mut t);
    t.comment(format!("sigma_min >= lambda_min_sym: {}", sample.sigma_bound_holds));
    if let Some(p) = &sample.preconditioned {
        add("preconditioned", p, &mut t);
    }
    t
}

/// Dense spectra of the Jacobian (and preconditioned Jacobian) at the start
/// of every time step; one table per step.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<(Vec<SpectrumSample>, Report), CliError> {
    checked(cfg, Command::Spectrum)?;
    for &n in &cfg.n_list {
        let order = match cfg.dimension {
            Dimension::One => n,
            Dimension::Two => n * n,
        };
        if order > SPECTRAL_ORDER_LIMIT {
            return Err(CliError::Config(format!(
                "spectrum needs at most {SPECTRAL_ORDER_LIMIT} unknowns, N={n} gives {order}"
            )));
        }
    }
    let results = per_size(&cfg.n_list, |n| -> Result<(Vec<SpectrumSample>, Option<String>), CliError> {
        let grid = UniformGrid::standard(cfg.dimension, n)?;
        let problem = Problem::barenblatt(cfg.m, &grid, cfg.t0)?;
        let mut samples = Vec::new();
        let mut first_error: Option<CliError> = None;
        let mut observer = |s: &JacobianSample<'_>| {
            if s.newton_iteration != 0 || first_error.is_some() {
                return;
            }
            let run = || -> Result<SpectrumSample, CliError> {
                let jacobian = spectral_report(s.jacobian, None, None)?;
                let dense = s.jacobian.to_dense().expect("guarded order");
                Ok(SpectrumSample {
                    n,
                    step: s.step,
                    jacobian,
                    sigma_bound_holds: verify_sigma_min_bound(&dense)?.holds,
                    preconditioned: preconditioned_report(cfg, s)?,
                })
            };
            match run() {
                Ok(v) => samples.push(v),
                Err(e) => first_error = Some(e),
            }
        };
        let outcome = integrate(&problem, &grid, &cfg.time_stepper(), Some(&mut observer));
        if let Some(e) = first_error {
            return Err(e);
        }
        Ok((samples, outcome.err().map(|e| e.to_string())))
    });
    let mut all = Vec::new();
    let mut report = Report {
        converged: true,
        ..Default::default()
    };
    for (n, r) in cfg.n_list.iter().zip(results) {
        let (samples, error) = r?;
        for s in &samples {
            let mut t = spectrum_table(cfg, s);
            if let Some(e) = &error {
                t.footer(format!("run stopped: {e}"));
            }
            report.tables.push((Some(format!("N{n}_step{}", s.step)), t));
        }
        if let Some(e) = error {
            log::error!("N={n}: {e}");
            report.converged = false;
        }
        all.extend(samples);
    }
    Ok((all, report))
}

/// Final states of single integrations, one table per size.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<(Vec<(usize, StateVector)>, Report), CliError> {
    checked(cfg, Command::Solve)?;
    let runs = per_size(&cfg.n_list, |n| run_size(cfg, n));
    let mut report = Report {
        converged: true,
        ..Default::default()
    };
    let mut states = Vec::new();
    for (n, run) in cfg.n_list.iter().zip(runs) {
        let run = run?;
        let columns: &[&str] = match cfg.dimension {
            Dimension::One => &["x", "u"],
            Dimension::Two => &["x", "y", "u"],
        };
        let mut t = CsvTable::new(columns);
        header(&mut t, cfg);
        match run.outcome {
            Ok((u, stats)) => {
                let exact = run.problem.exact.as_ref().expect("Barenblatt problem");
                let reference = sample_on_grid(exact, &run.grid, u.time)?;
                let e = grid_error(&run.grid, &u, &reference)?;
                t.comment(format!(
                    "N={n} final_time={} steps={} l2_error={} linf_error={}",
                    u.time,
                    stats.steps_completed,
                    num(e.l2),
                    num(e.linf)
                ));
                t.comment(format!("exact support radius {}", num(exact.support_radius(u.time)?)));
                for (k, v) in u.values.iter().enumerate() {
                    let p = run.grid.point(k);
                    let mut row = vec![num(p[0])];
                    if cfg.dimension == Dimension::Two {
                        row.push(num(p[1]));
                    }
                    row.push(num(*v));
                    t.push(row);
                }
                states.push((*n, u));
            }
            Err(e) => {
                report.converged = false;
                t.comment(format!("N={n}: {e}"));
            }
        }
        report.tables.push((Some(format!("N{n}")), t));
    }
    Ok((states, report))
}

/// Dispatches on `cfg.command`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    Ok(match cfg.command {
        Command::Converge => run_converge(cfg)?.1,
        Command::Iterations => run_iterations(cfg)?.1,
        Command::Spectrum => run_spectrum(cfg)?.1,
        Command::Solve => run_solve(cfg)?.1,
    })
}

