use degdiff::analysis::{fd_jacobian_at, grid_error, spectral_report};
use degdiff::discretization::{assemble_jacobian, assemble_x_part, AssemblyContext};
use degdiff::linsolve::{LinearSolverConfig, PreconditionerKind, SolverKind};
use degdiff::newton::{integrate, NewtonError, TimeStepperConfig};
use degdiff::problem::{
    sample_on_grid, BarenblattSolution, ConstantDiffusion, Dimension, PowerLaw, Problem, UniformGrid,
};

fn barenblatt_run(m: f64, n: usize, cfg: &TimeStepperConfig) -> (UniformGrid, Problem, Vec<f64>, f64) {
    let g = UniformGrid::standard(Dimension::One, n).unwrap();
    let p = Problem::barenblatt(m, &g, cfg.t0).unwrap();
    let (u, _) = integrate(&p, &g, cfg, None).unwrap();
    (g, p, u.values, u.time)
}

#[test]
fn constant_diffusion_spectrum_matches_closed_form() {
    let n = 20;
    let g = UniformGrid::standard(Dimension::One, n).unwrap();
    let law = ConstantDiffusion { value: 1.0 };
    let dt = 0.7 * g.spacing();
    let u = vec![0.3; n];
    let ctx = AssemblyContext::new(&g, &law, dt, &u).unwrap();
    let x = assemble_x_part(&ctx, &u).unwrap();
    let d = spectral_report(&x, None, None).unwrap();
    let r = dt / (g.spacing() * g.spacing());
    for (k, z) in d.eigenvalues.iter().enumerate() {
        let s = ((k + 1) as f64 * std::f64::consts::PI / (2 * (n + 1)) as f64).sin();
        assert!((z.re - (1.0 + 4.0 * r * s * s)).abs() <= 1e-10, "{k}: {z}");
        assert!(z.im.abs() <= 1e-10);
    }
}

#[test]
fn error_halves_under_refinement() {
    let cfg = TimeStepperConfig::default();
    let mut errors = Vec::new();
    for n in [63, 127] {
        let (g, p, u, t) = barenblatt_run(2.0, n, &cfg);
        let exact = sample_on_grid(p.exact.as_ref().unwrap(), &g, t).unwrap();
        let num = degdiff::problem::StateVector { values: u, time: t };
        errors.push(grid_error(&g, &num, &exact).unwrap().l2);
    }
    let ratio = errors[0] / errors[1];
    assert!((1.5..=2.5).contains(&ratio), "{ratio}");
}

#[test]
fn final_profile_is_symmetric_and_tracks_the_support() {
    let cfg = TimeStepperConfig {
        linear: LinearSolverConfig::new(SolverKind::Gmres, PreconditionerKind::SymmetricPart),
        ..Default::default()
    };
    let (g, p, u, t) = barenblatt_run(2.0, 127, &cfg);
    let n = u.len();
    for k in 0..n / 2 {
        assert!((u[k] - u[n - 1 - k]).abs() <= 1e-10, "{k}");
    }
    // the implicit scheme leaves a rapidly decaying precursor ahead of the front;
    // values below the Newton tolerance are not resolved, so they do not count as support
    let floor = cfg.newton_epsilon_coefficient * g.spacing();
    let last = (0..n).rev().find(|&k| u[k] > floor).unwrap();
    let front = g.point(last)[0];
    let radius = p.exact.as_ref().unwrap().support_radius(t).unwrap();
    assert!((front - radius).abs() <= 2.0 * g.spacing(), "front {front}, radius {radius}");
}

#[test]
fn zero_duration_echoes_initial_data() {
    let cfg = TimeStepperConfig {
        duration: 0.0,
        ..Default::default()
    };
    let g = UniformGrid::standard(Dimension::Two, 15).unwrap();
    let p = Problem::barenblatt(3.0, &g, cfg.t0).unwrap();
    let (u, stats) = integrate(&p, &g, &cfg, None).unwrap();
    assert_eq!(u, p.initial);
    assert_eq!(stats.steps_completed, 0);
}

#[test]
fn failed_integration_keeps_partial_statistics() {
    let cfg = TimeStepperConfig {
        linear: LinearSolverConfig::new(SolverKind::Cg, PreconditionerKind::None),
        ..Default::default()
    };
    let g = UniformGrid::standard(Dimension::One, 63).unwrap();
    let p = Problem::barenblatt(2.0, &g, cfg.t0).unwrap();
    let err = integrate(&p, &g, &cfg, None).unwrap_err();
    assert_eq!(err.step, 1);
    assert_eq!(err.stats.steps_planned, 2);
    assert_eq!(err.stats.steps_completed, 0);
    assert!(matches!(err.source, NewtonError::LinearNotConverged { .. }));
}

#[test]
fn mass_is_conserved_while_the_support_is_interior() {
    let cfg = TimeStepperConfig {
        newton_epsilon_coefficient: 1e-6,
        ..Default::default()
    };
    let g = UniformGrid::standard(Dimension::One, 127).unwrap();
    let p = Problem::barenblatt(3.0, &g, cfg.t0).unwrap();
    let (u, _) = integrate(&p, &g, &cfg, None).unwrap();
    let m0: f64 = p.initial.values.iter().sum();
    let m1: f64 = u.values.iter().sum();
    assert!((m1 - m0).abs() <= 1e-6 * m0, "{m0} vs {m1}");
}

#[test]
fn two_dimensional_jacobian_pattern_has_gaps_where_flat() {
    let n = 6;
    let g = UniformGrid::standard(Dimension::Two, n).unwrap();
    let law = PowerLaw::new(4.0).unwrap();
    let exact = BarenblattSolution::new(4.0, Dimension::Two).unwrap();
    let u = sample_on_grid(&exact, &g, 1.0).unwrap().values;
    let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
    let fd = fd_jacobian_at(&ctx, &u).unwrap();
    let an = assemble_jacobian(&ctx, &u).unwrap();
    let mut flat_rows = 0;
    for i in 0..g.order() {
        for j in 0..g.order() {
            let offset = j as isize - i as isize;
            if ![0, 1, -1, n as isize, -(n as isize)].contains(&offset) {
                assert!(fd[(i, j)].abs() <= 1e-7, "({i},{j}) = {}", fd[(i, j)]);
            }
        }
        // rows away from the support keep only the identity
        if u[i] == 0.0 && an.row(i).all(|(j, v)| j == i || v == 0.0) {
            flat_rows += 1;
            assert!((fd[(i, i)] - 1.0).abs() <= 1e-7);
        }
    }
    assert!(flat_rows > 0 && flat_rows < g.order());
}
