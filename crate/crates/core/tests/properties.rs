use degdiff::analysis::{
    fd_jacobian_at, relative_frobenius_error, spectral_report, spectral_report_dense, verify_sigma_min_bound,
    ConvergenceRow, ConvergenceTable, CLUSTER_EPSILONS,
};
use degdiff::discretization::{assemble_jacobian, assemble_operator, assemble_x_part, AssemblyContext, StructuredMatrix};
use degdiff::linsolve::{
    gmres_solve, IdentityPreconditioner, KrylovConfig, MultigridConfig, MultigridHierarchy, Smoother,
};
use degdiff::problem::{Dimension, PowerLaw, UniformGrid};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn grid(dim: Dimension, n: usize) -> UniformGrid {
    UniformGrid::standard(dim, n).unwrap()
}

fn dims() -> impl Strategy<Value = (Dimension, usize)> {
    prop_oneof![
        (Just(Dimension::One), prop::sample::select(vec![7usize, 15, 31])),
        (Just(Dimension::Two), prop::sample::select(vec![3usize, 7])),
    ]
}

/// Nonnegative state with a fraction of exact zeros.
fn state(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.01f64..2.0], len)
}

fn sized_case() -> impl Strategy<Value = (Dimension, usize, f64, Vec<f64>)> {
    // D'(0) is infinite for 1 < m < 2, and the states contain zeros
    (dims(), prop_oneof![Just(1.0), 2.0f64..5.0]).prop_flat_map(|((d, n), m)| {
        let order = if d == Dimension::One { n } else { n * n };
        (Just(d), Just(n), Just(m), state(order))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn fd_jacobian_matches_assembly(m in prop::sample::select(vec![1.0, 2.0, 3.0, 4.0, 5.0]),
                                    two_d in any::<bool>(),
                                    seed in prop::collection::vec(0.05f64..1.5, 64)) {
        let g = if two_d { grid(Dimension::Two, 6) } else { grid(Dimension::One, 8) };
        let u: Vec<f64> = seed.iter().cycle().take(g.order()).copied().collect();
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let fd = fd_jacobian_at(&ctx, &u).unwrap();
        let an = assemble_jacobian(&ctx, &u).unwrap().to_dense().unwrap();
        prop_assert!(relative_frobenius_error(&fd, &an) <= 1e-6);
    }

    #[test]
    fn negative_operator_is_symmetric_and_dominant((d, n, m, u) in sized_case()) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let neg = -assemble_operator(&g, &law, &u).unwrap().to_dense().unwrap();
        prop_assert_eq!(&neg, &neg.transpose());
        for i in 0..neg.nrows() {
            let off: f64 = (0..neg.ncols()).filter(|&j| j != i).map(|j| neg[(i, j)].abs()).sum();
            prop_assert!(neg[(i, i)] >= 0.0);
            // Gerschgorin disc of row i sits in Re >= 0
            prop_assert!(neg[(i, i)] - off >= -4.0 * f64::EPSILON * neg[(i, i)]);
        }
    }

    #[test]
    fn x_part_spectrum_is_bounded_below_by_one((d, n, m, u) in sized_case(), c in 0.1f64..5.0) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, c * g.spacing(), &u).unwrap();
        let x = assemble_x_part(&ctx, &u).unwrap().to_dense().unwrap();
        let lmin = x.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(lmin >= 1.0 - 1e-12 * x.norm(), "{}", lmin);
    }

    #[test]
    fn galerkin_identity_holds_entrywise((d, n, m, u) in sized_case(), jacobi in any::<bool>()) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let a = assemble_jacobian(&ctx, &u).unwrap();
        let mut cfg = MultigridConfig::for_dimension(d);
        if jacobi {
            cfg.smoother = Smoother::DampedJacobi { omega: 2.0 / 3.0 };
        }
        let mh = MultigridHierarchy::new(&a, &g, cfg).unwrap();
        for lvl in 0..mh.depth() - 1 {
            let fine: DMatrix<f64> = mh.level_matrix(lvl).to_dense();
            let p = mh.prolongation(lvl).unwrap().to_dense();
            let expect = p.transpose() * &fine * &p;
            let diff = (mh.level_matrix(lvl + 1).to_dense() - expect).amax();
            prop_assert!(diff <= 1e-13 * fine.amax().max(1.0), "{}", diff);
        }
    }

    #[test]
    fn vcycle_is_linear((d, n, m, u) in sized_case(),
                        alpha in -3.0f64..3.0,
                        probe in prop::collection::vec(-1.0f64..1.0, 98)) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let a = assemble_jacobian(&ctx, &u).unwrap();
        let mh = MultigridHierarchy::new(&a, &g, MultigridConfig::for_dimension(d)).unwrap();
        let k = g.order();
        let b1: Vec<f64> = probe.iter().cycle().take(k).copied().collect();
        let b2: Vec<f64> = probe.iter().rev().cycle().take(k).copied().collect();
        let v = |b: &[f64]| { let mut x = vec![0.0; k]; mh.vcycle(b, &mut x); x };
        let comb: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x + alpha * y).collect();
        let (y1, y2, yc) = (v(&b1), v(&b2), v(&comb));
        let scale = yc.iter().chain(&y1).chain(&y2).fold(1.0f64, |s, z| s.max(z.abs()));
        for i in 0..k {
            prop_assert!((yc[i] - (y1[i] + alpha * y2[i])).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn gmres_history_is_monotone((d, n, m, u) in sized_case(),
                                 rhs in prop::collection::vec(-1.0f64..1.0, 49),
                                 restart in prop::option::of(2usize..10)) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let a = assemble_jacobian(&ctx, &u).unwrap();
        let b: Vec<f64> = rhs.iter().cycle().take(g.order()).copied().collect();
        let cfg = KrylovConfig { restart, ..KrylovConfig::default() };
        let (_, rep) = gmres_solve(&a, &b, &IdentityPreconditioner, &cfg).unwrap();
        prop_assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(rep.converged);
    }

    #[test]
    fn sigma_min_bound_on_random_matrices(entries in prop::collection::vec(-2.0f64..2.0, 36)) {
        let a = DMatrix::from_row_slice(6, 6, &entries);
        prop_assert!(verify_sigma_min_bound(&a).unwrap().holds);
    }

    #[test]
    fn spectral_report_invariants((d, n, m, u) in sized_case()) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let a = assemble_jacobian(&ctx, &u).unwrap();
        let rep = spectral_report(&a, None, None).unwrap();
        prop_assert_eq!(rep.order(), g.order());
        prop_assert_eq!(rep.bendixson_violations(1e-10 * rep.sigma_max()), 0);
        // CLUSTER_EPSILONS is decreasing, so counts must not decrease
        prop_assert!(CLUSTER_EPSILONS.windows(2).all(|w| w[0] > w[1]));
        prop_assert!(rep.clusters.windows(2).all(|w| w[0].1 <= w[1].1));
        let lemma = verify_sigma_min_bound(&a.to_dense().unwrap()).unwrap();
        prop_assert!(lemma.holds);
    }

    #[test]
    fn convergence_rows_stay_sorted(ns in prop::collection::vec(1usize..1000, 1..12)) {
        let t: ConvergenceTable = ns.iter().map(|&n| ConvergenceRow { n, h: 1.0 / n as f64, error_l2: 1.0, error_linf: 1.0 }).collect();
        prop_assert!(t.rows().windows(2).all(|w| w[0].n <= w[1].n));
        prop_assert_eq!(t.len(), ns.len());
    }

    #[test]
    fn structured_product_matches_dense((d, n, m, u) in sized_case(), x in prop::collection::vec(-1.0f64..1.0, 49)) {
        let g = grid(d, n);
        let law = PowerLaw::new(m).unwrap();
        let ctx = AssemblyContext::new(&g, &law, g.spacing(), &u).unwrap();
        let a: StructuredMatrix = assemble_jacobian(&ctx, &u).unwrap();
        let x: Vec<f64> = x.iter().cycle().take(g.order()).copied().collect();
        let y = a.mul_vec(&x);
        let yd = a.to_dense().unwrap() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..y.len() {
            prop_assert!((y[i] - yd[i]).abs() <= 1e-12 * (1.0 + yd[i].abs()));
        }
    }
}

#[test]
fn identity_has_degenerate_spectrum() {
    let d = spectral_report_dense(&DMatrix::identity(12, 12), None).unwrap();
    assert!(d.eigenvalues.iter().all(|z| (z.re - 1.0).abs() < 1e-14 && z.im.abs() < 1e-14));
    assert_eq!((d.lambda_min_sym, d.lambda_max_sym), (1.0, 1.0));
    assert!(d.clusters.iter().all(|&(_, q)| q == 0));
}
