use minmax::classify::{reports_for, LimitStability, Verdict};
use minmax::dynamics::{lifted_map, ogda_step, run, LiftedState, Outcome};
use minmax::experiments::{basin_sweep, SweepConfig};
use minmax::linalg::spectral_norm;
use minmax::spectral::{h_gda, jacobian_ogda, multisets_match, ogda_spectrum_from_h};
use minmax::{
    builtin, builtin_by_name, eigenvalues, find_critical_points, gda_step, BoxRegion, BuiltinId, Function,
    FunctionFile, Method, Point, PointXY, SparsePolynomial, StepConfig, Term,
};
use proptest::prelude::*;

/// Polynomials of degree <= 3 in 2..=4 variables, split into x and y.
fn poly_fn() -> impl Strategy<Value = Function> {
    (1usize..=2, 1usize..=2).prop_flat_map(|(n, m)| {
        let d = n + m;
        let term = (
            prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
            proptest::collection::vec(0u32..=2, d),
        );
        proptest::collection::vec(term, 1..8).prop_map(move |ts| {
            let terms = ts
                .into_iter()
                .map(|(c, mut e)| {
                    while e.iter().sum::<u32>() > 3 {
                        let k = e.iter().position(|&v| v > 0).unwrap();
                        e[k] -= 1;
                    }
                    Term::new(c, e)
                })
                .collect();
            Function::from_polynomial(n, m, SparsePolynomial::new(d, terms).unwrap()).unwrap()
        })
    })
}

fn fn_and_point() -> impl Strategy<Value = (Function, Vec<f64>)> {
    poly_fn().prop_flat_map(|f| {
        let d = f.dim();
        (Just(f), proptest::collection::vec(-1.5..1.5f64, d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonicalize_is_idempotent((f, z) in fn_and_point()) {
        let p = f.to_polynomial();
        let c = p.canonicalize();
        prop_assert_eq!(c.canonicalize(), c.clone());
        prop_assert!((c.eval(&z) - p.eval(&z)).abs() <= 1e-12 * (1.0 + p.eval(&z).abs()));
    }

    #[test]
    fn hessian_cross_blocks_are_transposes((f, z) in fn_and_point()) {
        let b = f.hessian(&Point::from_flat(f.n(), z)).unwrap();
        for i in 0..f.n() {
            for j in 0..f.m() {
                prop_assert_eq!(b.xy[(i, j)], b.yx[(j, i)]);
            }
        }
        prop_assert!(b.is_symmetric(0.0));
    }

    #[test]
    fn lifted_map_equals_ogda_step(
        (f, z) in fn_and_point(),
        shift in proptest::collection::vec(-0.5..0.5f64, 4),
        alpha in 1e-4..0.3f64,
    ) {
        let d = f.dim();
        let prev: Vec<f64> = z.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let s = LiftedState::new(Point::from_flat(f.n(), z.clone()), Point::from_flat(f.n(), prev.clone())).unwrap();
        let next = ogda_step(&f, &s, alpha).unwrap();
        let mut flat = z.clone();
        flat.extend_from_slice(&prev[..d]);
        let g = lifted_map(&f, &flat, alpha).unwrap();
        prop_assert_eq!(&g[..d], next.cur.as_slice());
        prop_assert_eq!(&g[d..], next.prev.as_slice());
    }

    #[test]
    fn ogda_spectrum_is_the_mapped_h_spectrum((f, z) in fn_and_point(), alpha in 1e-3..0.2f64) {
        let p = Point::from_flat(f.n(), z);
        let h = eigenvalues(&h_gda(&f, &p).unwrap()).unwrap();
        let predicted = ogda_spectrum_from_h(&h.eigenvalues, alpha);
        let direct = eigenvalues(&jacobian_ogda(&f, &p, alpha).unwrap()).unwrap();
        prop_assert!(multisets_match(&direct.eigenvalues, &predicted, 1e-6));
    }

    #[test]
    fn h_radius_bounded_by_hessian_norm((f, z) in fn_and_point()) {
        let p = Point::from_flat(f.n(), z.clone());
        let rho = eigenvalues(&h_gda(&f, &p).unwrap()).unwrap().spectral_radius();
        let norm = spectral_norm(&f.hessian_flat(&z));
        prop_assert!(rho <= norm * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn function_file_round_trip((f, z) in fn_and_point()) {
        let json = FunctionFile::from_function(&f).to_json();
        let g: Function = FunctionFile::parse(&json).unwrap();
        prop_assert_eq!(g.n(), f.n());
        let (a, b) = (g.eval_flat(&z), f.eval_flat(&z));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn run_is_deterministic(x in -1.0..1.0f64, y in -1.0..1.0f64, ogda in any::<bool>()) {
        let f = builtin_by_name::<f64>("f2").unwrap();
        let method = if ogda { Method::Ogda } else { Method::Gda };
        let cfg = StepConfig::new(0.05).with_max_iters(2000);
        let s = LiftedState::at_rest(Point::new(vec![x], vec![y]));
        let a = run(&f, &s, &cfg, method, false).unwrap();
        let b = run(&f, &s, &cfg, method, false).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn critical_points_are_fixed_points_of_both_maps() {
    for name in ["composite2d", "composite2d-printed", "f1", "f2", "xy"] {
        let f = builtin_by_name::<f64>(name).unwrap();
        let set = find_critical_points(&f, &BoxRegion::cube(2, -5.0, 5.0), 50, 1).unwrap();
        for p in &set.points {
            for alpha in [1e-3, 0.1] {
                assert!(gda_step(&f, p, alpha).unwrap().distance(p) <= 1e-9, "{name} {p:?}");
                let s = ogda_step(&f, &LiftedState::at_rest(p.clone()), alpha).unwrap();
                assert!(s.cur.distance(p) <= 1e-9 && s.prev == *p);
            }
        }
    }
}

#[test]
fn sweep_fractions_sum_to_one_and_ignore_thread_count() {
    let f = builtin_by_name::<f64>("composite2d").unwrap();
    let region = BoxRegion::cube(2, -5.0, 5.0);
    let set = find_critical_points(&f, &region, 50, 1).unwrap();
    let mut cfg = SweepConfig::new(region, 200, Method::Ogda, 11);
    cfg.step = StepConfig::new(0.005).with_max_iters(20_000);
    let sweep_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| basin_sweep(&f, &set, &cfg).unwrap())
    };
    let one = sweep_with(1);
    let four = sweep_with(4);
    assert!((one.total_fraction() - 1.0).abs() <= 1e-12);
    assert_eq!(one.counts, four.counts);
    assert_eq!(one.diverged, four.diverged);
    assert_eq!(one.per_point_fraction, four.per_point_fraction);
}

#[test]
fn stability_inclusion_chain_on_catalog() {
    for id in BuiltinId::catalog() {
        let f: Function = builtin(&id).unwrap();
        let region = BoxRegion::cube(f.dim(), -2.0, 2.0);
        let set = find_critical_points(&f, &region, 40, 3).unwrap();
        for r in reports_for(&f, &set, 0.001).unwrap() {
            if r.strongly_local_minmax {
                assert_eq!(r.local_minmax, Verdict::Yes, "{id:?} {:?}", r.point);
                assert_eq!(r.gda_small_alpha, LimitStability::Stable, "{id:?} {:?}", r.point);
            }
            if r.gda_small_alpha == LimitStability::Stable {
                assert_eq!(r.ogda_small_alpha, LimitStability::Stable, "{id:?} {:?}", r.point);
            }
        }
    }
}

#[test]
fn single_precision_smoke() {
    let f = builtin_by_name::<f32>("xy").unwrap();
    let cfg = StepConfig::<f32>::new(0.1).with_max_iters(20_000);
    cfg.validate().unwrap();
    let r = run(&f, &LiftedState::at_rest(PointXY::new(vec![1.0f32], vec![1.0])), &cfg, Method::Ogda, false).unwrap();
    assert!(matches!(r.outcome, Outcome::ConvergedTo(_)) || matches!(r.outcome, Outcome::BudgetExhausted));
    assert!(r.final_state.current().norm() < 1e-2);
    let rho = eigenvalues(&jacobian_ogda(&f, &PointXY::new(vec![0.0], vec![0.0]), 0.1).unwrap())
        .unwrap()
        .spectral_radius();
    assert!((rho - 0.994_936).abs() < 1e-5);
}
