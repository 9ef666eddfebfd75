//! Worked examples for each operation, each checked against an independent
//! computation (finite differences, hand formulas, closed forms).

use approx::{assert_abs_diff_eq, assert_relative_eq};
use minmax::classify::{
    assumption_checks, find_critical_points, full_report, gda_stability_at_alpha, gda_stability_small_alpha,
    local_minmax_test, ogda_stability_at_alpha, ogda_stability_small_alpha, AssumptionConfig, LimitStability,
    Stability, Verdict,
};
use minmax::dynamics::{lifted_map, ogda_step, run, LiftedState, Outcome};
use minmax::experiments::{avoidance_check, vector_field_export, SweepConfig};
use minmax::spectral::{
    char_poly_identity_check, h_gda, jacobian_gda, jacobian_ogda, multisets_match, ogda_eigs_from_r,
};
use minmax::{builtin_by_name, eigenvalues, gda_step, spectral_radius, BoxRegion, Function, Mat, Method, Point, StepConfig, C64};

fn f(name: &str) -> Function {
    builtin_by_name(name).unwrap()
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(vec![x], vec![y])
}

/// Central-difference Hessian from function values only.
fn fd_hessian(fun: &Function, z: &[f64]) -> Vec<Vec<f64>> {
    let h = 1e-4;
    let d = z.len();
    let e = |dz: &[(usize, f64)]| {
        let mut w = z.to_vec();
        for &(i, s) in dz {
            w[i] += s;
        }
        fun.eval_flat(&w)
    };
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (e(&[(i, h), (j, h)]) - e(&[(i, h), (j, -h)]) - e(&[(i, -h), (j, h)]) + e(&[(i, -h), (j, -h)])) / (4.0 * h * h))
                .collect()
        })
        .collect()
}

#[test]
fn evaluate_examples() {
    assert_eq!(f("xy").evaluate(&pt(2.0, 3.0)).unwrap(), 6.0);
    assert_eq!(f("f1").evaluate(&pt(0.0, 0.0)).unwrap(), 0.0);
    let v = f("composite2d").evaluate(&pt(0.3301, 0.3357)).unwrap();
    assert_abs_diff_eq!(v, 0.109, epsilon = 1e-3);
    assert!(f("xy").evaluate(&Point::new(vec![1.0, 2.0], vec![1.0])).unwrap_err().is_input());
}

#[test]
fn gradient_examples() {
    assert_eq!(f("xy").gradient(&pt(1.0, 1.0)).unwrap(), (vec![1.0], vec![1.0]));
    assert_eq!(f("f1").gradient(&pt(0.0, 0.0)).unwrap(), (vec![0.0], vec![0.0]));
    let (gx, gy) = f("w").gradient(&Point::zeros(5, 5)).unwrap();
    assert!(gx.iter().chain(&gy).all(|&v| v == 0.0));
}

#[test]
fn hessian_examples_against_finite_differences() {
    for (name, xx, xy, yy) in [("xy", 0.0, 1.0, 0.0), ("f1", -0.25, 0.6, -1.0), ("f2", 1.0, 4.0, 1.0)] {
        let fun = f(name);
        for z in [[0.0, 0.0], [0.7, -1.3]] {
            let b = fun.hessian(&pt(z[0], z[1])).unwrap();
            let fd = fd_hessian(&fun, &z);
            assert_abs_diff_eq!(b.xx[(0, 0)], xx, epsilon = 1e-15);
            assert_abs_diff_eq!(b.xy[(0, 0)], xy, epsilon = 1e-15);
            assert_abs_diff_eq!(b.yy[(0, 0)], yy, epsilon = 1e-15);
            assert_eq!(b.yx[(0, 0)], b.xy[(0, 0)]);
            assert_abs_diff_eq!(fd[0][0], xx, epsilon = 1e-6);
            assert_abs_diff_eq!(fd[0][1], xy, epsilon = 1e-6);
            assert_abs_diff_eq!(fd[1][1], yy, epsilon = 1e-6);
        }
    }
}

#[test]
fn composite_origin_hessian_against_finite_differences() {
    for name in ["composite2d", "composite2d-printed"] {
        let fun = f(name);
        let exact = fun.hessian_flat(&[0.0, 0.0]);
        let fd = fd_hessian(&fun, &[0.0, 0.0]);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(exact[(i, j)], fd[i][j], epsilon = 1e-6);
            }
        }
    }
    // the printed form behaves like f1 at the origin, the other like f2
    let p = f("composite2d-printed").hessian_flat(&[0.0, 0.0]);
    assert_eq!(p.to_rows(), vec![vec![-0.25, 0.6], vec![0.6, -1.0]]);
    let c = f("composite2d").hessian_flat(&[0.0, 0.0]);
    assert_eq!(c.to_rows(), vec![vec![1.0, 4.0], vec![4.0, 1.0]]);
}

#[test]
fn lipschitz_examples() {
    let region = BoxRegion::cube(2, -3.0, 3.0);
    assert_relative_eq!(f("xy").lipschitz_estimate(&region, 10, 1).unwrap(), 1.1, epsilon = 1e-12);
    // f1: spectral norm of the constant symmetric Hessian [[-1/4, 0.6], [0.6, -1]]
    let (a, b, c) = (-0.25f64, 0.6f64, -1.0f64);
    let mean = (a + c) / 2.0;
    let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let norm = (mean - rad).abs().max((mean + rad).abs());
    assert_relative_eq!(f("f1").lipschitz_estimate(&region, 10, 1).unwrap(), 1.1 * norm, epsilon = 1e-12);
    assert!(norm < 1.34);
    let w_region = BoxRegion::cube(10, -1.0, 1.0);
    assert_relative_eq!(f("w").lipschitz_estimate(&w_region, 5, 1).unwrap(), 2.2, epsilon = 1e-12);
    let flat = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
    assert!(f("xy").lipschitz_estimate(&flat, 5, 1).unwrap_err().is_input());
}

#[test]
fn planted_origin_is_critical() {
    for seed in [0, 5] {
        let fun: Function = builtin_by_name(&format!("planted10d:{seed}")).unwrap();
        let o = Point::zeros(5, 5);
        assert_eq!(fun.evaluate(&o).unwrap(), 0.0);
        let (gx, gy) = fun.gradient(&o).unwrap();
        assert!(gx.iter().chain(&gy).all(|&v| v == 0.0));
    }
    assert!(builtin_by_name::<f64>("nonexistent").unwrap_err().is_input());
}

#[test]
fn gda_step_examples() {
    let xy = f("xy");
    let p = gda_step(&xy, &pt(1.0, 1.0), 0.1).unwrap();
    assert_relative_eq!(p.x()[0], 0.9);
    assert_relative_eq!(p.y()[0], 1.1);
    assert_eq!(gda_step(&f("f1"), &pt(0.0, 0.0), 0.3).unwrap(), pt(0.0, 0.0));
    let (x0, y0) = (0.4, -1.7);
    let alpha = 0.07;
    let q = gda_step(&xy, &pt(x0, y0), alpha).unwrap();
    let r1 = q.x()[0].powi(2) + q.y()[0].powi(2);
    assert_relative_eq!(r1, (1.0 + alpha * alpha) * (x0 * x0 + y0 * y0), max_relative = 1e-14);
}

/// Independent two-line OGDA update for f = xy (grad = (y, x)).
fn ogda_xy_by_hand(cur: (f64, f64), prev: (f64, f64), a: f64) -> (f64, f64) {
    (cur.0 - 2.0 * a * cur.1 + a * prev.1, cur.1 + 2.0 * a * cur.0 - a * prev.0)
}

#[test]
fn ogda_step_examples() {
    let xy = f("xy");
    let s = ogda_step(&xy, &LiftedState::at_rest(pt(1.0, 1.0)), 0.1).unwrap();
    assert_relative_eq!(s.cur.x()[0], 0.9);
    assert_relative_eq!(s.cur.y()[0], 1.1);
    assert_eq!(s.prev, pt(1.0, 1.0));

    let s = ogda_step(&f("f2"), &LiftedState::at_rest(pt(0.0, 0.0)), 0.1).unwrap();
    assert_eq!(s, LiftedState::at_rest(pt(0.0, 0.0)));

    let s = LiftedState::new(pt(1.0, 0.0), pt(0.0, 1.0)).unwrap();
    let next = ogda_step(&xy, &s, 0.1).unwrap();
    let (hx, hy) = ogda_xy_by_hand((1.0, 0.0), (0.0, 1.0), 0.1);
    assert_relative_eq!(next.cur.x()[0], hx);
    assert_relative_eq!(next.cur.y()[0], hy);
    assert_relative_eq!(hx, 1.1);
    assert_relative_eq!(hy, 0.2);
    assert_eq!(next.prev, pt(1.0, 0.0));
}

#[test]
fn run_examples() {
    let xy = f("xy");
    let cfg = StepConfig::new(0.01).with_max_iters(1_000_000);
    let r = run(&xy, &LiftedState::at_rest(pt(1.0, 1.0)), &cfg, Method::Gda, false).unwrap();
    assert!(matches!(r.outcome, Outcome::Diverged { non_finite: false, .. }));
    assert!(r.final_state.current().norm() > 1e6);

    let cfg = StepConfig::new(0.1).with_max_iters(100_000);
    let r = run(&xy, &LiftedState::at_rest(pt(1.0, 1.0)), &cfg, Method::Ogda, false).unwrap();
    match r.outcome {
        Outcome::ConvergedTo(p) => assert!(p.norm() < 1e-6),
        other => panic!("expected convergence, got {other:?}"),
    }

    let cfg = StepConfig::new(0.001).with_max_iters(200_000);
    let r = run(&f("f1"), &LiftedState::at_rest(pt(0.1, 0.1)), &cfg, Method::Gda, false).unwrap();
    match r.outcome {
        Outcome::ConvergedTo(p) => {
            assert!(p.norm() < 1e-3);
            let (gx, gy) = f("f1").gradient(&p).unwrap();
            assert!((gx[0].powi(2) + gy[0].powi(2)).sqrt() <= 1e-7);
        }
        other => panic!("expected convergence, got {other:?}"),
    }
}

#[test]
fn lifted_map_matches_step_on_example() {
    let xy = f("xy");
    let s = LiftedState::new(pt(1.0, 0.0), pt(0.0, 1.0)).unwrap();
    let a = ogda_step(&xy, &s, 0.1).unwrap();
    let g = lifted_map(&xy, &[1.0, 0.0, 0.0, 1.0], 0.1).unwrap();
    assert_eq!(g, vec![a.cur.x()[0], a.cur.y()[0], a.prev.x()[0], a.prev.y()[0]]);
}

#[test]
fn h_and_jacobian_examples() {
    let o = pt(0.0, 0.0);
    assert_eq!(h_gda(&f("xy"), &o).unwrap().to_rows(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
    assert_eq!(h_gda(&f("f1"), &o).unwrap().to_rows(), vec![vec![0.25, -0.6], vec![0.6, -1.0]]);
    assert_eq!(h_gda(&f("f2"), &o).unwrap().to_rows(), vec![vec![-1.0, -4.0], vec![4.0, 1.0]]);

    let a = 0.03;
    let j = jacobian_gda(&f("xy"), &o, a).unwrap();
    assert_eq!(j.to_rows(), vec![vec![1.0, -a], vec![a, 1.0]]);
    let j = jacobian_gda(&f("f1"), &o, a).unwrap();
    let want = [[1.0 + a / 4.0, -0.6 * a], [0.6 * a, 1.0 - a]];
    for i in 0..2 {
        for k in 0..2 {
            assert_abs_diff_eq!(j[(i, k)], want[i][k], epsilon = 1e-15);
        }
    }
    let j = jacobian_gda(&f("w"), &Point::zeros(5, 5), 0.1).unwrap();
    for i in 0..10 {
        assert_abs_diff_eq!(j[(i, i)], 0.8, epsilon = 1e-15);
    }
}

#[test]
fn ogda_jacobian_against_formula_and_finite_differences() {
    let a = 0.1;
    let j = jacobian_ogda(&f("xy"), &pt(0.0, 0.0), a).unwrap();
    let want = vec![
        vec![1.0, -2.0 * a, 0.0, a],
        vec![2.0 * a, 1.0, -a, 0.0],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
    ];
    assert_eq!(j.to_rows(), want);

    // f1: finite differences of the lifted OGDA step at the fixed point
    let f1 = f("f1");
    let a = 0.05;
    let j = jacobian_ogda(&f1, &pt(0.0, 0.0), a).unwrap();
    let h = 1e-6;
    for col in 0..4 {
        let mut sp = [0.0; 4];
        let mut sm = [0.0; 4];
        sp[col] = h;
        sm[col] = -h;
        let gp = lifted_map(&f1, &sp, a).unwrap();
        let gm = lifted_map(&f1, &sm, a).unwrap();
        for row in 0..4 {
            assert_abs_diff_eq!((gp[row] - gm[row]) / (2.0 * h), j[(row, col)], epsilon = 1e-9);
        }
    }
    let tl = [[1.0 + a / 2.0, -1.2 * a], [1.2 * a, 1.0 - 2.0 * a]];
    let tr = [[-a / 4.0, 0.6 * a], [-0.6 * a, a]];
    for i in 0..2 {
        for k in 0..2 {
            assert_abs_diff_eq!(j[(i, k)], tl[i][k], epsilon = 1e-15);
            assert_abs_diff_eq!(j[(i, k + 2)], tr[i][k], epsilon = 1e-15);
        }
    }
}

#[test]
fn ogda_jacobian_on_equal_slots_acts_like_gda() {
    let fun = f("composite2d");
    let p = pt(1.0, 0.0);
    let a = 0.02;
    let jo = jacobian_ogda(&fun, &p, a).unwrap();
    let jg = jacobian_gda(&fun, &p, a).unwrap();
    let v = [0.3, -1.1];
    let out = jo.mul_vec(&[v[0], v[1], v[0], v[1]]);
    let top = jg.mul_vec(&v);
    assert_abs_diff_eq!(out[0], top[0], epsilon = 1e-15);
    assert_abs_diff_eq!(out[1], top[1], epsilon = 1e-15);
    assert_eq!(&out[2..], &v);
}

#[test]
fn eigenvalue_examples() {
    let s = eigenvalues(&Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]])).unwrap();
    assert!(multisets_match(&s.eigenvalues, &[C64::new(0.0, 1.0), C64::new(0.0, -1.0)], 1e-14));

    // trace -0.75, determinant 0.11
    let disc: f64 = 0.75f64 * 0.75 - 4.0 * 0.11;
    let roots = [(-0.75 + disc.sqrt()) / 2.0, (-0.75 - disc.sqrt()) / 2.0];
    assert_abs_diff_eq!(roots[0], -0.2, epsilon = 1e-15);
    assert_abs_diff_eq!(roots[1], -0.55, epsilon = 1e-15);
    let s = eigenvalues(&h_gda(&f("f1"), &pt(0.0, 0.0)).unwrap()).unwrap();
    assert!(multisets_match(&s.eigenvalues, &[C64::new(roots[0], 0.0), C64::new(roots[1], 0.0)], 1e-13));
}

#[test]
fn spectral_radius_examples() {
    let a = 0.01;
    let rho = spectral_radius(&Mat::from_rows(&[vec![1.0, -a], vec![a, 1.0]])).unwrap();
    assert_relative_eq!(rho, (1.0f64 + a * a).sqrt(), max_relative = 1e-14);
    assert_eq!(spectral_radius(&Mat::identity(4)).unwrap(), 1.0);
    let a = 0.1;
    let rho = spectral_radius(&jacobian_ogda(&f("xy"), &pt(0.0, 0.0), a).unwrap()).unwrap();
    let closed = ((1.0 + (1.0f64 - 4.0 * a * a).sqrt()) / 2.0).sqrt();
    assert_abs_diff_eq!(rho, closed, epsilon = 1e-12);
    assert_abs_diff_eq!(rho, 0.994936, epsilon = 1e-6);
}

#[test]
fn root_map_examples() {
    let (a, b) = ogda_eigs_from_r(C64::new(0.0, 0.0));
    assert!(multisets_match(&[a, b], &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 1e-15));
    let (a, b) = ogda_eigs_from_r(C64::new(-0.3, 0.1));
    assert!(a.norm() <= 1.0 && b.norm() <= 1.0);
    let (a, b) = ogda_eigs_from_r(C64::new(0.0, 0.1));
    let s = eigenvalues(&jacobian_ogda(&f("xy"), &pt(0.0, 0.0), 0.1).unwrap()).unwrap();
    for r in [a, b] {
        assert!(s.eigenvalues.iter().any(|l| (l - r).norm() < 1e-12));
    }
}

#[test]
fn char_poly_examples() {
    let o = pt(0.0, 0.0);
    let c = char_poly_identity_check(&f("xy"), &o, 0.1, &[C64::new(2.0, 0.0)]).unwrap();
    assert!(c.max_rel_error <= 1e-8);
    let lambdas = minmax::properties::annulus_samples(20, 0.6, 3.0, 0.0, 1, 0);
    let c = char_poly_identity_check(&f("f1"), &o, 0.01, &lambdas).unwrap();
    assert!(c.max_rel_error <= 1e-8);
    assert_eq!(c.phase_only_mismatches, 0);
    // a shared root: (l^2 + l - 1)/(2l - 1) = 1 + r with r an eigenvalue of aH
    let (l, _) = ogda_eigs_from_r(C64::new(0.01 * -0.2, 0.0));
    let c = char_poly_identity_check(&f("f1"), &o, 0.01, &[l]).unwrap();
    assert!(c.max_rel_error <= 1e-12);
    assert!(char_poly_identity_check(&f("f1"), &o, 0.01, &[C64::new(0.5, 0.0)]).unwrap_err().is_input());
}

#[test]
fn classification_examples() {
    let o = pt(0.0, 0.0);
    let w0 = Point::zeros(5, 5);
    assert_eq!(local_minmax_test(&f("xy"), &o).unwrap(), Verdict::Yes);
    assert_eq!(local_minmax_test(&f("f1"), &o).unwrap(), Verdict::No);
    assert_eq!(local_minmax_test(&f("w"), &w0).unwrap(), Verdict::Yes);
    assert_eq!(gda_stability_at_alpha(&f("f1"), &o, 0.001).unwrap(), Stability::Stable);
    assert_eq!(gda_stability_at_alpha(&f("xy"), &o, 0.3).unwrap(), Stability::Unstable);
    assert_eq!(ogda_stability_at_alpha(&f("f2"), &o, 0.05).unwrap(), Stability::Stable);
    assert_eq!(gda_stability_at_alpha(&f("f2"), &o, 0.05).unwrap(), Stability::Unstable);
    assert_eq!(gda_stability_small_alpha(&f("f1"), &o).unwrap(), LimitStability::Stable);
    assert_eq!(ogda_stability_small_alpha(&f("f2"), &o).unwrap(), LimitStability::Stable);
    assert_eq!(gda_stability_small_alpha(&f("f2"), &o).unwrap(), LimitStability::Unstable);
    let cfg = AssumptionConfig::default();
    assert_eq!(assumption_checks(&f("xy"), &o, &cfg).unwrap(), (true, false));
    assert_eq!(assumption_checks(&f("w"), &w0, &cfg).unwrap(), (true, true));
}

#[test]
fn marginal_band() {
    // rho(J_GDA) = sqrt(1 + a^2) for xy: within 1e-9 of 1 for a = 1e-5
    assert_eq!(gda_stability_at_alpha(&f("xy"), &pt(0.0, 0.0), 1e-5).unwrap(), Stability::MarginallyStable);
}

#[test]
fn critical_point_examples() {
    let region = BoxRegion::cube(2, -5.0, 5.0);
    let s = find_critical_points(&f("composite2d"), &region, 100, 2).unwrap();
    assert_eq!(s.len(), 5);
    for p in &s.points {
        let q = gda_step(&f("composite2d"), p, 0.001).unwrap();
        assert!(q.distance(p) <= 1e-9);
    }
    let r = full_report(&f("composite2d"), &region, 0.001, 100, 2).unwrap();
    let at = |x: f64, y: f64| r.iter().find(|r| r.point.distance(&pt(x, y)) < 1e-3).unwrap();
    for (x, y) in [(0.0, 1.0), (0.3301, 0.3357)] {
        assert_eq!(at(x, y).gda_at_alpha, Stability::Unstable);
        assert_eq!(at(x, y).ogda_at_alpha, Stability::Unstable);
    }
    assert_eq!(at(1.0, 0.0).gda_at_alpha, Stability::Stable);
    assert_eq!(at(1.0, 0.0).ogda_at_alpha, Stability::Stable);
    assert_eq!(at(1.0, 0.0).local_minmax, Verdict::Yes);
    // sorted
    for w in r.windows(2) {
        assert!(w[0].point.x()[0] <= w[1].point.x()[0] + 1e-6);
    }
}

#[test]
fn avoidance_is_vacuous_for_w() {
    let w = f("w");
    let region = BoxRegion::cube(10, -5.0, 5.0);
    let reports = full_report(&w, &region, 0.1, 5, 0).unwrap();
    assert_eq!(reports.len(), 1);
    let mut cfg = SweepConfig::new(region, 50, Method::Gda, 0);
    cfg.step = StepConfig::new(0.1);
    let a = avoidance_check(&w, &cfg, &reports).unwrap();
    assert!(a.unstable_points.is_empty());
    assert_eq!(a.fraction, 0.0);
    assert_eq!(a.sweep.per_point_fraction, vec![1.0]);
}

#[test]
fn field_examples() {
    let f1 = f("f1");
    let region = BoxRegion::cube(2, -1.0, 1.0);
    let field = vector_field_export(&f1, &region, 50, 0.001, Method::Gda).unwrap();
    assert_eq!(field.len(), 2500);
    let corner = field.iter().find(|s| s.x == 1.0 && s.y == 1.0).unwrap();
    let (gx, gy) = f1.gradient(&pt(1.0, 1.0)).unwrap();
    assert_abs_diff_eq!(corner.dx, -0.001 * gx[0], epsilon = 1e-16);
    assert_abs_diff_eq!(corner.dy, 0.001 * gy[0], epsilon = 1e-16);
    assert_abs_diff_eq!(corner.dx, -0.00035, epsilon = 1e-15);
    assert_abs_diff_eq!(corner.dy, -0.0004, epsilon = 1e-15);
    let odd = vector_field_export(&f1, &BoxRegion::cube(2, -1.0, 1.0), 3, 0.001, Method::Gda).unwrap();
    let centre = odd.iter().find(|s| s.x == 0.0 && s.y == 0.0).unwrap();
    assert_eq!((centre.dx, centre.dy), (0.0, 0.0));
}
