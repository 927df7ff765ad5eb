mod common;

use common::*;
use proptest::prelude::*;

use cnrange::constrained::{
    ascend_invariance_lagrange, ascend_orthogonality, ascend_projected, min_modulus, stabilizer_algebra,
};
use cnrange::{ComplexMatrix, FlowConfig, LambdaSchedule, C64};

fn invariance_residual(u: &cnrange::UnitaryMatrix, e: &ComplexMatrix) -> f64 {
    frobenius_distance(&u.conjugate(e), e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stabilizers_are_closed_subalgebras(seed in any::<u64>(), n in 2usize..5, hermitian in any::<bool>()) {
        let mut r = rng(seed);
        let e = if hermitian { random_hermitian(n, &mut r) } else { random_matrix(n, &mut r) };
        let basis = stabilizer_algebra(&e).unwrap();
        prop_assert!(basis.closure_residual() <= 1e-8);
        prop_assert!(basis.commutation_residual() <= 1e-8);
        // Generic Hermitian E: a maximal torus of rank N − 1. Generic
        // non-normal E: only scalars commute, none of them traceless.
        prop_assert_eq!(basis.dimension(), if hermitian { n - 1 } else { 0 });
    }
}

#[test]
fn projected_iterates_stay_in_the_stabilizer() {
    let mut r = rng(60);
    let (a, c) = (random_matrix(3, &mut r), random_matrix(3, &mut r));
    let e = ComplexMatrix::diag_real(&[1.0, 0.0, 0.0]);
    let basis = stabilizer_algebra(&e).unwrap();
    for steps in 1..=40 {
        let cfg = FlowConfig::default().with_restarts(1).with_max_iters(steps);
        let res = ascend_projected(&a, &c, &basis, &cfg).unwrap();
        for run in &res.runs {
            assert!(run.constraint_residual <= 1e-8, "step {steps}: {}", run.constraint_residual);
        }
        assert!(invariance_residual(&res.optimum, &e) <= 1e-8);
    }
}

#[test]
fn projected_and_lagrange_flows_agree() {
    let e = ComplexMatrix::diag_real(&[1.0, 0.0, 0.0]);
    let basis = stabilizer_algebra(&e).unwrap();
    let cfg = FlowConfig::default().with_restarts(6);
    let mut r = rng(61);
    for trial in 0..20 {
        let (a, c) = (random_matrix(3, &mut r), random_matrix(3, &mut r));
        let p = ascend_projected(&a, &c, &basis, &cfg).unwrap();
        let l = ascend_invariance_lagrange(&a, &c, &e, &cfg, &LambdaSchedule::default()).unwrap();
        let (pp, ll) = (p.f_c.norm_sqr(), l.f_c.norm_sqr());
        assert!((pp - ll).abs() <= 1e-3, "trial {trial}: {pp} vs {ll}");
        assert!(l.constraint_residual <= 1e-4);
    }
}

#[test]
fn diagonal_stabilizer_matches_torus_grid() {
    let mut r = rng(62);
    let (a, c) = (random_matrix(3, &mut r), random_matrix(3, &mut r));
    let e = ComplexMatrix::diag_real(&[1.0, 2.0, 3.0]);
    let basis = stabilizer_algebra(&e).unwrap();
    let res = ascend_projected(&a, &c, &basis, &FlowConfig::default().with_restarts(10)).unwrap();
    // Global phase is irrelevant: scan diag(1, e^{iα}, e^{iβ}).
    let steps = 400;
    let mut best: f64 = 0.0;
    for i in 0..steps {
        for j in 0..steps {
            let (x, y) = (std::f64::consts::TAU * i as f64 / steps as f64, std::f64::consts::TAU * j as f64 / steps as f64);
            let d = [C64::new(1.0, 0.0), C64::from_polar(1.0, x), C64::from_polar(1.0, y)];
            let mut f = C64::new(0.0, 0.0);
            for p in 0..3 {
                for q in 0..3 {
                    f += c.get(p, q).conj() * d[p] * a.get(p, q) * d[q].conj();
                }
            }
            best = best.max(f.norm());
        }
    }
    assert!(res.f_c.norm() >= best - 1e-9, "{} < {best}", res.f_c.norm());
    assert!(res.f_c.norm() - best <= 1e-3);
}

#[test]
fn orthogonality_runs_reach_the_level_set() {
    let (a, c, d) = (data("wcad3_A.json"), data("wcad3_C.json"), data("wcad3_D.json"));
    let cfg = FlowConfig::default().with_restarts(5).with_trajectory(true);
    let (m0, _) = min_modulus(&a, &d, &cfg).unwrap();
    let res = ascend_orthogonality(&a, &c, &d, &cfg, &LambdaSchedule::default()).unwrap();
    for run in &res.runs {
        let fd = run.f_d.expect("orthogonality run").norm();
        assert!(fd <= m0 + 1e-3, "|f_D| = {fd}");
        assert!(run.path.as_ref().is_some_and(|p| !p.is_empty()));
    }
    assert_eq!(res.m0.map(|m| m <= m0), Some(true));
}
