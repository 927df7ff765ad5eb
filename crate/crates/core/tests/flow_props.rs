mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;

use cnrange::flow::{ascend, gradient_f1, gradient_f2, radius, transfer};
use cnrange::linalg::{
    c_spectrum, devectorize, expm_skew, haar_random_unitary, haar_unitary_with, hs_inner, split_skew_herm, stream_rng,
    vectorize,
};
use cnrange::{ComplexMatrix, FlowConfig, Objective, C64};

fn relative_gap(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1e-12)
}

#[test]
fn gradients_match_central_differences() {
    let mut r = rng(11);
    for trial in 0..60 {
        let n = 2 + trial % 3;
        let (a, c) = (random_matrix(n, &mut r), random_matrix(n, &mut r));
        let u = haar_unitary_with(n, &mut r);
        let h = random_skew(n, &mut r);
        let g1 = gradient_f1(&u, &a, &c).unwrap();
        let g2 = gradient_f2(&u, &a, &c).unwrap();
        let fd1 = directional_fd(|v| transfer(v, &a, &c).unwrap().re, &u, &h, 1e-6);
        let fd2 = directional_fd(|v| transfer(v, &a, &c).unwrap().norm_sqr(), &u, &h, 1e-6);
        assert!(relative_gap(inner(&g1, &h).re, fd1) < 1e-5, "G1 trial {trial}");
        assert!(relative_gap(inner(&g2, &h).re, fd2) < 1e-5, "G2 trial {trial}");
        assert!(g1.is_skew_hermitian(1e-12) && g2.is_skew_hermitian(1e-12));
    }
}

#[test]
fn flow_matches_von_neumann_for_hermitian_pairs() {
    let mut r = rng(5);
    for n in [3, 4] {
        let (a, c) = (random_hermitian(n, &mut r), random_hermitian(n, &mut r));
        let got = radius(&a, &c, &FlowConfig::default().with_restarts(8)).unwrap();
        assert!(relative_gap(got, hermitian_radius(&a, &c)) < 1e-6);
        let ea = hermitian_eigenvalues_desc(&a);
        let ec = hermitian_eigenvalues_desc(&c);
        let sorted: f64 = ea.iter().zip(&ec).map(|(x, y)| x * y).sum();
        let f1 = ascend(&a, &c, Objective::RealPart, &FlowConfig::default().with_restarts(8)).unwrap();
        assert!((f1.objective - sorted).abs() < 1e-6);
    }
}

#[test]
fn rank_one_target_gives_spectral_radius() {
    let mut r = rng(8);
    for n in [2, 3, 5] {
        let a = random_hermitian(n, &mut r);
        let mut diag = vec![0.0; n];
        diag[0] = 1.0;
        let c = ComplexMatrix::diag_real(&diag);
        let ev = hermitian_eigenvalues_desc(&a);
        let want = ev[0].abs().max(ev[n - 1].abs());
        let got = radius(&a, &c, &FlowConfig::default().with_restarts(6)).unwrap();
        assert!((got - want).abs() < 1e-6, "n = {n}: {got} vs {want}");
    }
}

#[test]
fn accepted_steps_never_decrease_and_stay_bounded() {
    let mut r = rng(21);
    for (k, obj) in [Objective::RealPart, Objective::SquaredModulus].into_iter().enumerate() {
        let n = 3 + k;
        let (a, c) = (random_matrix(n, &mut r), random_matrix(n, &mut r));
        let bound = a.frobenius_norm() * c.frobenius_norm() + 1e-9;
        let cfg = FlowConfig::default().with_restarts(1).with_trajectory(true).with_seed(k as u64);
        let res = ascend(&a, &c, obj, &cfg).unwrap();
        let t = res.trajectory.expect("recorded");
        assert!(t.objectives.windows(2).all(|w| w[1] >= w[0]));
        assert!(t.values.iter().all(|f| f.norm() <= bound));
        if res.converged {
            let g = match obj {
                Objective::RealPart => gradient_f1(&res.optimum, &a, &c),
                Objective::SquaredModulus => gradient_f2(&res.optimum, &a, &c),
            }
            .unwrap();
            assert!(g.frobenius_norm() <= cfg.gradient_tol * 1.0001);
        }
    }
}

#[test]
fn identity_shift_translates_values() {
    let mut r = rng(3);
    let n = 4;
    let (a, c) = (random_matrix(n, &mut r), random_matrix(n, &mut r));
    let mu = C64::new(0.7, -0.3);
    let shifted = &a + &ComplexMatrix::identity(n).scale(mu);
    let offset = mu * c.adjoint().trace();
    for seed in 0..10 {
        let u = haar_random_unitary(n, seed).unwrap();
        let diff = transfer(&u, &shifted, &c).unwrap() - transfer(&u, &a, &c).unwrap() - offset;
        assert!(diff.norm() < 1e-12);
    }
    // F1 of the shifted problem differs by the constant Re(μ tr C†).
    let cfg = FlowConfig::default().with_restarts(6);
    let base = ascend(&a, &c, Objective::RealPart, &cfg).unwrap();
    let moved = ascend(&shifted, &c, Objective::RealPart, &cfg).unwrap();
    assert!((moved.objective - base.objective - offset.re).abs() < 1e-8);
}

#[test]
fn haar_first_moment() {
    let mut sum = 0.0;
    let samples = 10_000;
    for i in 0..samples {
        let u = haar_unitary_with(2, &mut stream_rng(99, i));
        sum += u.matrix().get(0, 0).norm_sqr();
    }
    assert!((sum / samples as f64 - 0.5).abs() < 0.02);
}

#[test]
fn vec_identity_on_random_triples() {
    let mut r = rng(4);
    for _ in 0..5 {
        let (x, y, z) = (random_matrix(3, &mut r), random_matrix(3, &mut r), random_matrix(3, &mut r));
        let lhs_matrix = z.transpose().kron(&x);
        let vy = vectorize(&y).unwrap();
        let prod: Vec<C64> = (0..9).map(|i| (0..9).map(|j| lhs_matrix.get(i, j) * vy[j]).sum()).collect();
        let want = &(&x * &y) * &z;
        assert!(devectorize(&prod).unwrap().max_abs_diff(&want) < 1e-12);
    }
}

#[test]
fn expm_matches_eigendecomposition_oracle() {
    let mut r = rng(6);
    for _ in 0..5 {
        let g = random_skew(4, &mut r);
        let t: f64 = r.random_range(-1.0..1.0);
        // exp(−tG) = V diag(e^{i t λ}) V† for iG = V diag(λ) V†.
        let ig = g.scale(C64::new(0.0, 1.0));
        let eig = ig.as_dmatrix().clone().symmetric_eigen();
        let v = eig.eigenvectors;
        let d = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, t * l)));
        let oracle = ComplexMatrix::from_dmatrix(&v * d * v.adjoint()).unwrap();
        assert!(expm_skew(&g, t).unwrap().matrix().max_abs_diff(&oracle) < 1e-12);
    }
}

fn sorted_points(mut p: Vec<C64>) -> Vec<C64> {
    p.sort_by(|a, b| {
        let ka = ((a.re * 1e6).round(), (a.im * 1e6).round());
        let kb = ((b.re * 1e6).round(), (b.im * 1e6).round());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_recombines(seed in any::<u64>(), n in 1usize..6) {
        let m = random_matrix(n, &mut rng(seed));
        let (s, h) = split_skew_herm(&m).unwrap();
        prop_assert!((&s + &h).max_abs_diff(&m) < 1e-15);
        prop_assert!(s.skew_defect() < 1e-15 && h.hermitian_defect() < 1e-15);
    }

    #[test]
    fn expm_group_law(seed in any::<u64>(), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let g = random_skew(4, &mut rng(seed));
        let lhs = expm_skew(&g, s).unwrap().compose(&expm_skew(&g, t).unwrap()).unwrap();
        prop_assert!(lhs.matrix().max_abs_diff(expm_skew(&g, s + t).unwrap().matrix()) < 1e-10);
    }

    #[test]
    fn hs_inner_conjugation_invariant(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let (a, c) = (random_matrix(n, &mut r), random_matrix(n, &mut r));
        let u = haar_unitary_with(n, &mut r);
        let lhs = hs_inner(&u.conjugate(&a), &u.conjugate(&c)).unwrap();
        prop_assert!((lhs - hs_inner(&a, &c).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn c_spectrum_conjugation_invariant(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let (a, c) = (random_matrix(n, &mut r), random_matrix(n, &mut r));
        let (v, w) = (haar_unitary_with(n, &mut r), haar_unitary_with(n, &mut r));
        let p = sorted_points(c_spectrum(&c, &a).unwrap().points);
        let q = sorted_points(c_spectrum(&w.conjugate(&c), &v.conjugate(&a)).unwrap().points);
        prop_assert_eq!(p.len(), q.len());
        for (x, y) in p.iter().zip(&q) {
            prop_assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn transfer_obeys_cauchy_schwarz(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let (a, c) = (random_matrix(n, &mut r), random_matrix(n, &mut r));
        let u = haar_unitary_with(n, &mut r);
        prop_assert!(transfer(&u, &a, &c).unwrap().norm() <= a.frobenius_norm() * c.frobenius_norm() + 1e-12);
    }
}
