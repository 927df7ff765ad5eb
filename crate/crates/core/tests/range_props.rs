mod common;

use common::*;

use cnrange::flow::transfer;
use cnrange::linalg::{haar_unitary_with, j_plus, stream_rng};
use cnrange::range::{distance_to_polygon, min_angle, min_distance, star_center, trace_boundary, winding_number};
use cnrange::{BoundaryOptions, ComplexMatrix, FlowConfig, C64};

fn wca3() -> (ComplexMatrix, ComplexMatrix) {
    (data("wca3_A.json"), data("wca3_C.json"))
}

fn cfg() -> FlowConfig {
    FlowConfig::default().with_restarts(4)
}

#[test]
fn hermitian_pair_collapses_to_segment() {
    let a = ComplexMatrix::diag_real(&[1.0, -1.0]).scale_real(std::f64::consts::FRAC_1_SQRT_2);
    let curve = trace_boundary(&a, &a, &BoundaryOptions::default().with_m(32), &cfg()).unwrap();
    assert!(curve.max_abs_imag() <= 1e-4);
    let re: Vec<f64> = curve.points.iter().map(|p| p.point.re).collect();
    let (lo, hi) = re.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    assert!((hi - 1.0).abs() < 1e-4 && (lo + 1.0).abs() < 1e-4);

    let mut r = rng(2);
    let (a, c) = (random_hermitian(3, &mut r), random_hermitian(3, &mut r));
    let curve = trace_boundary(&a, &c, &BoundaryOptions::default().with_m(16), &cfg()).unwrap();
    assert!(curve.max_abs_imag() <= 1e-4);
}

#[test]
fn nilpotent_target_traces_a_circle() {
    let mut r = rng(9);
    let a = random_matrix(2, &mut r);
    let curve = trace_boundary(&a, &j_plus(), &BoundaryOptions::default().with_m(48), &cfg()).unwrap();
    let mods: Vec<f64> = curve.points.iter().map(|p| p.point.norm()).collect();
    let (lo, hi) = mods.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    assert!(hi / lo <= 1.02, "ratio {}", hi / lo);
    assert!(curve.center.norm() < 1e-12);
}

#[test]
fn rotating_a_rotates_the_curve() {
    let mut r = rng(14);
    let (a, c) = (random_matrix(3, &mut r), random_matrix(3, &mut r));
    let theta = 0.9f64;
    let phase = C64::from_polar(1.0, theta);
    let opts = BoundaryOptions::default().with_m(64);
    let base = trace_boundary(&a, &c, &opts, &cfg()).unwrap();
    let turned = trace_boundary(&a.scale(phase), &c, &opts, &cfg()).unwrap();
    assert!((turned.center - phase * base.center).norm() < 1e-12);
    // Points of the rotated curve lie on the rotated polygon and vice versa.
    let rotated: Vec<C64> = base.polygon().iter().map(|z| phase * z).collect();
    let turned_poly = turned.polygon();
    let scale = base.max_modulus();
    let max_edge = rotated
        .iter()
        .zip(rotated.iter().cycle().skip(1))
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    let tol = 1e-4 + max_edge * max_edge / scale;
    for z in &turned_poly {
        assert!(distance_to_polygon(&rotated, *z) <= tol);
    }
    for z in &rotated {
        assert!(distance_to_polygon(&turned_poly, *z) <= tol);
    }
}

#[test]
fn haar_samples_lie_inside_the_traced_boundary() {
    let (a, c) = wca3();
    let curve = trace_boundary(&a, &c, &BoundaryOptions::default().with_m(500), &cfg()).unwrap();
    let poly = curve.polygon();
    let center = star_center(&a, &c).unwrap();
    let mut outside = 0;
    let mut worst: f64 = 0.0;
    for i in 0..10_000u64 {
        let u = haar_unitary_with(3, &mut stream_rng(17, i));
        let z = transfer(&u, &a, &c).unwrap();
        if winding_number(&poly, z) == 0 {
            let d = distance_to_polygon(&poly, z);
            worst = worst.max(d);
            if d > 1e-6 {
                outside += 1;
            }
        }
        // Star-shapedness: the segment to the center stays inside.
        if i < 1000 {
            for k in 1..10 {
                let p = center + (z - center) * (k as f64 / 10.0);
                assert!(curve.contains(p, 1e-4), "segment point {p} outside");
            }
        }
    }
    assert_eq!(outside, 0, "worst excursion {worst:e}");
}

#[test]
fn distance_and_angle_oracles() {
    let mut r = rng(31);
    let a = random_matrix(3, &mut r);
    let u = haar_unitary_with(3, &mut r);
    let planted = u.conjugate(&a);
    assert!(min_distance(&a, &planted, &cfg()).unwrap() < 1e-5);
    assert!(min_angle(&a, &planted, &cfg()).unwrap() < 1e-3);

    let a = ComplexMatrix::diag_real(&[3.0, 1.0, -2.0]);
    let h = random_hermitian(3, &mut r);
    let ea = hermitian_eigenvalues_desc(&a);
    let eh = hermitian_eigenvalues_desc(&h);
    let want: f64 = ea.iter().zip(&eh).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    assert!((min_distance(&a, &h, &cfg()).unwrap() - want).abs() < 1e-5);

    let traceless = ComplexMatrix::diag_real(&[0.5, -0.5]);
    let ident = ComplexMatrix::identity(2);
    let angle = min_angle(&traceless, &ident, &cfg()).unwrap();
    assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}
