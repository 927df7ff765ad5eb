//! Shared helpers and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cnrange::io::read_matrix;
use cnrange::linalg::expm_skew;
use cnrange::{ComplexMatrix, UnitaryMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data(name: &str) -> ComplexMatrix {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    read_matrix(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn random_matrix<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let m = random_matrix(n, rng);
    (&m + &m.adjoint()).scale_real(0.5)
}

pub fn random_skew<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let m = random_matrix(n, rng);
    (&m - &m.adjoint()).scale_real(0.5)
}

/// Eigenvalues of a Hermitian matrix in decreasing order.
pub fn hermitian_eigenvalues_desc(h: &ComplexMatrix) -> Vec<f64> {
    let m: DMatrix<C64> = h.as_dmatrix().clone();
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Radius of `W(C, A)` for Hermitian `A`, `C`: the range is the real interval
/// between the oppositely and equally sorted eigenvalue inner products.
pub fn hermitian_radius(a: &ComplexMatrix, c: &ComplexMatrix) -> f64 {
    let ea = hermitian_eigenvalues_desc(a);
    let ec = hermitian_eigenvalues_desc(c);
    let hi: f64 = ea.iter().zip(&ec).map(|(x, y)| x * y).sum();
    let lo: f64 = ea.iter().zip(ec.iter().rev()).map(|(x, y)| x * y).sum();
    hi.abs().max(lo.abs())
}

/// Central difference of `F(exp(−tH) U)` at `t = 0`.
pub fn directional_fd(f: impl Fn(&UnitaryMatrix) -> f64, u: &UnitaryMatrix, h: &ComplexMatrix, eps: f64) -> f64 {
    let plus = expm_skew(h, eps).unwrap().compose(u).unwrap();
    let minus = expm_skew(h, -eps).unwrap().compose(u).unwrap();
    (f(&plus) - f(&minus)) / (2.0 * eps)
}

/// `tr(A†B)` computed entrywise.
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            s += a.get(i, j).conj() * b.get(i, j);
        }
    }
    s
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm()
}

/// `|⟨φ(θ, ϕ)|ψ⟩|²` for the product state with Bloch angles
/// `params = [θ₁, ϕ₁, θ₂, ϕ₂, …]`.
pub fn product_overlap(psi: &[C64], params: &[f64]) -> f64 {
    let n = params.len() / 2;
    let mut amp = C64::new(0.0, 0.0);
    for (idx, &c) in psi.iter().enumerate() {
        let mut prod = C64::new(1.0, 0.0);
        for k in 0..n {
            let bit = (idx >> (n - 1 - k)) & 1;
            let (theta, phi) = (params[2 * k], params[2 * k + 1]);
            let a = if bit == 0 {
                C64::new((theta / 2.0).cos(), 0.0)
            } else {
                C64::from_polar((theta / 2.0).sin(), phi)
            };
            prod *= a.conj();
        }
        amp += prod * c;
    }
    amp.norm_sqr()
}

struct Overlap<'a> {
    psi: &'a [C64],
}

impl CostFunction for Overlap<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        Ok(-product_overlap(self.psi, p))
    }
}

impl Gradient for Overlap<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> Result<Vec<f64>, argmin::core::Error> {
        // d|a|²/dx = 2 Re(a* da/dx), differentiating one conjugated factor at a time.
        let n = p.len() / 2;
        let factor = |k: usize, bit: usize, wrt: Option<usize>| {
            let (theta, phi) = (p[2 * k], p[2 * k + 1]);
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let z = match (bit, wrt) {
                (0, None) => C64::new(c, 0.0),
                (0, Some(0)) => C64::new(-s / 2.0, 0.0),
                (0, Some(_)) => C64::new(0.0, 0.0),
                (_, None) => C64::from_polar(s, phi),
                (_, Some(0)) => C64::from_polar(c / 2.0, phi),
                (_, Some(_)) => C64::from_polar(s, phi) * C64::new(0.0, 1.0),
            };
            z.conj()
        };
        let amplitude = |target: Option<(usize, usize)>| {
            let mut amp = C64::new(0.0, 0.0);
            for (idx, &c) in self.psi.iter().enumerate() {
                let mut prod = C64::new(1.0, 0.0);
                for k in 0..n {
                    let bit = (idx >> (n - 1 - k)) & 1;
                    let wrt = target.and_then(|(t, w)| (t == k).then_some(w));
                    prod *= factor(k, bit, wrt);
                }
                amp += prod * c;
            }
            amp
        };
        let a = amplitude(None);
        Ok((0..2 * n).map(|i| -2.0 * (a.conj() * amplitude(Some((i / 2, i % 2)))).re).collect())
    }
}

/// `max |⟨φ|ψ⟩|²` over pure product states by BFGS from `starts` random
/// Bloch-angle starts.
pub fn max_product_overlap(psi: &[C64], starts: usize, seed: u64) -> f64 {
    let n = psi.len().trailing_zeros() as usize;
    let mut r = rng(seed);
    let mut best = 0.0f64;
    for _ in 0..starts {
        let x0: Vec<f64> = (0..2 * n)
            .map(|i| if i % 2 == 0 { r.random_range(0.0..std::f64::consts::PI) } else { r.random_range(0.0..std::f64::consts::TAU) })
            .collect();
        best = best.max(product_overlap(psi, &x0));
        let ident: Vec<Vec<f64>> = (0..2 * n).map(|i| (0..2 * n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let solver = BFGS::new(MoreThuenteLineSearch::new()).with_tolerance_grad(1e-12).unwrap();
        let res = Executor::new(Overlap { psi }, solver)
            .configure(|s| s.param(x0).inv_hessian(ident).max_iters(200))
            .run();
        if let Ok(res) = res {
            let c = res.state().best_cost;
            if c.is_finite() {
                best = best.max(-c);
            }
        }
    }
    best
}
