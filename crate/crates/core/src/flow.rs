//! Gradient ascent on the full unitary group for the transfer
//! `f(U) = tr(C† U A U†)`.
//!
//! Two target functions are supported: `F₁ = Re f` and `F₂ = |f|²`. Their
//! gradients at `U` are `−G⁽ᵛ⁾U` with skew-Hermitian
//!
//! ```text
//! G⁽¹⁾ = ½ ([UAU†, C†] − [UAU†, C†]†)
//! G⁽²⁾ = [UAU†, C†] f* − [UAU†, C†]† f
//! ```
//!
//! and the discrete flow is `U_{k+1} = exp(−α_k G_k) U_k` with Armijo
//! backtracking on `α_k`. Every run is a multi-start: the identity plus
//! `restarts` Haar-random initial points, best objective wins.

use serde::{Deserialize, Serialize};

use crate::ascent::{self, AscentProblem};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{
    commutator_unchecked, haar_unitary_with, hs_inner_unchecked, skew_part, stream_rng,
    unitary_unchecked, ComplexMatrix, SkewExponential, UnitaryMatrix, C64, UNITARITY_TOL,
};

/// Step-size, tolerance and multi-start settings shared by all flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub initial_step: f64,
    /// Threshold on the Frobenius norm of the gradient generator.
    pub gradient_tol: f64,
    pub max_iters: usize,
    /// Haar-random starts in addition to the identity start.
    pub restarts: usize,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    pub seed: u64,
    pub record_trajectory: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            gradient_tol: 1e-8,
            max_iters: 10_000,
            restarts: 20,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            seed: 0,
            record_trajectory: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive");
        }
        if self.gradient_tol.is_nan() || self.gradient_tol <= 0.0 {
            return bad("gradient_tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return bad("armijo_slope must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_gradient_tol(mut self, tol: f64) -> Self {
        self.gradient_tol = tol;
        self
    }

    pub fn with_trajectory(mut self, record: bool) -> Self {
        self.record_trajectory = record;
        self
    }
}

/// How a penalty weight grows with the iteration count `k` of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    /// `λ₀ (1 + k / period)`.
    Linear { period: f64 },
    /// `λ₀ · factor^⌊k / period⌋`.
    Geometric { factor: f64, period: usize },
    Constant,
}

/// Penalty weight schedule `λ_k`, capped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub initial: f64,
    pub growth: Growth,
    pub cap: f64,
}

impl Default for LambdaSchedule {
    /// `λ_k = 10 (1 + k/50)`, capped at `10⁴`.
    fn default() -> Self {
        Self::linear(10.0, 50.0, 1e4)
    }
}

impl LambdaSchedule {
    pub fn linear(initial: f64, period: f64, cap: f64) -> Self {
        Self { initial, growth: Growth::Linear { period }, cap }
    }

    pub fn geometric(initial: f64, factor: f64, period: usize, cap: f64) -> Self {
        Self { initial, growth: Growth::Geometric { factor, period }, cap }
    }

    pub fn constant(lambda: f64) -> Self {
        Self { initial: lambda, growth: Growth::Constant, cap: lambda }
    }

    pub fn at(&self, k: usize) -> f64 {
        let raw = match self.growth {
            Growth::Linear { period } => self.initial * (1.0 + k as f64 / period),
            Growth::Geometric { factor, period } => {
                let steps = (k / period.max(1)).min(i32::MAX as usize) as i32;
                self.initial * factor.powi(steps)
            }
            Growth::Constant => self.initial,
        };
        raw.min(self.cap)
    }

    /// Whether `λ_k` has reached its final value.
    pub fn saturated(&self, k: usize) -> bool {
        self.at(k) >= self.cap || matches!(self.growth, Growth::Constant)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.initial >= 0.0
            && self.initial.is_finite()
            && self.cap >= self.initial
            && self.cap.is_finite()
            && match self.growth {
                Growth::Linear { period } => period > 0.0,
                Growth::Geometric { factor, period } => factor >= 1.0 && period > 0,
                Growth::Constant => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid multiplier schedule {self:?}")))
        }
    }
}

/// Per-accepted-step record of a single flow.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub values: Vec<C64>,
    pub objectives: Vec<f64>,
}

/// Outcome of a (multi-start) flow.
#[derive(Debug, Clone)]
pub struct FlowResult<P = UnitaryMatrix> {
    pub optimum: P,
    /// Transfer value `f` at the optimum.
    pub value: C64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Index of the start that produced this result (0 is the identity).
    pub restart: usize,
    pub trajectory: Option<Trajectory>,
}

/// Target function of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// `F₁ = Re f`.
    RealPart,
    /// `F₂ = |f|²`.
    SquaredModulus,
}

impl Objective {
    pub(crate) fn eval(self, f: C64) -> f64 {
        match self {
            Objective::RealPart => f.re,
            Objective::SquaredModulus => f.norm_sqr(),
        }
    }
}

pub(crate) fn check_pair(a: &ComplexMatrix, c: &ComplexMatrix) -> Result<usize> {
    let n = a.require_square("A")?;
    if c.rows() != n || c.cols() != n {
        return Err(dim_err(format!(
            "A is {n}x{n} but C is {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    Ok(n)
}

/// `f(U) = tr(C† U A U†)`.
pub fn transfer(u: &UnitaryMatrix, a: &ComplexMatrix, c: &ComplexMatrix) -> Result<C64> {
    let n = check_pair(a, c)?;
    if u.dim() != n {
        return Err(dim_err("U does not match A and C"));
    }
    Ok(hs_inner_unchecked(c, &u.conjugate(a)))
}

/// `[UAU†, C†]` together with `f(U)`.
pub(crate) fn transfer_commutator(
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> (ComplexMatrix, C64) {
    let f = hs_inner_unchecked(c, b);
    (commutator_unchecked(b, &c.adjoint()), f)
}

fn check_triple(u: &UnitaryMatrix, a: &ComplexMatrix, c: &ComplexMatrix) -> Result<()> {
    let n = check_pair(a, c)?;
    if u.dim() != n {
        return Err(dim_err("U does not match A and C"));
    }
    Ok(())
}

/// Skew-Hermitian generator `G⁽¹⁾` of `F₁ = Re f`.
pub fn gradient_f1(u: &UnitaryMatrix, a: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_triple(u, a, c)?;
    let (x, _) = transfer_commutator(&u.conjugate(a), c);
    Ok(skew_part(&x))
}

/// Skew-Hermitian generator `G⁽²⁾` of `F₂ = |f|²`.
pub fn gradient_f2(u: &UnitaryMatrix, a: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_triple(u, a, c)?;
    let (x, f) = transfer_commutator(&u.conjugate(a), c);
    Ok(generator_f2(&x, f))
}

pub(crate) fn generator_f2(x: &ComplexMatrix, f: C64) -> ComplexMatrix {
    // X f* − X† f = 2 (f* X)_S
    skew_part(&x.scale(f.conj())).scale_real(2.0)
}

/// Exponential step `exp(−αG) U`, re-verified and repaired if the product
/// drifts past the unitarity bound.
pub(crate) fn exp_step(u: &UnitaryMatrix, dir: &SkewExponential, alpha: f64) -> UnitaryMatrix {
    let e = dir.at(alpha);
    let prod = unitary_unchecked(e.matrix() * u.matrix());
    if prod.defect() > UNITARITY_TOL * u.dim() as f64 {
        prod.reproject()
    } else {
        prod
    }
}

/// `(1 + D) B (1 + D)† − B`, the change of a conjugated matrix under the
/// step `U ↦ (1 + D) U`.
pub(crate) fn conjugation_delta(d: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let dh = d.adjoint();
    let db = d * b;
    let sum = &db + &(b * &dh);
    &sum + &(&db * &dh)
}

/// `(1 + D) U`, re-projected when the product drifts past the unitarity
/// bound.
pub(crate) fn apply_delta(d: &ComplexMatrix, u: &UnitaryMatrix) -> UnitaryMatrix {
    let prod = unitary_unchecked(u.matrix() + &(d * u.matrix()));
    if prod.defect() > UNITARITY_TOL * u.dim() as f64 {
        prod.reproject()
    } else {
        prod
    }
}

/// Increase of the objective when `f` changes by `df`.
pub(crate) fn objective_gain(objective: Objective, f: C64, df: C64) -> f64 {
    match objective {
        Objective::RealPart => df.re,
        Objective::SquaredModulus => 2.0 * (f.conj() * df).re + df.norm_sqr(),
    }
}

/// Search direction of a flow on the full unitary group, with the
/// conjugated matrix `UAU†` and `f(U)` cached for the line search.
pub(crate) struct GroupStep {
    pub exp: SkewExponential,
    pub b: ComplexMatrix,
    pub f: C64,
}

pub(crate) struct TransferFlow<'a> {
    pub a: &'a ComplexMatrix,
    pub c: &'a ComplexMatrix,
    pub objective: Objective,
}

impl AscentProblem for TransferFlow<'_> {
    type Point = UnitaryMatrix;
    type Direction = GroupStep;

    fn objective(&self, u: &UnitaryMatrix, _k: usize) -> f64 {
        self.objective.eval(self.value(u))
    }

    fn direction(&self, u: &UnitaryMatrix, _k: usize) -> (GroupStep, f64) {
        let b = u.conjugate(self.a);
        let (x, f) = transfer_commutator(&b, self.c);
        let g = match self.objective {
            Objective::RealPart => skew_part(&x),
            Objective::SquaredModulus => generator_f2(&x, f),
        };
        let slope = g.norm_sqr();
        (GroupStep { exp: SkewExponential::new_unchecked(&g), b, f }, slope)
    }

    fn step(&self, u: &UnitaryMatrix, d: &GroupStep, alpha: f64, _k: usize) -> (UnitaryMatrix, f64) {
        let delta = d.exp.minus_identity_at(alpha);
        let df = hs_inner_unchecked(self.c, &conjugation_delta(&delta, &d.b));
        (apply_delta(&delta, u), objective_gain(self.objective, d.f, df))
    }

    fn value(&self, u: &UnitaryMatrix) -> C64 {
        hs_inner_unchecked(self.c, &u.conjugate(self.a))
    }

    fn repair(&self, u: UnitaryMatrix) -> UnitaryMatrix {
        u.reproject()
    }
}

/// Identity for start 0, Haar-random unitaries from per-start streams after.
pub(crate) fn haar_start(n: usize, seed: u64, index: usize) -> UnitaryMatrix {
    if index == 0 {
        UnitaryMatrix::identity(n)
    } else {
        haar_unitary_with(n, &mut stream_rng(seed, index as u64))
    }
}

/// All individual runs of a multi-start ascent, in start order.
pub fn ascend_all(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
    config: &FlowConfig,
) -> Result<Vec<FlowResult>> {
    config.validate()?;
    let n = check_pair(a, c)?;
    let problem = TransferFlow { a, c, objective };
    Ok(ascent::run_starts(
        &problem,
        config.restarts + 1,
        |i| haar_start(n, config.seed, i),
        config,
    ))
}

/// Best of the identity start and `config.restarts` Haar starts.
pub fn ascend(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
    config: &FlowConfig,
) -> Result<FlowResult> {
    Ok(ascent::best_of(ascend_all(a, c, objective, config)?))
}

/// Runs a single flow from a given start.
pub fn ascend_from(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
    start: UnitaryMatrix,
    config: &FlowConfig,
) -> Result<FlowResult> {
    config.validate()?;
    let n = check_pair(a, c)?;
    if start.dim() != n {
        return Err(dim_err("start does not match A and C"));
    }
    let problem = TransferFlow { a, c, objective };
    Ok(ascent::ascend_from(&problem, start, config, 0))
}

/// C-numerical radius `r(C, A) = max |f(U)|`.
pub fn radius(a: &ComplexMatrix, c: &ComplexMatrix, config: &FlowConfig) -> Result<f64> {
    Ok(ascend(a, c, Objective::SquaredModulus, config)?.objective.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_random_unitary, sigma_z, ONE};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let mut cfg = FlowConfig { armijo_shrink: 1.0, ..FlowConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = FlowConfig::default();
        cfg.initial_step = 0.0;
        assert!(cfg.validate().is_err());
        assert!(FlowConfig::default().with_restarts(0).validate().is_err());
    }

    #[test]
    fn lambda_schedules() {
        let lin = LambdaSchedule::default();
        assert_eq!(lin.at(0), 10.0);
        assert_eq!(lin.at(50), 20.0);
        assert_eq!(lin.at(10_000_000), 1e4);
        assert!(lin.saturated(50 * 999));
        let geo = LambdaSchedule::geometric(1.0, 10.0, 3, 500.0);
        assert_eq!(geo.at(2), 1.0);
        assert_eq!(geo.at(3), 10.0);
        assert_eq!(geo.at(9), 500.0);
        assert!(LambdaSchedule::linear(1.0, 0.0, 2.0).validate().is_err());
        assert!(LambdaSchedule::constant(0.0).saturated(0));
    }

    #[test]
    fn transfer_identities() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.3));
        let cm = ComplexMatrix::from_fn(3, 3, |i, j| c(0.1 * (i + 2 * j) as f64, -0.2));
        let id = UnitaryMatrix::identity(3);
        let direct = crate::linalg::hs_inner(&cm, &a).unwrap();
        assert!((transfer(&id, &a, &cm).unwrap() - direct).norm() < 1e-14);
        let u = haar_random_unitary(3, 5).unwrap();
        let got = transfer(&u, &ComplexMatrix::identity(3), &cm).unwrap();
        assert!((got - cm.adjoint().trace()).norm() < 1e-13);
        assert!(transfer(&u, &a, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn gradients_vanish_at_commuting_points() {
        let h = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { c(i as f64, 0.0) } else { c(0.2, 0.0) });
        let id = UnitaryMatrix::identity(3);
        assert!(gradient_f1(&id, &h, &h).unwrap().frobenius_norm() < 1e-15);
        let d1 = ComplexMatrix::diag(&[c(1.0, 0.2), c(-0.5, 0.0), c(0.3, 0.9)]);
        let d2 = ComplexMatrix::diag(&[c(0.4, -1.0), c(2.0, 0.0), c(-0.1, 0.1)]);
        assert_eq!(gradient_f1(&id, &d1, &d2).unwrap().frobenius_norm(), 0.0);
        // C = I: f is constant.
        let u = haar_random_unitary(3, 9).unwrap();
        let g = gradient_f2(&u, &d1, &ComplexMatrix::identity(3)).unwrap();
        assert!(g.frobenius_norm() < 1e-14);
    }

    #[test]
    fn gradient_f2_vanishes_when_f_is_zero() {
        // Traceless A with C = I gives f ≡ 0.
        let a = ComplexMatrix::diag(&[ONE, -ONE]);
        let u = haar_random_unitary(2, 1).unwrap();
        let g = gradient_f2(&u, &a, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(g.frobenius_norm(), 0.0);
    }

    #[test]
    fn identity_target_converges_immediately() {
        let a = ComplexMatrix::diag(&[c(0.3, 0.1), c(-0.7, 0.2), c(0.5, 0.0)]);
        let r = ascend(&a, &ComplexMatrix::identity(3), Objective::RealPart, &FlowConfig::default().with_restarts(2)).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert!((r.value - a.trace()).norm() < 1e-12);
    }

    #[test]
    fn normalized_sigma_z_radius_is_one() {
        let s = sigma_z().scale_real(std::f64::consts::FRAC_1_SQRT_2);
        let r = radius(&s, &s, &FlowConfig::default().with_restarts(3)).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
    }
}
