//! Transfer maximization under constraints: invariance `U E U† = E`, either
//! exactly through the stabilizer subalgebra or by an augmented Lagrangian,
//! and orthogonality `|tr(D† U A U†)| = m₀` by an augmented Lagrangian.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ascent::{self, AscentProblem};
use crate::error::{dim_err, domain_err, Error, Result};
use crate::flow::{
    apply_delta, check_pair, conjugation_delta, generator_f2, objective_gain, transfer_commutator,
    FlowConfig, FlowResult, GroupStep, LambdaSchedule, Objective,
};
use crate::linalg::{
    commutator_unchecked, haar_unitary_with, hs_inner_unchecked, skew_part, stream_rng,
    unitary_unchecked, ComplexMatrix, SkewExponential, UnitaryMatrix, C64, I, ZERO,
};

/// Multiplier rounds per run.
const MAX_ROUNDS: usize = 40;
/// Iteration cap of one round.
const ROUND_ITERS: usize = 500;
/// Relative singular-value threshold for the commutant kernel.
const KERNEL_TOL: f64 = 1e-9;
/// Relative feasibility reached before multiplier rounds stop.
const FEASIBLE_TARGET: f64 = 1e-10;
/// Two runs agree when their transfer values differ by at most this.
pub const AGREEMENT_RADIUS: f64 = 1e-3;
/// Restarts of the minimal-modulus pre-pass.
pub const M0_RESTARTS: usize = 50;
/// Acceptance band `||f_D| − m₀| ≤ SAMPLE_BAND` for orthogonality sampling.
pub const SAMPLE_BAND: f64 = 1e-2;
/// Rejection sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

fn re_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    hs_inner_unchecked(a, b).re
}

/// Orthonormal basis of `su(N)` under `Re tr(X† Y)`: the off-diagonal
/// pairs `(E_jk − E_kj)/√2`, `i(E_jk + E_kj)/√2` and the traceless diagonal
/// generalized Gell-Mann matrices times `i`.
pub fn su_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity((n * n).saturating_sub(1));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        for k in j + 1..n {
            out.push(ComplexMatrix::from_fn(n, n, |r, c| match (r, c) {
                (r, c) if (r, c) == (j, k) => C64::new(s, 0.0),
                (r, c) if (r, c) == (k, j) => C64::new(-s, 0.0),
                _ => ZERO,
            }));
            out.push(ComplexMatrix::from_fn(n, n, |r, c| {
                if (r, c) == (j, k) || (r, c) == (k, j) {
                    C64::new(0.0, s)
                } else {
                    ZERO
                }
            }));
        }
    }
    for l in 1..n {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let diag: Vec<C64> = (0..n)
            .map(|i| match i.cmp(&l) {
                std::cmp::Ordering::Less => I / norm,
                std::cmp::Ordering::Equal => -I * (l as f64) / norm,
                std::cmp::Ordering::Greater => ZERO,
            })
            .collect();
        out.push(ComplexMatrix::diag(&diag));
    }
    out
}

/// Modified Gram–Schmidt with one re-orthogonalization pass; vectors whose
/// remainder falls below `drop_tol` are discarded.
fn orthonormalize(vectors: Vec<ComplexMatrix>, drop_tol: f64) -> Vec<ComplexMatrix> {
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    for mut v in vectors {
        for _ in 0..2 {
            for b in &basis {
                v = &v - &b.scale_real(re_inner(b, &v));
            }
        }
        let norm = v.frobenius_norm();
        if norm > drop_tol {
            basis.push(v.scale_real(1.0 / norm));
        }
    }
    basis
}

/// Orthonormal basis of the stabilizer subalgebra `k_E ∩ su(N)`.
#[derive(Debug, Clone)]
pub struct StabilizerBasis {
    element: ComplexMatrix,
    generators: Vec<ComplexMatrix>,
}

impl StabilizerBasis {
    /// The matrix `E` whose stabilizer this is.
    pub fn element(&self) -> &ComplexMatrix {
        &self.element
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    pub fn n(&self) -> usize {
        self.element.rows()
    }

    /// Orthogonal projection onto the span of the generators.
    pub fn project(&self, g: &ComplexMatrix) -> ComplexMatrix {
        self.generators.iter().fold(ComplexMatrix::zeros(g.rows(), g.cols()), |acc, k| {
            &acc + &k.scale_real(re_inner(k, g))
        })
    }

    /// `max ‖[k, E]‖_F` over the generators.
    pub fn commutation_residual(&self) -> f64 {
        self.generators
            .iter()
            .map(|k| commutator_unchecked(k, &self.element).frobenius_norm())
            .fold(0.0, f64::max)
    }

    /// `max ‖[kᵢ, kⱼ] − P[kᵢ, kⱼ]‖_F` over all pairs.
    pub fn closure_residual(&self) -> f64 {
        let g = &self.generators;
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                let br = commutator_unchecked(&g[i], &g[j]);
                worst = worst.max((&br - &self.project(&br)).frobenius_norm());
            }
        }
        worst
    }

    /// `exp(Σ cᵢ kᵢ)` with independent `cᵢ ~ N(0, scale²)`.
    pub fn random_exponential<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> UnitaryMatrix {
        let n = self.n();
        let x = self.generators.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| {
            let c: f64 = rng.sample(StandardNormal);
            &acc + &k.scale_real(scale * c)
        });
        SkewExponential::new_unchecked(&x).at(-1.0)
    }

    /// Product of several random exponentials, spreading over the connected
    /// stabilizer subgroup.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitaryMatrix {
        let mut u = UnitaryMatrix::identity(self.n());
        for _ in 0..4 {
            let step = self.random_exponential(rng, std::f64::consts::PI);
            u = unitary_unchecked(step.matrix() * u.matrix());
        }
        u
    }
}

/// `k_E = {k ∈ su(N) : [k, E] = 0}`.
///
/// In the real coordinates of [`su_basis`] the condition is a real linear
/// system (the real and imaginary parts of `(1 ⊗ E − Eᵗ ⊗ 1) vec(k) = 0`);
/// its null space is taken from an SVD and orthonormalized under
/// `Re tr(X† Y)`. Working in `su(N)` from the start keeps every basis
/// element in the kernel, also for non-normal `E`.
pub fn stabilizer_algebra(e: &ComplexMatrix) -> Result<StabilizerBasis> {
    let n = e.require_square("E")?;
    let su = su_basis(n);
    if su.is_empty() {
        return Ok(StabilizerBasis { element: e.clone(), generators: Vec::new() });
    }
    let cols: Vec<Vec<f64>> = su
        .iter()
        .map(|b| {
            let c = commutator_unchecked(b, e).row_major();
            c.iter().map(|z| z.re).chain(c.iter().map(|z| z.im)).collect()
        })
        .collect();
    let rows = 2 * n * n;
    let m = DMatrix::from_fn(rows, su.len(), |r, c| cols[c][r]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let tol = KERNEL_TOL * sigma_max.max(e.frobenius_norm()).max(f64::MIN_POSITIVE);
    // v_t has one row per singular value; columns beyond them (never the
    // case here since 2N² ≥ N² − 1) would also be null directions.
    let null: Vec<ComplexMatrix> = (0..v_t.nrows())
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| {
            su.iter().enumerate().fold(ComplexMatrix::zeros(n, n), |acc, (l, b)| {
                &acc + &b.scale_real(v_t[(i, l)])
            })
        })
        .collect();
    Ok(StabilizerBasis { element: e.clone(), generators: orthonormalize(null, 1e-6) })
}

/// One run of a constrained flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstrainedRun {
    pub restart: usize,
    pub f_c: C64,
    /// `tr(D† U A U†)` for orthogonality runs.
    pub f_d: Option<C64>,
    pub constraint_residual: f64,
    pub lambda_final: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Transfer values `f_C` at every accepted step, when recorded.
    pub path: Option<Vec<C64>>,
}

/// Best constrained run together with all runs.
#[derive(Debug, Clone)]
pub struct ConstrainedResult {
    pub optimum: UnitaryMatrix,
    pub f_c: C64,
    /// `|f_D| − m₀` for orthogonality, `‖U E U† − E‖_F` for invariance.
    pub constraint_residual: f64,
    pub lambda_final: f64,
    pub converged: bool,
    /// Runs whose `f_C` lies within [`AGREEMENT_RADIUS`] of the best.
    pub restarts_agreeing: usize,
    /// Minimal modulus `m₀` of `W(D, A)` (orthogonality only).
    pub m0: Option<f64>,
    pub runs: Vec<ConstrainedRun>,
    pub diagnostic: Option<String>,
}

/// JSON record of a [`ConstrainedResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstrainedRecord {
    #[serde(rename = "f_C")]
    pub f_c: [f64; 2],
    #[serde(rename = "abs_f_C")]
    pub abs_f_c: f64,
    pub constraint_residual: f64,
    pub lambda_final: f64,
    pub converged: bool,
    pub restarts_agreeing: usize,
}

impl ConstrainedResult {
    pub fn to_record(&self) -> ConstrainedRecord {
        ConstrainedRecord {
            f_c: [self.f_c.re, self.f_c.im],
            abs_f_c: self.f_c.norm(),
            constraint_residual: self.constraint_residual,
            lambda_final: self.lambda_final,
            converged: self.converged,
            restarts_agreeing: self.restarts_agreeing,
        }
    }
}

/// Picks the best run: feasible (`residual ≤ feasible_tol`) before
/// infeasible, then larger `|f_C|`; ties go to the earliest run.
fn assemble(
    mut runs: Vec<(ConstrainedRun, UnitaryMatrix)>,
    feasible_tol: f64,
    m0: Option<f64>,
    diagnostic: Option<String>,
) -> ConstrainedResult {
    let key = |r: &ConstrainedRun| (r.constraint_residual <= feasible_tol, r.f_c.norm_sqr());
    let best = (0..runs.len())
        .reduce(|b, i| {
            let (fi, vi) = key(&runs[i].0);
            let (fb, vb) = key(&runs[b].0);
            if (fi && !fb) || (fi == fb && vi > vb) {
                i
            } else {
                b
            }
        })
        .expect("at least one run");
    let (best_run, optimum) = runs.swap_remove(best);
    runs.insert(best, (best_run.clone(), optimum.clone()));
    let restarts_agreeing = runs
        .iter()
        .filter(|(r, _)| (r.f_c - best_run.f_c).norm() <= AGREEMENT_RADIUS)
        .count();
    ConstrainedResult {
        optimum,
        f_c: best_run.f_c,
        constraint_residual: best_run.constraint_residual,
        lambda_final: best_run.lambda_final,
        converged: best_run.converged,
        restarts_agreeing,
        m0,
        runs: runs.into_iter().map(|(r, _)| r).collect(),
        diagnostic,
    }
}

fn feasibility(u: &UnitaryMatrix, e: &ComplexMatrix) -> f64 {
    (&u.conjugate(e) - e).frobenius_norm()
}

/// `F₂` flow with the generator projected onto the stabilizer subalgebra.
struct ProjectedFlow<'a> {
    a: &'a ComplexMatrix,
    c: &'a ComplexMatrix,
    basis: &'a StabilizerBasis,
}

impl AscentProblem for ProjectedFlow<'_> {
    type Point = UnitaryMatrix;
    type Direction = GroupStep;

    fn objective(&self, u: &UnitaryMatrix, _k: usize) -> f64 {
        self.value(u).norm_sqr()
    }

    fn direction(&self, u: &UnitaryMatrix, _k: usize) -> (GroupStep, f64) {
        let b = u.conjugate(self.a);
        let (x, f) = transfer_commutator(&b, self.c);
        let g = self.basis.project(&generator_f2(&x, f));
        let slope = g.norm_sqr();
        (GroupStep { exp: SkewExponential::new_unchecked(&g), b, f }, slope)
    }

    fn step(&self, u: &UnitaryMatrix, d: &GroupStep, alpha: f64, _k: usize) -> (UnitaryMatrix, f64) {
        let delta = d.exp.minus_identity_at(alpha);
        let df = hs_inner_unchecked(self.c, &conjugation_delta(&delta, &d.b));
        (apply_delta(&delta, u), objective_gain(Objective::SquaredModulus, d.f, df))
    }

    fn value(&self, u: &UnitaryMatrix) -> C64 {
        hs_inner_unchecked(self.c, &u.conjugate(self.a))
    }

    fn repair(&self, u: UnitaryMatrix) -> UnitaryMatrix {
        u.reproject()
    }
}

fn path_of(r: &FlowResult) -> Option<Vec<C64>> {
    r.trajectory.as_ref().map(|t| t.values.clone())
}

/// Relative `C`-numerical radius over the connected stabilizer `K_E`: the
/// `F₂` flow with every generator projected onto `k_E`, so that each iterate
/// stays in `K_E` up to exponential rounding. Starts are the identity and
/// `config.restarts` random elements of `K_E`.
pub fn ascend_projected(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    basis: &StabilizerBasis,
    config: &FlowConfig,
) -> Result<ConstrainedResult> {
    config.validate()?;
    let n = check_pair(a, c)?;
    if basis.n() != n {
        return Err(dim_err("stabilizer basis does not match A and C"));
    }
    if basis.dimension() == 0 {
        return Err(Error::TrivialConstraint(
            "the stabilizer algebra is zero; only phases preserve E".into(),
        ));
    }
    let problem = ProjectedFlow { a, c, basis };
    let results = ascent::run_starts(
        &problem,
        config.restarts + 1,
        |i| {
            if i == 0 {
                UnitaryMatrix::identity(n)
            } else {
                basis.random_element(&mut stream_rng(config.seed, i as u64))
            }
        },
        config,
    );
    let e = basis.element();
    let runs = results
        .into_iter()
        .map(|r| {
            let run = ConstrainedRun {
                restart: r.restart,
                f_c: r.value,
                f_d: None,
                constraint_residual: feasibility(&r.optimum, e),
                lambda_final: 0.0,
                converged: r.converged,
                iterations: r.iterations,
                path: path_of(&r),
            };
            (run, r.optimum)
        })
        .collect();
    Ok(assemble(runs, f64::INFINITY, None, None))
}

/// Runs an ascent in multiplier rounds. After each round `update` adjusts
/// the problem (multipliers, schedule offset) and reports whether the run
/// is finished. Trajectories of all rounds are concatenated.
fn run_rounds<P, U>(
    problem: &mut P,
    start: UnitaryMatrix,
    config: &FlowConfig,
    mut update: U,
) -> (FlowResult, usize)
where
    P: AscentProblem<Point = UnitaryMatrix>,
    U: FnMut(&mut P, &FlowResult) -> bool,
{
    let mut budget = config.max_iters;
    let mut point = start;
    let mut path: Option<Vec<C64>> = None;
    let mut total = 0;
    let mut rounds = 0;
    loop {
        let cfg = FlowConfig { max_iters: budget.clamp(1, ROUND_ITERS), ..config.clone() };
        let mut r = ascent::ascend_from(&*problem, point, &cfg, 0);
        rounds += 1;
        total += r.iterations;
        budget = budget.saturating_sub(r.iterations.max(1));
        if let Some(t) = r.trajectory.take() {
            let p = path.get_or_insert_with(Vec::new);
            let skip = usize::from(!p.is_empty());
            p.extend(t.values.into_iter().skip(skip));
        }
        let finished = update(problem, &r);
        if finished || budget == 0 || rounds >= MAX_ROUNDS {
            r.iterations = total;
            r.trajectory = path.map(|values| crate::flow::Trajectory { values, objectives: Vec::new() });
            return (r, rounds);
        }
        point = r.optimum;
    }
}

/// Augmented Lagrangian for `U E U† = E`:
/// `L = |f_C|² − Re tr(Λ† R) − (s λ/2) ‖R‖²` with `R = UEU† − E`.
struct InvarianceProblem<'a> {
    a: &'a ComplexMatrix,
    c: &'a ComplexMatrix,
    e: &'a ComplexMatrix,
    multiplier: ComplexMatrix,
    schedule: LambdaSchedule,
    /// Converts the dimensionless schedule into the units of `|f_C|²/‖E‖²`.
    penalty_scale: f64,
}

impl InvarianceProblem<'_> {
    fn weight(&self, k: usize) -> f64 {
        self.penalty_scale * self.schedule.at(k)
    }

    fn residual(&self, u: &UnitaryMatrix) -> ComplexMatrix {
        &u.conjugate(self.e) - self.e
    }
}

struct InvarianceStep {
    exp: SkewExponential,
    b: ComplexMatrix,
    be: ComplexMatrix,
    f: C64,
}

impl AscentProblem for InvarianceProblem<'_> {
    type Point = UnitaryMatrix;
    type Direction = InvarianceStep;

    fn objective(&self, u: &UnitaryMatrix, k: usize) -> f64 {
        let r = self.residual(u);
        self.value(u).norm_sqr() - re_inner(&self.multiplier, &r) - 0.5 * self.weight(k) * r.norm_sqr()
    }

    fn direction(&self, u: &UnitaryMatrix, k: usize) -> (InvarianceStep, f64) {
        let b = u.conjugate(self.a);
        let be = u.conjugate(self.e);
        let (x, f) = transfer_commutator(&b, self.c);
        // The penalty equals Re tr(M† U E U†) up to a constant, with
        // M = λE − Λ, since ‖UEU†‖ does not depend on U.
        let m = &self.e.scale_real(self.weight(k)) - &self.multiplier;
        let (xm, _) = transfer_commutator(&be, &m);
        let g = &generator_f2(&x, f) + &skew_part(&xm);
        let slope = g.norm_sqr();
        (InvarianceStep { exp: SkewExponential::new_unchecked(&g), b, be, f }, slope)
    }

    fn step(&self, u: &UnitaryMatrix, d: &InvarianceStep, alpha: f64, k: usize) -> (UnitaryMatrix, f64) {
        let delta = d.exp.minus_identity_at(alpha);
        let df = hs_inner_unchecked(self.c, &conjugation_delta(&delta, &d.b));
        let dbe = conjugation_delta(&delta, &d.be);
        let r = &d.be - self.e;
        let penalty = re_inner(&self.multiplier, &dbe)
            + self.weight(k) * (re_inner(&r, &dbe) + 0.5 * dbe.norm_sqr());
        let gain = objective_gain(Objective::SquaredModulus, d.f, df) - penalty;
        (apply_delta(&delta, u), gain)
    }

    fn value(&self, u: &UnitaryMatrix) -> C64 {
        hs_inner_unchecked(self.c, &u.conjugate(self.a))
    }

    fn repair(&self, u: UnitaryMatrix) -> UnitaryMatrix {
        u.reproject()
    }

    fn scheduled(&self) -> bool {
        true
    }
}

fn norm_scale(a: &ComplexMatrix, c: &ComplexMatrix) -> f64 {
    (a.frobenius_norm() * c.frobenius_norm()).max(f64::MIN_POSITIVE)
}

fn is_scalar(e: &ComplexMatrix) -> bool {
    let n = e.rows();
    let t = e.trace() / n as f64;
    (e - &ComplexMatrix::identity(n).scale(t)).frobenius_norm() <= 1e-12 * e.frobenius_norm().max(1.0)
}

/// Whether `E` is a multiple of the identity, making invariance vacuous.
pub fn invariance_is_vacuous(e: &ComplexMatrix) -> bool {
    is_scalar(e)
}

/// Invariance-constrained maximization of `|f_C|²` by an augmented
/// Lagrangian: each round ascends
/// `|f_C|² − Re tr(Λ†R) − (s λ_k/2)‖R‖²`, `R = UEU† − E`, with the penalty
/// weight `λ_k` from `schedule` (restarted every round) and
/// `s = (‖A‖‖C‖/‖E‖)²`; between rounds `Λ ← Λ + s λ R`.
/// The multiplier term makes `R → 0` without `λ → ∞`.
pub fn ascend_invariance_lagrange(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    e: &ComplexMatrix,
    config: &FlowConfig,
    schedule: &LambdaSchedule,
) -> Result<ConstrainedResult> {
    config.validate()?;
    schedule.validate()?;
    let n = check_pair(a, c)?;
    if e.require_square("E")? != n {
        return Err(dim_err("E does not match A and C"));
    }
    let e_norm = e.frobenius_norm();
    let penalty_scale = if e_norm > 0.0 { (norm_scale(a, c) / e_norm).powi(2) } else { 1.0 };
    let target = FEASIBLE_TARGET * e_norm.max(f64::MIN_POSITIVE);

    let runs: Vec<_> = (0..=config.restarts)
        .into_par_iter()
        .map(|i| {
            let start = if i == 0 {
                UnitaryMatrix::identity(n)
            } else {
                haar_unitary_with(n, &mut stream_rng(config.seed, i as u64))
            };
            let mut problem = InvarianceProblem {
                a,
                c,
                e,
                multiplier: ComplexMatrix::zeros(n, n),
                schedule: *schedule,
                penalty_scale,
            };
            let mut lambda_final = 0.0;
            let (r, _) = run_rounds(&mut problem, start, config, |p, r| {
                let lambda = p.weight(r.iterations);
                lambda_final = lambda / penalty_scale;
                let res = p.residual(&r.optimum);
                let done = (r.converged && res.frobenius_norm() <= target) || lambda == 0.0;
                p.multiplier = &p.multiplier + &res.scale_real(lambda);
                done
            });
            let residual = feasibility(&r.optimum, e);
            let run = ConstrainedRun {
                restart: i,
                f_c: r.value,
                f_d: None,
                constraint_residual: residual,
                lambda_final,
                converged: r.converged && residual <= 1e-4 * e_norm.max(1.0),
                iterations: r.iterations,
                path: path_of(&r),
            };
            (run, r.optimum)
        })
        .collect();
    let diagnostic = runs
        .iter()
        .all(|(r, _)| !r.converged)
        .then(|| "no run reached the invariance tolerance; raise max_iters or the λ cap".to_string());
    Ok(assemble(runs, 1e-4 * e_norm.max(1.0), None, diagnostic))
}

/// Gradient descent of `|f_D|²` (as ascent of `−|f_D|²`).
struct ModulusDescent<'a> {
    a: &'a ComplexMatrix,
    d: &'a ComplexMatrix,
}

impl AscentProblem for ModulusDescent<'_> {
    type Point = UnitaryMatrix;
    type Direction = GroupStep;

    fn objective(&self, u: &UnitaryMatrix, _k: usize) -> f64 {
        -self.value(u).norm_sqr()
    }

    fn direction(&self, u: &UnitaryMatrix, _k: usize) -> (GroupStep, f64) {
        let b = u.conjugate(self.a);
        let (x, f) = transfer_commutator(&b, self.d);
        let g = generator_f2(&x, f).scale_real(-1.0);
        let slope = g.norm_sqr();
        (GroupStep { exp: SkewExponential::new_unchecked(&g), b, f }, slope)
    }

    fn step(&self, u: &UnitaryMatrix, d: &GroupStep, alpha: f64, _k: usize) -> (UnitaryMatrix, f64) {
        let delta = d.exp.minus_identity_at(alpha);
        let df = hs_inner_unchecked(self.d, &conjugation_delta(&delta, &d.b));
        (apply_delta(&delta, u), -objective_gain(Objective::SquaredModulus, d.f, df))
    }

    fn value(&self, u: &UnitaryMatrix) -> C64 {
        hs_inner_unchecked(self.d, &u.conjugate(self.a))
    }

    fn repair(&self, u: UnitaryMatrix) -> UnitaryMatrix {
        u.reproject()
    }
}

fn haar_or_identity(n: usize, seed: u64, i: usize) -> UnitaryMatrix {
    if i == 0 {
        UnitaryMatrix::identity(n)
    } else {
        haar_unitary_with(n, &mut stream_rng(seed, i as u64))
    }
}

/// `m₀ = min |tr(D† U A U†)|` over unitaries, from a descent with at least
/// [`M0_RESTARTS`] restarts; returns `m₀` and the attaining value of `f_D`.
pub fn min_modulus(a: &ComplexMatrix, d: &ComplexMatrix, config: &FlowConfig) -> Result<(f64, C64)> {
    config.validate()?;
    let n = check_pair(a, d)?;
    let cfg = FlowConfig { restarts: config.restarts.max(M0_RESTARTS), ..config.clone() };
    let problem = ModulusDescent { a, d };
    let best = ascent::best_of(ascent::run_starts(
        &problem,
        cfg.restarts + 1,
        |i| haar_or_identity(n, cfg.seed.wrapping_add(0x6d30), i),
        &FlowConfig { record_trajectory: false, ..cfg.clone() },
    ));
    Ok((best.value.norm(), best.value))
}

/// Augmented Lagrangian for `|f_D| = m₀`:
/// `L = |f_C|² − Re(μ̄ f_D) − s λ (|f_D|² − m₀²)`.
struct OrthogonalityProblem<'a> {
    a: &'a ComplexMatrix,
    c: &'a ComplexMatrix,
    d: &'a ComplexMatrix,
    mu: C64,
    m0: f64,
    schedule: LambdaSchedule,
    offset: usize,
    penalty_scale: f64,
}

impl OrthogonalityProblem<'_> {
    fn weight(&self, k: usize) -> f64 {
        self.penalty_scale * self.schedule.at(self.offset + k)
    }

    fn f_d(&self, u: &UnitaryMatrix) -> C64 {
        hs_inner_unchecked(self.d, &u.conjugate(self.a))
    }
}

struct OrthogonalityStep {
    exp: SkewExponential,
    b: ComplexMatrix,
    f_c: C64,
    f_d: C64,
}

impl AscentProblem for OrthogonalityProblem<'_> {
    type Point = UnitaryMatrix;
    type Direction = OrthogonalityStep;

    fn objective(&self, u: &UnitaryMatrix, k: usize) -> f64 {
        let fd = self.f_d(u);
        self.value(u).norm_sqr() - (self.mu.conj() * fd).re - self.weight(k) * (fd.norm_sqr() - self.m0 * self.m0)
    }

    fn direction(&self, u: &UnitaryMatrix, k: usize) -> (OrthogonalityStep, f64) {
        let b = u.conjugate(self.a);
        let (xc, f_c) = transfer_commutator(&b, self.c);
        let (xd, f_d) = transfer_commutator(&b, self.d);
        // Generator of Re(κ f_D) is (κ X_D)_S.
        let lin = skew_part(&xd.scale(-self.mu.conj()));
        let g = &(&generator_f2(&xc, f_c) + &lin) - &generator_f2(&xd, f_d).scale_real(self.weight(k));
        let slope = g.norm_sqr();
        (OrthogonalityStep { exp: SkewExponential::new_unchecked(&g), b, f_c, f_d }, slope)
    }

    fn step(&self, u: &UnitaryMatrix, d: &OrthogonalityStep, alpha: f64, k: usize) -> (UnitaryMatrix, f64) {
        let delta = d.exp.minus_identity_at(alpha);
        let db = conjugation_delta(&delta, &d.b);
        let dfc = hs_inner_unchecked(self.c, &db);
        let dfd = hs_inner_unchecked(self.d, &db);
        let gain = objective_gain(Objective::SquaredModulus, d.f_c, dfc)
            - (self.mu.conj() * dfd).re
            - self.weight(k) * objective_gain(Objective::SquaredModulus, d.f_d, dfd);
        (apply_delta(&delta, u), gain)
    }

    fn value(&self, u: &UnitaryMatrix) -> C64 {
        hs_inner_unchecked(self.c, &u.conjugate(self.a))
    }

    fn repair(&self, u: UnitaryMatrix) -> UnitaryMatrix {
        u.reproject()
    }

    fn scheduled(&self) -> bool {
        true
    }
}

/// Checks `|⟨C, D⟩| < (1 − 1e−9) ‖C‖ ‖D‖`.
pub fn check_not_parallel(c: &ComplexMatrix, d: &ComplexMatrix) -> Result<()> {
    let inner = hs_inner_unchecked(c, d).norm();
    if inner >= (1.0 - 1e-9) * c.frobenius_norm() * d.frobenius_norm() {
        return Err(Error::Precondition("C and D are scalar multiples of each other".into()));
    }
    Ok(())
}

/// Maximizes `|f_C|²` subject to `|f_D| = m₀`, the minimal modulus over
/// `W(D, A)`.
///
/// `m₀` comes from [`min_modulus`]. When `m₀` vanishes (relative `1e−6`)
/// the constraint `f_D = 0` is enforced with a complex multiplier
/// `μ ← μ + 2sλ f_D` between rounds, the schedule restarting each round.
/// Otherwise `|f_D| ≥ m₀` holds everywhere and a plain penalty on
/// `|f_D|² − m₀²` is used, the schedule continuing across rounds.
/// `s = (‖C‖/‖D‖)²` expresses the penalty in units of `|f_C|²`.
///
/// The reported residual is `|f_D| − m₀'` where `m₀'` is `m₀` lowered to the
/// smallest `|f_D|` seen in any run, keeping it non-negative.
pub fn ascend_orthogonality(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
    config: &FlowConfig,
    schedule: &LambdaSchedule,
) -> Result<ConstrainedResult> {
    config.validate()?;
    schedule.validate()?;
    let n = check_pair(a, c)?;
    check_pair(a, d)?;
    check_not_parallel(c, d)?;
    let (m0, _) = min_modulus(a, d, config)?;
    let scale_d = norm_scale(a, d);
    let zero_target = m0 <= 1e-6 * scale_d;
    let penalty_scale = (c.frobenius_norm() / d.frobenius_norm()).powi(2);
    let target = FEASIBLE_TARGET * scale_d;

    let runs: Vec<_> = (0..=config.restarts)
        .into_par_iter()
        .map(|i| {
            let mut problem = OrthogonalityProblem {
                a,
                c,
                d,
                mu: ZERO,
                m0: if zero_target { 0.0 } else { m0 },
                schedule: *schedule,
                offset: 0,
                penalty_scale,
            };
            let mut lambda_final = 0.0;
            let (r, _) = run_rounds(&mut problem, haar_or_identity(n, config.seed, i), config, |p, r| {
                let lambda = p.weight(r.iterations);
                lambda_final = lambda / penalty_scale;
                let fd = p.f_d(&r.optimum);
                if zero_target {
                    let done = (r.converged && fd.norm() <= target) || lambda == 0.0;
                    p.mu += fd * (2.0 * lambda);
                    done
                } else {
                    let saturated = p.schedule.saturated(p.offset + r.iterations);
                    p.offset += r.iterations;
                    r.converged && saturated
                }
            });
            let f_d = problem.f_d(&r.optimum);
            let run = ConstrainedRun {
                restart: i,
                f_c: r.value,
                f_d: Some(f_d),
                constraint_residual: f_d.norm(),
                lambda_final,
                converged: r.converged,
                iterations: r.iterations,
                path: path_of(&r),
            };
            (run, r.optimum)
        })
        .collect();
    let m0_final = runs
        .iter()
        .map(|(r, _)| r.constraint_residual)
        .fold(m0, f64::min);
    let runs: Vec<_> = runs
        .into_iter()
        .map(|(mut r, u)| {
            r.constraint_residual = (r.constraint_residual - m0_final).max(0.0);
            (r, u)
        })
        .collect();
    let tol = 1e-3 * scale_d.max(1.0);
    let diagnostic = runs
        .iter()
        .all(|(r, _)| r.constraint_residual > tol)
        .then(|| "no run reached |f_D| within 1e-3 of m0".to_string());
    Ok(assemble(runs, tol, Some(m0_final), diagnostic))
}

/// Constraint for [`sample_constrained_range`].
#[derive(Debug, Clone)]
pub enum Constraint {
    Invariance(StabilizerBasis),
    Orthogonality { d: ComplexMatrix, m0: f64 },
}

/// Sampled points of `W(C, A)|_constraint`.
#[derive(Debug, Clone)]
pub struct ConstrainedCloud {
    pub points: Vec<C64>,
    /// Accepted over drawn samples (1 for invariance).
    pub acceptance_rate: f64,
}

const BATCH: usize = 1024;

/// Points `tr(C† U A U†)` with `U` drawn from the constraint set: random
/// products of stabilizer exponentials for invariance (exactly feasible),
/// Haar samples with `||f_D| − m₀| ≤ 1e−2` for orthogonality (rejection).
pub fn sample_constrained_range(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    constraint: &Constraint,
    samples: usize,
    seed: u64,
) -> Result<ConstrainedCloud> {
    let n = check_pair(a, c)?;
    let f = |u: &UnitaryMatrix| hs_inner_unchecked(c, &u.conjugate(a));
    match constraint {
        Constraint::Invariance(basis) => {
            if basis.n() != n {
                return Err(dim_err("stabilizer basis does not match A and C"));
            }
            let points = (0..samples)
                .into_par_iter()
                .map(|i| f(&basis.random_element(&mut stream_rng(seed, i as u64))))
                .collect();
            Ok(ConstrainedCloud { points, acceptance_rate: 1.0 })
        }
        Constraint::Orthogonality { d, m0 } => {
            check_pair(a, d)?;
            let mut points = Vec::with_capacity(samples);
            let mut drawn = 0usize;
            let mut batch = 0u64;
            while points.len() < samples {
                let accepted: Vec<Vec<C64>> = (0..BATCH)
                    .into_par_iter()
                    .map(|j| {
                        let mut rng = stream_rng(seed, batch * BATCH as u64 + j as u64);
                        let u = haar_unitary_with(n, &mut rng);
                        let fd = hs_inner_unchecked(d, &u.conjugate(a));
                        if (fd.norm() - m0).abs() <= SAMPLE_BAND {
                            vec![f(&u)]
                        } else {
                            Vec::new()
                        }
                    })
                    .collect();
                points.extend(accepted.into_iter().flatten());
                drawn += BATCH;
                batch += 1;
                let rate = points.len() as f64 / drawn as f64;
                if drawn >= 10_000 && rate < MIN_ACCEPTANCE {
                    return Err(Error::SamplingInfeasible(format!(
                        "acceptance rate {rate:.2e} after {drawn} draws"
                    )));
                }
            }
            points.truncate(samples);
            let acceptance_rate = samples as f64 / drawn as f64;
            Ok(ConstrainedCloud { points, acceptance_rate })
        }
    }
}

/// Connected components of the ε-graph on `points` with
/// `ε = factor × median nearest-neighbour distance`.
pub fn epsilon_components(points: &[C64], factor: f64) -> Result<usize> {
    if points.len() < 2 {
        return Ok(points.len());
    }
    let mut nn: Vec<f64> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    let eps = factor * nn[nn.len() / 2];
    if !eps.is_finite() {
        return Err(domain_err("non-finite points"));
    }
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    Ok((0..points.len()).filter(|&i| find(&mut parent, i) == i).count())
}
