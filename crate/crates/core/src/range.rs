//! Shape of the C-numerical range `W(C, A)`: star center, boundary tracing
//! and the distance/angle quantities derived from the flows.
//!
//! The boundary is traced ray by ray. `A` is shifted so that the star center
//! sits at the origin and rotated by `e^{−iφ}`; on the rotated problem the
//! point where the range boundary meets the positive real axis is the
//! maximizer of `Re f` subject to `Im f = 0`. That constrained maximum is
//! found with the Lagrange flow on
//!
//! ```text
//! L(U) = Re f − μ Im f − λ_k (Im f)²
//! ```
//!
//! whose exponent is `X_S + i (μ + 2 λ_k Im f) X_H` with `X = [UAU†, C†]`.
//! The penalty weight `λ_k` follows a [`LambdaSchedule`]; the linear
//! multiplier `μ` is refreshed between runs (`μ ← μ + 2 λ Im f`) so the
//! constraint is met to high accuracy without pushing `λ` into the stiff
//! regime.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ascent::{self, AscentProblem};
use crate::error::{domain_err, Error, Result};
use crate::flow::{
    self, apply_delta, check_pair, conjugation_delta, exp_step, transfer_commutator, FlowConfig,
    GroupStep, LambdaSchedule, Objective,
};
use crate::io::sig12;
use crate::linalg::{
    haar_unitary_with, herm_part, hs_inner_unchecked, skew_part, stream_rng, ComplexMatrix, SkewExponential,
    UnitaryMatrix, C64,
};

/// Boundary points must satisfy this bound on `|Im f|` in the rotated frame.
pub const IMAG_TOL: f64 = 1e-4;
/// Multiplier rounds stop once `|Im f|` falls below this (relative to the
/// scale `‖A₀‖‖C₀‖` of the centered problem).
const IMAG_TARGET: f64 = 1e-10;
const MAX_ROUNDS: usize = 40;
/// Iteration cap of a single multiplier round.
const ROUND_ITERS: usize = 500;
/// Starts whose commutator `[UAU†, C†]` is below this (relative to the
/// problem scale) are treated as critical points of `f`.
const KICK_THRESHOLD: f64 = 1e-3;
const KICK_SIZE: f64 = 1e-2;
/// Largest bracket (relative to the problem scale) still accepted as a
/// located corner.
const CORNER_GAP: f64 = 1e-3;
/// Commutator level identifying a critical point of `f` as a corner.
const CRITICAL_TOL: f64 = 1e-6;
/// Bisection steps used to locate a corner between two samples.
const CORNER_BISECTIONS: usize = 40;

/// `tr(A)·tr(C†)/N`, the point about which `W(C, A)` is star-shaped.
pub fn star_center(a: &ComplexMatrix, c: &ComplexMatrix) -> Result<C64> {
    let n = check_pair(a, c)?;
    Ok(a.trace() * c.trace().conj() / n as f64)
}

/// `A − tr(A)/N · 1`.
pub fn traceless_part(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    a - &ComplexMatrix::identity(n).scale(a.trace() / n as f64)
}

/// `X_S + i w X_H`.
fn boundary_exponent(x: &ComplexMatrix, w: f64) -> ComplexMatrix {
    &skew_part(x) + &herm_part(x).scale(C64::new(0.0, w))
}

fn check_traceless(a: &ComplexMatrix) -> Result<()> {
    let t = a.trace().norm();
    if t > 1e-10 {
        return Err(Error::Precondition(format!(
            "A must be shifted to traceless first (|tr A| = {t:e})"
        )));
    }
    Ok(())
}

/// Exponent `[UAU†, C†]_S + 2iλ Im f(U) [UAU†, C†]_H` of the Lagrange step
/// for `L = Re f − λ (Im f)²`. Requires traceless `A`.
pub fn lagrange_exponent(
    u: &UnitaryMatrix,
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    lambda: f64,
) -> Result<ComplexMatrix> {
    let n = check_pair(a, c)?;
    check_traceless(a)?;
    if u.dim() != n {
        return Err(Error::Dimension("U does not match A and C".into()));
    }
    let (x, f) = transfer_commutator(&u.conjugate(a), c);
    Ok(boundary_exponent(&x, 2.0 * lambda * f.im))
}

/// One Lagrange step `exp(−α G) U` with `G` from [`lagrange_exponent`].
pub fn lagrange_boundary_step(
    u: &UnitaryMatrix,
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    lambda: f64,
    alpha: f64,
) -> Result<UnitaryMatrix> {
    let g = lagrange_exponent(u, a, c, lambda)?;
    Ok(exp_step(u, &SkewExponential::new(&g)?, alpha))
}

struct RayProblem<'a> {
    a: &'a ComplexMatrix,
    c: &'a ComplexMatrix,
    mu: f64,
    schedule: LambdaSchedule,
    /// Schedule position reached by earlier rounds.
    offset: usize,
}

impl RayProblem<'_> {
    fn weight(&self, k: usize) -> f64 {
        self.schedule.at(self.offset + k)
    }
}

impl AscentProblem for RayProblem<'_> {
    type Point = UnitaryMatrix;
    type Direction = GroupStep;

    fn objective(&self, u: &UnitaryMatrix, k: usize) -> f64 {
        let f = self.value(u);
        f.re - self.mu * f.im - self.weight(k) * f.im * f.im
    }

    fn direction(&self, u: &UnitaryMatrix, k: usize) -> (GroupStep, f64) {
        let b = u.conjugate(self.a);
        let (x, f) = transfer_commutator(&b, self.c);
        let g = boundary_exponent(&x, self.mu + 2.0 * self.weight(k) * f.im);
        let slope = g.norm_sqr();
        (GroupStep { exp: SkewExponential::new_unchecked(&g), b, f }, slope)
    }

    fn step(&self, u: &UnitaryMatrix, d: &GroupStep, alpha: f64, k: usize) -> (UnitaryMatrix, f64) {
        let delta = d.exp.minus_identity_at(alpha);
        let df = hs_inner_unchecked(self.c, &conjugation_delta(&delta, &d.b));
        let gain = df.re - self.mu * df.im - self.weight(k) * df.im * (2.0 * d.f.im + df.im);
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

/// Result of the constrained maximization along one ray.
#[derive(Clone, Debug)]
struct RaySolution {
    unitary: UnitaryMatrix,
    /// Transfer value in the rotated, centered frame.
    rotated: C64,
    mu: f64,
    converged: bool,
}

/// Settings for [`trace_boundary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOptions {
    /// Number of equally spaced ray angles (at least 8).
    pub m: usize,
    pub schedule: LambdaSchedule,
    /// Seed each angle with the optimum of the previous one. When false the
    /// angles are independent and run in parallel.
    pub warm_start: bool,
    /// Extra Haar-random starts per angle.
    pub cold_starts: usize,
    /// Locate detected corners by bisection on the ray angle.
    pub refine_corners: bool,
    /// Exterior angle (degrees) above which a sample counts as a corner.
    pub corner_threshold_deg: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            m: 64,
            schedule: LambdaSchedule::default(),
            warm_start: true,
            cold_starts: 1,
            refine_corners: true,
            corner_threshold_deg: 10.0,
        }
    }
}

impl BoundaryOptions {
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 8 {
            return Err(Error::Config(format!("at least 8 angles required, got {}", self.m)));
        }
        if !(self.corner_threshold_deg > 0.0 && self.corner_threshold_deg < 180.0) {
            return Err(Error::Config("corner threshold must lie in (0°, 180°)".into()));
        }
        self.schedule.validate()
    }
}

/// One traced boundary sample.
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    /// Ray angle `φ` in radians, measured at the star center.
    pub angle: f64,
    /// Point of `W(C, A)` in the original frame.
    pub point: C64,
    /// Whether the flow converged with `|Im f| ≤ 1e−4` in the rotated frame.
    pub converged: bool,
    /// `|Im f|` in the rotated frame.
    pub imag_residual: f64,
    /// Unitary attaining `point`.
    pub unitary: UnitaryMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub angle: f64,
    pub point: C64,
    /// Whether bisection located the corner; otherwise it is the sample with
    /// the sharpest turn.
    pub refined: bool,
}

/// Traced `∂W(C, A)`.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pub center: C64,
    /// Samples ordered by angle, `φ_ℓ = 2πℓ/m`.
    pub points: Vec<BoundaryPoint>,
    pub corners: Vec<Corner>,
    /// True when `f` is constant (`A` or `C` proportional to the identity);
    /// every point then equals the center.
    pub degenerate: bool,
}

impl BoundaryCurve {
    pub fn m(&self) -> usize {
        self.points.len()
    }

    /// Fraction of angles whose flow converged.
    pub fn coverage(&self) -> f64 {
        let ok = self.points.iter().filter(|p| p.converged).count();
        ok as f64 / self.points.len().max(1) as f64
    }

    pub fn fully_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    /// Closed polygon through the samples and refined corners, by angle.
    pub fn polygon(&self) -> Vec<C64> {
        let mut v: Vec<(f64, C64)> = self.points.iter().map(|p| (p.angle, p.point)).collect();
        v.extend(self.corners.iter().filter(|c| c.refined).map(|c| (c.angle, c.point)));
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.into_iter().map(|(_, z)| z).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.polygon().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.polygon().iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Whether `z` lies inside the traced polygon or within `tol` of it.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        contains(&self.polygon(), z, tol)
    }

    /// CSV with header `angle,re,im,converged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle,re,im,converged\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                sig12(p.angle),
                sig12(p.point.re),
                sig12(p.point.im),
                p.converged
            ));
        }
        out
    }

    pub fn to_record(&self) -> BoundaryRecord {
        let pair = |z: C64| [sig12(z.re), sig12(z.im)];
        BoundaryRecord {
            center: pair(self.center),
            m: self.m(),
            degenerate: self.degenerate,
            coverage: sig12(self.coverage()),
            points: self
                .points
                .iter()
                .map(|p| PointRecord {
                    angle: sig12(p.angle),
                    point: pair(p.point),
                    converged: p.converged,
                    imag_residual: sig12(p.imag_residual),
                })
                .collect(),
            corners: self
                .corners
                .iter()
                .map(|c| CornerRecord { angle: sig12(c.angle), point: pair(c.point), refined: c.refined })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("boundary serialization")
    }
}

/// Serializable mirror of [`BoundaryCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub center: [f64; 2],
    pub m: usize,
    pub degenerate: bool,
    pub coverage: f64,
    pub points: Vec<PointRecord>,
    pub corners: Vec<CornerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub angle: f64,
    pub point: [f64; 2],
    pub converged: bool,
    pub imag_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerRecord {
    pub angle: f64,
    pub point: [f64; 2],
    pub refined: bool,
}

/// Centered problem shared by all rays.
struct Tracer<'a> {
    a0: ComplexMatrix,
    c: &'a ComplexMatrix,
    center: C64,
    scale: f64,
    opts: &'a BoundaryOptions,
    config: &'a FlowConfig,
}

impl Tracer<'_> {
    /// Constrained maximum along the ray at `angle`, from one start.
    fn solve_from(&self, angle: f64, start: UnitaryMatrix, mu0: f64) -> RaySolution {
        let a = self.a0.scale(C64::from_polar(1.0, -angle));
        let mut problem =
            RayProblem { a: &a, c: self.c, mu: mu0, schedule: self.opts.schedule, offset: 0 };
        let mut point = self.kick_if_critical(&a, start, angle, 0);
        let mut budget = self.config.max_iters;
        let mut converged = false;
        let mut rotated = problem.value(&point);
        for round in 0..MAX_ROUNDS {
            // Each round restarts the schedule; short rounds keep the
            // penalty weight, and with it the stiffness, moderate.
            let cfg = FlowConfig {
                max_iters: budget.clamp(1, ROUND_ITERS),
                record_trajectory: false,
                ..self.config.clone()
            };
            let r = ascent::ascend_from(&problem, point, &cfg, 0);
            budget = budget.saturating_sub(r.iterations.max(1));
            point = r.optimum;
            rotated = r.value;
            converged = r.converged;
            let feasible = rotated.im.abs() <= IMAG_TARGET * self.scale;
            if (r.converged && feasible) || budget == 0 {
                break;
            }
            let lambda = problem.weight(r.iterations);
            problem.mu += 2.0 * lambda * rotated.im;
            if r.converged {
                // Stalled off the ray at a critical point of f: only a larger
                // penalty weight turns it into a saddle, and a nudge is
                // needed to leave it.
                let before = point.clone();
                point = self.kick_if_critical(&a, point, angle, round as u64 + 1);
                if point != before {
                    problem.offset += ROUND_ITERS;
                }
            }
        }
        RaySolution {
            unitary: point,
            rotated,
            mu: problem.mu,
            converged: converged && rotated.im.abs() <= IMAG_TOL,
        }
    }

    /// Critical points of `f` (the C-spectrum vertices among them) are
    /// fixed points of every flow built on `[UAU†, C†]`; a warm start landing
    /// on or next to one is nudged by a small deterministic rotation.
    fn kick_if_critical(&self, a: &ComplexMatrix, u: UnitaryMatrix, angle: f64, salt: u64) -> UnitaryMatrix {
        let (x, _) = transfer_commutator(&u.conjugate(a), self.c);
        if x.frobenius_norm() > KICK_THRESHOLD * self.scale {
            return u;
        }
        let n = u.dim();
        let mut rng = stream_rng(self.config.seed ^ salt, angle.to_bits());
        let h = haar_unitary_with(n, &mut rng);
        let g = skew_part(&(&h.into_matrix() * &ComplexMatrix::diag_real(&(0..n).map(|i| i as f64).collect::<Vec<_>>())));
        let g = g.scale_real(KICK_SIZE / g.frobenius_norm().max(1e-300));
        exp_step(&u, &SkewExponential::new_unchecked(&g), 1.0)
    }

    fn is_critical(&self, u: &UnitaryMatrix) -> bool {
        let (x, _) = transfer_commutator(&u.conjugate(&self.a0), self.c);
        x.frobenius_norm() <= CRITICAL_TOL * self.scale
    }

    /// Snaps a corner estimate to the maximizer of the support function in
    /// the estimate's direction from the center. Exposed corners are such
    /// maximizers (and critical points of `f`); the snap is kept only if it
    /// lands within `radius` of the estimate.
    fn polish_corner(&self, estimate: C64, start: UnitaryMatrix, radius: f64) -> Option<C64> {
        let dir = estimate - self.center;
        if dir.norm() == 0.0 {
            return None;
        }
        let a = self.a0.scale(C64::from_polar(1.0, -dir.arg()));
        let r = flow::ascend_from(&a, self.c, Objective::RealPart, start, self.config).ok()?;
        let point = self.center + C64::from_polar(1.0, dir.arg()) * r.value;
        (r.converged && (point - estimate).norm() <= radius).then_some(point)
    }

    /// Best solution over the given starts: feasible before infeasible,
    /// then largest real part, except that a converged solution is preferred
    /// to an unconverged one improving on it by less than `1e−6` of the
    /// problem scale. Ties go to the earliest start.
    fn solve(&self, angle: f64, starts: Vec<(UnitaryMatrix, f64)>) -> RaySolution {
        let sols: Vec<RaySolution> = starts
            .into_par_iter()
            .map(|(u, mu)| self.solve_from(angle, u, mu))
            .collect();
        let margin = 1e-6 * self.scale;
        let best = sols
            .into_iter()
            .reduce(|best, s| {
                let feasible = |r: &RaySolution| r.rotated.im.abs() <= IMAG_TOL;
                let better = match (feasible(&s), feasible(&best)) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => match (s.converged, best.converged) {
                        (true, false) => s.rotated.re > best.rotated.re - margin,
                        (false, true) => s.rotated.re > best.rotated.re + margin,
                        _ => s.rotated.re > best.rotated.re + 1e-12 * self.scale,
                    },
                    (false, false) => s.rotated.im.abs() < best.rotated.im.abs(),
                };
                if better { s } else { best }
            })
            .expect("at least one start");
        if best.converged || best.rotated.im.abs() > IMAG_TOL {
            return best;
        }
        // An unconverged winner is typically still creeping along a flat
        // ridge of the Lagrangian; continue it once with a fresh budget.
        let more = self.solve_from(angle, best.unitary.clone(), best.mu);
        if more.rotated.im.abs() <= IMAG_TOL && more.rotated.re >= best.rotated.re - margin {
            more
        } else {
            best
        }
    }

    fn cold_starts(&self, index: u64) -> Vec<(UnitaryMatrix, f64)> {
        let n = self.a0.rows();
        let per = self.opts.cold_starts as u64 + 1;
        (0..self.opts.cold_starts as u64)
            .map(|j| (haar_unitary_with(n, &mut stream_rng(self.config.seed, index * per + j + 1)), 0.0))
            .collect()
    }

    fn to_point(&self, angle: f64, s: RaySolution) -> BoundaryPoint {
        BoundaryPoint {
            angle,
            point: self.center + C64::from_polar(1.0, angle) * s.rotated,
            converged: s.converged,
            imag_residual: s.rotated.im.abs(),
            unitary: s.unitary,
        }
    }
}

/// Traces `∂W(C, A)` along `opts.m` equally spaced rays from the star center.
///
/// Per-angle flows that fail to converge are flagged on their point; the
/// curve is returned regardless (see [`BoundaryCurve::coverage`]).
pub fn trace_boundary(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    opts: &BoundaryOptions,
    config: &FlowConfig,
) -> Result<BoundaryCurve> {
    opts.validate()?;
    config.validate()?;
    let n = check_pair(a, c)?;
    let center = star_center(a, c)?;
    let a0 = traceless_part(a);
    let c0 = traceless_part(c);
    let scale = a0.frobenius_norm() * c0.frobenius_norm();
    let angles: Vec<f64> = (0..opts.m)
        .map(|l| 2.0 * std::f64::consts::PI * l as f64 / opts.m as f64)
        .collect();

    if scale <= 1e-14 * (a.frobenius_norm() * c.frobenius_norm()).max(1e-300) {
        let points = angles
            .iter()
            .map(|&angle| BoundaryPoint {
                angle,
                point: center,
                converged: true,
                imag_residual: 0.0,
                unitary: UnitaryMatrix::identity(n),
            })
            .collect();
        return Ok(BoundaryCurve { center, points, corners: Vec::new(), degenerate: true });
    }

    let tracer = Tracer { a0, c, center, scale, opts, config };
    let points: Vec<BoundaryPoint> = if opts.warm_start {
        let mut out = Vec::with_capacity(opts.m);
        let mut warm = (UnitaryMatrix::identity(n), 0.0);
        for (l, &angle) in angles.iter().enumerate() {
            let mut starts = vec![warm.clone()];
            starts.extend(tracer.cold_starts(l as u64));
            let sol = tracer.solve(angle, starts);
            warm = (sol.unitary.clone(), sol.mu);
            out.push(tracer.to_point(angle, sol));
        }
        out
    } else {
        angles
            .par_iter()
            .enumerate()
            .map(|(l, &angle)| {
                let mut starts = vec![(UnitaryMatrix::identity(n), 0.0)];
                starts.extend(tracer.cold_starts(l as u64));
                tracer.to_point(angle, tracer.solve(angle, starts))
            })
            .collect()
    };

    let corners = find_corners(&tracer, &points);
    Ok(BoundaryCurve { center, points, corners, degenerate: false })
}

/// Signed turning angle (radians) at `b` along `a → b → c`.
fn turning(a: C64, b: C64, c: C64) -> f64 {
    ((c - b) / (b - a)).arg()
}

/// Distance from `z` to the line through `p` and `q`.
fn line_distance(p: C64, q: C64, z: C64) -> f64 {
    let d = q - p;
    if d.norm() == 0.0 {
        return (z - p).norm();
    }
    ((z - p) * d.conj()).im.abs() / d.norm()
}

fn find_corners(tracer: &Tracer<'_>, points: &[BoundaryPoint]) -> Vec<Corner> {
    // Drop samples that repeat their predecessor so that collapsed stretches
    // (rays meeting the range only at its center) do not produce spurious
    // turns.
    let eps = 1e-7 * tracer.scale;
    let mut kept: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if kept.last().is_none_or(|&j| (points[j].point - p.point).norm() > eps) {
            kept.push(i);
        }
    }
    while kept.len() > 1 && (points[kept[0]].point - points[*kept.last().unwrap()].point).norm() <= eps {
        kept.pop();
    }
    let k = kept.len();
    if k < 3 {
        return Vec::new();
    }
    let threshold = tracer.opts.corner_threshold_deg.to_radians();
    let at = |i: isize| points[kept[i.rem_euclid(k as isize) as usize]].point;
    let flagged: Vec<bool> = (0..k as isize)
        .map(|i| turning(at(i - 1), at(i), at(i + 1)).abs() > threshold)
        .collect();
    if flagged.iter().all(|&f| f) {
        return Vec::new();
    }

    // Group cyclically consecutive flagged samples; start after an unflagged one.
    let first_clear = flagged.iter().position(|&f| !f).unwrap();
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for step in 1..=k {
        let i = (first_clear + step) % k;
        match (flagged[i], run) {
            (true, None) => run = Some((first_clear + step, first_clear + step)),
            (true, Some((s, _))) => run = Some((s, first_clear + step)),
            (false, Some(r)) => {
                clusters.push(r);
                run = None;
            }
            (false, None) => {}
        }
    }
    if let Some(r) = run {
        clusters.push(r);
    }

    clusters
        .into_iter()
        .map(|(s, e)| {
            // Sample with the sharpest turn is the fallback estimate.
            let sharpest = (s..=e)
                .max_by(|&x, &y| {
                    let tx = turning(at(x as isize - 1), at(x as isize), at(x as isize + 1)).abs();
                    let ty = turning(at(y as isize - 1), at(y as isize), at(y as isize + 1)).abs();
                    tx.total_cmp(&ty)
                })
                .unwrap();
            let sample = &points[kept[sharpest % k]];
            let fallback = Corner { angle: sample.angle, point: sample.point, refined: false };
            if !tracer.opts.refine_corners {
                return fallback;
            }
            refine_corner(tracer, points, &kept, s as isize, e as isize).unwrap_or(fallback)
        })
        .collect()
}

/// Bisection on the ray angle between the samples flanking a corner
/// cluster, classifying each midpoint by its distance to the tangent lines
/// of the two incident edges.
fn refine_corner(
    tracer: &Tracer<'_>,
    points: &[BoundaryPoint],
    kept: &[usize],
    s: isize,
    e: isize,
) -> Option<Corner> {
    let k = kept.len() as isize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let idx = |i: isize| kept[i.rem_euclid(k) as usize];
    let p = |i: isize| &points[idx(i)];

    let lo0 = p(s - 1);
    let hi0 = p(e + 1);
    let mut lo_angle = lo0.angle;
    let mut hi_angle = hi0.angle;
    if hi_angle <= lo_angle {
        hi_angle += two_pi;
    }
    let mut left = (p(s - 2).point, lo0.point);
    let mut right = (hi0.point, p(e + 2).point);
    let mut lo = (lo0.point, lo0.unitary.clone());
    let mut hi = (hi0.point, hi0.unitary.clone());

    for _ in 0..CORNER_BISECTIONS {
        if (lo.0 - hi.0).norm() <= 1e-10 * tracer.scale {
            break;
        }
        let mid = 0.5 * (lo_angle + hi_angle);
        let sol = tracer.solve(mid, vec![(lo.1.clone(), 0.0), (hi.1.clone(), 0.0)]);
        // Flows slow down in the cusp next to a vertex; a point on the ray
        // is all the bisection needs.
        if sol.rotated.im.abs() > IMAG_TOL {
            return None;
        }
        let q = tracer.to_point(mid, sol);
        if tracer.is_critical(&q.unitary) {
            // Vertices of the range are critical points of f.
            return Some(Corner { angle: mid.rem_euclid(two_pi), point: q.point, refined: true });
        }
        if line_distance(left.0, left.1, q.point) <= line_distance(right.0, right.1, q.point) {
            left = (lo.0, q.point);
            lo = (q.point, q.unitary);
            lo_angle = mid;
        } else {
            right = (q.point, hi.0);
            hi = (q.point, q.unitary);
            hi_angle = mid;
        }
    }
    // A gap that does not close means the radial function jumps here (the
    // ray grazes an edge); the sampled corner is kept instead.
    let gap = (lo.0 - hi.0).norm();
    if gap > CORNER_GAP * tracer.scale {
        return None;
    }
    let estimate = 0.5 * (lo.0 + hi.0);
    let angle = (0.5 * (lo_angle + hi_angle)).rem_euclid(two_pi);
    let point = tracer
        .polish_corner(estimate, lo.1, 10.0 * gap + 1e-9 * tracer.scale)
        .unwrap_or(estimate);
    Some(Corner { angle, point, refined: true })
}

/// Winding number of the closed polygon around `z`.
pub fn winding_number(polygon: &[C64], z: C64) -> i32 {
    let n = polygon.len();
    let mut w = 0;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let side = (b.re - a.re) * (z.im - a.im) - (z.re - a.re) * (b.im - a.im);
        if a.im <= z.im {
            if b.im > z.im && side > 0.0 {
                w += 1;
            }
        } else if b.im <= z.im && side < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Distance from `z` to the closed polygon's edges.
pub fn distance_to_polygon(polygon: &[C64], z: C64) -> f64 {
    let n = polygon.len();
    if n == 1 {
        return (z - polygon[0]).norm();
    }
    (0..n)
        .map(|i| {
            let a = polygon[i];
            let b = polygon[(i + 1) % n];
            let d = b - a;
            let len2 = d.norm_sqr();
            let t = if len2 == 0.0 { 0.0 } else { (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0) };
            (z - (a + d * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Inside the closed polygon (non-zero winding) or within `tol` of an edge.
pub fn contains(polygon: &[C64], z: C64, tol: f64) -> bool {
    !polygon.is_empty() && (winding_number(polygon, z) != 0 || distance_to_polygon(polygon, z) <= tol)
}

/// `min_U ‖C − UAU†‖_F = √(‖A‖² + ‖C‖² − 2 max Re f)`.
pub fn min_distance(a: &ComplexMatrix, c: &ComplexMatrix, config: &FlowConfig) -> Result<f64> {
    let best = flow::ascend(a, c, Objective::RealPart, config)?;
    let d2 = a.norm_sqr() + c.norm_sqr() - 2.0 * best.objective;
    Ok(d2.max(0.0).sqrt())
}

/// Smallest angle `arccos(r(C, A)/(‖A‖‖C‖))` between `C` and the unitary
/// orbit of `A`, in `[0, π/2]`.
pub fn min_angle(a: &ComplexMatrix, c: &ComplexMatrix, config: &FlowConfig) -> Result<f64> {
    check_pair(a, c)?;
    let norms = a.frobenius_norm() * c.frobenius_norm();
    if norms == 0.0 {
        return Err(domain_err("angle undefined for a zero matrix"));
    }
    let r = flow::radius(a, c, config)?;
    Ok((r / norms).clamp(0.0, 1.0).acos())
}
