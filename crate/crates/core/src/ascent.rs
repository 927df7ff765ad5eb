//! Armijo-backtracking ascent shared by the full, local, projected and
//! penalized flows.

use rayon::prelude::*;

use crate::flow::{FlowConfig, FlowResult, Trajectory};
use crate::linalg::C64;

/// Backtracking gives up after this many halvings within one iteration.
const MAX_BACKTRACKS: usize = 80;
/// Upper bound on the step length reached by repeated doubling.
const MAX_STEP: f64 = 1e4;
/// Accepts in a row before the step length is doubled.
const GROWTH_STREAK: usize = 5;
/// Unitarity repair period (in accepted steps).
pub(crate) const REPAIR_PERIOD: usize = 50;

/// A smooth objective on a matrix group, maximized by exponential steps.
pub(crate) trait AscentProblem: Sync {
    type Point: Clone + Send;
    type Direction;

    /// Objective at iteration `k`; penalty weights may depend on `k`.
    fn objective(&self, p: &Self::Point, k: usize) -> f64;

    /// Ascent direction together with its squared norm, which equals the
    /// directional derivative of the objective along the step.
    fn direction(&self, p: &Self::Point, k: usize) -> (Self::Direction, f64);

    /// Moves `alpha` along `d`, returning the new point and the increase of
    /// the iteration-`k` objective. Implementations compute the increase from
    /// `exp(−αG) − 1` rather than as a difference of two objective values, so
    /// that it stays accurate far below the rounding level of the objective.
    fn step(&self, p: &Self::Point, d: &Self::Direction, alpha: f64, k: usize) -> (Self::Point, f64);

    /// The complex transfer value recorded in trajectories.
    fn value(&self, p: &Self::Point) -> C64;

    fn repair(&self, p: Self::Point) -> Self::Point {
        p
    }

    /// Whether the objective has stopped changing with `k`.
    fn settled(&self, _k: usize) -> bool {
        true
    }

    /// Whether the objective depends on the iteration count at all.
    fn scheduled(&self) -> bool {
        false
    }
}

/// Runs one ascent from `start`.
pub(crate) fn ascend_from<P: AscentProblem>(
    problem: &P,
    start: P::Point,
    config: &FlowConfig,
    restart: usize,
) -> FlowResult<P::Point> {
    let mut point = start;
    let mut alpha = config.initial_step;
    let mut streak = 0usize;
    let mut accepted = 0usize;
    let mut converged = false;
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0usize;
    let mut tracked = problem.objective(&point, 0);
    let mut trajectory = config.record_trajectory.then(|| Trajectory {
        values: vec![problem.value(&point)],
        objectives: vec![tracked],
    });

    for k in 0..config.max_iters {
        iterations = k;
        let (dir, slope) = problem.direction(&point, k);
        gradient_norm = slope.max(0.0).sqrt();
        if gradient_norm <= config.gradient_tol && problem.settled(k) {
            converged = true;
            break;
        }
        let mut next = None;
        for _ in 0..MAX_BACKTRACKS {
            let (candidate, gain) = problem.step(&point, &dir, alpha, k);
            if gain >= config.armijo_slope * alpha * slope {
                next = Some((candidate, gain));
                break;
            }
            alpha *= config.armijo_shrink;
            streak = 0;
        }
        let Some((candidate, gain)) = next else {
            // No resolvable increase left along the gradient.
            converged = gradient_norm <= config.gradient_tol && problem.settled(k);
            break;
        };
        point = candidate;
        accepted += 1;
        if accepted.is_multiple_of(REPAIR_PERIOD) {
            point = problem.repair(point);
        }
        tracked = if problem.scheduled() {
            problem.objective(&point, k)
        } else {
            tracked + gain
        };
        if let Some(t) = trajectory.as_mut() {
            t.values.push(problem.value(&point));
            t.objectives.push(tracked);
        }
        streak += 1;
        if streak >= GROWTH_STREAK {
            alpha = (alpha * 2.0).min(MAX_STEP);
            streak = 0;
        }
        iterations = k + 1;
    }
    if !converged && iterations >= config.max_iters {
        let (_, slope) = problem.direction(&point, iterations);
        gradient_norm = slope.max(0.0).sqrt();
    }

    let final_k = iterations;
    FlowResult {
        value: problem.value(&point),
        objective: problem.objective(&point, final_k),
        optimum: point,
        iterations,
        converged,
        gradient_norm,
        restart,
        trajectory,
    }
}

/// Runs all starts in parallel; results are returned in start order.
pub(crate) fn run_starts<P, F>(
    problem: &P,
    count: usize,
    start: F,
    config: &FlowConfig,
) -> Vec<FlowResult<P::Point>>
where
    P: AscentProblem,
    F: Fn(usize) -> P::Point + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| ascend_from(problem, start(i), config, i))
        .collect()
}

/// Best result by objective; ties go to the lowest start index.
pub(crate) fn best_of<T>(results: Vec<FlowResult<T>>) -> FlowResult<T> {
    results
        .into_iter()
        .reduce(|best, r| if r.objective > best.objective { r } else { best })
        .expect("at least one start")
}
