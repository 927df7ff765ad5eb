//! The local unitary group `SU(2) ⊗ … ⊗ SU(2)` and what is computed on it:
//! the local gradient flow, the local C-numerical range, the Euclidean
//! pure-state entanglement distance, and partial traces.
//!
//! Site `k` of `embed_pauli` and `embed` counts from 1, following the usual
//! `1 ⊗ … ⊗ σ ⊗ … ⊗ 1` notation; site 1 is the most significant tensor
//! factor (leftmost in `A ⊗ B ⊗ …`). Factor vectors and coefficient arrays
//! are indexed from 0 as usual.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ascent::{self, AscentProblem};
use crate::error::{dim_err, domain_err, Result};
use crate::flow::{
    check_pair, conjugation_delta, generator_f2, objective_gain, transfer_commutator,
    FlowConfig, FlowResult, Objective,
};
use crate::io::StateFile;
use crate::linalg::{
    haar_unitary_with, herm_part, hs_inner_unchecked, kron_all, sigma_x, sigma_y, sigma_z,
    skew_part, stream_rng, unitary_unchecked, ComplexMatrix, UnitaryMatrix, C64, I, ONE, ZERO,
};

/// Tolerance on unitarity and `det = 1` of each factor.
const FACTOR_TOL: f64 = 1e-10;

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> ComplexMatrix {
        match self {
            Axis::X => sigma_x(),
            Axis::Y => sigma_y(),
            Axis::Z => sigma_z(),
        }
    }
}

/// Number of qubits `n` with `2ⁿ = dim`.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(domain_err(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// `1 ⊗ … ⊗ σ_axis ⊗ … ⊗ 1` with the Pauli matrix on `site` (`1 ≤ site ≤ n`).
pub fn embed_pauli(n: usize, site: usize, axis: Axis) -> Result<ComplexMatrix> {
    embed(n, site, &axis.pauli())
}

/// `1 ⊗ … ⊗ op ⊗ … ⊗ 1` with the 2×2 `op` on `site` (`1 ≤ site ≤ n`).
pub fn embed(n: usize, site: usize, op: &ComplexMatrix) -> Result<ComplexMatrix> {
    if site == 0 || site > n {
        return Err(domain_err(format!("site {site} out of range 1..={n}")));
    }
    let id = ComplexMatrix::identity(2);
    Ok(kron_all((1..=n).map(|k| if k == site { op } else { &id })))
}

fn det2(m: &ComplexMatrix) -> C64 {
    m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)
}

/// Divides by the principal square root of the determinant.
fn to_special(m: &ComplexMatrix) -> ComplexMatrix {
    m.scale(ONE / det2(m).sqrt())
}

/// `exp(−i t (g·σ))` and `exp(−i t (g·σ)) − 1`, for real `g`.
fn su2_exp(g: [f64; 3], t: f64) -> (ComplexMatrix, ComplexMatrix) {
    let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if norm == 0.0 {
        return (ComplexMatrix::identity(2), ComplexMatrix::zeros(2, 2));
    }
    let theta = t * norm;
    let (s, c) = theta.sin_cos();
    let h = 0.5 * theta;
    let cm1 = -2.0 * h.sin() * h.sin();
    let n = [g[0] / norm, g[1] / norm, g[2] / norm];
    // −i sin θ (n·σ)
    let ns = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => C64::new(n[2], 0.0),
        (1, 1) => C64::new(-n[2], 0.0),
        (0, 1) => C64::new(n[0], -n[1]),
        _ => C64::new(n[0], n[1]),
    })
    .scale(C64::new(0.0, -s));
    let id = ComplexMatrix::identity(2);
    let delta = &id.scale_real(cm1) + &ns;
    (&id.scale_real(c) + &ns, delta)
}

/// `K = K₀ ⊗ K₁ ⊗ … ⊗ K_{n−1}` with every factor in `SU(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    factors: Vec<ComplexMatrix>,
}

impl LocalUnitary {
    pub fn new(factors: Vec<ComplexMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(domain_err("a local unitary needs at least one factor"));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.rows() != 2 || f.cols() != 2 {
                return Err(dim_err(format!("factor {k} is not 2x2")));
            }
            let defect = (&(&f.adjoint() * f) - &ComplexMatrix::identity(2)).frobenius_norm();
            if defect > FACTOR_TOL {
                return Err(domain_err(format!("factor {k} is not unitary (defect {defect:e})")));
            }
            let det = det2(f);
            if (det - ONE).norm() > FACTOR_TOL {
                return Err(domain_err(format!("factor {k} has determinant {det}, not 1")));
            }
        }
        Ok(Self { factors })
    }

    /// Normalizes each unitary factor to determinant 1 (principal branch).
    pub fn from_unitaries(factors: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(factors.iter().map(to_special).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { factors: vec![ComplexMatrix::identity(2); n] }
    }

    /// Independent Haar-random `SU(2)` factor on every site.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            factors: (0..n)
                .map(|_| to_special(haar_unitary_with(2, rng).matrix()))
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    pub fn to_full(&self) -> UnitaryMatrix {
        unitary_unchecked(kron_all(&self.factors))
    }

    /// `K X K†`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.to_full().conjugate(x)
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        if psi.dim() != 1 << self.n() {
            return Err(dim_err("state does not match the local unitary"));
        }
        let v = ComplexMatrix::from_fn(psi.dim(), 1, |i, _| psi.amplitudes[i]);
        let out = self.to_full().matrix() * &v;
        PureState::new(out.row_major())
    }

    fn repaired(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .map(|f| to_special(unitary_unchecked(f.clone()).reproject().matrix()))
                .collect(),
        }
    }
}

/// Unit vector in `ℂ^{2ⁿ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Requires unit norm within `1e−12`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        qubit_count(amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(domain_err(format!("state has norm {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(domain_err("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    /// Computational basis state `|bits⟩` on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(domain_err("basis index out of range"));
        }
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Self::new(v)
    }

    /// `|ψ₀⟩ ⊗ |ψ₁⟩ ⊗ …`.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        let mut v = vec![ONE];
        for f in factors {
            v = v.iter().flat_map(|&a| [a * f[0], a * f[1]]).collect();
        }
        Self::normalized(v)
    }

    pub fn from_file(file: StateFile) -> Result<Self> {
        if file.amplitudes.len() != 1usize << file.n {
            return Err(dim_err(format!(
                "{} amplitudes given for {} qubits",
                file.amplitudes.len(),
                file.n
            )));
        }
        Self::new(file.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect())
    }

    pub fn to_file(&self) -> StateFile {
        StateFile {
            n: self.n(),
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> ComplexMatrix {
        let v = &self.amplitudes;
        ComplexMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { matrix: self.projector(), dims: vec![2; self.n()] }
    }
}

/// Positive semidefinite, unit-trace operator on `⊗ₖ ℂ^{dims[k]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let n = matrix.require_square("density matrix")?;
        if dims.is_empty() || dims.contains(&0) || dims.iter().product::<usize>() != n {
            return Err(dim_err(format!("subsystem dimensions {dims:?} do not multiply to {n}")));
        }
        let herm = matrix.hermitian_defect();
        if herm > 1e-10 {
            return Err(domain_err(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(domain_err(format!("trace is {tr}, expected 1")));
        }
        let min_eig = herm_part(&matrix)
            .as_dmatrix()
            .clone()
            .symmetric_eigenvalues()
            .min();
        if min_eig < -1e-9 {
            return Err(domain_err(format!("not positive semidefinite (eigenvalue {min_eig:e})")));
        }
        Ok(Self { matrix, dims })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn purity(&self) -> f64 {
        self.matrix.norm_sqr()
    }

    /// Traces out every subsystem not listed in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (matrix, dims) = partial_trace(&self.matrix, &self.dims, keep)?;
        Ok(DensityMatrix { matrix, dims })
    }

    /// `tr_b ρ ⊗ tr_a ρ` for a bipartite state.
    pub fn reconstruct_product(&self) -> Result<DensityMatrix> {
        if self.dims.len() != 2 {
            return Err(domain_err(format!(
                "reconstruction needs two subsystems, got {}",
                self.dims.len()
            )));
        }
        let a = self.partial_trace(&[0])?;
        let b = self.partial_trace(&[1])?;
        Ok(DensityMatrix { matrix: a.matrix.kron(&b.matrix), dims: self.dims.clone() })
    }
}

/// Partial trace of `m` on `⊗ₖ ℂ^{dims[k]}` keeping the listed subsystems
/// (in increasing order). Returns the reduced matrix and its dimensions.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<(ComplexMatrix, Vec<usize>)> {
    let n = m.require_square("partial trace")?;
    if dims.is_empty() || dims.iter().product::<usize>() != n {
        return Err(dim_err(format!("subsystem dimensions {dims:?} do not match size {n}")));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() || sorted.iter().any(|&k| k >= dims.len()) {
        return Err(domain_err(format!("invalid subsystem selection {keep:?}")));
    }
    let kept_dims: Vec<usize> = sorted.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let is_kept: Vec<bool> = (0..dims.len()).map(|k| sorted.contains(&k)).collect();

    // Split a full index into (kept index, traced index).
    let split = |mut idx: usize| {
        let (mut kept, mut kmul, mut traced, mut tmul) = (0, 1, 0, 1);
        for k in (0..dims.len()).rev() {
            let digit = idx % dims[k];
            idx /= dims[k];
            if is_kept[k] {
                kept += digit * kmul;
                kmul *= dims[k];
            } else {
                traced += digit * tmul;
                tmul *= dims[k];
            }
        }
        (kept, traced)
    };
    let parts: Vec<(usize, usize)> = (0..n).map(split).collect();
    let mut dst = nalgebra::DMatrix::<C64>::zeros(out_dim, out_dim);
    let src = m.as_dmatrix();
    for i in 0..n {
        let (ki, ti) = parts[i];
        for j in 0..n {
            let (kj, tj) = parts[j];
            if ti == tj {
                dst[(ki, kj)] += src[(i, j)];
            }
        }
    }
    Ok((ComplexMatrix::wrap(dst), kept_dims))
}

/// Reduced 2×2 matrices `tr_{all but k} M` for every site `k`.
fn site_reductions(m: &ComplexMatrix, n: usize) -> Vec<[C64; 4]> {
    let dim = 1usize << n;
    let src = m.as_dmatrix();
    (0..n)
        .map(|k| {
            let bit = 1usize << (n - 1 - k);
            let mut r = [ZERO; 4];
            for i in 0..dim {
                if i & bit != 0 {
                    continue;
                }
                let j = i | bit;
                r[0] += src[(i, i)];
                r[1] += src[(i, j)];
                r[2] += src[(j, i)];
                r[3] += src[(j, j)];
            }
            r
        })
        .collect()
}

/// Coefficients `g_{k,a} = ⟨iσ_a^{(k)}, G⟩ / 2ⁿ` of the orthogonal projection
/// of a skew-Hermitian `G` onto `su(2) ⊕ … ⊕ su(2)`.
pub(crate) fn project_local(g: &ComplexMatrix, n: usize) -> Vec<[f64; 3]> {
    let scale = 1.0 / (1usize << n) as f64;
    site_reductions(g, n)
        .into_iter()
        .map(|[r00, r01, r10, r11]| {
            // ⟨iP, G⟩ = −i tr(P G); only the traces of σ_a against the
            // reduced block are needed.
            let tx = r01 + r10;
            let ty = I * r01 - I * r10;
            let tz = r00 - r11;
            [(-I * tx).re * scale, (-I * ty).re * scale, (-I * tz).re * scale]
        })
        .collect()
}

/// `Σ_{k,a} g_{k,a} · i σ_a^{(k)}` as a full matrix.
pub fn local_direction(coeffs: &[[f64; 3]]) -> ComplexMatrix {
    let n = coeffs.len();
    let mut out = ComplexMatrix::zeros(1 << n, 1 << n);
    for (k, g) in coeffs.iter().enumerate() {
        for (a, axis) in Axis::ALL.iter().enumerate() {
            if g[a] != 0.0 {
                let p = embed_pauli(n, k + 1, *axis).expect("site in range");
                out = &out + &p.scale(C64::new(0.0, g[a]));
            }
        }
    }
    out
}

fn full_generator(objective: Objective, b: &ComplexMatrix, c: &ComplexMatrix) -> (ComplexMatrix, C64) {
    let (x, f) = transfer_commutator(b, c);
    let g = match objective {
        Objective::RealPart => skew_part(&x),
        Objective::SquaredModulus => generator_f2(&x, f),
    };
    (g, f)
}

/// Per-site coefficients (`n × {x, y, z}`) of the full gradient generator at
/// `U = K` projected onto the local subalgebra.
pub fn local_gradient(
    k: &LocalUnitary,
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
) -> Result<Vec<[f64; 3]>> {
    let dim = check_pair(a, c)?;
    if dim != 1 << k.n() {
        return Err(dim_err(format!("{} qubits do not match dimension {dim}", k.n())));
    }
    let (g, _) = full_generator(objective, &k.conjugate(a), c);
    Ok(project_local(&g, k.n()))
}

/// `⊗(1 + Dₖ) − 1` without cancellation.
fn kron_delta(deltas: &[ComplexMatrix]) -> ComplexMatrix {
    let mut acc = deltas[0].clone();
    for d in &deltas[1..] {
        let id_acc = ComplexMatrix::identity(acc.rows());
        let id2 = ComplexMatrix::identity(2);
        let sum = &acc.kron(&id2) + &id_acc.kron(d);
        acc = &sum + &acc.kron(d);
    }
    acc
}

pub(crate) struct LocalStep {
    coeffs: Vec<[f64; 3]>,
    b: ComplexMatrix,
    f: C64,
}

struct LocalFlow<'a> {
    a: &'a ComplexMatrix,
    c: &'a ComplexMatrix,
    objective: Objective,
    n: usize,
}

impl AscentProblem for LocalFlow<'_> {
    type Point = LocalUnitary;
    type Direction = LocalStep;

    fn objective(&self, k: &LocalUnitary, _iter: usize) -> f64 {
        self.objective.eval(self.value(k))
    }

    fn direction(&self, k: &LocalUnitary, _iter: usize) -> (LocalStep, f64) {
        let b = k.conjugate(self.a);
        let (g, f) = full_generator(self.objective, &b, self.c);
        let coeffs = project_local(&g, self.n);
        // ‖Σ g iσ‖² = 2ⁿ Σ g²
        let slope = (1usize << self.n) as f64
            * coeffs.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>();
        (LocalStep { coeffs, b, f }, slope)
    }

    fn step(&self, k: &LocalUnitary, d: &LocalStep, alpha: f64, _iter: usize) -> (LocalUnitary, f64) {
        let (exps, deltas): (Vec<_>, Vec<_>) = d.coeffs.iter().map(|&g| su2_exp(g, alpha)).unzip();
        let factors = exps
            .iter()
            .zip(&k.factors)
            .map(|(e, f)| to_special(&(e * f)))
            .collect();
        let delta = kron_delta(&deltas);
        let df = hs_inner_unchecked(self.c, &conjugation_delta(&delta, &d.b));
        (LocalUnitary { factors }, objective_gain(self.objective, d.f, df))
    }

    fn value(&self, k: &LocalUnitary) -> C64 {
        hs_inner_unchecked(self.c, &k.conjugate(self.a))
    }

    fn repair(&self, k: LocalUnitary) -> LocalUnitary {
        k.repaired()
    }
}

/// Identity for start 0, per-site Haar factors from per-start streams after.
pub(crate) fn local_start(n: usize, seed: u64, index: usize) -> LocalUnitary {
    if index == 0 {
        LocalUnitary::identity(n)
    } else {
        LocalUnitary::random(n, &mut stream_rng(seed, index as u64))
    }
}

/// All runs of the multi-start local flow, in start order.
pub fn ascend_local_all(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
    config: &FlowConfig,
) -> Result<Vec<FlowResult<LocalUnitary>>> {
    config.validate()?;
    let dim = check_pair(a, c)?;
    let n = qubit_count(dim)?;
    let problem = LocalFlow { a, c, objective, n };
    Ok(ascent::run_starts(&problem, config.restarts + 1, |i| local_start(n, config.seed, i), config))
}

/// Gradient ascent of `F₁` or `F₂` over `SU_loc(2ⁿ)`; best of the identity
/// start and `config.restarts` random local starts.
pub fn ascend_local(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
    config: &FlowConfig,
) -> Result<FlowResult<LocalUnitary>> {
    Ok(ascent::best_of(ascend_local_all(a, c, objective, config)?))
}

/// Single local flow from a given start.
pub fn ascend_local_from(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    objective: Objective,
    start: LocalUnitary,
    config: &FlowConfig,
) -> Result<FlowResult<LocalUnitary>> {
    config.validate()?;
    let dim = check_pair(a, c)?;
    let n = qubit_count(dim)?;
    if start.n() != n {
        return Err(dim_err("start does not match the qubit count"));
    }
    Ok(ascent::ascend_from(&LocalFlow { a, c, objective, n }, start, config, 0))
}

/// Local C-numerical radius `max_K |tr(C† K A K†)|`.
pub fn local_radius(a: &ComplexMatrix, c: &ComplexMatrix, config: &FlowConfig) -> Result<(f64, LocalUnitary)> {
    let r = ascend_local(a, c, Objective::SquaredModulus, config)?;
    Ok((r.objective.sqrt(), r.optimum))
}

/// Distance of a pure state from the set of pure product states.
#[derive(Clone, Debug)]
pub struct Entanglement {
    pub delta: f64,
    pub delta_sq: f64,
    /// `max Re tr(C† K A K†)`, the largest overlap `|⟨0…0|K|ψ⟩|²`.
    pub max_transfer: f64,
    pub maximizer: LocalUnitary,
    pub converged: bool,
}

/// `C = diag(1, 0, …, 0)`.
pub fn ground_projector(dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| if i == 0 && j == 0 { ONE } else { ZERO })
}

/// `Δ² = min_K ‖K A K† − C‖² = 2 − 2 max Re tr(C† K A K†)` for
/// `A = |ψ⟩⟨ψ|` and `C = diag(1, 0, …, 0)`.
pub fn entanglement_distance(psi: &PureState, config: &FlowConfig) -> Result<Entanglement> {
    let a = psi.projector();
    let c = ground_projector(psi.dim());
    let r = ascend_local(&a, &c, Objective::RealPart, config)?;
    let delta_sq = (2.0 - 2.0 * r.objective).max(0.0);
    Ok(Entanglement {
        delta: delta_sq.sqrt(),
        delta_sq,
        max_transfer: r.objective,
        maximizer: r.optimum,
        converged: r.converged,
    })
}

/// `tr(C† K A K†)` at `samples` independent per-site Haar-random `K`.
pub fn sample_local_range(
    a: &ComplexMatrix,
    c: &ComplexMatrix,
    samples: usize,
    seed: u64,
) -> Result<Vec<C64>> {
    let dim = check_pair(a, c)?;
    let n = qubit_count(dim)?;
    Ok((0..samples)
        .map(|i| {
            let k = LocalUnitary::random(n, &mut stream_rng(seed, i as u64));
            hs_inner_unchecked(c, &k.conjugate(a))
        })
        .collect())
}

fn check_unit_interval(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(domain_err(format!("parameter s = {s} outside [0, 1]")));
    }
    Ok(())
}

fn real_state(entries: &[f64]) -> Result<PureState> {
    PureState::new(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
}

/// `√s |W⟩ + √(1−s) |W̃⟩` with `|W⟩ = (|001⟩ + |010⟩ + |100⟩)/√3` and
/// `|W̃⟩ = (|011⟩ + |101⟩ + |110⟩)/√3`.
pub fn state_psi3(s: f64) -> Result<PureState> {
    check_unit_interval(s)?;
    let w = 1.0 / 3f64.sqrt();
    let (p, q) = (s.sqrt() * w, (1.0 - s).sqrt() * w);
    real_state(&[0.0, p, p, q, p, q, q, 0.0])
}

/// `√s |GHZ′⟩ − √(1−s) |ψ⁺⟩⊗|ψ⁺⟩` with `|GHZ′⟩ = (|0011⟩ + |1100⟩)/√2`.
pub fn state_psi4(s: f64) -> Result<PureState> {
    check_unit_interval(s)?;
    let g = s.sqrt() * std::f64::consts::FRAC_1_SQRT_2;
    let p = -(1.0 - s).sqrt() * 0.5;
    let mut v = [0.0; 16];
    v[3] = g;
    v[12] = g;
    for i in [5, 6, 9, 10] {
        v[i] = p;
    }
    real_state(&v)
}

impl From<LocalUnitary> for Vec<ComplexMatrix> {
    fn from(k: LocalUnitary) -> Self {
        k.factors
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::flow;
    use crate::linalg::{commutator, hs_inner};

    #[test]
    fn embedding_examples() {
        assert_eq!(embed_pauli(1, 1, Axis::Z).unwrap(), sigma_z());
        assert_eq!(
            embed_pauli(2, 2, Axis::X).unwrap(),
            ComplexMatrix::identity(2).kron(&sigma_x())
        );
        let xy = commutator(&embed_pauli(3, 1, Axis::X).unwrap(), &embed_pauli(3, 3, Axis::Y).unwrap()).unwrap();
        assert_eq!(xy.frobenius_norm(), 0.0);
        assert!(embed_pauli(2, 3, Axis::X).is_err());
        assert!(embed_pauli(2, 0, Axis::X).is_err());
        let p = embed_pauli(3, 2, Axis::Y).unwrap();
        assert!(p.is_hermitian(0.0));
        assert!((&(&p * &p) - &ComplexMatrix::identity(8)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn factors_are_validated() {
        assert!(LocalUnitary::new(vec![sigma_z()]).is_err()); // det −1
        assert!(LocalUnitary::new(vec![ComplexMatrix::identity(2).scale_real(2.0)]).is_err());
        let k = LocalUnitary::from_unitaries(vec![sigma_z(), sigma_x()]).unwrap();
        assert_eq!(k.to_full().dim(), 4);
        assert!(k.to_full().defect() < 1e-14);
    }

    #[test]
    fn su2_exponential_and_delta() {
        let g = [0.3, -1.1, 0.7];
        let (e, d) = su2_exp(g, 0.9);
        let gen = local_direction(&[g]);
        let reference = crate::linalg::expm_skew(&gen, 0.9).unwrap();
        assert!(e.max_abs_diff(reference.matrix()) < 1e-14);
        assert!((&e - &ComplexMatrix::identity(2)).max_abs_diff(&d) < 1e-15);
        assert!((det2(&e) - ONE).norm() < 1e-14);
    }

    #[test]
    fn kron_delta_matches_direct() {
        let mut rng = stream_rng(3, 0);
        let ks: Vec<_> = (0..3).map(|_| haar_unitary_with(2, &mut rng).into_matrix()).collect();
        let deltas: Vec<_> = ks.iter().map(|k| k - &ComplexMatrix::identity(2)).collect();
        let direct = &kron_all(&ks) - &ComplexMatrix::identity(8);
        assert!(kron_delta(&deltas).max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn projection_identity() {
        let n = 2;
        let mut rng = stream_rng(11, 0);
        let a = haar_unitary_with(4, &mut rng).into_matrix();
        let c = haar_unitary_with(4, &mut rng).into_matrix();
        let k = LocalUnitary::random(n, &mut rng);
        let coeffs = local_gradient(&k, &a, &c, Objective::SquaredModulus).unwrap();
        let l = local_direction(&coeffs);
        let (g, _) = full_generator(Objective::SquaredModulus, &k.conjugate(&a), &c);
        let lg = hs_inner(&l, &g).unwrap();
        assert!((lg.re - l.norm_sqr()).abs() < 1e-10 * l.norm_sqr().max(1.0));
        assert!(lg.im.abs() < 1e-12);
    }

    #[test]
    fn commuting_diagonals_have_no_z_component() {
        let a = ComplexMatrix::diag_real(&[1.0, 0.2, -0.4, 0.9]);
        let c = ComplexMatrix::diag_real(&[0.3, -1.0, 0.5, 0.1]);
        let g = local_gradient(&LocalUnitary::identity(2), &a, &c, Objective::RealPart).unwrap();
        assert!(g.iter().all(|s| s[2] == 0.0));
    }

    #[test]
    fn single_qubit_local_flow_matches_full_flow() {
        let mut rng = stream_rng(5, 0);
        let a = ComplexMatrix::from_fn(2, 2, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let c = ComplexMatrix::from_fn(2, 2, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let cfg = FlowConfig::default().with_restarts(4);
        for obj in [Objective::RealPart, Objective::SquaredModulus] {
            let full = flow::ascend(&a, &c, obj, &cfg).unwrap();
            let local = ascend_local(&a, &c, obj, &cfg).unwrap();
            assert!((full.objective - local.objective).abs() < 1e-6);
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        let a = ComplexMatrix::identity(3);
        assert!(matches!(
            ascend_local(&a, &a, Objective::RealPart, &FlowConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn product_and_bell_distances() {
        let cfg = FlowConfig::default().with_restarts(4);
        let zero = PureState::basis(3, 0).unwrap();
        assert!(entanglement_distance(&zero, &cfg).unwrap().delta < 1e-5);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = real_state(&[s, 0.0, 0.0, s]).unwrap();
        let e = entanglement_distance(&bell, &cfg).unwrap();
        assert!((e.delta_sq - 1.0).abs() < 1e-8);
        assert!((e.max_transfer - 0.5).abs() < 1e-8);
    }

    #[test]
    fn worked_families() {
        let w = state_psi3(1.0).unwrap();
        assert!((w.amplitudes()[1].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.amplitudes()[3], ZERO);
        let wt = state_psi3(0.0).unwrap();
        assert_eq!(wt.amplitudes()[1], ZERO);
        assert!(state_psi3(0.37).is_ok());
        assert!(state_psi3(1.2).is_err());
        let g = state_psi4(1.0).unwrap();
        assert!((g.amplitudes()[12].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let pp = state_psi4(0.0).unwrap();
        assert_eq!(pp.amplitudes()[5].re, -0.5);
        assert!(state_psi4(0.5).is_ok());
    }

    #[test]
    fn bell_partial_traces() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = real_state(&[s, 0.0, 0.0, s]).unwrap().density();
        let dims_ok = DensityMatrix::new(bell.matrix().clone(), vec![2, 2]).unwrap();
        let ra = dims_ok.partial_trace(&[0]).unwrap();
        assert!(ra.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let rec = dims_ok.reconstruct_product().unwrap();
        assert!(rec.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
        assert_eq!(dims_ok.partial_trace(&[0, 1]).unwrap().matrix(), bell.matrix());
        assert!(dims_ok.partial_trace(&[2]).is_err());
        assert!(dims_ok.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2), vec![2]).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[1.5, -0.5]), vec![2]).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.5, 0.5]), vec![3]).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(PureState::new(vec![ONE, ONE]).is_err());
        assert!(PureState::new(vec![ONE, ZERO, ZERO]).is_err());
        let p = PureState::product(&[[ONE, ONE], [ONE, ZERO]]).unwrap();
        assert!((p.amplitudes()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }
}
