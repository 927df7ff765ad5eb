//! Local sign reversal `K H K† = −H`: ladder-operator normal forms and the
//! linear system over z-rotation angles, the odd-trace obstruction, and the
//! flow search over the local unitary group.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Result};
use crate::flow::{FlowConfig, Objective};
use crate::io::parse_json;
use crate::linalg::{herm_part, j_minus, j_plus, j_z, kron_all, ComplexMatrix, C64};
use crate::local::{ascend_local, qubit_count, LocalUnitary};

/// Floor tolerance: `min W_loc(H, H) ≤ −1 + REVERSAL_TOL` counts as reversible.
pub const REVERSAL_TOL: f64 = 1e-6;
/// Minimum number of random restarts used by [`search_reversal`].
pub const REVERSAL_RESTARTS: usize = 50;
/// Relative threshold on `|tr H^p|` for the odd-trace obstruction.
const TRACE_TOL: f64 = 1e-8;

/// Single-qubit ladder operator `J₀ = 1`, `J_z`, `J₊` or `J₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ladder {
    Identity,
    Z,
    Plus,
    Minus,
}

impl Ladder {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            '0' => Ok(Ladder::Identity),
            'z' | 'Z' => Ok(Ladder::Z),
            '+' => Ok(Ladder::Plus),
            '-' => Ok(Ladder::Minus),
            other => Err(domain_err(format!("unknown ladder symbol {other:?}"))),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Ladder::Identity => '0',
            Ladder::Z => 'z',
            Ladder::Plus => '+',
            Ladder::Minus => '-',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Ladder::Identity => ComplexMatrix::identity(2),
            Ladder::Z => j_z(),
            Ladder::Plus => j_plus(),
            Ladder::Minus => j_minus(),
        }
    }

    /// Eigenvalue `p` of `X ↦ [J_z, X]`.
    pub fn order(self) -> i64 {
        match self {
            Ladder::Identity | Ladder::Z => 0,
            Ladder::Plus => 1,
            Ladder::Minus => -1,
        }
    }
}

/// `c · J_{ν₁} ⊗ … ⊗ J_{νₙ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderString {
    pub nus: Vec<Ladder>,
    pub coefficient: C64,
}

impl LadderString {
    pub fn parse(symbols: &str, coefficient: C64) -> Result<Self> {
        let nus = symbols.chars().map(Ladder::from_char).collect::<Result<Vec<_>>>()?;
        if nus.is_empty() {
            return Err(domain_err("empty ladder string"));
        }
        Ok(Self { nus, coefficient })
    }

    pub fn n(&self) -> usize {
        self.nus.len()
    }

    pub fn orders(&self) -> Vec<i64> {
        self.nus.iter().map(|l| l.order()).collect()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let factors: Vec<_> = self.nus.iter().map(|l| l.matrix()).collect();
        kron_all(&factors).scale(self.coefficient)
    }

    /// `e^{−i Σ p_ℓ φ_ℓ}`, the factor picked up under conjugation by
    /// [`kz`]`(φ)`.
    pub fn conjugation_phase(&self, angles: &[f64]) -> Result<C64> {
        if angles.len() != self.n() {
            return Err(dim_err("one angle per qubit expected"));
        }
        let theta: f64 = self.orders().iter().zip(angles).map(|(&p, &phi)| p as f64 * phi).sum();
        Ok(C64::from_polar(1.0, -theta))
    }
}

impl fmt::Display for LadderString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.nus {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermRecord {
    coeff: [f64; 2],
    string: String,
}

/// `H = Σ_λ (H̄_{λ+} + H̄_{λ+}†)` with each `H̄_{λ+}` a ladder string.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianNormalForm {
    terms: Vec<LadderString>,
}

impl HamiltonianNormalForm {
    pub fn new(terms: Vec<LadderString>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(domain_err("a normal form needs at least one term"));
        };
        if terms.iter().any(|t| t.n() != first.n()) {
            return Err(dim_err("ladder strings of different lengths"));
        }
        Ok(Self { terms })
    }

    /// Parses `[{"coeff": [re, im], "string": "z+0-"}, …]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = parse_json(text)?;
        Self::new(
            records
                .iter()
                .map(|r| LadderString::parse(&r.string, C64::new(r.coeff[0], r.coeff[1])))
                .collect::<Result<_>>()?,
        )
    }

    pub fn terms(&self) -> &[LadderString] {
        &self.terms
    }

    pub fn n(&self) -> usize {
        self.terms[0].n()
    }

    /// Rows `p_{λ,ℓ}` of the angle system, one per term.
    pub fn order_matrix(&self) -> Vec<Vec<i64>> {
        self.terms.iter().map(|t| t.orders()).collect()
    }

    /// The Hermitian matrix `Σ (H̄ + H̄†)`.
    pub fn assemble(&self) -> ComplexMatrix {
        let dim = 1usize << self.n();
        self.terms.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, t| {
            let m = t.matrix();
            &acc + &(&m + &m.adjoint())
        })
    }

    pub fn solve(&self) -> Result<AngleSolution> {
        solve_reversal_angles(&self.order_matrix())
    }
}

/// `e^{−iφ₁J_z} ⊗ … ⊗ e^{−iφₙJ_z}`.
pub fn kz(angles: &[f64]) -> LocalUnitary {
    let factors = angles
        .iter()
        .map(|&phi| {
            ComplexMatrix::diag(&[C64::from_polar(1.0, -0.5 * phi), C64::from_polar(1.0, 0.5 * phi)])
        })
        .collect();
    LocalUnitary::new(factors).expect("z-rotations are special unitary")
}

/// Why `P φ ≡ π (mod 2π)` has no solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Infeasibility {
    /// The row has no nonzero order: its term is invariant under every
    /// z-rotation.
    ZeroRow { row: usize },
    /// Integer weights `y` with `yᵀP = 0` and `Σ y` odd. Any solution would
    /// give `π Σ y ≡ 0 (mod 2π)`.
    Parity { combination: Vec<i64> },
}

/// Outcome of [`solve_reversal_angles`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AngleSolution {
    Feasible { angles: Vec<f64>, residual: f64 },
    Infeasible { certificate: Infeasibility },
}

impl AngleSolution {
    pub fn angles(&self) -> Option<&[f64]> {
        match self {
            AngleSolution::Feasible { angles, .. } => Some(angles),
            AngleSolution::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, AngleSolution::Feasible { .. })
    }
}

/// Distance of `x` from the nearest multiple of `2π`.
fn wrap_distance(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    r.min(TAU - r)
}

/// Largest deviation of `P φ` from `π (mod 2π)`.
pub fn angle_residual(p: &[Vec<i64>], angles: &[f64]) -> f64 {
    p.iter()
        .map(|row| {
            let s: f64 = row.iter().zip(angles).map(|(&a, &phi)| a as f64 * phi).sum();
            wrap_distance(s - PI)
        })
        .fold(0.0, f64::max)
}

/// Unimodular row reduction `U P = H` of an integer matrix. `H` is in row
/// echelon form with `rank` nonzero rows; the rows of `U` below them span
/// the integer left kernel of `P`.
struct RowReduction {
    h: Vec<Vec<i128>>,
    u: Vec<Vec<i128>>,
    u_inv: Vec<Vec<i128>>,
    pivots: Vec<usize>,
}

fn row_reduce(p: &[Vec<i64>], cols: usize) -> RowReduction {
    let m = p.len();
    let mut h: Vec<Vec<i128>> = p.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let unit = |i: usize| (0..m).map(|j| i128::from(i == j)).collect::<Vec<_>>();
    let mut u: Vec<Vec<i128>> = (0..m).map(unit).collect();
    let mut u_inv: Vec<Vec<i128>> = (0..m).map(unit).collect();
    let mut pivots = Vec::new();

    let swap = |h: &mut Vec<Vec<i128>>, u: &mut Vec<Vec<i128>>, u_inv: &mut Vec<Vec<i128>>, i: usize, j: usize| {
        h.swap(i, j);
        u.swap(i, j);
        for row in u_inv.iter_mut() {
            row.swap(i, j);
        }
    };
    // row_i ← row_i − q·row_j; the inverse gains col_j += q·col_i.
    let sub = |h: &mut Vec<Vec<i128>>, u: &mut Vec<Vec<i128>>, u_inv: &mut Vec<Vec<i128>>, i: usize, j: usize, q: i128| {
        for c in 0..h[i].len() {
            h[i][c] -= q * h[j][c];
        }
        for c in 0..u[i].len() {
            u[i][c] -= q * u[j][c];
        }
        for row in u_inv.iter_mut() {
            row[j] += q * row[i];
        }
    };

    let mut row = 0;
    for col in 0..cols {
        if row == m {
            break;
        }
        // Smallest nonzero magnitude at or below `row` becomes the pivot.
        while let Some(best) = (row..m).filter(|&i| h[i][col] != 0).min_by_key(|&i| h[i][col].abs()) {
            swap(&mut h, &mut u, &mut u_inv, row, best);
            let mut done = true;
            for i in row + 1..m {
                if h[i][col] != 0 {
                    let q = h[i][col].div_euclid(h[row][col]);
                    sub(&mut h, &mut u, &mut u_inv, i, row, q);
                    if h[i][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                pivots.push(col);
                row += 1;
                break;
            }
        }
    }
    RowReduction { h, u, u_inv, pivots }
}

/// Solves `M t ≡ 1 (mod 2)` over GF(2).
fn solve_gf2(m: &[Vec<u8>], cols: usize) -> Option<Vec<u8>> {
    let mut rows: Vec<Vec<u8>> = m.iter().map(|r| {
        let mut v = r.clone();
        v.push(1);
        v
    }).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] == 1) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && rows[i][c] == 1 {
                let pivot_row = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                    *x ^= y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|row| row[cols] == 1) {
        return None;
    }
    let mut t = vec![0u8; cols];
    for (i, &c) in pivots.iter().enumerate() {
        t[c] = rows[i][cols];
    }
    Some(t)
}

/// Solves `P φ ≡ π (mod 2π)` componentwise for an order matrix with entries
/// in `{−1, 0, 1}`.
///
/// Writing `φ = π ψ`, a solution exists iff the lattice `col(P) ∩ ℤᵐ`
/// contains a vector with all entries odd, which is decided exactly by
/// integer row reduction: it fails iff some integer left-kernel vector of
/// `P` has an odd entry sum, and that vector is returned as the certificate.
/// Feasible angles are reduced to `[0, 2π)`.
pub fn solve_reversal_angles(p: &[Vec<i64>]) -> Result<AngleSolution> {
    let Some(first) = p.first() else {
        return Err(domain_err("empty order matrix"));
    };
    let n = first.len();
    if n == 0 || p.iter().any(|r| r.len() != n) {
        return Err(dim_err("order matrix rows must have one equal, nonzero length"));
    }
    if p.iter().flatten().any(|x| !(-1..=1).contains(x)) {
        return Err(domain_err("order matrix entries must lie in {-1, 0, 1}"));
    }
    if let Some(row) = p.iter().position(|r| r.iter().all(|&x| x == 0)) {
        return Ok(AngleSolution::Infeasible { certificate: Infeasibility::ZeroRow { row } });
    }

    let red = row_reduce(p, n);
    let rank = red.pivots.len();
    for y in &red.u[rank..] {
        if y.iter().sum::<i128>().rem_euclid(2) == 1 {
            return Ok(AngleSolution::Infeasible {
                certificate: Infeasibility::Parity {
                    combination: y.iter().map(|&v| v as i64).collect(),
                },
            });
        }
    }

    // Odd lattice vector w = U⁻¹ (t, 0) with t chosen mod 2.
    let m_rows: Vec<Vec<u8>> = red
        .u_inv
        .iter()
        .map(|r| r[..rank].iter().map(|&v| v.rem_euclid(2) as u8).collect())
        .collect();
    let t = solve_gf2(&m_rows, rank).expect("odd lattice vector exists when no parity certificate does");

    // H ψ = (t, 0) by back substitution, free variables zero.
    let mut psi = vec![0.0; n];
    for i in (0..rank).rev() {
        let c = red.pivots[i];
        let rest: f64 = (c + 1..n).map(|j| red.h[i][j] as f64 * psi[j]).sum();
        psi[c] = (t[i] as f64 - rest) / red.h[i][c] as f64;
    }
    let angles: Vec<f64> = psi.iter().map(|&x| (PI * x).rem_euclid(TAU)).collect();
    let residual = angle_residual(p, &angles);
    Ok(AngleSolution::Feasible { angles, residual })
}

/// `tr H^p ≠ 0` for an odd power `p`: the spectrum is not symmetric about 0,
/// so no unitary (local or not) maps `H` to `−H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddTraceWitness {
    pub power: u32,
    pub trace: f64,
}

fn check_hermitian(h: &ComplexMatrix) -> Result<usize> {
    let n = h.require_square("H")?;
    let defect = h.hermitian_defect();
    if defect > 1e-10 * h.frobenius_norm().max(1.0) {
        return Err(domain_err(format!("H is not Hermitian (defect {defect:e})")));
    }
    Ok(n)
}

fn eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    herm_part(h).as_dmatrix().clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Smallest odd power `2k+1 ≤ 2N−1` with `|tr H^{2k+1}| > 1e−8 ‖H‖_F^{2k+1}`.
pub fn reversibility_obstruction(h: &ComplexMatrix) -> Result<Option<OddTraceWitness>> {
    let n = check_hermitian(h)?;
    let eig = eigenvalues(h);
    let norm = h.frobenius_norm();
    if norm == 0.0 {
        return Ok(None);
    }
    for power in (1..2 * n as u32).step_by(2) {
        let trace: f64 = eig.iter().map(|l| l.powi(power as i32)).sum();
        if trace.abs() > TRACE_TOL * norm.powi(power as i32) {
            return Ok(Some(OddTraceWitness { power, trace }));
        }
    }
    Ok(None)
}

/// Result of the flow search for a reversing local unitary.
#[derive(Debug, Clone)]
pub struct ReversalSearch {
    /// `floor ≤ −1 + REVERSAL_TOL`.
    pub reversible: bool,
    /// Best `K` found; `Some` only when reversible.
    pub unitary: Option<LocalUnitary>,
    /// Estimate of `min W_loc(Ĥ, Ĥ)` for `Ĥ = H/‖H‖_F`.
    pub floor: f64,
    /// `‖H‖_F`, the normalization factor.
    pub scale: f64,
    /// `‖KHK† + H‖_F` at the best `K`, in the units of `H`.
    pub residual: f64,
    pub witness: Option<OddTraceWitness>,
    pub converged: bool,
}

fn normalized(h: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    check_hermitian(h)?;
    qubit_count(h.rows())?;
    let scale = h.frobenius_norm();
    if scale == 0.0 {
        return Err(domain_err("H is zero"));
    }
    Ok((herm_part(h).scale_real(1.0 / scale), scale))
}

/// Minimizes `Re tr(Ĥ K Ĥ K†)` over local unitaries (as the maximum of
/// `Re tr((−Ĥ)† K Ĥ K†)`) with at least [`REVERSAL_RESTARTS`] restarts.
pub fn search_reversal(h: &ComplexMatrix, config: &FlowConfig) -> Result<ReversalSearch> {
    let (hn, scale) = normalized(h)?;
    let witness = reversibility_obstruction(h)?;
    let cfg = FlowConfig { restarts: config.restarts.max(REVERSAL_RESTARTS), ..config.clone() };
    let r = ascend_local(&hn, &-&hn, Objective::RealPart, &cfg)?;
    let floor = -r.objective;
    let residual = (&r.optimum.conjugate(h) + h).frobenius_norm();
    let reversible = floor <= -1.0 + REVERSAL_TOL;
    Ok(ReversalSearch {
        reversible,
        unitary: reversible.then_some(r.optimum),
        floor,
        scale,
        residual,
        witness,
        converged: r.converged,
    })
}

/// `W_loc(Ĥ, Ĥ) = [min, 1]` for normalized Hermitian `Ĥ`; the maximum is
/// attained at `K = 1`.
pub fn wloc_interval(h: &ComplexMatrix, config: &FlowConfig) -> Result<(f64, f64)> {
    let s = search_reversal(h, config)?;
    Ok((s.floor, 1.0))
}

/// Off-diagonal pair `λ E_ij + λ̄ E_ji` (`i < j`) of a Hermitian matrix in
/// the computational basis, with the quantum orders of `E_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub i: usize,
    pub j: usize,
    pub lambda: [f64; 2],
    pub orders: Vec<i64>,
}

/// `H = diag(h) + Σ (λ E_ij + λ̄ E_ji)` in the computational basis. Each
/// `E_ij` spans a root space of the diagonal torus, so `kz` acts on a pair
/// by the phase `e^{−i Σ p_ℓ φ_ℓ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootDecomposition {
    pub pairs: Vec<RootPair>,
    pub diagonal: Vec<f64>,
}

impl RootDecomposition {
    /// Upper bound `C(2ⁿ, 2)` on the number of pairs.
    pub fn max_pairs(dim: usize) -> usize {
        dim * dim.saturating_sub(1) / 2
    }
}

/// Splits Hermitian `H` on `n` qubits into root-space pairs, dropping
/// entries with modulus `≤ tol`.
pub fn root_space_pairs(h: &ComplexMatrix, tol: f64) -> Result<RootDecomposition> {
    let dim = check_hermitian(h)?;
    let n = qubit_count(dim)?;
    let bit = |x: usize, site: usize| ((x >> (n - 1 - site)) & 1) as i64;
    let mut pairs = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            let v = h.get(i, j);
            if v.norm() > tol {
                pairs.push(RootPair {
                    i,
                    j,
                    lambda: [v.re, v.im],
                    orders: (0..n).map(|s| bit(j, s) - bit(i, s)).collect(),
                });
            }
        }
    }
    let diagonal = (0..dim).map(|i| h.get(i, i).re).collect();
    Ok(RootDecomposition { pairs, diagonal })
}

/// Attempts reversal of a dense `H` by z-rotations alone: the pair orders
/// form the angle system, and any diagonal entry above `tol` contributes an
/// order-zero row (index `pairs.len()`), which no z-rotation can reverse.
pub fn z_rotation_reversal(h: &ComplexMatrix, tol: f64) -> Result<(RootDecomposition, AngleSolution)> {
    let d = root_space_pairs(h, tol)?;
    let n = qubit_count(h.rows())?;
    let mut rows: Vec<Vec<i64>> = d.pairs.iter().map(|p| p.orders.clone()).collect();
    if d.diagonal.iter().any(|x| x.abs() > tol) {
        rows.push(vec![0; n]);
    }
    if rows.is_empty() {
        return Err(domain_err("H is zero"));
    }
    let solution = solve_reversal_angles(&rows)?;
    Ok((d, solution))
}

/// `‖K H K† + H‖_F`.
pub fn reversal_residual(k: &LocalUnitary, h: &ComplexMatrix) -> Result<f64> {
    if h.rows() != 1 << k.n() {
        return Err(dim_err("H does not match the local unitary"));
    }
    Ok((&k.conjugate(h) + h).frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, sigma_y, sigma_z, ONE};

    fn heisenberg() -> ComplexMatrix {
        let xx = sigma_x().kron(&sigma_x());
        let yy = sigma_y().kron(&sigma_y());
        let zz = sigma_z().kron(&sigma_z());
        &(&xx + &yy) + &zz
    }

    #[test]
    fn kz_phase_examples() {
        let k = kz(&[0.0, 0.0]);
        assert_eq!(k.to_full().matrix(), &ComplexMatrix::identity(4));
        let jp = LadderString::parse("+", ONE).unwrap();
        let conj = kz(&[PI]).conjugate(&jp.matrix());
        assert!(conj.max_abs_diff(&jp.matrix().scale_real(-1.0)) < 1e-15);
        let s = LadderString::parse("+-", ONE).unwrap();
        let phase = s.conjugation_phase(&[PI / 2.0, PI / 2.0]).unwrap();
        assert!((phase - ONE).norm() < 1e-15);
        let conj = kz(&[PI / 2.0, PI / 2.0]).conjugate(&s.matrix());
        assert!(conj.max_abs_diff(&s.matrix()) < 1e-15);
    }

    #[test]
    fn angle_examples() {
        let single = solve_reversal_angles(&[vec![1, 0]]).unwrap();
        let angles = single.angles().unwrap();
        assert!((angles[0] - PI).abs() < 1e-12);
        assert_eq!(
            solve_reversal_angles(&[vec![0, 0]]).unwrap(),
            AngleSolution::Infeasible { certificate: Infeasibility::ZeroRow { row: 0 } }
        );
        let two = solve_reversal_angles(&[vec![1, 0], vec![1, 1]]).unwrap();
        let AngleSolution::Feasible { angles, residual } = two else { panic!() };
        assert!(residual < 1e-12);
        assert!((angles[0] - PI).abs() < 1e-12 && angles[1].abs() < 1e-12);
    }

    #[test]
    fn parity_obstruction() {
        // φ₁ + φ₂ ≡ π, φ₂ + φ₃ ≡ π, φ₁ + φ₃ ≡ π is solvable (all π/2);
        // φ₁ + φ₂ ≡ π, φ₁ ≡ π, φ₂ ≡ π is not.
        let p = vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]];
        let sol = solve_reversal_angles(&p).unwrap();
        assert!(sol.is_feasible());
        assert!(angle_residual(&p, sol.angles().unwrap()) < 1e-12);
        let p = vec![vec![1, 1], vec![1, 0], vec![0, 1]];
        let sol = solve_reversal_angles(&p).unwrap();
        let AngleSolution::Infeasible { certificate: Infeasibility::Parity { combination } } = sol else {
            panic!("expected parity certificate, got {sol:?}");
        };
        for col in 0..2 {
            assert_eq!(combination.iter().zip(&p).map(|(y, r)| y * r[col]).sum::<i64>(), 0);
        }
        assert_eq!(combination.iter().sum::<i64>().rem_euclid(2), 1);
    }

    #[test]
    fn bad_entries_rejected() {
        assert!(solve_reversal_angles(&[vec![2, 0]]).is_err());
        assert!(solve_reversal_angles(&[vec![1, 0], vec![1]]).is_err());
        assert!(solve_reversal_angles(&[]).is_err());
    }

    #[test]
    fn obstruction_examples() {
        let zz = sigma_z().kron(&sigma_z());
        assert_eq!(reversibility_obstruction(&zz).unwrap(), None);
        let w = reversibility_obstruction(&heisenberg()).unwrap().unwrap();
        assert_eq!(w.power, 3);
        assert!((w.trace + 24.0).abs() < 1e-10);
        let sym = ComplexMatrix::diag_real(&[0.7, -0.7, 0.2, -0.2]);
        assert_eq!(reversibility_obstruction(&sym).unwrap(), None);
        assert!(reversibility_obstruction(&sigma_y().scale(crate::linalg::I)).is_err());
    }

    #[test]
    fn normal_form_json() {
        let nf = HamiltonianNormalForm::from_json(r#"[{"coeff": [2, 0], "string": "+z"}]"#).unwrap();
        let h = nf.assemble();
        let expected = (&j_plus() + &j_minus()).kron(&j_z().scale_real(2.0));
        assert!(h.max_abs_diff(&expected) < 1e-15);
        assert_eq!(nf.order_matrix(), vec![vec![1, 0]]);
        let k = kz(nf.solve().unwrap().angles().unwrap());
        assert!(reversal_residual(&k, &h).unwrap() < 1e-12);
        assert!(HamiltonianNormalForm::from_json(r#"[{"coeff": [1, 0], "string": "x"}]"#).is_err());
    }

    #[test]
    fn root_pairs_of_zz_free_coupling() {
        let h = &sigma_x().kron(&sigma_x()) + &sigma_y().kron(&sigma_y());
        let (d, sol) = z_rotation_reversal(&h, 1e-12).unwrap();
        assert_eq!(d.pairs.len(), 1);
        assert!(d.pairs.len() <= RootDecomposition::max_pairs(4));
        let k = kz(sol.angles().unwrap());
        assert!(reversal_residual(&k, &h).unwrap() < 1e-12);
        let (_, sol) = z_rotation_reversal(&heisenberg(), 1e-12).unwrap();
        assert!(!sol.is_feasible());
    }

    #[test]
    fn flow_search() {
        let cfg = FlowConfig::default();
        let zz = sigma_z().kron(&sigma_z()).scale_real(0.5);
        let s = search_reversal(&zz, &cfg).unwrap();
        assert!(s.reversible && s.residual <= 1e-5);
        let s = search_reversal(&heisenberg(), &cfg).unwrap();
        assert!(!s.reversible && s.floor > -0.95);
        assert!((s.floor + 1.0 / 3.0).abs() < 1e-6);
        assert!(s.witness.is_some());
        let (lo, hi) = wloc_interval(&zz, &cfg).unwrap();
        assert!((lo + 1.0).abs() < 1e-6 && hi == 1.0);
    }
}
