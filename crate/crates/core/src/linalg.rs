//! Dense complex linear algebra shared by every flow in the crate.
//!
//! Matrices are thin wrappers around `nalgebra::DMatrix<Complex64>` that
//! enforce finiteness at construction. [`UnitaryMatrix`] additionally carries
//! a verified unitarity bound, so flow states cannot silently drift off the
//! group.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_err, domain_err, Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative tolerance for the skew-Hermitian precondition of [`expm_skew`].
pub const SKEW_TOL: f64 = 1e-10;

/// Per-dimension tolerance on `‖U†U − 1‖_F`.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Largest dimension accepted by [`c_spectrum`] (N! points are enumerated).
pub const C_SPECTRUM_MAX_DIM: usize = 8;

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list()
            .entries(self.inner.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()))
            .finish()
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(domain_err("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(dim_err(format!(
                "{} entries given for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(dim_err("ragged rows"));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_dmatrix(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(domain_err("matrix dimensions must be positive"));
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain_err("matrix has non-finite entries"));
        }
        Ok(Self { inner })
    }

    /// Wraps a matrix produced by arithmetic on already-finite inputs.
    pub(crate) fn wrap(inner: DMatrix<C64>) -> Self {
        debug_assert!(inner.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self { inner }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::wrap(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::wrap(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::wrap(DMatrix::identity(n, n))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let v: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn row_major(&self) -> Vec<C64> {
        self.inner.transpose().iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.inner.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::wrap(self.inner.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.inner.diagonal().iter().sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm `‖·‖₂` in the Hilbert–Schmidt sense.
    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::wrap(&self.inner * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::wrap(&self.inner * C64::new(s, 0.0))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::wrap(self.inner.kronecker(&other.inner))
    }

    /// Matrix power by repeated squaring.
    pub fn powi(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim());
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// `‖M − M†‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.inner - self.inner.adjoint()).norm()
    }

    /// `‖M + M†‖_F`.
    pub fn skew_defect(&self) -> f64 {
        (&self.inner + self.inner.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= tol
    }

    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.skew_defect() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(dim_err(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_square(&self, what: &str) -> Result<usize> {
        if !self.is_square() {
            return Err(dim_err(format!(
                "{what} must be square, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        Ok(self.rows())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix::wrap(&self.inner $op &rhs.inner)
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix::wrap(self.inner $op rhs.inner)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix::wrap(-&self.inner)
    }
}

/// A square matrix with `‖U†U − 1‖_F ≤ 1e−10·N`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.require_square("unitary")?;
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOL * n as f64 {
            return Err(domain_err(format!(
                "matrix is not unitary: ‖U†U − 1‖ = {defect:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    /// Group product `self · rhs`, re-verified.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        Self::new(&self.matrix * &rhs.matrix)
    }

    /// `U X U†`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.matrix * x) * &self.matrix.adjoint()
    }

    /// Polar re-projection `U (U†U)^{−1/2}` onto the unitary group.
    pub fn reproject(&self) -> Self {
        let m = &self.matrix.inner;
        let gram = m.adjoint() * m;
        let eig = gram.symmetric_eigen();
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(f64::MIN_POSITIVE).sqrt().recip(), 0.0)));
        let v = &eig.eigenvectors;
        Self {
            matrix: ComplexMatrix::wrap(m * (v * inv_sqrt * v.adjoint())),
        }
    }
}

/// Wraps a product of unitaries without re-verification.
pub(crate) fn unitary_unchecked(matrix: ComplexMatrix) -> UnitaryMatrix {
    UnitaryMatrix { matrix }
}

fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    (m.inner.adjoint() * &m.inner - DMatrix::<C64>::identity(n, n)).norm()
}

/// Hilbert–Schmidt inner product `tr(A†B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    a.same_shape(b, "hs_inner")?;
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.inner
        .iter()
        .zip(b.inner.iter())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square("commutator lhs")?;
    if b.rows() != n || b.cols() != n {
        return Err(dim_err(format!(
            "commutator: {n}x{n} vs {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    Ok(commutator_unchecked(a, b))
}

pub(crate) fn commutator_unchecked(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap(&a.inner * &b.inner - &b.inner * &a.inner)
}

/// Splits `M` into its skew-Hermitian part `(M − M†)/2` and Hermitian part
/// `(M + M†)/2`.
pub fn split_skew_herm(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    m.require_square("split_skew_herm")?;
    Ok((skew_part(m), herm_part(m)))
}

pub(crate) fn skew_part(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap((&m.inner - m.inner.adjoint()) * C64::new(0.5, 0.0))
}

pub(crate) fn herm_part(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap((&m.inner + m.inner.adjoint()) * C64::new(0.5, 0.0))
}

/// Spectral data of a skew-Hermitian generator `G = −i V diag(μ) V†`,
/// reusable for several step lengths along the same direction.
#[derive(Clone, Debug)]
pub struct SkewExponential {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl SkewExponential {
    pub fn new(g: &ComplexMatrix) -> Result<Self> {
        g.require_square("expm_skew")?;
        let scale = g.frobenius_norm().max(1.0);
        let defect = g.skew_defect();
        if defect > SKEW_TOL * scale {
            return Err(domain_err(format!(
                "generator is not skew-Hermitian: ‖G + G†‖ = {defect:e}"
            )));
        }
        Ok(Self::new_unchecked(g))
    }

    pub(crate) fn new_unchecked(g: &ComplexMatrix) -> Self {
        // iG is Hermitian; symmetrize to remove rounding asymmetry.
        let h = (&g.inner * I + (&g.inner * I).adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    fn with_diag(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (j, &mu) in self.eigenvalues.iter().enumerate() {
            let d = f(mu);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= d;
            }
        }
        scaled * v.adjoint()
    }

    /// `exp(−tG)`.
    pub fn at(&self, t: f64) -> UnitaryMatrix {
        UnitaryMatrix {
            matrix: ComplexMatrix::wrap(self.with_diag(|mu| C64::from_polar(1.0, t * mu))),
        }
    }

    /// `exp(−tG) − 1`, accurate for small `t`.
    pub fn minus_identity_at(&self, t: f64) -> ComplexMatrix {
        ComplexMatrix::wrap(self.with_diag(|mu| {
            let x = t * mu;
            // e^{ix} − 1 = i·sin x − 2 sin²(x/2)
            let s = (0.5 * x).sin();
            C64::new(-2.0 * s * s, x.sin())
        }))
    }
}

/// Returns `exp(−t·G)` for skew-Hermitian `G`, computed through the Hermitian
/// eigendecomposition of `iG`.
pub fn expm_skew(g: &ComplexMatrix, t: f64) -> Result<UnitaryMatrix> {
    Ok(SkewExponential::new(g)?.at(t))
}

/// Draws a Haar-distributed unitary of dimension `n` from `seed`.
pub fn haar_random_unitary(n: usize, seed: u64) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(domain_err("dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(haar_unitary_with(n, &mut rng))
}

/// Haar unitary from QR of a complex Ginibre matrix with phase-corrected
/// diagonal.
pub fn haar_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> UnitaryMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix {
        matrix: ComplexMatrix::wrap(q),
    }
}

/// Deterministic per-stream RNG for restart `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The N! points `Σᵢ conj(γᵢ)·α_{π(i)}` built from eigenvalues of `A` and `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct CSpectrum {
    pub points: Vec<C64>,
}

impl CSpectrum {
    /// Points sorted by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<C64> {
        let mut p = self.points.clone();
        p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        p
    }

    /// Points that are vertices of the convex hull of the spectrum.
    pub fn extreme_points(&self) -> Vec<C64> {
        convex_hull(&self.points)
    }
}

/// Andrew's monotone chain; returns hull vertices counter-clockwise.
pub(crate) fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut pts: Vec<C64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: C64, a: C64, b: C64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut hull: Vec<C64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let floor = hull.len();
        let iter: Box<dyn Iterator<Item = &C64>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= floor + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-14
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Eigenvalues of a general complex matrix with a diagonalizability check:
/// fails if the eigenvector matrix has condition number ≥ `1e8`.
pub fn diagonalizable_eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = m.require_square("eigenvalues")?;
    let schur = nalgebra::Schur::new(m.inner.clone());
    let (q, t) = schur.unpack();
    let lambdas: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = t.norm().max(1e-300);
    let gap_tol = 1e-9 * scale;

    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for i in (0..k).rev() {
            let num: C64 = ((i + 1)..=k).map(|j| t[(i, j)] * x[j]).sum();
            let den = t[(i, i)] - t[(k, k)];
            if den.norm() <= gap_tol {
                if num.norm() <= 1e-7 * scale {
                    x[i] = ZERO;
                } else {
                    return Err(domain_err("matrix is not diagonalizable (defective eigenvalue)"));
                }
            } else {
                x[i] = -num / den;
            }
        }
        let col = &q * nalgebra::DVector::from_vec(x);
        let norm = col.norm();
        vecs.set_column(k, &(col / C64::new(norm, 0.0)));
    }
    let sv = vecs.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || smax / smin >= 1e8 {
        return Err(domain_err(format!(
            "matrix is not diagonalizable: eigenvector condition number {:e}",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    Ok(lambdas)
}

/// Enumerates the C-spectrum of `A` over all eigenvalue pairings.
pub fn c_spectrum(c: &ComplexMatrix, a: &ComplexMatrix) -> Result<CSpectrum> {
    let n = a.require_square("A")?;
    if c.rows() != n || c.cols() != n {
        return Err(dim_err("C and A must share their dimension"));
    }
    if n > C_SPECTRUM_MAX_DIM {
        return Err(Error::Size(format!(
            "C-spectrum enumeration limited to N ≤ {C_SPECTRUM_MAX_DIM}, got {n}"
        )));
    }
    let alpha = diagonalizable_eigenvalues(a)?;
    let gamma = diagonalizable_eigenvalues(c)?;
    let points = (0..n)
        .permutations(n)
        .map(|perm| {
            gamma
                .iter()
                .zip(perm.iter())
                .map(|(g, &p)| g.conj() * alpha[p])
                .sum()
        })
        .collect();
    Ok(CSpectrum { points })
}

/// Column-stacking vectorization, so that `vec(XYZ) = (Zᵗ ⊗ X) vec(Y)`.
pub fn vectorize(m: &ComplexMatrix) -> Result<Vec<C64>> {
    m.require_square("vectorize")?;
    // nalgebra storage is column-major already.
    Ok(m.inner.iter().copied().collect())
}

pub fn devectorize(v: &[C64]) -> Result<ComplexMatrix> {
    let n = (v.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != v.len() {
        return Err(domain_err(format!(
            "length {} is not a positive perfect square",
            v.len()
        )));
    }
    ComplexMatrix::from_dmatrix(DMatrix::from_column_slice(n, n, v))
}

/// Pauli matrices.
pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag_real(&[1.0, -1.0])
}

/// Spin-½ ladder operators `J₊ = |0⟩⟨1|`, `J₋ = J₊†` and `J_z = diag(½, −½)`.
pub fn j_plus() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO })
}

pub fn j_minus() -> ComplexMatrix {
    j_plus().adjoint()
}

pub fn j_z() -> ComplexMatrix {
    ComplexMatrix::diag_real(&[0.5, -0.5])
}

/// Kronecker product of a sequence of factors, first factor most significant.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| acc.kron(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn wca3_a() -> ComplexMatrix {
        ComplexMatrix::diag(&[c(0.7385, 0.2400), c(0.0353, -0.1660), c(0.4509, 0.4060)])
    }

    #[test]
    fn hs_inner_basics() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(hs_inner(&id, &id).unwrap(), c(2.0, 0.0));
        assert_eq!(hs_inner(&sigma_x(), &sigma_y()).unwrap(), ZERO);
        let a = wca3_a();
        let direct: f64 = [c(0.7385, 0.2400), c(0.0353, -0.1660), c(0.4509, 0.4060)]
            .iter()
            .map(|z| z.re * z.re + z.im * z.im)
            .sum();
        let got = hs_inner(&a, &a).unwrap();
        assert_abs_diff_eq!(got.re, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
        assert!(hs_inner(&id, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn pauli_commutators() {
        let comm = commutator(&sigma_x(), &sigma_y()).unwrap();
        assert!(comm.max_abs_diff(&sigma_z().scale(c(0.0, 2.0))) < 1e-15);
        let d1 = ComplexMatrix::diag_real(&[1.0, 2.0, 3.0]);
        let d2 = ComplexMatrix::diag(&[c(0.5, 1.0), c(-1.0, 0.0), c(2.0, 2.0)]);
        assert_eq!(commutator(&d1, &d2).unwrap().frobenius_norm(), 0.0);
        let jzp = commutator(&j_z(), &j_plus()).unwrap();
        assert!(jzp.max_abs_diff(&j_plus()) < 1e-15);
        assert!(commutator(&d1, &sigma_x()).is_err());
    }

    #[test]
    fn split_examples() {
        let h = sigma_x() + sigma_z();
        let (s, hh) = split_skew_herm(&h).unwrap();
        assert_eq!(s.frobenius_norm(), 0.0);
        assert_eq!(hh, h);
        let ih = h.scale(I);
        let (s, hh) = split_skew_herm(&ih).unwrap();
        assert_eq!(s, ih);
        assert_eq!(hh.frobenius_norm(), 0.0);
        let (s, hh) = split_skew_herm(&j_plus()).unwrap();
        assert!(s.max_abs_diff(&(j_plus() - j_minus()).scale_real(0.5)) < 1e-16);
        assert!(hh.max_abs_diff(&(j_plus() + j_minus()).scale_real(0.5)) < 1e-16);
    }

    #[test]
    fn expm_examples() {
        let g = sigma_z().scale(I);
        let u = expm_skew(&g, 0.0).unwrap();
        assert!(u.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        let u = expm_skew(&g, std::f64::consts::FRAC_PI_2).unwrap();
        let expected = ComplexMatrix::diag(&[c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(u.matrix().max_abs_diff(&expected) < 1e-15);
        assert!(expm_skew(&sigma_x(), 1.0).is_err());
    }

    #[test]
    fn expm_minus_identity_matches_difference() {
        let mut rng = stream_rng(7, 0);
        let h = haar_unitary_with(4, &mut rng).conjugate(&ComplexMatrix::diag_real(&[0.3, -1.2, 2.0, 0.1]));
        let g = h.scale(I);
        let e = SkewExponential::new(&g).unwrap();
        for t in [1e-9, 1e-3, 0.7] {
            let direct = e.at(t).into_matrix() - ComplexMatrix::identity(4);
            assert!(direct.max_abs_diff(&e.minus_identity_at(t)) < 1e-14);
        }
    }

    #[test]
    fn haar_determinism_and_unitarity() {
        let a = haar_random_unitary(5, 42).unwrap();
        let b = haar_random_unitary(5, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.defect() < 1e-13);
        assert!(haar_random_unitary(0, 1).is_err());
    }

    #[test]
    fn c_spectrum_small_cases() {
        let a = ComplexMatrix::diag(&[c(1.0, 0.5), c(-0.3, 2.0), c(0.1, 0.1)]);
        let s = c_spectrum(&ComplexMatrix::identity(3), &a).unwrap();
        assert_eq!(s.points.len(), 6);
        for p in &s.points {
            assert!((p - a.trace()).norm() < 1e-12);
        }
        let (a1, a2, c1, c2) = (c(1.0, 1.0), c(2.0, -1.0), c(0.5, 0.2), c(-1.0, 0.3));
        let s = c_spectrum(&ComplexMatrix::diag(&[c1, c2]), &ComplexMatrix::diag(&[a1, a2])).unwrap();
        let expect = [c1.conj() * a1 + c2.conj() * a2, c1.conj() * a2 + c2.conj() * a1];
        for e in expect {
            assert!(s.points.iter().any(|p| (p - e).norm() < 1e-12));
        }
        assert!(c_spectrum(&ComplexMatrix::identity(2), &j_plus()).is_err());
        assert!(matches!(
            c_spectrum(&ComplexMatrix::identity(9), &ComplexMatrix::identity(9)),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn vectorize_examples() {
        let v = vectorize(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(v, vec![ONE, ZERO, ZERO, ONE]);
        let m = ComplexMatrix::from_fn(3, 3, |i, j| c(i as f64, j as f64 * 2.0));
        assert_eq!(devectorize(&vectorize(&m).unwrap()).unwrap(), m);
        assert!(devectorize(&[ONE; 3]).is_err());
    }

    #[test]
    fn reprojection_restores_unitarity() {
        let u = haar_random_unitary(4, 3).unwrap();
        let perturbed = UnitaryMatrix {
            matrix: u.matrix() + &ComplexMatrix::from_fn(4, 4, |i, j| c(1e-7 * (i + j) as f64, 0.0)),
        };
        assert!(perturbed.defect() > 1e-8);
        assert!(perturbed.reproject().defect() < 1e-14);
    }

    #[test]
    fn hull_of_square() {
        let pts = [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(0.5, 0.5)];
        assert_eq!(convex_hull(&pts).len(), 4);
    }
}
