//! Dense complex linear algebra for the small Hilbert spaces used here
//! (N = 2 in practice, N <= 8 supported).
//!
//! Matrices are stored row-major. Nothing in this module allocates more than
//! one `N x N` buffer per result, and every function is pure.

mod choi;
mod eig;

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use choi::{apply_choi, choi_matrix, partial_transpose};
pub use eig::{hermitian_eig, is_psd, min_eigenvalue, SpectralDecomposition};

pub type C64 = Complex64;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 8;
/// Absolute tolerance on `max |M - M^dagger|` before a matrix counts as non-Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-9;
/// Default tolerance for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a perfect square.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(dim, data)
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// The matrix unit `|i><j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    /// `|a><b|`
    pub fn outer(a: &StateVector, b: &StateVector) -> Self {
        let n = a.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    pub fn projector(psi: &StateVector) -> Self {
        Self::outer(psi, psi)
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(&[[ZERO, -I], [I, ZERO]]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap()
    }

    /// `sigma_- = |0><1|`, lowering the excited state `|1>` (index 0) to `|0>` (index 1).
    pub fn sigma_minus() -> Self {
        Self::unit(2, 1, 0)
    }

    pub fn sigma_plus() -> Self {
        Self::unit(2, 0, 1)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_re(&self, x: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * x).collect(),
        }
    }

    /// `self += z * other`
    pub fn add_scaled(&mut self, z: C64, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += z * b;
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise `|a - b|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(M + M^dagger) / 2`
    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale_re(0.5)
    }

    /// `B` with `M = A + iB`, i.e. `(M - M^dagger) / (2i)`.
    pub fn antihermitian_coefficient(&self) -> Self {
        (self - &self.dagger()).scale(C64::new(0.0, -0.5))
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `M |psi>` (unnormalized).
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let n = self.dim;
        let mut out = vec![ZERO; n];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            *o = row.iter().zip(psi.as_slice()).map(|(a, b)| a * b).sum();
        }
        StateVector { amps: out }
    }

    /// `<psi| M |psi>`
    pub fn expectation(&self, psi: &StateVector) -> C64 {
        psi.inner(&self.apply(psi))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(mut self, rhs: ComplexMatrix) -> ComplexMatrix {
        self += &rhs;
        self
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(mut self, rhs: ComplexMatrix) -> ComplexMatrix {
        self -= &rhs;
        self
    }
}

impl<'a> AddAssign<&'a ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &'a ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl<'a> SubAssign<&'a ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &'a ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(mut self) -> ComplexMatrix {
        for z in &mut self.data {
            *z = -*z;
        }
        self
    }
}

/// A pure state `|psi>`. Constructors normalize; arithmetic on amplitudes is
/// left to the caller through [`StateVector::from_amplitudes_unnormalized`].
#[derive(Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amps`; fails on a zero or non-finite vector.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let mut v = Self { amps };
        if v.amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        v.normalize()?;
        Ok(v)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_amplitudes_unnormalized(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Self { amps }
    }

    /// `|1>` in the qubit convention used throughout: index 0, Bloch `+z`.
    pub fn excited() -> Self {
        Self::basis(2, 0)
    }

    /// `|0>`: index 1, Bloch `-z`.
    pub fn ground() -> Self {
        Self::basis(2, 1)
    }

    /// `(|1> + |0>) / sqrt 2`
    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: vec![C64::new(s, 0.0), C64::new(s, 0.0)],
        }
    }

    /// `(|1> - |0>) / sqrt 2`
    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.amps
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / n;
        for z in &mut self.amps {
            *z *= inv;
        }
        Ok(())
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Multiplies by a global phase so that the largest-magnitude amplitude
    /// (lowest index among near-ties) is real and positive.
    pub fn fix_phase(&mut self) {
        let max = self.amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return;
        }
        let pivot = self
            .amps
            .iter()
            .position(|z| z.norm() >= max - 1e-12)
            .unwrap_or(0);
        let phase = self.amps[pivot].conj() / self.amps[pivot].norm();
        for z in &mut self.amps {
            *z *= phase;
        }
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    #[inline]
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateVector[")?;
        for (k, z) in self.amps.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:+.6}{:+.6}i", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension(dim))
    } else {
        Ok(())
    }
}

pub(crate) fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (
            ComplexMatrix::pauli_x(),
            ComplexMatrix::pauli_y(),
            ComplexMatrix::pauli_z(),
        );
        let id = ComplexMatrix::identity(2);
        for s in [&x, &y, &z] {
            assert!((s * s).max_abs_diff(&id) < 1e-15);
        }
        // [sigma_z, sigma_x] = 2i sigma_y
        assert!(z.commutator(&x).max_abs_diff(&y.scale(I * 2.0)) < 1e-15);
        // sigma_- |1> = |0>
        let down = ComplexMatrix::sigma_minus().apply(&StateVector::excited());
        assert_eq!(down, StateVector::ground());
    }

    #[test]
    fn hermitian_split_reconstructs() {
        let c = ComplexMatrix::from_rows(&[
            [C64::new(1.0, 2.0), C64::new(0.5, -1.0)],
            [C64::new(3.0, 0.25), C64::new(-2.0, 0.0)],
        ])
        .unwrap();
        let a = c.hermitian_part();
        let b = c.antihermitian_coefficient();
        assert!(a.is_hermitian(1e-15) && b.is_hermitian(1e-15));
        let back = &a + &b.scale(I);
        assert!(back.max_abs_diff(&c) < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_zero_states() {
        assert!(StateVector::from_real(&[0.0, 0.0]).is_err());
        assert!(ComplexMatrix::from_vec(1, vec![C64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn fix_phase_makes_pivot_real_positive() {
        let mut v = StateVector::new(vec![C64::new(0.0, 0.3), C64::new(0.0, -0.8)]).unwrap();
        v.fix_phase();
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }
}
