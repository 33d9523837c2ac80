//! Finite-dimensional operators on the atom ⊗ cavity-mode space.
//!
//! The composite basis is atom-major: the state |atom, n⟩ sits at index
//! `atom * (n_max + 1) + n`, with atom index 0 for the lower level |1⟩ and 1
//! for the upper level |2⟩. Tracing out the atom therefore sums two
//! contiguous blocks of the diagonal.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Real-valued matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entries in row-major order.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    /// Matrix product. Panics when the inner dimensions disagree.
    pub fn dot(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matrix product of {}x{} and {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.dot(other) - &other.dot(self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Entrywise comparison with an absolute tolerance on the modulus of the
    /// difference. Matrices of different shape are never equal.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Largest modulus of `self − self†`.
    pub fn hermiticity_error(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

fn zip_with(a: &ComplexMatrix, b: &ComplexMatrix, f: impl Fn(C64, C64) -> C64) -> ComplexMatrix {
    assert!(
        a.rows == b.rows && a.cols == b.cols,
        "shape mismatch: {}x{} vs {}x{}",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
    ComplexMatrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.dot(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Truncation of the cavity mode together with the basis layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceConfig {
    n_max: usize,
}

impl SpaceConfig {
    pub const ATOM_LOWER: usize = 0;
    pub const ATOM_UPPER: usize = 1;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(invalid("n_max", "must be at least 1"));
        }
        Ok(Self { n_max })
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of Fock states kept, `n_max + 1`.
    #[inline]
    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total dimension `2 (n_max + 1)`.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.field_dim()
    }

    #[inline]
    pub fn index(&self, atom: usize, photons: usize) -> usize {
        debug_assert!(atom < 2 && photons <= self.n_max);
        atom * self.field_dim() + photons
    }

    /// Inverse of [`SpaceConfig::index`]: `(atom, photons)`.
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.field_dim(), index % self.field_dim())
    }

    /// Total excitation number `photons + atom` of a basis state.
    #[inline]
    pub fn excitations(&self, index: usize) -> usize {
        let (atom, n) = self.split(index);
        atom + n
    }
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self { n_max: 20 }
    }
}

fn check_nmax(n_max: usize) -> Result<()> {
    if n_max == 0 {
        Err(invalid("n_max", "degenerate field space (n_max = 0)"))
    } else {
        Ok(())
    }
}

/// Photon annihilation operator on `0..=n_max`: `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(n_max: usize) -> Result<ComplexMatrix> {
    check_nmax(n_max)?;
    let mut a = ComplexMatrix::zeros(n_max + 1, n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn creation(n_max: usize) -> Result<ComplexMatrix> {
    Ok(annihilation(n_max)?.adjoint())
}

/// `a†a`, diagonal `0, 1, …, n_max`.
pub fn number(n_max: usize) -> Result<ComplexMatrix> {
    check_nmax(n_max)?;
    let diag: Vec<C64> = (0..=n_max).map(|n| C64::new(n as f64, 0.0)).collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// Atomic lowering operator σ = |1⟩⟨2|.
pub fn atom_lowering() -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(2, 2);
    s[(SpaceConfig::ATOM_LOWER, SpaceConfig::ATOM_UPPER)] = ONE;
    s
}

pub fn atom_raising() -> ComplexMatrix {
    atom_lowering().adjoint()
}

/// Inversion |2⟩⟨2| − |1⟩⟨1|.
pub fn atom_inversion() -> ComplexMatrix {
    let mut d = ComplexMatrix::zeros(2, 2);
    d[(SpaceConfig::ATOM_UPPER, SpaceConfig::ATOM_UPPER)] = ONE;
    d[(SpaceConfig::ATOM_LOWER, SpaceConfig::ATOM_LOWER)] = -ONE;
    d
}

/// Kronecker product `a ⊗ b`; entry `(i·rows(b) + k, j·cols(b) + l)` is
/// `a[i,j]·b[k,l]`. With the atom factor first this matches [`SpaceConfig`].
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(a.rows() * br, a.cols() * bc);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Field annihilation lifted to the composite space, `I₂ ⊗ a`.
pub fn field_annihilation(space: SpaceConfig) -> ComplexMatrix {
    tensor(
        &ComplexMatrix::identity(2),
        &annihilation(space.n_max()).expect("SpaceConfig guarantees n_max >= 1"),
    )
}

/// Atomic lowering lifted to the composite space, `σ ⊗ I_field`.
pub fn composite_lowering(space: SpaceConfig) -> ComplexMatrix {
    tensor(
        &atom_lowering(),
        &ComplexMatrix::identity(space.field_dim()),
    )
}

/// Projector |atom, n⟩⟨atom, n| on the composite space.
pub fn basis_projector(space: SpaceConfig, atom: usize, photons: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(space.dim(), space.dim());
    let i = space.index(atom, photons);
    p[(i, i)] = ONE;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(2).unwrap();
        assert_eq!(a[(0, 1)], re(1.0));
        assert_eq!(a[(1, 2)], re(2f64.sqrt()));
        let nonzero = a.as_slice().iter().filter(|z| **z != ZERO).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn annihilation_rejects_zero_nmax() {
        assert!(matches!(
            annihilation(0),
            Err(Error::InvalidParameter { name: "n_max", .. })
        ));
        assert!(SpaceConfig::new(0).is_err());
    }

    #[test]
    fn number_operator_from_ladder() {
        let a = annihilation(2).unwrap();
        let n = a.adjoint().dot(&a);
        assert!(n.approx_eq(&number(2).unwrap(), 1e-15));
    }

    #[test]
    fn truncated_commutator() {
        let n_max = 5;
        let a = annihilation(n_max).unwrap();
        let c = a.commutator(&a.adjoint());
        for i in 0..n_max {
            assert!((c[(i, i)] - re(1.0)).norm() < 1e-14);
        }
        assert!((c[(n_max, n_max)] - re(-(n_max as f64))).norm() < 1e-14);
        for r in 0..=n_max {
            for col in 0..=n_max {
                if r != col {
                    assert_eq!(c[(r, col)], ZERO);
                }
            }
        }
    }

    #[test]
    fn lowering_acts_on_excited_state() {
        let s = atom_lowering();
        let excited = ComplexMatrix::from_real(2, 1, &[0.0, 1.0]).unwrap();
        assert_eq!(
            s.dot(&excited),
            ComplexMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap()
        );
        assert_eq!(s.dot(&s), ComplexMatrix::zeros(2, 2));
        let sd = atom_raising();
        let completeness = &sd.dot(&s) + &s.dot(&sd);
        assert_eq!(completeness, ComplexMatrix::identity(2));
    }

    #[test]
    fn tensor_of_identities() {
        let t = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
        assert_eq!(t, ComplexMatrix::identity(6));
    }

    #[test]
    fn tensor_layout_matches_space_config() {
        let space = SpaceConfig::new(3).unwrap();
        let a = field_annihilation(space);
        // a|2, 3⟩ = √3 |2, 2⟩
        let from = space.index(SpaceConfig::ATOM_UPPER, 3);
        let to = space.index(SpaceConfig::ATOM_UPPER, 2);
        assert!((a[(to, from)] - re(3f64.sqrt())).norm() < 1e-15);
        let s = composite_lowering(space);
        let from = space.index(SpaceConfig::ATOM_UPPER, 1);
        let to = space.index(SpaceConfig::ATOM_LOWER, 1);
        assert_eq!(s[(to, from)], ONE);
        assert_eq!(space.split(from), (1, 1));
        assert_eq!(space.excitations(from), 2);
    }

    #[test]
    fn composite_operators_commute_exactly() {
        for n_max in 1..=8 {
            let space = SpaceConfig::new(n_max).unwrap();
            let a = field_annihilation(space);
            let s = composite_lowering(space);
            assert_eq!(a.commutator(&s).max_abs(), 0.0);
            assert_eq!(a.commutator(&s.adjoint()).max_abs(), 0.0);
        }
    }

    #[test]
    fn number_operator_is_hermitian() {
        for n_max in 1..=16 {
            let a = annihilation(n_max).unwrap();
            let n = a.adjoint().dot(&a);
            assert_eq!(n.adjoint(), n);
        }
    }

    #[test]
    fn matrix_constructor_checks_length() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
        let m = ComplexMatrix::from_real(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m[(1, 0)], re(4.0));
        assert_eq!(m.transpose()[(0, 1)], re(4.0));
        assert!(!m.approx_eq(&m.transpose(), 1.0));
    }

    #[test]
    fn dmatrix_round_trip() {
        let m = ComplexMatrix::from_fn(3, 2, |r, c| C64::new(r as f64, c as f64));
        assert_eq!(ComplexMatrix::from_dmatrix(&m.to_dmatrix()), m);
    }
}
