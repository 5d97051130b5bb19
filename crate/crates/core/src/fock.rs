//! Degree-truncated full Fock space over the grid span.
//!
//! Basis words are ordered by length, then lexicographically, so the block of
//! length-`l` words is exactly the row-major coefficient array of a degree-`l`
//! tensor. Operators are compressions `P_D A P_D`: any image component of
//! degree above the truncation is dropped.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::ChaosError;
use crate::grid::{ipow, CoeffTensor, GridSpec};
use crate::scalar::{modulus, Cx, Real};
use crate::{ChaosElement, Result};

/// Enumeration of all index words of length `0..=max_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    grid: GridSpec,
    max_degree: usize,
    offsets: Vec<usize>,
}

impl FockBasis {
    pub fn new(grid: GridSpec, max_degree: usize) -> Self {
        let m = grid.cells();
        let mut offsets = Vec::with_capacity(max_degree + 2);
        let mut acc = 0;
        for len in 0..=max_degree {
            offsets.push(acc);
            acc += ipow(m, len);
        }
        offsets.push(acc);
        Self {
            grid,
            max_degree,
            offsets,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `sum_{l=0}^{D} m^l`.
    pub fn dimension(&self) -> usize {
        self.offsets[self.max_degree + 1]
    }

    /// Positions of the words of length `len`.
    pub fn block(&self, len: usize) -> Range<usize> {
        self.offsets[len]..self.offsets[len + 1]
    }

    pub fn index_of(&self, word: &[usize]) -> Option<usize> {
        let m = self.grid.cells();
        if word.len() > self.max_degree || word.iter().any(|&i| i >= m) {
            return None;
        }
        Some(self.offsets[word.len()] + word.iter().fold(0, |acc, &i| acc * m + i))
    }

    pub fn word(&self, index: usize) -> Vec<usize> {
        assert!(index < self.dimension(), "basis index out of range");
        let len = (0..=self.max_degree)
            .find(|&l| index < self.offsets[l + 1])
            .unwrap_or(self.max_degree);
        let m = self.grid.cells();
        let mut flat = index - self.offsets[len];
        let mut word = vec![0; len];
        for slot in word.iter_mut().rev() {
            *slot = flat % m;
            flat /= m;
        }
        word
    }

    /// Words in basis order.
    pub fn words(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.dimension()).map(move |i| self.word(i))
    }

    /// Length of the word at `index`.
    pub fn degree_of(&self, index: usize) -> usize {
        (0..=self.max_degree)
            .find(|&l| index < self.offsets[l + 1])
            .unwrap_or(self.max_degree)
    }
}

/// Deterministic basis enumeration.
pub fn enumerate_basis(grid: GridSpec, max_degree: usize) -> FockBasis {
    FockBasis::new(grid, max_degree)
}

/// Vector in the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector<T: Real> {
    basis: FockBasis,
    coeffs: DVector<Cx<T>>,
}

impl<T: Real> FockVector<T> {
    pub fn zeros(basis: &FockBasis) -> Self {
        Self {
            basis: basis.clone(),
            coeffs: DVector::from_element(basis.dimension(), Complex::zero()),
        }
    }

    /// The vacuum `Ω`.
    pub fn vacuum(basis: &FockBasis) -> Self {
        let mut v = Self::zeros(basis);
        v.coeffs[0] = Complex::one();
        v
    }

    pub fn basis_word(basis: &FockBasis, word: &[usize]) -> Result<Self> {
        let idx = basis
            .index_of(word)
            .ok_or_else(|| ChaosError::InvalidArgument(format!("word {word:?} not in basis")))?;
        let mut v = Self::zeros(basis);
        v.coeffs[idx] = Complex::one();
        Ok(v)
    }

    /// Kernel sequence of `Y`, with degrees above the truncation dropped.
    pub fn from_chaos(basis: &FockBasis, y: &ChaosElement<T>) -> Result<Self> {
        basis.grid.ensure_same(y.grid())?;
        let mut v = Self::zeros(basis);
        for (n, f) in y.terms() {
            if n > basis.max_degree {
                continue;
            }
            let start = basis.block(n).start;
            for (i, &c) in f.coeffs().iter().enumerate() {
                v.coeffs[start + i] = c;
            }
        }
        Ok(v)
    }

    pub fn from_coeffs(basis: &FockBasis, coeffs: DVector<Cx<T>>) -> Result<Self> {
        if coeffs.len() != basis.dimension() {
            return Err(ChaosError::ShapeMismatch {
                expected: basis.dimension(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs,
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &DVector<Cx<T>> {
        &self.coeffs
    }

    /// Degree-`len` block as a coefficient tensor.
    pub fn block(&self, len: usize) -> CoeffTensor<T> {
        let range = self.basis.block(len);
        CoeffTensor::from_coeffs(self.basis.grid, len, self.coeffs.as_slice()[range].to_vec())
            .expect("block length matches tensor shape")
    }

    pub fn to_chaos(&self) -> ChaosElement<T> {
        let mut y = ChaosElement::zero(self.basis.grid);
        for len in 0..=self.basis.max_degree {
            let block = self.block(len);
            if !block.is_zero() {
                y.set_component(block).expect("same grid");
            }
        }
        y
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.basis != other.basis {
            return Err(ChaosError::GridMismatch);
        }
        Ok(self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc.max(modulus(a - b))))
    }
}

/// Creation (`l(h)`) or annihilation (`l*(h)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

/// Square matrix over a Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    basis: FockBasis,
    entries: DMatrix<Cx<T>>,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn zeros(basis: &FockBasis) -> Self {
        let d = basis.dimension();
        Self {
            basis: basis.clone(),
            entries: DMatrix::from_element(d, d, Complex::zero()),
        }
    }

    pub fn identity(basis: &FockBasis) -> Self {
        let d = basis.dimension();
        Self {
            basis: basis.clone(),
            entries: DMatrix::identity(d, d),
        }
    }

    pub fn from_entries(basis: &FockBasis, entries: DMatrix<Cx<T>>) -> Result<Self> {
        let d = basis.dimension();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(ChaosError::ShapeMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            entries,
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<Cx<T>> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Cx<T> {
        self.entries[(row, col)]
    }

    pub(crate) fn entries_mut(&mut self) -> &mut DMatrix<Cx<T>> {
        &mut self.entries
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        if self.basis == other.basis {
            Ok(())
        } else {
            Err(ChaosError::GridMismatch)
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            entries: &self.entries * &other.entries,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(Self {
            basis: self.basis.clone(),
            entries: &self.entries - &other.entries,
        })
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        Self {
            basis: self.basis.clone(),
            entries: self.entries.map(|x| x * c),
        }
    }

    pub fn apply(&self, v: &FockVector<T>) -> Result<FockVector<T>> {
        if self.basis != v.basis {
            return Err(ChaosError::GridMismatch);
        }
        FockVector::from_coeffs(&self.basis, &self.entries * &v.coeffs)
    }

    /// Column of the vacuum, `A Ω`.
    pub fn vacuum_column(&self) -> FockVector<T> {
        FockVector {
            basis: self.basis.clone(),
            coeffs: self.entries.column(0).into_owned(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            entries: self.entries.adjoint(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.ensure_same(other)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc.max(modulus(a - b))))
    }

    pub fn is_self_adjoint(&self, tol: T) -> bool {
        let d = self.entries.nrows();
        (0..d).all(|i| {
            (i..d).all(|j| modulus(self.entries[(i, j)] - self.entries[(j, i)].conj()) <= tol)
        })
    }

    /// `τ(A) = <AΩ, Ω>`, the top-left entry.
    pub fn vacuum_expectation(&self) -> Cx<T> {
        self.entries[(0, 0)]
    }

    /// Largest singular value. For a truncation of an infinite-dimensional
    /// operator this is a lower bound on its norm.
    pub fn operator_norm_estimate(&self) -> T {
        if self.entries.is_empty() {
            return T::zero();
        }
        if self.is_self_adjoint(T::zero()) {
            self.entries
                .symmetric_eigenvalues()
                .iter()
                .fold(T::zero(), |acc, &l| acc.max(l.abs()))
        } else {
            self.entries
                .clone()
                .singular_values()
                .iter()
                .fold(T::zero(), |acc, &s| acc.max(s))
        }
    }
}

fn check_direction<T: Real>(basis: &FockBasis, h: &CoeffTensor<T>) -> Result<()> {
    basis.grid.ensure_same(h.grid())?;
    if h.degree() != 1 {
        return Err(ChaosError::DegreeMismatch {
            expected: 1,
            found: h.degree(),
        });
    }
    Ok(())
}

/// Matrix of `l(h)` or `l*(h)`; the two are exact mutual adjoints.
pub fn ladder_matrix<T: Real>(
    basis: &FockBasis,
    h: &CoeffTensor<T>,
    kind: LadderKind,
) -> Result<OperatorMatrix<T>> {
    check_direction(basis, h)?;
    let m = basis.grid.cells();
    let mut create = OperatorMatrix::zeros(basis);
    // l(h) e_w = sum_j h_j e_{j w}; length-D words map out of the truncation.
    for len in 0..basis.max_degree {
        let stride = ipow(m, len);
        let src = basis.block(len);
        let dst = basis.block(len + 1).start;
        for (flat, col) in src.enumerate() {
            for (j, &hj) in h.coeffs().iter().enumerate() {
                create.entries[(dst + j * stride + flat, col)] = hj;
            }
        }
    }
    Ok(match kind {
        LadderKind::Create => create,
        LadderKind::Annihilate => create.adjoint(),
    })
}

/// Field operator `X(h) = l(h) + l*(h)` for a real direction `h`.
pub fn field_matrix<T: Real>(basis: &FockBasis, h: &CoeffTensor<T>) -> Result<OperatorMatrix<T>> {
    check_direction(basis, h)?;
    if !h.is_real() {
        return Err(ChaosError::NonRealDirection);
    }
    let create = ladder_matrix(basis, h, LadderKind::Create)?;
    create.add(&create.adjoint())
}

/// `U_k(A)` via `U_0 = 1`, `U_1 = A`, `U_{k+1} = A U_k - U_{k-1}`.
pub fn chebyshev_u<T: Real>(a: &OperatorMatrix<T>, k: usize) -> OperatorMatrix<T> {
    let mut prev = OperatorMatrix::identity(&a.basis);
    if k == 0 {
        return prev;
    }
    let mut cur = a.clone();
    for _ in 1..k {
        let next = OperatorMatrix {
            basis: a.basis.clone(),
            entries: &a.entries * &cur.entries - &prev.entries,
        };
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Wick product `U_{k_1}(X(e_{j_1})) ... U_{k_r}(X(e_{j_r}))` for blocks
/// `(j_i, k_i)` with adjacent indices distinct.
pub fn wick_matrix<T: Real>(basis: &FockBasis, blocks: &[(usize, usize)]) -> Result<OperatorMatrix<T>> {
    let m = basis.grid.cells();
    for pair in blocks.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(ChaosError::AdjacentBlocks { index: pair[0].0 });
        }
    }
    let mut out = OperatorMatrix::identity(basis);
    for &(j, k) in blocks {
        if j >= m {
            return Err(ChaosError::IndexOutOfRange { index: j, cells: m });
        }
        let x = field_matrix(basis, &CoeffTensor::basis(basis.grid, j)?)?;
        out = out.mul(&chebyshev_u(&x, k))?;
    }
    Ok(out)
}

/// Groups a word into maximal blocks of equal letters, `(0,0,1) -> [(0,2),(1,1)]`.
pub fn word_blocks(word: &[usize]) -> Vec<(usize, usize)> {
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    for &i in word {
        match blocks.last_mut() {
            Some((j, k)) if *j == i => *k += 1,
            _ => blocks.push((i, 1)),
        }
    }
    blocks
}

/// Wick product of a plain index word.
pub fn wick_word<T: Real>(basis: &FockBasis, word: &[usize]) -> Result<OperatorMatrix<T>> {
    wick_matrix(basis, &word_blocks(word))
}

pub fn vacuum_expectation<T: Real>(a: &OperatorMatrix<T>) -> Cx<T> {
    a.vacuum_expectation()
}

pub fn operator_norm_estimate<T: Real>(a: &OperatorMatrix<T>) -> T {
    a.operator_norm_estimate()
}
