//! Discretized `L^2(R_+^n)`: coefficient tensors over the orthonormal
//! step-function basis `e_k = (m/T)^{1/2} 1_{[kT/m, (k+1)T/m)}` of a uniform grid.
//!
//! Coefficients are stored densely in row-major order, the first slot being
//! the most significant. Because the basis is real and orthonormal, every
//! `L^2` formula becomes a Euclidean tensor formula on the coefficients.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::ChaosError;
use crate::scalar::{modulus, Cx, Real};
use crate::Result;

/// Uniform partition of `[0, horizon)` into `cells` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    cells: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, cells: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || cells == 0 {
            return Err(ChaosError::InvalidGrid { horizon, cells });
        }
        Ok(Self { horizon, cells })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Length `T/m` of one cell.
    pub fn cell_width(&self) -> f64 {
        self.horizon / self.cells as f64
    }

    /// Height `(m/T)^{1/2}` of a basis function on its cell.
    pub fn basis_height(&self) -> f64 {
        (self.cells as f64 / self.horizon).sqrt()
    }

    /// Endpoints of cell `k`.
    pub fn cell(&self, k: usize) -> (f64, f64) {
        let w = self.cell_width();
        (k as f64 * w, (k + 1) as f64 * w)
    }

    /// Number of coefficients of a degree-`n` tensor, `m^n`.
    pub fn tensor_len(&self, degree: usize) -> usize {
        ipow(self.cells, degree)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(ChaosError::GridMismatch)
        }
    }
}

pub(crate) fn ipow(base: usize, exp: usize) -> usize {
    (0..exp).fold(1usize, |acc, _| acc * base)
}

/// Permutation of `0..m^p` reversing the base-`m` digits of each index.
pub(crate) fn reversal(m: usize, p: usize) -> Vec<usize> {
    let len = ipow(m, p);
    (0..len)
        .map(|flat| {
            let mut rest = flat;
            let mut out = 0;
            for _ in 0..p {
                out = out * m + rest % m;
                rest /= m;
            }
            out
        })
        .collect()
}

/// Coefficients of `f = sum c[i_1..i_n] e_{i_1} x ... x e_{i_n}` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTensor<T> {
    grid: GridSpec,
    degree: usize,
    coeffs: Vec<Cx<T>>,
}

impl<T: Real> CoeffTensor<T> {
    pub fn zeros(grid: GridSpec, degree: usize) -> Self {
        Self {
            grid,
            degree,
            coeffs: vec![Complex::zero(); grid.tensor_len(degree)],
        }
    }

    /// Degree-0 tensor carrying the single value `c`.
    pub fn scalar(grid: GridSpec, c: Cx<T>) -> Self {
        Self {
            grid,
            degree: 0,
            coeffs: vec![c],
        }
    }

    pub fn from_coeffs(grid: GridSpec, degree: usize, coeffs: Vec<Cx<T>>) -> Result<Self> {
        let expected = grid.tensor_len(degree);
        if coeffs.len() != expected {
            return Err(ChaosError::ShapeMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(ChaosError::NonFinite);
        }
        Ok(Self {
            grid,
            degree,
            coeffs,
        })
    }

    /// Real coefficients, mostly for directions `h`.
    pub fn from_real(grid: GridSpec, degree: usize, values: &[T]) -> Result<Self> {
        Self::from_coeffs(
            grid,
            degree,
            values.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        )
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(grid: GridSpec, degree: usize, mut f: impl FnMut(&[usize]) -> Cx<T>) -> Self {
        let len = grid.tensor_len(degree);
        let mut idx = vec![0usize; degree];
        let mut coeffs = Vec::with_capacity(len);
        for flat in 0..len {
            digits_into(flat, grid.cells, &mut idx);
            coeffs.push(f(&idx));
        }
        Self {
            grid,
            degree,
            coeffs,
        }
    }

    /// Basis vector `e_k`.
    pub fn basis(grid: GridSpec, k: usize) -> Result<Self> {
        Self::basis_word(grid, &[k])
    }

    /// Basis tensor `e_{w_1} x ... x e_{w_l}`.
    pub fn basis_word(grid: GridSpec, word: &[usize]) -> Result<Self> {
        if let Some(&index) = word.iter().find(|&&i| i >= grid.cells) {
            return Err(ChaosError::IndexOutOfRange {
                index,
                cells: grid.cells,
            });
        }
        let mut t = Self::zeros(grid, word.len());
        let flat = word.iter().fold(0, |acc, &i| acc * grid.cells + i);
        t.coeffs[flat] = Complex::one();
        Ok(t)
    }

    /// Orthogonal projection of `1_{[a,b]}` onto the grid span.
    pub fn indicator(grid: GridSpec, a: f64, b: f64) -> Result<Self> {
        project_indicator(grid, a, b)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Cx<T>> {
        self.coeffs
    }

    pub fn get(&self, index: &[usize]) -> Cx<T> {
        debug_assert_eq!(index.len(), self.degree);
        let flat = index.iter().fold(0, |acc, &i| acc * self.grid.cells + i);
        self.coeffs[flat]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.is_zero())
    }

    pub fn norm_sqr(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    /// `L^2` norm.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, &c| acc.max(modulus(c)))
    }

    /// Max-norm of `self - other`; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.ensure_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |acc, (&a, &b)| acc.max(modulus(a - b))))
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        self.map(|x| x * c)
    }

    pub fn map(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        Self {
            grid: self.grid,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Cx<T>, other: &Self) -> Result<()> {
        self.ensure_shape(other)?;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-Complex::<T>::one(), other)?;
        Ok(out)
    }

    fn ensure_shape(&self, other: &Self) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.degree != other.degree {
            return Err(ChaosError::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    fn ensure_degree(&self, degree: usize) -> Result<()> {
        if self.degree != degree {
            return Err(ChaosError::DegreeMismatch {
                expected: degree,
                found: self.degree,
            });
        }
        Ok(())
    }

    /// `<f, g> = sum c_f conj(c_g)`: linear in `self`, conjugate-linear in `other`.
    pub fn inner(&self, other: &Self) -> Result<Cx<T>> {
        self.ensure_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(Complex::zero(), |acc, (&a, &b)| acc + a * b.conj()))
    }

    /// Bilinear full pairing `sum c_f[i_1..i_n] c_g[i_n..i_1]`, i.e. the
    /// top contraction `f ⌢_n g`.
    pub fn bilinear_pairing(&self, other: &Self) -> Result<Cx<T>> {
        self.ensure_shape(other)?;
        let rev = reversal(self.grid.cells, self.degree);
        Ok(self
            .coeffs
            .iter()
            .zip(&rev)
            .fold(Complex::zero(), |acc, (&a, &r)| acc + a * other.coeffs[r]))
    }

    /// `f ⊗ g`, of degree `n + k`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for &a in &self.coeffs {
            coeffs.extend(other.coeffs.iter().map(|&b| a * b));
        }
        Ok(Self {
            grid: self.grid,
            degree: self.degree + other.degree,
            coeffs,
        })
    }

    /// The `p`-th contraction `f ⌢_p g`: the last `p` slots of `f` are paired
    /// with the first `p` slots of `g` in reversed order, without conjugation.
    pub fn contract(&self, other: &Self, p: usize) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let max = self.degree.min(other.degree);
        if p > max {
            return Err(ChaosError::ContractionOrder { p, max });
        }
        Ok(contract_into(self, self.degree - p, p, other))
    }

    /// Mirror involution `f*(t_1..t_n) = conj(f(t_n..t_1))`.
    pub fn involution(&self) -> Self {
        let rev = reversal(self.grid.cells, self.degree);
        Self {
            grid: self.grid,
            degree: self.degree,
            coeffs: rev.iter().map(|&r| self.coeffs[r].conj()).collect(),
        }
    }

    /// Max-norm of `f - f*` is at most `tol`.
    pub fn is_mirror_symmetric(&self, tol: T) -> bool {
        self.mirror_defect() <= tol
    }

    pub fn mirror_defect(&self) -> T {
        let rev = reversal(self.grid.cells, self.degree);
        rev.iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &r)| {
                acc.max(modulus(self.coeffs[i] - self.coeffs[r].conj()))
            })
    }

    /// Pairs slot `slot` (0-based) against `conj(h)`, dropping that slot.
    pub fn pair_slot(&self, slot: usize, h: &Self) -> Result<Self> {
        self.grid.ensure_same(&h.grid)?;
        h.ensure_degree(1)?;
        if slot >= self.degree {
            return Err(ChaosError::InvalidArgument(format!(
                "slot {slot} out of range for degree {}",
                self.degree
            )));
        }
        let m = self.grid.cells;
        let outer = ipow(m, slot);
        let inner = ipow(m, self.degree - slot - 1);
        let hc: Vec<Cx<T>> = h.coeffs.iter().map(|c| c.conj()).collect();
        let mut out = Self::zeros(self.grid, self.degree - 1);
        for a in 0..outer {
            for (s, &hs) in hc.iter().enumerate() {
                if hs.is_zero() {
                    continue;
                }
                let src = (a * m + s) * inner;
                let dst = a * inner;
                for c in 0..inner {
                    out.coeffs[dst + c] += self.coeffs[src + c] * hs;
                }
            }
        }
        Ok(out)
    }

    /// Inserts `h` as a new slot at position `pos`.
    pub fn insert_slot(&self, pos: usize, h: &Self) -> Result<Self> {
        self.grid.ensure_same(&h.grid)?;
        h.ensure_degree(1)?;
        if pos > self.degree {
            return Err(ChaosError::InvalidArgument(format!(
                "insert position {pos} out of range for degree {}",
                self.degree
            )));
        }
        let m = self.grid.cells;
        let outer = ipow(m, pos);
        let inner = ipow(m, self.degree - pos);
        let mut out = Self::zeros(self.grid, self.degree + 1);
        for a in 0..outer {
            for (j, &hj) in h.coeffs.iter().enumerate() {
                let dst = (a * m + j) * inner;
                let src = a * inner;
                for c in 0..inner {
                    out.coeffs[dst + c] = self.coeffs[src + c] * hj;
                }
            }
        }
        Ok(out)
    }
}

/// Orthogonal projection of `1_{[a,b]}` onto the grid span; exact when `a`
/// and `b` are grid-aligned. The squared norm of the result is at most `b - a`.
pub fn project_indicator<T: Real>(grid: GridSpec, a: f64, b: f64) -> Result<CoeffTensor<T>> {
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || a > b {
        return Err(ChaosError::InvalidInterval { a, b });
    }
    let height = grid.basis_height();
    let values: Vec<T> = (0..grid.cells)
        .map(|k| {
            let (lo, hi) = grid.cell(k);
            let overlap = (hi.min(b) - lo.max(a)).max(0.0);
            T::of(height * overlap)
        })
        .collect();
    CoeffTensor::from_real(grid, 1, &values)
}

fn digits_into(mut flat: usize, m: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % m;
        flat /= m;
    }
}

/// Contracts slots `start..start+p` of `f` against the first `p` slots of `g`
/// (reversed), putting the remaining slots of `g` where the contracted ones
/// were: `out[a, b, c] = sum_s f[a, s_1..s_p, c] g[s_p..s_1, b]`.
pub(crate) fn contract_into<T: Real>(
    f: &CoeffTensor<T>,
    start: usize,
    p: usize,
    g: &CoeffTensor<T>,
) -> CoeffTensor<T> {
    debug_assert!(start + p <= f.degree && p <= g.degree);
    let m = f.grid.cells;
    let outer = ipow(m, start);
    let span = ipow(m, p);
    let tail = ipow(m, f.degree - start - p);
    let rest = ipow(m, g.degree - p);
    let rev = reversal(m, p);
    let mut out = CoeffTensor::zeros(f.grid, f.degree + g.degree - 2 * p);
    for a in 0..outer {
        for (s, &rs) in rev.iter().enumerate() {
            let f_base = (a * span + s) * tail;
            for b in 0..rest {
                let gv = g.coeffs[rs * rest + b];
                if gv.is_zero() {
                    continue;
                }
                let o_base = (a * rest + b) * tail;
                for c in 0..tail {
                    out.coeffs[o_base + c] += f.coeffs[f_base + c] * gv;
                }
            }
        }
    }
    out
}

/// Contracts the last `p` slots of `g` against slots `start..start+p` of `t`
/// (reversed), placing the remaining slots of `g` at `start`:
/// `out[l, a, r] = sum_s g[a, s_1..s_p] t[l, s_p..s_1, r]`.
pub(crate) fn contract_from<T: Real>(
    g: &CoeffTensor<T>,
    t: &CoeffTensor<T>,
    start: usize,
    p: usize,
) -> CoeffTensor<T> {
    debug_assert!(start + p <= t.degree && p <= g.degree);
    let m = t.grid.cells;
    let left = ipow(m, start);
    let span = ipow(m, p);
    let right = ipow(m, t.degree - start - p);
    let head = ipow(m, g.degree - p);
    let rev = reversal(m, p);
    let mut out = CoeffTensor::zeros(t.grid, t.degree + g.degree - 2 * p);
    for l in 0..left {
        for a in 0..head {
            let o_base = (l * head + a) * right;
            for (s, &rs) in rev.iter().enumerate() {
                let gv = g.coeffs[a * span + s];
                if gv.is_zero() {
                    continue;
                }
                let t_base = (l * span + rs) * right;
                for r in 0..right {
                    out.coeffs[o_base + r] += gv * t.coeffs[t_base + r];
                }
            }
        }
    }
    out
}

/// Multiplies the two legs of a split tensor at contraction order `p`:
/// `out[a, b] = sum_s t[a, s_1..s_p, s_p..s_1, b]` with the split after slot `split`.
pub(crate) fn self_contract<T: Real>(t: &CoeffTensor<T>, split: usize, p: usize) -> CoeffTensor<T> {
    debug_assert!(p <= split && split + p <= t.degree);
    let m = t.grid.cells;
    let head = ipow(m, split - p);
    let span = ipow(m, p);
    let tail = ipow(m, t.degree - split - p);
    let rev = reversal(m, p);
    let mut out = CoeffTensor::zeros(t.grid, t.degree - 2 * p);
    for a in 0..head {
        for (s, &rs) in rev.iter().enumerate() {
            let t_base = ((a * span + s) * span + rs) * tail;
            for b in 0..tail {
                out.coeffs[a * tail + b] += t.coeffs[t_base + b];
            }
        }
    }
    out
}
