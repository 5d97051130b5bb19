//! Finite Wigner chaos: `Y = sum_n I_n(f_n)` stored as its kernel sequence.
//!
//! Products are evaluated with the free Itô formula
//! `I_n(f) I_m(g) = sum_p I_{n+m-2p}(f ⌢_p g)`, which is closed on finite
//! chaos, so the algebra here is exact. Constants live in degree zero.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::ChaosError;
use crate::fock::{FockBasis, OperatorMatrix};
use crate::grid::{project_indicator, CoeffTensor, GridSpec};
use crate::scalar::{Cx, Real};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosElement<T> {
    grid: GridSpec,
    terms: BTreeMap<usize, CoeffTensor<T>>,
}

impl<T: Real> ChaosElement<T> {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            terms: BTreeMap::new(),
        }
    }

    /// `c · 1`, i.e. `I_0(c)`.
    pub fn scalar(grid: GridSpec, c: Cx<T>) -> Self {
        Self::from_tensor(CoeffTensor::scalar(grid, c))
    }

    pub fn one(grid: GridSpec) -> Self {
        Self::scalar(grid, Complex::one())
    }

    /// The Wigner integral `I_n(f)`.
    pub fn from_tensor(f: CoeffTensor<T>) -> Self {
        let grid = *f.grid();
        let mut terms = BTreeMap::new();
        terms.insert(f.degree(), f);
        Self { grid, terms }
    }

    /// Sums the given kernels; repeated degrees accumulate.
    pub fn from_terms(grid: GridSpec, terms: impl IntoIterator<Item = CoeffTensor<T>>) -> Result<Self> {
        let mut out = Self::zero(grid);
        for f in terms {
            out.accumulate(&f)?;
        }
        Ok(out)
    }

    /// Brownian motion `S_t = X(1_{[0,t]})`, projected onto the grid span.
    pub fn free_bm(grid: GridSpec, t: f64) -> Result<Self> {
        if !(0.0..=grid.horizon()).contains(&t) {
            return Err(ChaosError::TimeOutOfRange {
                t,
                horizon: grid.horizon(),
            });
        }
        if t == 0.0 {
            return Ok(Self::zero(grid));
        }
        Ok(Self::from_tensor(project_indicator(grid, 0.0, t)?))
    }

    /// Increment `S_b - S_a` over `[a, b]`.
    pub fn free_bm_increment(grid: GridSpec, a: f64, b: f64) -> Result<Self> {
        if b > grid.horizon() {
            return Err(ChaosError::TimeOutOfRange {
                t: b,
                horizon: grid.horizon(),
            });
        }
        Ok(Self::from_tensor(project_indicator(grid, a, b)?))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, degree: usize) -> Option<&CoeffTensor<T>> {
        self.terms.get(&degree)
    }

    /// Kernel of degree `n`, zero if absent.
    pub fn kernel(&self, degree: usize) -> CoeffTensor<T> {
        self.terms
            .get(&degree)
            .cloned()
            .unwrap_or_else(|| CoeffTensor::zeros(self.grid, degree))
    }

    /// Stored `(degree, kernel)` pairs in increasing degree.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &CoeffTensor<T>)> {
        self.terms.iter().map(|(&n, f)| (n, f))
    }

    /// Highest degree with a nonzero kernel; `None` for the zero element.
    pub fn top_degree(&self) -> Option<usize> {
        self.terms
            .iter()
            .rev()
            .find(|(_, f)| !f.is_zero())
            .map(|(&n, _)| n)
    }

    /// Highest stored degree, zero or not.
    pub fn stored_degree(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|f| f.is_zero())
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|f| f.is_real())
    }

    /// Replaces the kernel of the tensor's degree.
    pub fn set_component(&mut self, f: CoeffTensor<T>) -> Result<()> {
        self.grid.ensure_same(f.grid())?;
        self.terms.insert(f.degree(), f);
        Ok(())
    }

    /// Adds `f` to the kernel of its degree.
    pub fn accumulate(&mut self, f: &CoeffTensor<T>) -> Result<()> {
        self.grid.ensure_same(f.grid())?;
        match self.terms.get_mut(&f.degree()) {
            Some(existing) => existing.axpy(Complex::one(), f)?,
            None => {
                self.terms.insert(f.degree(), f.clone());
            }
        }
        Ok(())
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        Self {
            grid: self.grid,
            terms: self.terms.iter().map(|(&n, f)| (n, f.scale(c))).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for f in other.terms.values() {
            out.accumulate(f)?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(-Complex::<T>::one()))
    }

    /// Itô product `Y Z`, exact.
    pub fn ito_product(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = Self::zero(self.grid);
        for (&n, f) in &self.terms {
            for (&k, g) in &other.terms {
                for p in 0..=n.min(k) {
                    out.accumulate(&f.contract(g, p)?)?;
                }
            }
        }
        Ok(out)
    }

    /// `Y*`, degree-wise mirror involution.
    pub fn adjoint(&self) -> Self {
        Self {
            grid: self.grid,
            terms: self.terms.iter().map(|(&n, f)| (n, f.involution())).collect(),
        }
    }

    /// `τ(Y)`, the degree-zero coefficient.
    pub fn trace(&self) -> Cx<T> {
        self.terms
            .get(&0)
            .map(|f| f.coeffs()[0])
            .unwrap_or_else(Complex::zero)
    }

    /// `<Y, Z>_2 = τ(Z* Y) = sum_n <f_n, g_n>`.
    pub fn l2_inner(&self, other: &Self) -> Result<Cx<T>> {
        self.grid.ensure_same(&other.grid)?;
        let mut acc = Complex::zero();
        for (n, f) in &self.terms {
            if let Some(g) = other.terms.get(n) {
                acc += f.inner(g)?;
            }
        }
        Ok(acc)
    }

    pub fn l2_norm_sqr(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, f| acc + f.norm_sqr())
    }

    /// `||Y||_2`.
    pub fn l2_norm(&self) -> T {
        self.l2_norm_sqr().sqrt()
    }

    /// `||Y - Z||_2`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.try_sub(other)?.l2_norm())
    }

    /// Largest mirror defect over all degrees.
    pub fn mirror_defect(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, f| acc.max(f.mirror_defect()))
    }

    pub fn is_self_adjoint(&self, tol: T) -> bool {
        self.mirror_defect() <= tol
    }

    /// `N Y`: the degree-`n` kernel scaled by `n`.
    pub fn number_operator(&self) -> Self {
        Self {
            grid: self.grid,
            terms: self
                .terms
                .iter()
                .map(|(&n, f)| (n, f.scale(Complex::new(T::of(n as f64), T::zero()))))
                .collect(),
        }
    }

    /// `sum_n (n+1) ||f_n||`, an upper bound for the operator norm.
    pub fn haagerup_bound(&self) -> T {
        self.terms.iter().fold(T::zero(), |acc, (&n, f)| {
            acc + T::of((n + 1) as f64) * f.norm()
        })
    }

    /// `τ(Y^k)`.
    pub fn moment(&self, k: usize) -> Cx<T> {
        self.moments(k)[k]
    }

    /// `τ(Y^0), ..., τ(Y^k)`, using `τ(Y^{a+b}) = <Y^a, (Y^b)*>` so that no
    /// power above `ceil(k/2)` is formed.
    pub fn moments(&self, k: usize) -> Vec<Cx<T>> {
        let mut powers = vec![Self::one(self.grid)];
        for _ in 0..k.div_ceil(2) {
            let next = powers.last().unwrap().ito_product(self).expect("same grid");
            powers.push(next);
        }
        (0..=k)
            .map(|j| {
                let (a, b) = (j.div_ceil(2), j / 2);
                powers[a]
                    .l2_inner(&powers[b].adjoint())
                    .expect("same grid")
            })
            .collect()
    }

    /// Action of `Y` on the truncated Fock space: the column of the word `w`
    /// is `sum_n sum_p f_n ⌢_p e_w`, with degrees above `D` discarded.
    pub fn matrix_rep(&self, max_degree: usize) -> OperatorMatrix<T> {
        let basis = FockBasis::new(self.grid, max_degree);
        self.matrix_rep_on(&basis)
            .expect("basis built on the element's grid")
    }

    pub fn matrix_rep_on(&self, basis: &FockBasis) -> Result<OperatorMatrix<T>> {
        self.grid.ensure_same(basis.grid())?;
        let max_degree = basis.max_degree();
        let mut out = OperatorMatrix::zeros(basis);
        let entries = out.entries_mut();
        for col in 0..basis.dimension() {
            let word = basis.word(col);
            let e_w = CoeffTensor::basis_word(self.grid, &word)?;
            for (&n, f) in &self.terms {
                for p in 0..=n.min(word.len()) {
                    let deg = n + word.len() - 2 * p;
                    if deg > max_degree {
                        continue;
                    }
                    let image = f.contract(&e_w, p)?;
                    let start = basis.block(deg).start;
                    for (i, &c) in image.coeffs().iter().enumerate() {
                        entries[(start + i, col)] += c;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl<'a, T: Real> Add for &'a ChaosElement<T> {
    type Output = ChaosElement<T>;

    /// Panics if the grids differ; use [`ChaosElement::try_add`] otherwise.
    fn add(self, rhs: Self) -> ChaosElement<T> {
        self.try_add(rhs).expect("chaos elements on different grids")
    }
}

impl<'a, T: Real> Sub for &'a ChaosElement<T> {
    type Output = ChaosElement<T>;

    fn sub(self, rhs: Self) -> ChaosElement<T> {
        self.try_sub(rhs).expect("chaos elements on different grids")
    }
}

impl<'a, T: Real> Neg for &'a ChaosElement<T> {
    type Output = ChaosElement<T>;

    fn neg(self) -> ChaosElement<T> {
        self.scale(-Complex::<T>::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Cx<f64>;
    type Y = ChaosElement<f64>;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    fn grid(t: f64, m: usize) -> GridSpec {
        GridSpec::new(t, m).unwrap()
    }

    fn e(g: GridSpec, k: usize) -> CoeffTensor<f64> {
        CoeffTensor::basis(g, k).unwrap()
    }

    fn i1(g: GridSpec, k: usize) -> Y {
        Y::from_tensor(e(g, k))
    }

    fn i2(g: GridSpec, a: usize, b: usize) -> Y {
        Y::from_tensor(e(g, a).tensor(&e(g, b)).unwrap())
    }

    #[test]
    fn ito_product_examples() {
        let g = grid(1.0, 1);
        let x = i1(g, 0);
        let expect = &i2(g, 0, 0) + &Y::one(g);
        assert!(x.ito_product(&x).unwrap().distance(&expect).unwrap() < 1e-15);
        assert_eq!(x.ito_product(&Y::one(g)).unwrap(), x);

        let e3 = Y::from_tensor(e(g, 0).tensor(&e(g, 0)).unwrap().tensor(&e(g, 0)).unwrap());
        let expect = &e3 + &x;
        assert!(i2(g, 0, 0).ito_product(&x).unwrap().distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn ito_product_grid_mismatch() {
        let a = i1(grid(1.0, 1), 0);
        let b = i1(grid(2.0, 1), 0);
        assert_eq!(a.ito_product(&b), Err(ChaosError::GridMismatch));
    }

    #[test]
    fn adjoint_examples() {
        let g = grid(1.0, 1);
        let sa = &i2(g, 0, 0) + &i1(g, 0);
        assert_eq!(sa.adjoint(), sa);
        let iy = i1(g, 0).scale(C::new(0.0, 1.0));
        assert_eq!(iy.adjoint(), i1(g, 0).scale(C::new(0.0, -1.0)));
    }

    #[test]
    fn trace_examples() {
        let g = grid(1.0, 1);
        assert_eq!(Y::scalar(g, c(5.0)).trace(), c(5.0));
        assert_eq!(i2(g, 0, 0).trace(), c(0.0));
        assert_eq!(i1(g, 0).ito_product(&i1(g, 0)).unwrap().trace(), c(1.0));
    }

    #[test]
    fn l2_inner_examples() {
        let g = grid(1.0, 1);
        assert_eq!(i1(g, 0).l2_inner(&i1(g, 0)).unwrap(), c(1.0));
        assert_eq!(i1(g, 0).l2_inner(&i2(g, 0, 0)).unwrap(), c(0.0));
        let y = &i1(g, 0).scale(C::new(1.0, 2.0)) + &Y::scalar(g, c(0.5));
        let via_product = y.adjoint().ito_product(&y).unwrap().trace();
        assert!((y.l2_inner(&y).unwrap() - via_product).norm() < 1e-14);
    }

    #[test]
    fn matrix_rep_examples() {
        let g = grid(1.0, 1);
        let basis = FockBasis::new(g, 3);
        let x = crate::fock::field_matrix(&basis, &e(g, 0)).unwrap();
        assert_eq!(i1(g, 0).matrix_rep(3), x);
        let cst = Y::scalar(g, C::new(2.0, -1.0)).matrix_rep(2);
        assert_eq!(cst, OperatorMatrix::identity(&FockBasis::new(g, 2)).scale(C::new(2.0, -1.0)));
        let w = i2(g, 0, 0).matrix_rep(3);
        assert_eq!(
            w.vacuum_column(),
            crate::fock::FockVector::basis_word(&basis, &[0, 0]).unwrap()
        );
    }

    #[test]
    fn free_bm_examples() {
        let g = grid(2.0, 2);
        assert!(Y::free_bm(g, 0.0).unwrap().is_zero());
        assert_eq!(Y::free_bm(g, 1.0).unwrap(), i1(g, 0));
        let s2 = Y::free_bm(g, 2.0).unwrap();
        assert_eq!(s2, Y::from_tensor(e(g, 0).add(&e(g, 1)).unwrap()));
        assert!((s2.l2_norm_sqr() - 2.0).abs() < 1e-15);
        assert!(Y::free_bm(g, 2.5).is_err());
        assert!(Y::free_bm(g, -0.1).is_err());
    }

    #[test]
    fn moment_examples() {
        let g = grid(1.0, 1);
        let s1 = Y::free_bm(g, 1.0).unwrap();
        assert!((s1.moment(2) - c(1.0)).norm() < 1e-14);
        assert!((s1.moment(4) - c(2.0)).norm() < 1e-14);
        assert_eq!(s1.moment(0), c(1.0));
        assert_eq!(i2(g, 0, 0).moment(1), c(0.0));
    }

    #[test]
    fn haagerup_examples() {
        let g = grid(1.0, 1);
        assert!((i1(g, 0).haagerup_bound() - 2.0).abs() < 1e-15);
        assert!((Y::scalar(g, c(3.0)).haagerup_bound() - 3.0).abs() < 1e-15);
        let y = &i2(g, 0, 0) + &Y::one(g);
        assert!((y.haagerup_bound() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn number_operator_examples() {
        let g = grid(1.0, 2);
        assert!(Y::scalar(g, c(4.0)).number_operator().is_zero());
        let f = i2(g, 0, 1);
        assert_eq!(f.number_operator(), f.scale(c(2.0)));
        let z = &i1(g, 1) + &Y::one(g);
        assert_eq!(
            (&f + &z).number_operator(),
            &f.number_operator() + &z.number_operator()
        );
    }

    #[test]
    fn top_degree_ignores_zero_kernels() {
        let g = grid(1.0, 2);
        let mut y = i1(g, 0);
        y.set_component(CoeffTensor::zeros(g, 3)).unwrap();
        assert_eq!(y.top_degree(), Some(1));
        assert_eq!(Y::zero(g).top_degree(), None);
    }

    #[test]
    fn freeness_of_disjoint_increments() {
        let g = grid(2.0, 2);
        let a = i1(g, 0);
        let b = i1(g, 1);
        let word = a.ito_product(&b).unwrap().ito_product(&a).unwrap().ito_product(&b).unwrap();
        assert!(word.trace().norm() < 1e-15);
        // classical independence would give τ(a²)τ(b²) = 1 for abab
        let aabb = a.ito_product(&a).unwrap().ito_product(&b).unwrap().ito_product(&b).unwrap();
        assert!((aabb.trace() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn split_moments_match_full_powers() {
        let g = grid(1.0, 2);
        let y = Y::from_terms(
            g,
            [
                CoeffTensor::scalar(g, Complex::new(0.3, -0.2)),
                CoeffTensor::from_fn(g, 1, |i| Complex::new(0.5 - i[0] as f64, 0.25)),
                CoeffTensor::from_fn(g, 2, |i| Complex::new(i[0] as f64 * 0.5, i[1] as f64 - 0.5)),
            ],
        )
        .unwrap();
        let mut power = Y::one(g);
        for (k, mk) in y.moments(5).into_iter().enumerate() {
            assert!((power.trace() - mk).norm() < 1e-13, "k = {k}");
            power = power.ito_product(&y).unwrap();
        }
    }
}
