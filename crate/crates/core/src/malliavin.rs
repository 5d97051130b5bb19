//! Free Malliavin calculus on the grid.
//!
//! Elements of `L^2 ⊗ L^2` are kept as [`ChaosBitensor`]s: for every pair of
//! chaos degrees `(a, b)` one merged tensor of degree `a + b` whose first `a`
//! slots form the left leg. Sums of pure tensors are accumulated into that
//! canonical form, so equality is a plain coefficient comparison.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::chaos::ChaosElement;
use crate::error::ChaosError;
use crate::grid::{contract_from, contract_into, self_contract, CoeffTensor, GridSpec};
use crate::scalar::{Cx, Real};
use crate::Result;

/// Which leg a partial trace integrates out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracedLeg {
    /// `(τ ⊗ id)`: keeps the `(0, b)` components.
    Left,
    /// `(id ⊗ τ)`: keeps the `(a, 0)` components.
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosBitensor<T> {
    grid: GridSpec,
    terms: BTreeMap<(usize, usize), CoeffTensor<T>>,
}

impl<T: Real> ChaosBitensor<T> {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            terms: BTreeMap::new(),
        }
    }

    /// `1 ⊗ 1`.
    pub fn one(grid: GridSpec) -> Self {
        let mut out = Self::zero(grid);
        out.terms
            .insert((0, 0), CoeffTensor::scalar(grid, Complex::one()));
        out
    }

    /// `Y ⊗ Z`.
    pub fn pure(left: &ChaosElement<T>, right: &ChaosElement<T>) -> Result<Self> {
        left.grid().ensure_same(right.grid())?;
        let mut out = Self::zero(*left.grid());
        for (a, f) in left.terms() {
            for (b, g) in right.terms() {
                out.accumulate(a, b, &f.tensor(g)?)?;
            }
        }
        Ok(out)
    }

    /// Single component `(a, b)` given by a merged tensor of degree `a + b`.
    pub fn from_component(a: usize, b: usize, t: CoeffTensor<T>) -> Result<Self> {
        let mut out = Self::zero(*t.grid());
        out.accumulate(a, b, &t)?;
        Ok(out)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), &CoeffTensor<T>)> {
        self.terms.iter().map(|(&k, t)| (k, t))
    }

    pub fn component(&self, a: usize, b: usize) -> Option<&CoeffTensor<T>> {
        self.terms.get(&(a, b))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|t| t.is_zero())
    }

    pub fn accumulate(&mut self, a: usize, b: usize, t: &CoeffTensor<T>) -> Result<()> {
        self.grid.ensure_same(t.grid())?;
        if t.degree() != a + b {
            return Err(ChaosError::DegreeMismatch {
                expected: a + b,
                found: t.degree(),
            });
        }
        match self.terms.get_mut(&(a, b)) {
            Some(existing) => existing.axpy(Complex::one(), t)?,
            None => {
                self.terms.insert((a, b), t.clone());
            }
        }
        Ok(())
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        Self {
            grid: self.grid,
            terms: self.terms.iter().map(|(&k, t)| (k, t.scale(c))).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (&(a, b), t) in &other.terms {
            out.accumulate(a, b, t)?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(-Complex::<T>::one()))
    }

    /// Inner product of `L^2 ⊗ L^2`; linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Cx<T>> {
        self.grid.ensure_same(&other.grid)?;
        let mut acc = Complex::zero();
        for (k, t) in &self.terms {
            if let Some(u) = other.terms.get(k) {
                acc += t.inner(u)?;
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, t| acc + t.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.try_sub(other)?.norm())
    }

    /// `(x_1 ⊗ x_2)† = x_2* ⊗ x_1*`. On a merged tensor this is the full
    /// mirror involution with the split moved from `a` to `b`.
    pub fn dagger(&self) -> Self {
        Self {
            grid: self.grid,
            terms: self
                .terms
                .iter()
                .map(|(&(a, b), t)| ((b, a), t.involution()))
                .collect(),
        }
    }

    /// `(τ ⊗ id)` or `(id ⊗ τ)`; `τ` kills every nonzero chaos degree.
    pub fn partial_trace(&self, leg: TracedLeg) -> ChaosElement<T> {
        let mut out = ChaosElement::zero(self.grid);
        for (&(a, b), t) in &self.terms {
            let keep = match leg {
                TracedLeg::Left => a == 0,
                TracedLeg::Right => b == 0,
            };
            if keep {
                out.accumulate(t).expect("same grid");
            }
        }
        out
    }

    /// `Y_l · (A ⊗ B) · Y_r = (Y_l A) ⊗ (B Y_r)`.
    pub fn bimodule_action(&self, left: &ChaosElement<T>, right: &ChaosElement<T>) -> Result<Self> {
        self.grid.ensure_same(left.grid())?;
        self.grid.ensure_same(right.grid())?;
        let mut half = Self::zero(self.grid);
        for (&(a, b), t) in &self.terms {
            for (n, f) in left.terms() {
                for p in 0..=n.min(a) {
                    half.accumulate(n + a - 2 * p, b, &contract_from(f, t, 0, p))?;
                }
            }
        }
        let mut out = Self::zero(self.grid);
        for (&(a, b), t) in &half.terms {
            for (k, g) in right.terms() {
                for p in 0..=k.min(b) {
                    out.accumulate(a, b + k - 2 * p, &contract_into(t, a + b - p, p, g))?;
                }
            }
        }
        Ok(out)
    }

    /// Multiplication map `m_1(x_1 ⊗ x_2) = x_1 x_2`.
    pub fn multiply(&self) -> ChaosElement<T> {
        let mut out = ChaosElement::zero(self.grid);
        for (&(a, b), t) in &self.terms {
            for q in 0..=a.min(b) {
                out.accumulate(&self_contract(t, a, q)).expect("same grid");
            }
        }
        out
    }

    /// `U ♯ Y`: `(x_1 ⊗ x_2) ♯ Y = x_1 Y x_2`.
    pub fn sharp(&self, y: &ChaosElement<T>) -> Result<ChaosElement<T>> {
        self.grid.ensure_same(y.grid())?;
        let mut inner = Self::zero(self.grid);
        for (&(a, b), t) in &self.terms {
            for (n, g) in y.terms() {
                for p in 0..=n.min(a) {
                    inner.accumulate(a + n - 2 * p, b, &contract_into(t, a - p, p, g))?;
                }
            }
        }
        Ok(inner.multiply())
    }

    /// `(∇^h ⊗ id) U`.
    pub fn gradient_left(&self, h: &CoeffTensor<T>) -> Result<ChaosTritensor<T>> {
        let mut out = ChaosTritensor::zero(self.grid);
        for (&(a, b), t) in &self.terms {
            for k in 0..a {
                out.accumulate((k, a - 1 - k, b), &t.pair_slot(k, h)?)?;
            }
        }
        Ok(out)
    }

    /// `(id ⊗ ∇^h) U`.
    pub fn gradient_right(&self, h: &CoeffTensor<T>) -> Result<ChaosTritensor<T>> {
        let mut out = ChaosTritensor::zero(self.grid);
        for (&(a, b), t) in &self.terms {
            for k in 0..b {
                out.accumulate((a, k, b - 1 - k), &t.pair_slot(a + k, h)?)?;
            }
        }
        Ok(out)
    }
}

/// Element of `L^2 ⊗ L^2 ⊗ L^2`, merged per degree triple.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosTritensor<T> {
    grid: GridSpec,
    terms: BTreeMap<(usize, usize, usize), CoeffTensor<T>>,
}

impl<T: Real> ChaosTritensor<T> {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            terms: BTreeMap::new(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize, usize), &CoeffTensor<T>)> {
        self.terms.iter().map(|(&k, t)| (k, t))
    }

    pub fn accumulate(&mut self, key: (usize, usize, usize), t: &CoeffTensor<T>) -> Result<()> {
        self.grid.ensure_same(t.grid())?;
        if t.degree() != key.0 + key.1 + key.2 {
            return Err(ChaosError::DegreeMismatch {
                expected: key.0 + key.1 + key.2,
                found: t.degree(),
            });
        }
        match self.terms.get_mut(&key) {
            Some(existing) => existing.axpy(Complex::one(), t)?,
            None => {
                self.terms.insert(key, t.clone());
            }
        }
        Ok(())
    }

    pub fn norm(&self) -> T {
        self.terms
            .values()
            .fold(T::zero(), |acc, t| acc + t.norm_sqr())
            .sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        self.grid.ensure_same(&other.grid)?;
        let mut diff = self.clone();
        for (&k, t) in &other.terms {
            diff.accumulate(k, &t.scale(-Complex::<T>::one()))?;
        }
        Ok(diff.norm())
    }
}

fn check_direction<T: Real>(grid: &GridSpec, h: &CoeffTensor<T>) -> Result<()> {
    grid.ensure_same(h.grid())?;
    if h.degree() != 1 {
        return Err(ChaosError::DegreeMismatch {
            expected: 1,
            found: h.degree(),
        });
    }
    Ok(())
}

/// `∇^h Y = ∫ ∇_t Y conj(h(t)) dt`: slot `k` of each kernel is paired
/// against `conj(h)` and the remaining slots split as `(k-1, n-k)`.
pub fn directional_gradient<T: Real>(y: &ChaosElement<T>, h: &CoeffTensor<T>) -> Result<ChaosBitensor<T>> {
    check_direction(y.grid(), h)?;
    let mut out = ChaosBitensor::zero(*y.grid());
    for (n, f) in y.terms() {
        for k in 0..n {
            out.accumulate(k, n - 1 - k, &f.pair_slot(k, h)?)?;
        }
    }
    Ok(out)
}

/// `δ^h`, the adjoint of `∇^h`: inserts `h` at the split of every component,
/// `δ^h(I_a(f) ⊗ I_b(g)) = I_{a+1+b}(f ⊗ h ⊗ g)`.
pub fn directional_divergence<T: Real>(u: &ChaosBitensor<T>, h: &CoeffTensor<T>) -> Result<ChaosElement<T>> {
    check_direction(u.grid(), h)?;
    let mut out = ChaosElement::zero(*u.grid());
    for (&(a, _), t) in &u.terms {
        out.accumulate(&t.insert_slot(a, h)?)?;
    }
    Ok(out)
}

pub fn partial_trace<T: Real>(u: &ChaosBitensor<T>, leg: TracedLeg) -> ChaosElement<T> {
    u.partial_trace(leg)
}

pub fn bimodule_action<T: Real>(
    left: &ChaosElement<T>,
    u: &ChaosBitensor<T>,
    right: &ChaosElement<T>,
) -> Result<ChaosBitensor<T>> {
    u.bimodule_action(left, right)
}

pub fn dagger<T: Real>(u: &ChaosBitensor<T>) -> ChaosBitensor<T> {
    u.dagger()
}

pub fn number_operator<T: Real>(y: &ChaosElement<T>) -> ChaosElement<T> {
    y.number_operator()
}

/// Biprocess constant on each grid cell: `U_t = V_i` for `t` in cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleBiprocess<T> {
    grid: GridSpec,
    values: Vec<ChaosBitensor<T>>,
}

impl<T: Real> SimpleBiprocess<T> {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![ChaosBitensor::zero(grid); grid.cells()],
        }
    }

    pub fn new(grid: GridSpec, values: Vec<ChaosBitensor<T>>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(ChaosError::ShapeMismatch {
                expected: grid.cells(),
                found: values.len(),
            });
        }
        for v in &values {
            grid.ensure_same(v.grid())?;
        }
        Ok(Self { grid, values })
    }

    /// `value` on cell `cell`, zero elsewhere.
    pub fn on_cell(grid: GridSpec, cell: usize, value: ChaosBitensor<T>) -> Result<Self> {
        let mut out = Self::zero(grid);
        *out.values
            .get_mut(cell)
            .ok_or(ChaosError::IndexOutOfRange {
                index: cell,
                cells: grid.cells(),
            })? = value;
        grid.ensure_same(out.values[cell].grid())?;
        Ok(out)
    }

    pub fn constant(grid: GridSpec, value: ChaosBitensor<T>) -> Result<Self> {
        Self::new(grid, vec![value; grid.cells()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[ChaosBitensor<T>] {
        &self.values
    }

    /// `||U||_{B_2}^2 = (T/m) sum_i ||V_i||^2`.
    pub fn b2_norm_sqr(&self) -> T {
        let width = T::of(self.grid.cell_width());
        width * self.values.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr())
    }

    pub fn b2_norm(&self) -> T {
        self.b2_norm_sqr().sqrt()
    }

    /// `V_i` only involves basis indices `< i` on both legs, i.e.
    /// `V_i ∈ M_{iT/m} ⊙ M_{iT/m}`.
    pub fn is_adapted(&self) -> bool {
        let m = self.grid.cells();
        self.values.iter().enumerate().all(|(i, v)| {
            v.terms().all(|(_, t)| {
                t.coeffs().iter().enumerate().all(|(flat, c)| {
                    c.is_zero() || digits_below(flat, m, t.degree(), i)
                })
            })
        })
    }

    /// `<U, h> = ∫ U_t conj(h(t)) dt = sum_i V_i (T/m)^{1/2} conj(h_i)`.
    pub fn pair(&self, h: &CoeffTensor<T>) -> Result<ChaosBitensor<T>> {
        check_direction(&self.grid, h)?;
        let root = T::of(self.grid.cell_width().sqrt());
        let mut out = ChaosBitensor::zero(self.grid);
        for (v, &hi) in self.values.iter().zip(h.coeffs()) {
            out = out.try_add(&v.scale(hi.conj() * root))?;
        }
        Ok(out)
    }

    /// Chaos-insertion form of the divergence, `sum_i (T/m)^{1/2} δ^{e_i}(V_i)`.
    pub fn divergence(&self) -> Result<ChaosElement<T>> {
        let root = Complex::new(T::of(self.grid.cell_width().sqrt()), T::zero());
        let mut out = ChaosElement::zero(self.grid);
        for (i, v) in self.values.iter().enumerate() {
            let e = CoeffTensor::basis(self.grid, i)?;
            out = out.try_add(&directional_divergence(v, &e)?.scale(root))?;
        }
        Ok(out)
    }

    /// `∫ U_t ♯ dS_t = sum_i V_i ♯ (S_{t_{i+1}} - S_{t_i})`, defined for
    /// adapted biprocesses only.
    pub fn stochastic_integral(&self) -> Result<ChaosElement<T>> {
        if !self.is_adapted() {
            return Err(ChaosError::NotAdapted);
        }
        self.riemann_sum()
    }

    fn riemann_sum(&self) -> Result<ChaosElement<T>> {
        let mut out = ChaosElement::zero(self.grid);
        for (i, v) in self.values.iter().enumerate() {
            let (a, b) = self.grid.cell(i);
            let increment = ChaosElement::free_bm_increment(self.grid, a, b)?;
            out = out.try_add(&v.sharp(&increment)?)?;
        }
        Ok(out)
    }
}

fn digits_below(mut flat: usize, m: usize, degree: usize, bound: usize) -> bool {
    for _ in 0..degree {
        if flat % m >= bound {
            return false;
        }
        flat /= m;
    }
    true
}

pub fn biprocess_pair<T: Real>(u: &SimpleBiprocess<T>, h: &CoeffTensor<T>) -> Result<ChaosBitensor<T>> {
    u.pair(h)
}

pub fn divergence_simple<T: Real>(u: &SimpleBiprocess<T>) -> Result<ChaosElement<T>> {
    u.divergence()
}

pub fn stochastic_integral<T: Real>(u: &SimpleBiprocess<T>) -> Result<ChaosElement<T>> {
    u.stochastic_integral()
}

/// `∇Y` as a simple biprocess, `V_i = (m/T)^{1/2} ∇^{e_i} Y`.
pub fn gradient_biprocess<T: Real>(y: &ChaosElement<T>) -> Result<SimpleBiprocess<T>> {
    let grid = *y.grid();
    let height = Complex::new(T::of(grid.basis_height()), T::zero());
    let values = (0..grid.cells())
        .map(|i| {
            let e = CoeffTensor::basis(grid, i)?;
            Ok(directional_gradient(y, &e)?.scale(height))
        })
        .collect::<Result<Vec<_>>>()?;
    SimpleBiprocess::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Cx<f64>;
    type Y = ChaosElement<f64>;
    type U = ChaosBitensor<f64>;

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
    fn gradient_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        let grad = directional_gradient(&i2(g, 0, 0), &e(g, 0)).unwrap();
        let expect = U::pure(&one, &i1(g, 0))
            .unwrap()
            .try_add(&U::pure(&i1(g, 0), &one).unwrap())
            .unwrap();
        assert_eq!(grad, expect);
        assert!(directional_gradient(&Y::scalar(g, c(3.0)), &e(g, 0)).unwrap().is_zero());
        let g2 = grid(2.0, 2);
        assert!(directional_gradient(&i1(g2, 0), &e(g2, 1)).unwrap().is_zero());
        let bad = e(g, 0).tensor(&e(g, 0)).unwrap();
        assert!(directional_gradient(&one, &bad).is_err());
    }

    #[test]
    fn divergence_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        assert_eq!(directional_divergence(&U::one(g), &e(g, 0)).unwrap(), i1(g, 0));
        let u = U::pure(&i1(g, 0), &one).unwrap();
        assert_eq!(directional_divergence(&u, &e(g, 0)).unwrap(), i2(g, 0, 0));
        assert!(directional_divergence(&U::zero(g), &e(g, 0)).unwrap().is_zero());
    }

    #[test]
    fn gradient_biprocess_examples() {
        let g = grid(1.0, 1);
        let v = gradient_biprocess(&i1(g, 0)).unwrap();
        assert_eq!(v.values()[0], U::one(g));
        let v = gradient_biprocess(&Y::scalar(g, c(2.0))).unwrap();
        assert!(v.values().iter().all(|x| x.is_zero()));
        let v = gradient_biprocess(&i2(g, 0, 0)).unwrap();
        assert!((v.b2_norm() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn pairing_examples() {
        let g = grid(3.0, 2);
        let y = &i2(g, 0, 1).scale(C::new(0.3, -1.0)) + &i1(g, 1);
        let h = e(g, 0).scale(C::new(0.5, 0.25)).add(&e(g, 1).scale(c(-2.0))).unwrap();
        let pair = gradient_biprocess(&y).unwrap().pair(&h).unwrap();
        let direct = directional_gradient(&y, &h).unwrap();
        assert!(pair.distance(&direct).unwrap() < 1e-14);
        assert!(gradient_biprocess(&y).unwrap().pair(&CoeffTensor::zeros(g, 1)).unwrap().is_zero());
    }

    #[test]
    fn divergence_simple_examples() {
        let g = grid(2.0, 2);
        let u = SimpleBiprocess::on_cell(g, 0, U::one(g)).unwrap();
        assert_eq!(u.divergence().unwrap(), i1(g, 0));
        assert!(SimpleBiprocess::<f64>::zero(g).divergence().unwrap().is_zero());
        let y = &(&i2(g, 1, 0) + &i1(g, 0)) + &Y::scalar(g, c(2.0));
        let ny = gradient_biprocess(&y).unwrap().divergence().unwrap();
        assert!(ny.distance(&y.number_operator()).unwrap() < 1e-14);
    }

    #[test]
    fn stochastic_integral_examples() {
        let g = grid(2.0, 2);
        let one = Y::one(g);
        let u = SimpleBiprocess::on_cell(g, 0, U::one(g)).unwrap();
        assert_eq!(u.stochastic_integral().unwrap(), i1(g, 0));

        let v1 = U::pure(&i1(g, 0), &one).unwrap();
        let u = SimpleBiprocess::on_cell(g, 1, v1).unwrap();
        assert!(u.is_adapted());
        let si = u.stochastic_integral().unwrap();
        assert!(si.distance(&i2(g, 0, 1)).unwrap() < 1e-14);
        assert!((si.l2_norm() - u.b2_norm()).abs() < 1e-14);
        assert!(si.distance(&u.divergence().unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn non_adapted_integral_rejected_and_formulas_differ() {
        let g = grid(1.0, 1);
        let v = U::pure(&i1(g, 0), &Y::one(g)).unwrap();
        let u = SimpleBiprocess::on_cell(g, 0, v).unwrap();
        assert!(!u.is_adapted());
        assert_eq!(u.stochastic_integral(), Err(ChaosError::NotAdapted));
        // off the adapted class the Riemann sum picks up a contraction term
        let riemann = u.riemann_sum().unwrap();
        let div = u.divergence().unwrap();
        assert!(riemann.distance(&div).unwrap() > 0.5);
    }

    #[test]
    fn adaptedness_examples() {
        let g = grid(2.0, 2);
        assert!(!gradient_biprocess(&i2(g, 0, 0)).unwrap().is_adapted());
        assert!(SimpleBiprocess::constant(g, U::one(g)).unwrap().is_adapted());
        let v1 = U::pure(&i1(g, 0), &Y::one(g)).unwrap();
        assert!(SimpleBiprocess::on_cell(g, 1, v1).unwrap().is_adapted());
    }

    #[test]
    fn partial_trace_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        let grad = directional_gradient(&i2(g, 0, 0), &e(g, 0)).unwrap();
        assert_eq!(grad.partial_trace(TracedLeg::Right), i1(g, 0));
        let u = U::pure(&one, &i1(g, 0)).unwrap();
        assert_eq!(u.partial_trace(TracedLeg::Left), i1(g, 0));
        let u = U::pure(&i1(g, 0), &i1(g, 0)).unwrap();
        assert!(u.partial_trace(TracedLeg::Right).is_zero());
    }

    #[test]
    fn bimodule_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        let x = i1(g, 0);
        let u = U::pure(&i2(g, 0, 0), &x).unwrap();
        assert_eq!(u.bimodule_action(&one, &one).unwrap(), u);
        assert_eq!(
            U::one(g).bimodule_action(&x, &one).unwrap(),
            U::pure(&x, &one).unwrap()
        );
        let lhs = U::pure(&x, &one).unwrap().bimodule_action(&x, &one).unwrap();
        let rhs = U::pure(&(&i2(g, 0, 0) + &one), &one).unwrap();
        assert!(lhs.distance(&rhs).unwrap() < 1e-15);
    }

    #[test]
    fn bimodule_matches_pure_products() {
        let g = grid(2.0, 2);
        let a = &i2(g, 0, 1).scale(C::new(0.5, 1.0)) + &i1(g, 1);
        let b = &i1(g, 0) + &Y::scalar(g, c(-0.5));
        let l = &i1(g, 1).scale(C::new(0.0, 2.0)) + &i2(g, 1, 1);
        let r = &i2(g, 0, 0) + &i1(g, 1);
        let u = U::pure(&a, &b).unwrap();
        let got = u.bimodule_action(&l, &r).unwrap();
        let expect = U::pure(&l.ito_product(&a).unwrap(), &b.ito_product(&r).unwrap()).unwrap();
        assert!(got.distance(&expect).unwrap() < 1e-13);
        assert!((u.multiply().distance(&a.ito_product(&b).unwrap()).unwrap()) < 1e-13);
        let sharp = u.sharp(&l).unwrap();
        let direct = a.ito_product(&l).unwrap().ito_product(&b).unwrap();
        assert!(sharp.distance(&direct).unwrap() < 1e-13);
    }

    #[test]
    fn dagger_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        let x = i1(g, 0);
        assert_eq!(U::pure(&x, &one).unwrap().dagger(), U::pure(&one, &x).unwrap());
        assert_eq!(U::one(g).dagger(), U::one(g));
        let g2 = grid(2.0, 2);
        let a = &i2(g2, 0, 1).scale(C::new(0.5, 1.0)) + &i1(g2, 1);
        let b = &i1(g2, 0).scale(C::new(0.0, 1.0)) + &i2(g2, 1, 0);
        let u = U::pure(&a, &b).unwrap();
        assert_eq!(u.dagger(), U::pure(&b.adjoint(), &a.adjoint()).unwrap());
    }

    #[test]
    fn coassociativity_small_case() {
        let g = grid(2.0, 2);
        let y = Y::from_tensor(
            e(g, 0)
                .tensor(&e(g, 1))
                .unwrap()
                .tensor(&e(g, 0))
                .unwrap(),
        );
        let h1 = e(g, 0);
        let h2 = e(g, 1);
        let lhs = directional_gradient(&y, &h2).unwrap().gradient_left(&h1).unwrap();
        let rhs = directional_gradient(&y, &h1).unwrap().gradient_right(&h2).unwrap();
        assert!(lhs.distance(&rhs).unwrap() < 1e-15);
        assert!(lhs.norm() > 0.5);
    }
}
