//! Degree-reducing operators `Δ_{p,h} Y = (τ ⊗ id)((p ⊗ 1) ∇^h Y)` and the
//! probes built on them.
//!
//! Iterating `Δ` as many times as the top degree of `Y` lands in the chaos of
//! order zero, on the scalar `τ(p_1)...τ(p_N) <f_N, h_1 ⊗ ... ⊗ h_N>`.

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::chaos::ChaosElement;
use crate::error::ChaosError;
use crate::grid::CoeffTensor;
use crate::malliavin::{directional_gradient, ChaosBitensor};
use crate::scalar::{Cx, Real};
use crate::Result;

/// `τ_p(Y) = τ(p Y)`.
///
/// For self-adjoint `p = I(g)` this is `<f, g>_F`, i.e. `l2_inner(Y, p)`.
pub fn tau_p<T: Real>(p: &ChaosElement<T>, y: &ChaosElement<T>) -> Result<Cx<T>> {
    p.grid().ensure_same(y.grid())?;
    let mut acc = Complex::zero();
    for (n, g) in p.terms() {
        if let Some(f) = y.component(n) {
            acc += g.bilinear_pairing(f)?;
        }
    }
    Ok(acc)
}

/// `Δ_{p,h} Y` via the chaos formula: for each kernel `f_n` and slot `k`,
/// pair slot `k` against `conj(h)`, apply `τ_p` to the `k - 1` slots in
/// front of it, and keep the remaining `n - k` slots.
pub fn delta_ph<T: Real>(
    p: &ChaosElement<T>,
    h: &CoeffTensor<T>,
    y: &ChaosElement<T>,
) -> Result<ChaosElement<T>> {
    p.grid().ensure_same(y.grid())?;
    y.grid().ensure_same(h.grid())?;
    if h.degree() != 1 {
        return Err(ChaosError::DegreeMismatch {
            expected: 1,
            found: h.degree(),
        });
    }
    let mut out = ChaosElement::zero(*y.grid());
    for (n, f) in y.terms() {
        for slot in 0..n {
            let Some(g) = p.component(slot) else {
                continue;
            };
            let paired = f.pair_slot(slot, h)?;
            out.accumulate(&g.contract(&paired, slot)?)?;
        }
    }
    Ok(out)
}

/// The defining form `(τ ⊗ id)((p ⊗ 1) ∇^h Y)`, kept as an independent route.
pub fn delta_ph_via_gradient<T: Real>(
    p: &ChaosElement<T>,
    h: &CoeffTensor<T>,
    y: &ChaosElement<T>,
) -> Result<ChaosElement<T>> {
    let one = ChaosElement::one(*y.grid());
    let acted = directional_gradient(y, h)?.bimodule_action(p, &one)?;
    Ok(acted.partial_trace(crate::malliavin::TracedLeg::Left))
}

/// One reduction step `Δ_{p,h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep<T> {
    pub p: ChaosElement<T>,
    pub h: CoeffTensor<T>,
}

impl<T: Real> ReductionStep<T> {
    pub fn new(p: ChaosElement<T>, h: CoeffTensor<T>) -> Result<Self> {
        p.grid().ensure_same(h.grid())?;
        Ok(Self { p, h })
    }
}

#[derive(Debug, Clone)]
pub struct ReductionReport<T> {
    pub steps: Vec<ReductionStep<T>>,
    /// Elements after each step; the last one is a scalar.
    pub intermediates: Vec<ChaosElement<T>>,
    /// Top degrees after each step, `None` once the element vanished.
    pub intermediate_top_degrees: Vec<Option<usize>>,
    pub final_scalar: Cx<T>,
    pub predicted_scalar: Cx<T>,
}

impl<T: Real> ReductionReport<T> {
    pub fn residual(&self) -> T {
        (self.final_scalar - self.predicted_scalar).norm_sqr().sqrt()
    }
}

/// Applies `Δ_{p_N,h_N} ... Δ_{p_1,h_1}` to `y` and records the prediction
/// `τ(p_1)...τ(p_N) <f_N, h_1 ⊗ ... ⊗ h_N>`.
pub fn iterate_reduction<T: Real>(
    y: &ChaosElement<T>,
    steps: &[ReductionStep<T>],
) -> Result<ReductionReport<T>> {
    let top = y.top_degree().ok_or(ChaosError::ZeroElement)?;
    if steps.len() != top {
        return Err(ChaosError::StepCount {
            expected: top,
            found: steps.len(),
        });
    }
    let mut current = y.clone();
    let mut intermediates = Vec::with_capacity(steps.len());
    let mut degrees = Vec::with_capacity(steps.len());
    let mut tau_product = Complex::<T>::one();
    let mut directions: Option<CoeffTensor<T>> = None;
    for step in steps {
        current = delta_ph(&step.p, &step.h, &current)?;
        degrees.push(current.top_degree());
        intermediates.push(current.clone());
        tau_product *= step.p.trace();
        directions = Some(match directions {
            None => step.h.clone(),
            Some(acc) => acc.tensor(&step.h)?,
        });
    }
    let final_scalar = current.trace();
    let top_kernel = y.kernel(top);
    let predicted_scalar = match directions {
        Some(hs) => tau_product * top_kernel.inner(&hs)?,
        None => top_kernel.coeffs()[0],
    };
    Ok(ReductionReport {
        steps: steps.to_vec(),
        intermediates,
        intermediate_top_degrees: degrees,
        final_scalar,
        predicted_scalar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroDivisorReport {
    /// `||Y u||_2`.
    pub norm_yu: f64,
    /// `||Y* u||_2`.
    pub norm_ystar_u: f64,
}

/// Reports `||Y u||_2` and `||Y* u||_2`; nonzero `Y` and `u` in finite chaos
/// are expected to give a strictly positive product norm.
pub fn zero_divisor_probe<T: Real>(y: &ChaosElement<T>, u: &ChaosElement<T>) -> Result<ZeroDivisorReport> {
    let yu = y.ito_product(u)?;
    let ystar_u = y.adjoint().ito_product(u)?;
    Ok(ZeroDivisorReport {
        norm_yu: yu.l2_norm().to_f64_lossy(),
        norm_ystar_u: ystar_u.l2_norm().to_f64_lossy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyInequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const KEY_INEQUALITY_SLACK: f64 = 1e-9;

/// `|<v* · ∇^h x · u, y_1 ⊗ y_2>|` against
/// `4 ||h|| (H(v) ||xu||_2 + H(u) ||x* v||_2) H(y_1) H(y_2)`, where the
/// operator norms are replaced by the Haagerup bound `H`.
pub fn key_inequality_check<T: Real>(
    x: &ChaosElement<T>,
    u: &ChaosElement<T>,
    v: &ChaosElement<T>,
    y1: &ChaosElement<T>,
    y2: &ChaosElement<T>,
    h: &CoeffTensor<T>,
) -> Result<KeyInequalityReport> {
    if !h.is_real() {
        return Err(ChaosError::NonRealDirection);
    }
    for other in [u, v, y1, y2] {
        x.grid().ensure_same(other.grid())?;
    }
    let acted = directional_gradient(x, h)?.bimodule_action(&v.adjoint(), u)?;
    let test = ChaosBitensor::pure(y1, y2)?;
    let lhs = acted.inner(&test)?.norm_sqr().sqrt();
    let xu = x.ito_product(u)?.l2_norm();
    let xstar_v = x.adjoint().ito_product(v)?.l2_norm();
    let four = T::of(4.0);
    let rhs = four
        * h.norm()
        * (v.haagerup_bound() * xu + u.haagerup_bound() * xstar_v)
        * y1.haagerup_bound()
        * y2.haagerup_bound();
    let (lhs, rhs) = (lhs.to_f64_lossy(), rhs.to_f64_lossy());
    Ok(KeyInequalityReport {
        lhs,
        rhs,
        holds: lhs <= rhs + KEY_INEQUALITY_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

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
    fn tau_p_examples() {
        let g = grid(1.0, 1);
        let y = &i1(g, 0) + &Y::scalar(g, c(2.5));
        assert_eq!(tau_p(&Y::one(g), &y).unwrap(), y.trace());
        assert_eq!(tau_p(&i1(g, 0), &i1(g, 0)).unwrap(), c(1.0));
        assert_eq!(tau_p(&i2(g, 0, 0), &i1(g, 0)).unwrap(), c(0.0));
    }

    #[test]
    fn tau_p_is_trace_of_product() {
        let g = grid(2.0, 2);
        let p = &i2(g, 0, 1).scale(C::new(1.0, 0.5)) + &i1(g, 1);
        let y = &i2(g, 1, 0) + &i1(g, 1).scale(C::new(0.0, 2.0));
        let direct = p.ito_product(&y).unwrap().trace();
        assert!((tau_p(&p, &y).unwrap() - direct).norm() < 1e-15);
    }

    #[test]
    fn delta_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        assert_eq!(delta_ph(&one, &e(g, 0), &i1(g, 0)).unwrap(), one);
        let p = &i1(g, 0) + &one;
        assert!(delta_ph(&p, &e(g, 0), &Y::scalar(g, c(3.0))).unwrap().is_zero());
        let d = delta_ph(&one, &e(g, 0), &i2(g, 0, 0)).unwrap();
        assert!(d.distance(&i1(g, 0)).unwrap() < 1e-15);
    }

    #[test]
    fn delta_matches_gradient_form() {
        let g = grid(2.0, 2);
        let p = &(&i1(g, 0) + &Y::scalar(g, c(0.7))) + &i2(g, 1, 0).scale(C::new(0.0, 1.0));
        let y = &(&i2(g, 0, 1) + &i1(g, 1)) + &Y::from_tensor(
            e(g, 1).tensor(&e(g, 0)).unwrap().tensor(&e(g, 1)).unwrap(),
        );
        let h = e(g, 0).scale(C::new(0.5, -0.5)).add(&e(g, 1)).unwrap();
        let a = delta_ph(&p, &h, &y).unwrap();
        let b = delta_ph_via_gradient(&p, &h, &y).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-14);
    }

    #[test]
    fn reduction_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        let steps = vec![
            ReductionStep::new(one.clone(), e(g, 0)).unwrap(),
            ReductionStep::new(one.clone(), e(g, 0)).unwrap(),
        ];
        let r = iterate_reduction(&i2(g, 0, 0), &steps).unwrap();
        assert_eq!(r.final_scalar, c(1.0));
        assert_eq!(r.predicted_scalar, c(1.0));
        assert_eq!(r.intermediate_top_degrees, vec![Some(1), Some(0)]);

        let g2 = grid(2.0, 2);
        let steps = vec![ReductionStep::new(Y::one(g2), e(g2, 1)).unwrap()];
        let r = iterate_reduction(&i1(g2, 0), &steps).unwrap();
        assert_eq!(r.final_scalar, c(0.0));
        assert_eq!(r.predicted_scalar, c(0.0));
    }

    #[test]
    fn reduction_errors() {
        let g = grid(1.0, 1);
        let steps = vec![ReductionStep::new(Y::one(g), e(g, 0)).unwrap()];
        assert_eq!(
            iterate_reduction(&i2(g, 0, 0), &steps).unwrap_err(),
            ChaosError::StepCount { expected: 2, found: 1 }
        );
        assert_eq!(
            iterate_reduction(&Y::zero(g), &[]).unwrap_err(),
            ChaosError::ZeroElement
        );
        let r = iterate_reduction(&Y::scalar(g, c(4.0)), &[]).unwrap();
        assert_eq!(r.final_scalar, c(4.0));
        assert_eq!(r.predicted_scalar, c(4.0));
    }

    #[test]
    fn zero_divisor_examples() {
        let g = grid(1.0, 1);
        let r = zero_divisor_probe(&Y::zero(g), &i1(g, 0)).unwrap();
        assert_eq!(r.norm_yu, 0.0);
        let r = zero_divisor_probe(&i1(g, 0), &Y::zero(g)).unwrap();
        assert_eq!(r.norm_yu, 0.0);
        let r = zero_divisor_probe(&i1(g, 0), &i1(g, 0)).unwrap();
        assert!((r.norm_yu - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.norm_ystar_u - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn key_inequality_examples() {
        let g = grid(1.0, 1);
        let one = Y::one(g);
        let r = key_inequality_check(&i1(g, 0), &one, &one, &one, &one, &e(g, 0)).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        assert!((r.rhs - 8.0).abs() < 1e-15);
        assert!(r.holds);

        let zero = Y::zero(g);
        let x = &i2(g, 0, 0) + &i1(g, 0);
        let r = key_inequality_check(&x, &zero, &zero, &one, &i1(g, 0), &e(g, 0)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);

        let complex_h = e(g, 0).scale(C::new(0.0, 1.0));
        assert_eq!(
            key_inequality_check(&x, &one, &one, &one, &one, &complex_h).unwrap_err(),
            ChaosError::NonRealDirection
        );
    }
}
