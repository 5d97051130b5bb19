//! Seeded invariant suite behind `chaoslab verify`.
//!
//! Every check draws its own data from `ChaosRng::seeded(seed + ordinal)`,
//! runs a number of trials and records the worst residual. Checks that build
//! dense Fock matrices cap the element degree so that the truncated basis
//! has at most [`FOCK_DIMENSION_LIMIT`] words.

use nalgebra::SymmetricEigen;
use num_complex::Complex;
use serde::Serialize;

use crate::chaos::ChaosElement;
use crate::fock::{field_matrix, ladder_matrix, wick_word, FockBasis, FockVector, LadderKind};
use crate::grid::{CoeffTensor, GridSpec};
use crate::io::{emit_chaos_json, parse_chaos_json};
use crate::malliavin::{
    directional_divergence, directional_gradient, gradient_biprocess, ChaosBitensor, TracedLeg,
};
use crate::random::ChaosRng;
use crate::reduction::{
    delta_ph, delta_ph_via_gradient, iterate_reduction, key_inequality_check, zero_divisor_probe,
    ReductionStep,
};
use crate::spectra::{catalan, moment_compare, semicircle_reference, vacuum_spectral_measure};
use crate::Result;

type C = Complex<f64>;
type Y = ChaosElement<f64>;
type F = CoeffTensor<f64>;

pub const FOCK_DIMENSION_LIMIT: usize = 600;
/// Trial cap for checks that diagonalise dense matrices.
pub const HEAVY_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub cells: usize,
    pub horizon: f64,
    pub degree: usize,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// How `residual` is judged against `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    /// Element degree used by the Fock-matrix checks.
    pub fock_degree: usize,
    pub all_pass: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

fn fock_dimension(cells: usize, max_degree: usize) -> usize {
    (0..=max_degree).map(|l| cells.saturating_pow(l as u32)).sum()
}

/// Largest `d <= degree` whose products still fit the dense Fock budget.
pub fn fock_degree(cells: usize, degree: usize) -> usize {
    (0..=degree)
        .rev()
        .find(|&d| fock_dimension(cells, 2 * d) <= FOCK_DIMENSION_LIMIT)
        .unwrap_or(0)
}

struct Ctx {
    grid: GridSpec,
    degree: usize,
    fock: usize,
    trials: usize,
}

struct Runner {
    seed: u64,
    ctx: Ctx,
    checks: Vec<CheckResult>,
}

impl Runner {
    fn run(
        &mut self,
        name: &str,
        tolerance: f64,
        comparison: Comparison,
        trials: usize,
        body: impl FnOnce(&mut ChaosRng, &Ctx, usize) -> Result<f64>,
    ) {
        let seed = self.seed.wrapping_add(self.checks.len() as u64);
        let mut rng = ChaosRng::seeded(seed);
        let (residual, error) = match body(&mut rng, &self.ctx, trials) {
            Ok(r) => (r, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let pass = match comparison {
            Comparison::AtMost => residual <= tolerance,
            Comparison::Above => residual > tolerance,
        };
        self.checks.push(CheckResult {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            tolerance,
            comparison,
            trials,
            seed,
            error,
        });
    }

    fn at_most(&mut self, name: &str, tol: f64, body: impl FnMut(&mut ChaosRng, &Ctx) -> Result<f64>) {
        let trials = self.ctx.trials;
        self.run(name, tol, Comparison::AtMost, trials, |rng, ctx, n| worst(n, rng, ctx, body));
    }

    fn at_most_heavy(&mut self, name: &str, tol: f64, body: impl FnMut(&mut ChaosRng, &Ctx) -> Result<f64>) {
        let trials = self.ctx.trials.min(HEAVY_TRIALS);
        self.run(name, tol, Comparison::AtMost, trials, |rng, ctx, n| worst(n, rng, ctx, body));
    }

    fn once(&mut self, name: &str, tol: f64, body: impl FnOnce(&Ctx) -> Result<f64>) {
        self.run(name, tol, Comparison::AtMost, 1, |_, ctx, _| body(ctx));
    }
}

/// Largest residual over `n` trials; NaN is sticky.
fn worst(
    n: usize,
    rng: &mut ChaosRng,
    ctx: &Ctx,
    mut body: impl FnMut(&mut ChaosRng, &Ctx) -> Result<f64>,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for _ in 0..n {
        let r = body(rng, ctx)?;
        if r.is_nan() {
            return Ok(f64::NAN);
        }
        acc = acc.max(r);
    }
    Ok(acc)
}

fn complex(rng: &mut ChaosRng) -> C {
    Complex::new(rng.uniform(), rng.uniform())
}

fn real(c: f64) -> C {
    Complex::new(c, 0.0)
}

/// Row-major digits of `flat`, first slot most significant.
fn digits(mut flat: usize, m: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in (0..n).rev() {
        out[slot] = flat % m;
        flat /= m;
    }
    out
}

/// Self-adjoint element scaled to Haagerup bound one, so its moments stay in `[-1, 1]`.
fn unit_self_adjoint(rng: &mut ChaosRng, grid: GridSpec, top: usize) -> Y {
    let y = rng.self_adjoint_chaos::<f64>(grid, top);
    let h = y.haagerup_bound();
    y.scale(real(1.0 / h))
}

pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    let grid = GridSpec::new(config.horizon, config.cells)?;
    let fock = fock_degree(config.cells, config.degree);
    let mut r = Runner {
        seed: config.seed,
        ctx: Ctx {
            grid,
            degree: config.degree,
            fock,
            trials: config.trials,
        },
        checks: Vec::new(),
    };
    grid_checks(&mut r);
    fock_checks(&mut r);
    chaos_checks(&mut r);
    malliavin_checks(&mut r);
    reduction_checks(&mut r);
    spectra_checks(&mut r);
    io_checks(&mut r);
    let all_pass = r.checks.iter().all(|c| c.status == Status::Pass);
    Ok(VerifyReport {
        config: *config,
        fock_degree: fock,
        all_pass,
        checks: r.checks,
    })
}

fn grid_checks(r: &mut Runner) {
    r.at_most("grid.inner_positive_definite", 1e-12, |rng, c| {
        let f: F = rng.tensor_upto(c.grid, c.degree);
        let ip = f.inner(&f)?;
        let zero = F::zeros(c.grid, f.degree());
        if ip.re <= 0.0 || zero.inner(&zero)? != C::new(0.0, 0.0) {
            return Ok(f64::INFINITY);
        }
        Ok(ip.im.abs())
    });
    r.at_most("grid.involution_involutive", 0.0, |rng, c| {
        let f: F = rng.tensor_upto(c.grid, c.degree);
        f.involution().involution().max_abs_diff(&f)
    });
    r.at_most("grid.involution_isometry", 1e-12, |rng, c| {
        let f: F = rng.tensor_upto(c.grid, c.degree);
        Ok((f.involution().norm() - f.norm()).abs())
    });
    r.at_most("grid.contraction_bilinear", 1e-10, |rng, c| {
        let n = rng.between(0, c.degree);
        let k = rng.between(0, c.degree);
        let p = rng.between(0, n.min(k));
        let (f1, f2): (F, F) = (rng.tensor(c.grid, n), rng.tensor(c.grid, n));
        let (g1, g2): (F, F) = (rng.tensor(c.grid, k), rng.tensor(c.grid, k));
        let w: F = rng.tensor(c.grid, n + k - 2 * p);
        let (a, b) = (complex(rng), complex(rng));
        let pair = |f: &F, g: &F| -> Result<C> { f.contract(g, p)?.inner(&w) };
        let lhs = pair(&f1.scale(a).add(&f2)?, &g1.scale(b).add(&g2)?)?;
        let rhs = a * b * pair(&f1, &g1)? + a * pair(&f1, &g2)? + b * pair(&f2, &g1)? + pair(&f2, &g2)?;
        Ok((lhs - rhs).norm())
    });
    r.at_most("grid.full_contraction_pairing", 1e-12, |rng, c| {
        let n = rng.between(0, c.degree.min(3));
        let (f, g): (F, F) = (rng.tensor(c.grid, n), rng.tensor(c.grid, n));
        let m = c.grid.cells();
        let mut brute = C::new(0.0, 0.0);
        for flat in 0..c.grid.tensor_len(n) {
            let idx = digits(flat, m, n);
            let rev: Vec<usize> = idx.iter().rev().copied().collect();
            brute += f.get(&idx) * g.get(&rev);
        }
        Ok((f.contract(&g, n)?.coeffs()[0] - brute).norm())
    });
}

fn fock_checks(r: &mut Runner) {
    r.at_most_heavy("fock.ladder_adjointness", 0.0, |rng, c| {
        let basis = FockBasis::new(c.grid, 2 * c.fock);
        let h: F = rng.tensor(c.grid, 1);
        let create = ladder_matrix(&basis, &h, LadderKind::Create)?;
        let annihilate = ladder_matrix(&basis, &h, LadderKind::Annihilate)?;
        annihilate.max_abs_diff(&create.adjoint())
    });
    r.at_most_heavy("fock.field_self_adjoint", 0.0, |rng, c| {
        let basis = FockBasis::new(c.grid, 2 * c.fock);
        let x = field_matrix(&basis, &rng.direction::<f64>(c.grid))?;
        x.max_abs_diff(&x.adjoint())
    });
    r.at_most_heavy("fock.wick_vacuum", 1e-12, |rng, c| {
        let len = rng.between(0, 2 * c.fock);
        let basis = FockBasis::new(c.grid, len);
        let word: Vec<usize> = (0..len).map(|_| rng.below(c.grid.cells())).collect();
        let w = wick_word::<f64>(&basis, &word)?;
        w.vacuum_column().max_abs_diff(&FockVector::basis_word(&basis, &word)?)
    });
    r.once("fock.field_spectrum", 1e-10, |c| {
        let line = GridSpec::new(c.grid.horizon(), 1)?;
        let mut acc = 0.0f64;
        for d in 1..=8 {
            let x = field_matrix(&FockBasis::new(line, d), &F::basis(line, 0)?)?;
            let eig = SymmetricEigen::new(x.entries().clone());
            let mut pairs: Vec<(f64, f64)> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(i, &l)| (l, eig.eigenvectors[(0, i)].norm_sqr()))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let theta = std::f64::consts::PI / (d + 2) as f64;
            for (j, &(lambda, weight)) in pairs.iter().enumerate() {
                let k = (d + 1 - j) as f64;
                let expect_l = 2.0 * (k * theta).cos();
                let expect_w = 2.0 / (d + 2) as f64 * (k * theta).sin().powi(2);
                acc = acc.max((lambda - expect_l).abs()).max((weight - expect_w).abs());
            }
        }
        Ok(acc)
    });
    r.at_most_heavy("fock.norm_monotone", 1e-10, |rng, c| {
        let top = rng.between(0, c.fock);
        let y: Y = rng.sparse_chaos(c.grid, top);
        let mut prev = 0.0f64;
        let mut acc = 0.0f64;
        for d in top..=2 * c.fock {
            let est = y.matrix_rep(d).operator_norm_estimate();
            acc = acc.max(prev - est);
            prev = est;
        }
        Ok(acc)
    });
}

fn chaos_checks(r: &mut Runner) {
    r.at_most("chaos.associativity", 1e-10, |rng, c| {
        let d = c.degree.min(3);
        let a: Y = rng.chaos_upto(c.grid, d);
        let b: Y = rng.chaos_upto(c.grid, d);
        let z: Y = rng.chaos_upto(c.grid, d);
        a.ito_product(&b)?.ito_product(&z)?.distance(&a.ito_product(&b.ito_product(&z)?)?)
    });
    r.at_most_heavy("chaos.representation_faithful", 1e-10, |rng, c| {
        let y: Y = rng.sparse_chaos_upto(c.grid, c.fock);
        let z: Y = rng.sparse_chaos_upto(c.grid, c.fock);
        let d = y.stored_degree() + z.stored_degree();
        let basis = FockBasis::new(c.grid, d);
        let product = y.matrix_rep_on(&basis)?.mul(&z.matrix_rep_on(&basis)?)?;
        let expect = FockVector::from_chaos(&basis, &y.ito_product(&z)?)?;
        product.vacuum_column().max_abs_diff(&expect)
    });
    r.at_most_heavy("chaos.haagerup", 1e-9, |rng, c| {
        let n = rng.between(0, c.degree.min(3).min(2 * c.fock));
        let f: F = rng.tensor(c.grid, n);
        let bound = (n + 1) as f64 * f.norm();
        let y = Y::from_tensor(f);
        let mut acc = 0.0f64;
        for d in n..=2 * c.fock {
            acc = acc.max(y.matrix_rep(d).operator_norm_estimate() - bound);
        }
        Ok(acc)
    });
    r.at_most("chaos.ito_isometry", 1e-12, |rng, c| {
        let n = rng.between(0, c.degree.min(4));
        let (f, g): (F, F) = (rng.tensor(c.grid, n), rng.tensor(c.grid, n));
        let lhs = Y::from_tensor(f.clone())
            .adjoint()
            .ito_product(&Y::from_tensor(g.clone()))?
            .trace();
        Ok((lhs - g.inner(&f)?).norm())
    });
    r.once("chaos.freeness", 1e-12, |c| {
        let g = GridSpec::new(c.grid.horizon(), 2)?;
        let half = c.grid.horizon() / 2.0;
        let a = Y::free_bm_increment(g, 0.0, half)?;
        let b = Y::free_bm_increment(g, half, c.grid.horizon())?;
        let word = a.ito_product(&b)?.ito_product(&a)?.ito_product(&b)?;
        Ok(word.trace().norm())
    });
    r.once("chaos.semicircle_moments", 1e-10, |c| {
        let mut acc = 0.0f64;
        for j in 1..=c.grid.cells() {
            let t = c.grid.cell(j - 1).1;
            let moments = Y::free_bm(c.grid, t)?.moments(8);
            for (k, mk) in moments.iter().enumerate() {
                let expect = if k % 2 == 0 {
                    catalan(k / 2) * t.powi((k / 2) as i32)
                } else {
                    0.0
                };
                acc = acc.max((mk - real(expect)).norm() / expect.abs().max(1.0));
            }
        }
        Ok(acc)
    });
}

fn malliavin_checks(r: &mut Runner) {
    r.at_most("malliavin.leibniz", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let z: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let one = Y::one(c.grid);
        let lhs = directional_gradient(&y.ito_product(&z)?, &h)?;
        let rhs = directional_gradient(&y, &h)?
            .bimodule_action(&one, &z)?
            .try_add(&directional_gradient(&z, &h)?.bimodule_action(&y, &one)?)?;
        lhs.distance(&rhs)
    });
    r.at_most("malliavin.coassociativity", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let (h1, h2): (F, F) = (rng.direction(c.grid), rng.direction(c.grid));
        let lhs = directional_gradient(&y, &h2)?.gradient_left(&h1)?;
        let rhs = directional_gradient(&y, &h1)?.gradient_right(&h2)?;
        lhs.distance(&rhs)
    });
    r.at_most("malliavin.reality", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        directional_gradient(&y.adjoint(), &h)?.distance(&directional_gradient(&y, &h)?.dagger())
    });
    r.at_most("malliavin.adjointness", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let u: ChaosBitensor<f64> = rng.bitensor(c.grid, c.degree.saturating_sub(1));
        let h: F = rng.direction(c.grid);
        let lhs = directional_gradient(&y, &h)?.inner(&u)?;
        let rhs = y.l2_inner(&directional_divergence(&u, &h)?)?;
        Ok((lhs - rhs).norm())
    });
    r.at_most("malliavin.voiculescu_right", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let one = Y::one(c.grid);
        let lhs = directional_divergence(&ChaosBitensor::pure(&y, &one)?, &h)?;
        let field = Y::from_tensor(h.clone());
        let traced = directional_gradient(&y, &h)?.partial_trace(TracedLeg::Right);
        lhs.distance(&y.ito_product(&field)?.try_sub(&traced)?)
    });
    r.at_most("malliavin.voiculescu_left", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let one = Y::one(c.grid);
        let lhs = directional_divergence(&ChaosBitensor::pure(&one, &y)?, &h)?;
        let field = Y::from_tensor(h.clone());
        let traced = directional_gradient(&y, &h)?.partial_trace(TracedLeg::Left);
        lhs.distance(&field.ito_product(&y)?.try_sub(&traced)?)
    });
    r.at_most("malliavin.sharp_equality", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let lhs = directional_divergence(&ChaosBitensor::pure(&y, &Y::one(c.grid))?, &h)?.l2_norm();
        Ok((lhs - h.norm() * y.l2_norm()).abs())
    });
    r.at_most("malliavin.trace_bound", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let traced = directional_gradient(&y, &h)?.partial_trace(TracedLeg::Right).l2_norm();
        Ok((traced - h.norm() * y.l2_norm()).max(0.0))
    });
    r.at_most("malliavin.operator_norm_bounds", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let bound = h.norm() * y.haagerup_bound();
        let div = directional_divergence(&ChaosBitensor::pure(&y, &Y::one(c.grid))?, &h)?.l2_norm();
        let traced = directional_gradient(&y, &h)?.partial_trace(TracedLeg::Right).l2_norm();
        Ok((div - bound).max(traced - 2.0 * bound).max(0.0))
    });
    r.at_most("malliavin.t_formula", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.direction(c.grid);
        let one = Y::one(c.grid);
        let lhs = directional_divergence(&ChaosBitensor::pure(&y, &one)?, &h)?.l2_norm_sqr();
        let yy = y.adjoint().ito_product(&y)?;
        let a = directional_divergence(&ChaosBitensor::pure(&yy, &one)?, &h)?;
        let b = directional_divergence(&ChaosBitensor::one(c.grid), &h)?;
        Ok((real(lhs) - a.l2_inner(&b)?).norm())
    });
    r.at_most("malliavin.gradient_energy", 1e-10, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let mut lhs = 0.0;
        for i in 0..c.grid.cells() {
            lhs += directional_gradient(&y, &F::basis(c.grid, i)?)?.norm_sqr();
        }
        let rhs: f64 = y.terms().map(|(n, f)| n as f64 * f.norm_sqr()).sum();
        Ok((lhs - rhs).abs())
    });
    r.at_most("malliavin.number_operator", 1e-12, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        gradient_biprocess(&y)?.divergence()?.distance(&y.number_operator())
    });
    r.at_most("malliavin.wigner_ito_isometry", 1e-10, |rng, c| {
        let u = rng.adapted_biprocess::<f64>(c.grid, c.degree.saturating_sub(1));
        Ok((u.stochastic_integral()?.l2_norm() - u.b2_norm()).abs())
    });
    r.at_most("malliavin.integral_equals_divergence", 1e-10, |rng, c| {
        let u = rng.adapted_biprocess::<f64>(c.grid, c.degree.saturating_sub(1));
        u.stochastic_integral()?.distance(&u.divergence()?)
    });
}

fn reduction_checks(r: &mut Runner) {
    r.at_most("reduction.degree_reduction", 0.0, |rng, c| {
        let top = rng.between(1, c.degree.max(1));
        let y: Y = rng.sparse_chaos(c.grid, top);
        let p: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.tensor(c.grid, 1);
        let out = delta_ph(&p, &h, &y)?;
        Ok(match out.top_degree() {
            Some(d) if d + 1 > top => 1.0,
            _ => 0.0,
        })
    });
    r.at_most("reduction.linearity", 1e-12, |rng, c| {
        let top = c.degree.max(1);
        let (y1, y2): (Y, Y) = (rng.chaos(c.grid, top), rng.chaos(c.grid, top));
        let (p1, p2): (Y, Y) = (rng.chaos(c.grid, top), rng.chaos(c.grid, top));
        let (h1, h2): (F, F) = (rng.tensor(c.grid, 1), rng.tensor(c.grid, 1));
        let a = complex(rng);
        let in_p = delta_ph(&p1.scale(a).try_add(&p2)?, &h1, &y1)?.distance(
            &delta_ph(&p1, &h1, &y1)?
                .scale(a)
                .try_add(&delta_ph(&p2, &h1, &y1)?)?,
        )?;
        let in_h = delta_ph(&p1, &h1.scale(a).add(&h2)?, &y1)?.distance(
            &delta_ph(&p1, &h1, &y1)?
                .scale(a.conj())
                .try_add(&delta_ph(&p1, &h2, &y1)?)?,
        )?;
        let in_y = delta_ph(&p1, &h1, &y1.scale(a).try_add(&y2)?)?.distance(
            &delta_ph(&p1, &h1, &y1)?
                .scale(a)
                .try_add(&delta_ph(&p1, &h1, &y2)?)?,
        )?;
        Ok(in_p.max(in_h).max(in_y))
    });
    r.at_most("reduction.coefficient_extraction", 1e-10, |rng, c| {
        let top = rng.between(1, c.degree.clamp(1, 4));
        let y: Y = rng.chaos(c.grid, top);
        let steps = (0..top)
            .map(|_| {
                let p = rng.self_adjoint_upto(c.grid, c.degree);
                ReductionStep::new(p, rng.direction(c.grid))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(iterate_reduction(&y, &steps)?.residual())
    });
    r.at_most("reduction.malliavin_consistency", 1e-12, |rng, c| {
        let y: Y = rng.chaos_upto(c.grid, c.degree);
        let p: Y = rng.chaos_upto(c.grid, c.degree);
        let h: F = rng.tensor(c.grid, 1);
        delta_ph(&p, &h, &y)?.distance(&delta_ph_via_gradient(&p, &h, &y)?)
    });
    r.at_most("reduction.key_inequality", 1e-9, |rng, c| {
        let d = c.degree.min(3);
        let draw = |rng: &mut ChaosRng| -> Y { rng.chaos_upto(c.grid, d) };
        let (x, u, v, y1, y2) = (draw(rng), draw(rng), draw(rng), draw(rng), draw(rng));
        let report = key_inequality_check(&x, &u, &v, &y1, &y2, &rng.direction(c.grid))?;
        Ok((report.lhs - report.rhs).max(0.0))
    });
    r.at_most("reduction.key_inequality_kernel", 1e-9, |rng, c| {
        let d = c.degree.min(3);
        let zero = Y::zero(c.grid);
        let x: Y = rng.chaos_upto(c.grid, d);
        let (y1, y2): (Y, Y) = (rng.chaos(c.grid, d), rng.chaos(c.grid, d));
        let h: F = rng.direction(c.grid);
        let a = key_inequality_check(&x, &zero, &zero, &y1, &y2, &h)?;
        let b = key_inequality_check(&zero, &y1, &y2, &x, &x, &h)?;
        Ok(a.lhs.max(b.lhs))
    });
    r.at_most("reduction.zero_divisor_survival", 1e-9, |rng, c| {
        let d = c.degree.min(3);
        let top = rng.between(1, d.max(1));
        let x: Y = rng.chaos(c.grid, top);
        let scale = real(1e-6);
        let u = rng.chaos_upto::<f64>(c.grid, d).scale(scale);
        let v = rng.chaos_upto::<f64>(c.grid, d).scale(scale);
        let unit = |y: Y| {
            let b = y.haagerup_bound();
            y.scale(real(1.0 / b))
        };
        let y1 = unit(rng.chaos(c.grid, d));
        let y2 = unit(rng.chaos(c.grid, d));
        let h: F = rng.direction(c.grid);
        let eps = x.ito_product(&u)?.l2_norm().max(x.adjoint().ito_product(&v)?.l2_norm());
        let bound = 8.0 * h.norm() * u.haagerup_bound().max(v.haagerup_bound()) * eps;
        let report = key_inequality_check(&x, &u, &v, &y1, &y2, &h)?;
        Ok((report.lhs - bound).max(0.0))
    });
    let trials = r.ctx.trials;
    r.run("reduction.zero_divisor_probe", 1e-8, Comparison::Above, trials, |rng, c, n| {
        let mut least = f64::INFINITY;
        for _ in 0..n {
            let y: Y = rng.sparse_chaos_upto(c.grid, c.degree);
            let u: Y = rng.sparse_chaos_upto(c.grid, c.degree);
            least = least.min(zero_divisor_probe(&y, &u)?.norm_yu);
        }
        Ok(least)
    });
}

fn spectra_checks(r: &mut Runner) {
    r.at_most_heavy("spectra.weights_normalized", 1e-10, |rng, c| {
        let top = rng.between(0, c.fock);
        let y = unit_self_adjoint(rng, c.grid, top);
        let d = rng.between(top.max(1), 2 * c.fock.max(1));
        let mu = vacuum_spectral_measure(&y, d)?;
        let negative = mu.points().iter().fold(0.0f64, |acc, &(_, w)| acc.max(-w));
        Ok((mu.total_weight() - 1.0).abs().max(negative))
    });
    r.at_most_heavy("spectra.low_moments", 1e-9, |rng, c| {
        let top = rng.between(0, c.fock);
        let y = unit_self_adjoint(rng, c.grid, top);
        let mu = vacuum_spectral_measure(&y, (2 * top).max(1))?;
        let first = (real(mu.moment(1)) - y.trace()).norm();
        let second = (real(mu.moment(2)) - y.moment(2)).norm();
        Ok(first.max(second))
    });
    r.at_most_heavy("spectra.truncation_window", 1e-8, |rng, c| {
        let top = rng.between(1, c.fock.max(1));
        let y = unit_self_adjoint(rng, c.grid, top);
        let d = 2 * c.fock.max(1);
        let max_k = (2 * (d / top) + 1).min(8);
        let rows = moment_compare(&y, d, max_k)?;
        Ok(rows
            .iter()
            .filter(|row| row.in_window)
            .fold(0.0f64, |acc, row| acc.max(row.abs_diff)))
    });
    r.once("spectra.semicircle", 1e-10, |c| {
        let t = c.grid.horizon();
        // Moments up to order 8 of a degree-one element only see words of length <= 4.
        let mu = vacuum_spectral_measure(&Y::free_bm(c.grid, t)?, 4)?;
        let mut acc = 0.0f64;
        for k in 0..=8 {
            let expect = semicircle_reference(t, k)?;
            acc = acc.max((mu.moment(k) - expect).abs() / expect.abs().max(1.0));
        }
        Ok(acc)
    });
}

fn io_checks(r: &mut Runner) {
    r.at_most("io.round_trip", 0.0, |rng, c| {
        let y: Y = rng.sparse_chaos_upto(c.grid, c.degree);
        let text = emit_chaos_json(&y);
        let back: Y = parse_chaos_json(&text).map_err(|e| crate::ChaosError::InvalidArgument(e.to_string()))?;
        let drift = if emit_chaos_json(&back) == text { 0.0 } else { 1.0 };
        Ok(if back == y { drift } else { 1.0 })
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_degree_budget() {
        assert_eq!(fock_degree(1, 4), 4);
        assert_eq!(fock_degree(2, 4), 4);
        assert_eq!(fock_degree(3, 4), 2);
        assert_eq!(fock_degree(8, 4), 1);
        assert_eq!(fock_degree(30, 4), 0);
        assert_eq!(fock_degree(2, 0), 0);
    }

    #[test]
    fn small_run_passes() {
        let cfg = VerifyConfig {
            cells: 2,
            horizon: 1.5,
            degree: 2,
            seed: 3,
            trials: 3,
        };
        let report = run_verify(&cfg).unwrap();
        let failed: Vec<_> = report.failures().collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert_eq!(report, run_verify(&cfg).unwrap());
    }
}
