//! Vacuum spectral measures of self-adjoint chaos elements at finite
//! truncation, and the diagnostics built on them.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::chaos::ChaosElement;
use crate::error::ChaosError;
use crate::scalar::{Cx, Real};
use crate::Result;

/// Eigenvalues closer than this are merged into one atom of the measure.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Finitely supported probability measure, sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure<T> {
    points: Vec<(T, T)>,
}

impl<T: Real> SpectralMeasure<T> {
    /// Sorts the points and merges locations within [`MERGE_TOLERANCE`].
    pub fn from_points(mut raw: Vec<(T, T)>) -> Self {
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
        let tol = T::of(MERGE_TOLERANCE);
        let mut points: Vec<(T, T)> = Vec::with_capacity(raw.len());
        let mut cluster: Vec<(T, T)> = Vec::new();
        let flush = |cluster: &mut Vec<(T, T)>, points: &mut Vec<(T, T)>| {
            if cluster.is_empty() {
                return;
            }
            let weight = cluster.iter().fold(T::zero(), |acc, p| acc + p.1);
            let count = T::of(cluster.len() as f64);
            let location = if weight > T::zero() {
                cluster.iter().fold(T::zero(), |acc, p| acc + p.0 * p.1) / weight
            } else {
                cluster.iter().fold(T::zero(), |acc, p| acc + p.0) / count
            };
            points.push((location, weight));
            cluster.clear();
        };
        for p in raw {
            if let Some(last) = cluster.last() {
                if p.0 - last.0 > tol {
                    flush(&mut cluster, &mut points);
                }
            }
            cluster.push(p);
        }
        flush(&mut cluster, &mut points);
        Self { points }
    }

    /// `(location, weight)` pairs in ascending location.
    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn total_weight(&self) -> T {
        self.points.iter().fold(T::zero(), |acc, p| acc + p.1)
    }

    /// `sum_i w_i λ_i^k`.
    pub fn moment(&self, k: usize) -> T {
        self.points.iter().fold(T::zero(), |acc, &(x, w)| {
            acc + w * (0..k).fold(T::one(), |pow, _| pow * x)
        })
    }

    /// Largest total weight in a closed window `[x, x + 2 eps]`.
    pub fn max_window_weight(&self, eps: T) -> T {
        let width = eps + eps;
        let mut best = T::zero();
        let mut sum = T::zero();
        let mut lo = 0;
        for hi in 0..self.points.len() {
            sum += self.points[hi].1;
            while self.points[hi].0 - self.points[lo].0 > width {
                sum -= self.points[lo].1;
                lo += 1;
            }
            best = best.max(sum);
        }
        best
    }

    /// Equal-width histogram over `[min, max]`; a measure supported in a
    /// single location yields one degenerate bin.
    pub fn histogram(&self, bins: usize) -> Vec<HistogramBin> {
        let Some(first) = self.points.first() else {
            return Vec::new();
        };
        let lo = first.0.to_f64_lossy();
        let hi = self.points.last().expect("nonempty").0.to_f64_lossy();
        if bins == 0 || hi - lo <= MERGE_TOLERANCE {
            return vec![HistogramBin {
                bin_left: lo,
                bin_right: hi,
                weight: self.total_weight().to_f64_lossy(),
            }];
        }
        let width = (hi - lo) / bins as f64;
        let mut out: Vec<HistogramBin> = (0..bins)
            .map(|i| HistogramBin {
                bin_left: lo + i as f64 * width,
                bin_right: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
                weight: 0.0,
            })
            .collect();
        for &(x, w) in &self.points {
            let i = (((x.to_f64_lossy() - lo) / width).floor() as usize).min(bins - 1);
            out[i].weight += w.to_f64_lossy();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub weight: f64,
}

fn ensure_self_adjoint<T: Real>(y: &ChaosElement<T>) -> Result<()> {
    let defect = y.mirror_defect();
    let scale = T::one() + y.l2_norm();
    if defect > T::default_epsilon() * T::of(64.0) * scale {
        return Err(ChaosError::NotSelfAdjoint {
            defect: defect.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Eigen-decomposition of `matrix_rep(Y, D)`; each eigenvector `v` carries
/// weight `|<Ω, v>|^2`.
pub fn vacuum_spectral_measure<T: Real>(y: &ChaosElement<T>, truncation: usize) -> Result<SpectralMeasure<T>> {
    ensure_self_adjoint(y)?;
    if let Some(top) = y.top_degree() {
        if truncation < top {
            return Err(ChaosError::TruncationTooSmall {
                truncation,
                required: top,
            });
        }
    }
    let matrix = y.matrix_rep(truncation);
    let eig = SymmetricEigen::new(matrix.entries().clone());
    let raw = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lambda)| (lambda, eig.eigenvectors[(0, i)].norm_sqr()))
        .collect();
    Ok(SpectralMeasure::from_points(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub exact_re: f64,
    pub exact_im: f64,
    pub truncated: f64,
    pub abs_diff: f64,
    /// Truncation provably reproduces this moment.
    pub in_window: bool,
}

/// Exact moments `τ(Y^k)` next to the moments of the `D`-truncated measure.
///
/// Paths contributing to `<Y^k Ω, Ω>` never climb above degree
/// `floor(k/2) · top_degree`, so the two agree whenever that is at most `D`.
pub fn moment_compare<T: Real>(y: &ChaosElement<T>, truncation: usize, max_k: usize) -> Result<Vec<MomentRow>> {
    let measure = vacuum_spectral_measure(y, truncation)?;
    let top = y.top_degree().unwrap_or(0);
    let exact_moments = y.moments(max_k);
    let mut rows = Vec::with_capacity(max_k + 1);
    for (k, &exact) in exact_moments.iter().enumerate() {
        let truncated = measure.moment(k);
        let diff = (exact - Cx::new(truncated, T::zero())).norm_sqr().sqrt();
        rows.push(MomentRow {
            k,
            exact_re: exact.re.to_f64_lossy(),
            exact_im: exact.im.to_f64_lossy(),
            truncated: truncated.to_f64_lossy(),
            abs_diff: diff.to_f64_lossy(),
            in_window: (k / 2) * top <= truncation,
        });
    }
    Ok(rows)
}

/// `k`-th moment of the semicircle law of variance `t`: zero for odd `k`,
/// `C_{k/2} t^{k/2}` for even `k`.
pub fn semicircle_reference(t: f64, k: usize) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(ChaosError::InvalidArgument(format!("variance must be positive, got {t}")));
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    Ok(catalan(k / 2) * t.powi((k / 2) as i32))
}

/// Catalan number `C_n` as a float (exact well past the sizes used here).
pub fn catalan(n: usize) -> f64 {
    (0..n).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomScanRow {
    pub truncation: usize,
    pub max_window_weight: f64,
}

/// For each truncation, the largest vacuum weight inside any window of
/// radius `eps`. Heuristic evidence only: an atom of mass `w` keeps the
/// column above `w`, decay towards zero is what atom-free laws look like.
pub fn atom_scan<T: Real>(y: &ChaosElement<T>, truncations: &[usize], eps: f64) -> Result<Vec<AtomScanRow>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ChaosError::InvalidArgument(format!("window radius must be positive, got {eps}")));
    }
    if truncations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ChaosError::InvalidArgument("truncations must be strictly increasing".into()));
    }
    truncations
        .iter()
        .map(|&d| {
            let measure = vacuum_spectral_measure(y, d)?;
            Ok(AtomScanRow {
                truncation: d,
                max_window_weight: measure.max_window_weight(T::of(eps)).to_f64_lossy(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CoeffTensor, GridSpec};
    use std::f64::consts::PI;

    type C = Cx<f64>;
    type Y = ChaosElement<f64>;

    fn unit_grid() -> GridSpec {
        GridSpec::new(1.0, 1).unwrap()
    }

    fn s1() -> Y {
        Y::free_bm(unit_grid(), 1.0).unwrap()
    }

    #[test]
    fn constant_measure() {
        let y = Y::scalar(unit_grid(), C::new(3.0, 0.0));
        for d in [0, 2, 5] {
            let mu = vacuum_spectral_measure(&y, d).unwrap();
            assert_eq!(mu.points().len(), 1);
            assert!((mu.points()[0].0 - 3.0).abs() < 1e-12);
            assert!((mu.points()[0].1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn field_measure_d1() {
        let mu = vacuum_spectral_measure(&s1(), 1).unwrap();
        let pts = mu.points();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].0 + 1.0).abs() < 1e-12 && (pts[0].1 - 0.5).abs() < 1e-12);
        assert!((pts[1].0 - 1.0).abs() < 1e-12 && (pts[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn field_measure_closed_form() {
        for d in 1..=9 {
            let mu = vacuum_spectral_measure(&s1(), d).unwrap();
            let n = d as f64 + 2.0;
            let mut expect: Vec<(f64, f64)> = (1..=d + 1)
                .map(|k| {
                    let a = k as f64 * PI / n;
                    (2.0 * a.cos(), 2.0 / n * a.sin().powi(2))
                })
                .collect();
            expect.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            assert_eq!(mu.points().len(), expect.len());
            for (got, want) in mu.points().iter().zip(&expect) {
                assert!((got.0 - want.0).abs() < 1e-10);
                assert!((got.1 - want.1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_non_self_adjoint_and_small_truncation() {
        let g = unit_grid();
        let y = Y::from_tensor(CoeffTensor::basis(g, 0).unwrap().scale(C::new(0.0, 1.0)));
        assert!(matches!(
            vacuum_spectral_measure(&y, 2),
            Err(ChaosError::NotSelfAdjoint { .. })
        ));
        let e = CoeffTensor::<f64>::basis(g, 0).unwrap();
        let y2 = Y::from_tensor(e.tensor(&e).unwrap());
        assert!(matches!(
            vacuum_spectral_measure(&y2, 1),
            Err(ChaosError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn moment_compare_catalan() {
        let rows = moment_compare(&s1(), 4, 8).unwrap();
        let catalan_moments = [1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 14.0];
        for (row, want) in rows.iter().zip(catalan_moments) {
            assert!(row.in_window);
            assert!((row.truncated - want).abs() < 1e-10, "k={}", row.k);
            assert!((row.exact_re - want).abs() < 1e-12);
        }
        let rows = moment_compare(&s1(), 4, 0).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].truncated - 1.0).abs() < 1e-12 && rows[0].exact_re == 1.0);
    }

    #[test]
    fn moment_compare_wick_square() {
        let g = unit_grid();
        let e = CoeffTensor::<f64>::basis(g, 0).unwrap();
        let y = Y::from_tensor(e.tensor(&e).unwrap());
        let rows = moment_compare(&y, 4, 2).unwrap();
        assert!((rows[2].exact_re - 1.0).abs() < 1e-12);
        assert!((rows[2].truncated - 1.0).abs() < 1e-10);
    }

    #[test]
    fn semicircle_examples() {
        assert_eq!(semicircle_reference(1.0, 2).unwrap(), 1.0);
        assert_eq!(semicircle_reference(1.0, 3).unwrap(), 0.0);
        assert_eq!(semicircle_reference(2.0, 4).unwrap(), 8.0);
        assert!(semicircle_reference(0.0, 2).is_err());
        let expect = [1.0, 1.0, 2.0, 5.0, 14.0, 42.0, 132.0];
        for (n, c) in expect.iter().enumerate() {
            assert_eq!(catalan(n), *c);
        }
    }

    #[test]
    fn semicircle_moments_by_quadrature() {
        // ∫ x^k (1/2π) sqrt(4 - x^2) dx with x = 2 cos θ
        let n = 20_000;
        for k in [2usize, 4, 6] {
            let h = PI / n as f64;
            let integral: f64 = (0..n)
                .map(|i| {
                    let th = (i as f64 + 0.5) * h;
                    let x = 2.0 * th.cos();
                    x.powi(k as i32) * 2.0 * th.sin() * 2.0 * th.sin() / (2.0 * PI) * h
                })
                .sum();
            assert!((integral - semicircle_reference(1.0, k).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn window_weights() {
        let mu = SpectralMeasure::<f64>::from_points(vec![(0.0, 0.25), (0.05, 0.25), (1.0, 0.5)]);
        assert!((mu.max_window_weight(0.03) - 0.5).abs() < 1e-15);
        assert!((mu.max_window_weight(0.02) - 0.5).abs() < 1e-15);
        assert!((mu.max_window_weight(0.6) - 1.0).abs() < 1e-15);
        let mu = SpectralMeasure::<f64>::from_points(vec![(0.0, 0.2), (0.05, 0.2), (1.0, 0.1)]);
        assert!((mu.max_window_weight(0.03) - 0.4).abs() < 1e-15);
        assert!((mu.max_window_weight(0.02) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn merging_close_eigenvalues() {
        let mu = SpectralMeasure::<f64>::from_points(vec![(1.0, 0.5), (1.0 + 1e-12, 0.25), (-1.0, 0.25)]);
        assert_eq!(mu.points().len(), 2);
        assert!((mu.points()[1].1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn atom_scan_examples() {
        let c = Y::scalar(unit_grid(), C::new(3.0, 0.0));
        for row in atom_scan(&c, &[2, 4, 6], 0.05).unwrap() {
            assert!((row.max_window_weight - 1.0).abs() < 1e-12);
        }
        let rows = atom_scan(&s1(), &[4, 6, 8, 10], 0.05).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].max_window_weight < pair[0].max_window_weight);
        }
        for row in &rows {
            assert!(row.max_window_weight <= 2.0 / (row.truncation as f64 + 2.0) + 1e-12);
        }
        assert!(atom_scan(&s1(), &[4, 4], 0.05).is_err());
        assert!(atom_scan(&s1(), &[4], 0.0).is_err());
    }

    #[test]
    fn histogram_single_point() {
        let mu = vacuum_spectral_measure(&Y::scalar(unit_grid(), C::new(2.0, 0.0)), 3).unwrap();
        let bins = mu.histogram(10);
        assert_eq!(bins.len(), 1);
        assert!((bins[0].weight - 1.0).abs() < 1e-12);
        let mu = vacuum_spectral_measure(&s1(), 6).unwrap();
        let bins = mu.histogram(5);
        assert_eq!(bins.len(), 5);
        assert!((bins.iter().map(|b| b.weight).sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
