//! Seeded generation of random test data.
//!
//! Backed by ChaCha8 seeded through `seed_from_u64`, so a seed reproduces the
//! same tensors on every platform. Entries are uniform on `[-1, 1)`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chaos::ChaosElement;
use crate::grid::{CoeffTensor, GridSpec};
use crate::malliavin::{ChaosBitensor, SimpleBiprocess};
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone)]
pub struct ChaosRng {
    rng: ChaCha8Rng,
}

impl ChaosRng {
    pub fn seeded(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random_range(-1.0..1.0)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Integer in `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    fn complex<T: Real>(&mut self) -> Cx<T> {
        let re = self.uniform();
        let im = self.uniform();
        Complex::new(T::of(re), T::of(im))
    }

    pub fn tensor<T: Real>(&mut self, grid: GridSpec, degree: usize) -> CoeffTensor<T> {
        CoeffTensor::from_fn(grid, degree, |_| self.complex())
    }

    pub fn real_tensor<T: Real>(&mut self, grid: GridSpec, degree: usize) -> CoeffTensor<T> {
        CoeffTensor::from_fn(grid, degree, |_| Complex::new(T::of(self.uniform()), T::zero()))
    }

    /// Real, nonzero direction vector.
    pub fn direction<T: Real>(&mut self, grid: GridSpec) -> CoeffTensor<T> {
        loop {
            let h = self.real_tensor(grid, 1);
            if h.norm() > T::of(1e-3) {
                return h;
            }
        }
    }

    /// Element with random kernels in every degree `0..=top`.
    pub fn chaos<T: Real>(&mut self, grid: GridSpec, top: usize) -> ChaosElement<T> {
        ChaosElement::from_terms(grid, (0..=top).map(|n| self.tensor(grid, n)))
            .expect("same grid")
    }

    /// Element whose degree set is a random subset of `0..=top` containing `top`.
    pub fn sparse_chaos<T: Real>(&mut self, grid: GridSpec, top: usize) -> ChaosElement<T> {
        let mut terms = vec![self.tensor(grid, top)];
        for n in 0..top {
            if self.rng.random_bool(0.5) {
                terms.push(self.tensor(grid, n));
            }
        }
        ChaosElement::from_terms(grid, terms).expect("same grid")
    }

    /// `(Z + Z*) / 2` for a random `Z` of top degree `top`.
    pub fn self_adjoint_chaos<T: Real>(&mut self, grid: GridSpec, top: usize) -> ChaosElement<T> {
        let z = self.chaos::<T>(grid, top);
        let half = Complex::new(T::of(0.5), T::zero());
        z.try_add(&z.adjoint()).expect("same grid").scale(half)
    }

    /// [`Self::tensor`] with degree uniform in `0..=max_degree`.
    pub fn tensor_upto<T: Real>(&mut self, grid: GridSpec, max_degree: usize) -> CoeffTensor<T> {
        let n = self.between(0, max_degree);
        self.tensor(grid, n)
    }

    /// [`Self::chaos`] with top degree uniform in `0..=max_top`.
    pub fn chaos_upto<T: Real>(&mut self, grid: GridSpec, max_top: usize) -> ChaosElement<T> {
        let top = self.between(0, max_top);
        self.chaos(grid, top)
    }

    /// [`Self::sparse_chaos`] with top degree uniform in `0..=max_top`.
    pub fn sparse_chaos_upto<T: Real>(&mut self, grid: GridSpec, max_top: usize) -> ChaosElement<T> {
        let top = self.between(0, max_top);
        self.sparse_chaos(grid, top)
    }

    /// [`Self::self_adjoint_chaos`] with top degree uniform in `0..=max_top`.
    pub fn self_adjoint_upto<T: Real>(&mut self, grid: GridSpec, max_top: usize) -> ChaosElement<T> {
        let top = self.between(0, max_top);
        self.self_adjoint_chaos(grid, top)
    }

    /// Bitensor with random components `(a, b)`, `a + b <= max_total`.
    pub fn bitensor<T: Real>(&mut self, grid: GridSpec, max_total: usize) -> ChaosBitensor<T> {
        let mut out = ChaosBitensor::zero(grid);
        for a in 0..=max_total {
            for b in 0..=(max_total - a) {
                let t = self.tensor(grid, a + b);
                out.accumulate(a, b, &t).expect("degrees match");
            }
        }
        out
    }

    /// Adapted biprocess: the value on cell `i` only uses indices `< i`.
    pub fn adapted_biprocess<T: Real>(&mut self, grid: GridSpec, max_total: usize) -> SimpleBiprocess<T> {
        let values = (0..grid.cells())
            .map(|i| {
                let mut v = ChaosBitensor::zero(grid);
                for a in 0..=max_total {
                    for b in 0..=(max_total - a) {
                        if i == 0 && a + b > 0 {
                            continue;
                        }
                        let t = CoeffTensor::from_fn(grid, a + b, |idx| {
                            let z = self.complex::<T>();
                            if idx.iter().all(|&j| j < i) {
                                z
                            } else {
                                Complex::new(T::zero(), T::zero())
                            }
                        });
                        v.accumulate(a, b, &t).expect("degrees match");
                    }
                }
                v
            })
            .collect();
        SimpleBiprocess::new(grid, values).expect("one value per cell")
    }
}
