//! Counter-based random streams.
//!
//! Every value is a pure function of `(key, counter)`, so a draw never depends
//! on how many draws came before it or on which thread made it. The mixing
//! function is the SplitMix64 finalizer applied twice over the key-whitened
//! counter. Normals come from the Box–Muller transform: global index `2k`
//! takes the cosine branch of pair `k`, index `2k + 1` the sine branch.

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

// Seed namespaces. Validators must never share randomness with the code they check.
const NS_ESTIMATOR: u64 = 0x5155_4144_4449_4147; // "QUADDIAG"
const NS_VALIDATION: u64 = 0x4d43_4f52_4143_4c45; // "MCORACLE"
const NS_MATRIX: u64 = 0x4d41_5452_4958_4745; // "MATRIXGE"

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless random source addressed by a 64-bit counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    fn with_namespace(seed: u64, namespace: u64) -> Self {
        Self {
            key: mix64(mix64(seed ^ namespace).wrapping_add(GOLDEN)),
        }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(mix64(counter.wrapping_mul(GOLDEN) ^ self.key).wrapping_add(self.key))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`; safe to take the logarithm of.
    #[inline]
    fn open_uniform_at(&self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    fn normal_pair(&self, pair: u64) -> (f64, f64) {
        let r = (-2.0 * self.open_uniform_at(pair.wrapping_mul(2)).ln()).sqrt();
        let theta = TAU * self.uniform_at(pair.wrapping_mul(2).wrapping_add(1));
        let (s, c) = theta.sin_cos();
        (r * c, r * s)
    }

    /// Standard normal at a global index.
    #[inline]
    pub fn normal_at(&self, index: u64) -> f64 {
        let (c, s) = self.normal_pair(index >> 1);
        if index & 1 == 0 {
            c
        } else {
            s
        }
    }

    /// Fills `out` with the standard normals at global indices `start, start + 1, ...`.
    pub fn fill_normal(&self, start: u64, out: &mut [f64]) {
        let mut idx = start;
        let mut k = 0;
        if idx & 1 == 1 && k < out.len() {
            out[k] = self.normal_at(idx);
            idx = idx.wrapping_add(1);
            k += 1;
        }
        while k + 1 < out.len() {
            let (c, s) = self.normal_pair(idx >> 1);
            out[k] = c;
            out[k + 1] = s;
            idx = idx.wrapping_add(2);
            k += 2;
        }
        if k < out.len() {
            out[k] = self.normal_at(idx);
        }
    }
}

/// Source of i.i.d. standard-normal `d`-vectors. Vector `j` of dimension `d`
/// occupies global indices `j * d .. (j + 1) * d` and depends only on
/// `(seed, j, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianStream {
    seed: u64,
    rng: CounterRng,
}

impl GaussianStream {
    /// Stream used by the estimators.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: CounterRng::with_namespace(seed, NS_ESTIMATOR),
        }
    }

    /// Stream in a namespace disjoint from [`GaussianStream::new`], for Monte Carlo validators.
    pub fn validation(seed: u64) -> Self {
        Self {
            seed,
            rng: CounterRng::with_namespace(seed, NS_VALIDATION),
        }
    }

    /// Stream used to generate synthetic test matrices.
    pub(crate) fn matrix(seed: u64) -> Self {
        Self {
            seed,
            rng: CounterRng::with_namespace(seed, NS_MATRIX),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self) -> &CounterRng {
        &self.rng
    }

    /// Writes vector `j` (dimension `out.len()`) into `out`.
    #[inline]
    pub fn sample_into(&self, j: u64, out: &mut [f64]) {
        let d = out.len() as u64;
        self.rng.fill_normal(j.wrapping_mul(d), out);
    }

    pub fn sample(&self, j: u64, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        self.sample_into(j, &mut out);
        out
    }
}
