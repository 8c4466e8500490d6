//! Diagonal estimators.
//!
//! Sample `j` always uses vector `j` of a [`GaussianStream`], and per-sample
//! contributions are reduced in fixed chunks of [`CHUNK`] samples folded in
//! index order. Results are therefore bitwise reproducible for a given seed
//! regardless of the number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::{MatVecOracle, QuadraticFormOracle};
use crate::rng::GaussianStream;

/// Samples per reduction chunk.
pub const CHUNK: u64 = 64;
/// Chunks evaluated per parallel batch; bounds memory at `BATCH * d` floats.
const BATCH: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEstimate {
    pub values: Vec<f64>,
    /// Samples per repeat (`N`, or `N'` for the median estimator).
    pub samples: u64,
    /// Number of repeats `T`; 1 for the single-run estimators.
    pub repeats: u64,
    pub queries: u64,
    pub seed: u64,
}

impl DiagonalEstimate {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Runs `per_sample` for samples `start .. start + count`, each adding its
/// contribution into an `acc_len` accumulator, and returns the chunked sum.
/// `d` sizes the per-thread scratch vectors.
pub(crate) fn reduce_samples<F>(
    d: usize,
    acc_len: usize,
    start: u64,
    count: u64,
    parallel: bool,
    per_sample: F,
) -> Result<Vec<f64>>
where
    F: Fn(u64, &mut [f64], &mut Scratch) -> Result<()> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; acc_len];
        let mut scratch = Scratch::new(d);
        let lo = start + c * CHUNK;
        let hi = (lo + CHUNK).min(start + count);
        for j in lo..hi {
            per_sample(j, &mut acc, &mut scratch)?;
        }
        Ok(acc)
    };

    let mut total = vec![0.0; acc_len];
    let mut c0 = 0;
    while c0 < chunks {
        let c1 = (c0 + BATCH).min(chunks);
        let partials: Vec<Vec<f64>> = if parallel {
            (c0..c1).into_par_iter().map(run_chunk).collect::<Result<_>>()?
        } else {
            (c0..c1).map(run_chunk).collect::<Result<_>>()?
        };
        for part in &partials {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
        c0 = c1;
    }
    Ok(total)
}

pub(crate) struct Scratch {
    pub u: Vec<f64>,
    pub au: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            u: vec![0.0; d],
            au: vec![0.0; d],
        }
    }
}

/// `sum_j Q(u_j) (u_j^2 - 1)` over samples `start .. start + count`.
fn quadratic_sum<O>(oracle: &O, stream: &GaussianStream, start: u64, count: u64) -> Result<Vec<f64>>
where
    O: QuadraticFormOracle + Sync + ?Sized,
{
    let d = oracle.dim();
    reduce_samples(d, d, start, count, oracle.is_concurrent(), |j, acc, s| {
        stream.sample_into(j, &mut s.u);
        let q = oracle.query(&s.u)?;
        for (a, &x) in acc.iter_mut().zip(&s.u) {
            *a += q * (x * x - 1.0);
        }
        Ok(())
    })
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::invalid("oracle dimension must be at least 1"))
    } else {
        Ok(())
    }
}

/// Estimates `diag(A)` from `n` quadratic-form queries:
/// `g = (1 / 2n) sum_j (u_j^T A u_j) ([u_j]^2 - 1)` with `u_j ~ N(0, I)`.
pub fn estimate_diagonal<O>(oracle: &O, n: u64, seed: u64) -> Result<DiagonalEstimate>
where
    O: QuadraticFormOracle + Sync + ?Sized,
{
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    check_dim(oracle.dim())?;
    let stream = GaussianStream::new(seed);
    let scale = 1.0 / (2.0 * n as f64);
    let values = quadratic_sum(oracle, &stream, 0, n)?
        .into_iter()
        .map(|v| v * scale)
        .collect();
    Ok(DiagonalEstimate {
        values,
        samples: n,
        repeats: 1,
        queries: n,
        seed,
    })
}

/// Median of `repeats` independent runs of [`estimate_diagonal`] with
/// `n_prime` samples each. Run `t` consumes sample indices
/// `t * n_prime .. (t + 1) * n_prime` of one stream.
pub fn estimate_diagonal_median<O>(oracle: &O, n_prime: u64, repeats: u64, seed: u64) -> Result<DiagonalEstimate>
where
    O: QuadraticFormOracle + Sync + ?Sized,
{
    if n_prime == 0 {
        return Err(Error::invalid("per-repeat sample size must be at least 1"));
    }
    if repeats == 0 {
        return Err(Error::invalid("number of repeats must be at least 1"));
    }
    let total = n_prime
        .checked_mul(repeats)
        .ok_or_else(|| Error::invalid("total sample count overflows u64"))?;
    let d = oracle.dim();
    check_dim(d)?;
    let stream = GaussianStream::new(seed);
    let scale = 1.0 / (2.0 * n_prime as f64);

    let mut runs: Vec<Vec<f64>> = Vec::with_capacity(repeats as usize);
    for t in 0..repeats {
        let sum = quadratic_sum(oracle, &stream, t * n_prime, n_prime)?;
        runs.push(sum.into_iter().map(|v| v * scale).collect());
    }
    let mut column = vec![0.0; repeats as usize];
    let values = (0..d)
        .map(|p| {
            for (c, run) in column.iter_mut().zip(&runs) {
                *c = run[p];
            }
            median(&mut column)
        })
        .collect();
    Ok(DiagonalEstimate {
        values,
        samples: n_prime,
        repeats,
        queries: total,
        seed,
    })
}

/// Matrix-vector baseline: `g = (1 / n) sum_i (A w_i) ∘ w_i`, `w_i ~ N(0, I)`.
pub fn estimate_diagonal_matvec<O>(oracle: &O, n: u64, seed: u64) -> Result<DiagonalEstimate>
where
    O: MatVecOracle + Sync + ?Sized,
{
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let d = oracle.dim();
    check_dim(d)?;
    let stream = GaussianStream::new(seed);
    let sum = reduce_samples(d, d, 0, n, oracle.is_concurrent(), |j, acc, s| {
        stream.sample_into(j, &mut s.u);
        oracle.apply(&s.u, &mut s.au)?;
        for ((a, &w), &aw) in acc.iter_mut().zip(&s.u).zip(&s.au) {
            *a += aw * w;
        }
        Ok(())
    })?;
    let scale = 1.0 / n as f64;
    Ok(DiagonalEstimate {
        values: sum.into_iter().map(|v| v * scale).collect(),
        samples: n,
        repeats: 1,
        queries: n,
        seed,
    })
}

/// Median with the two central order statistics averaged for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Number of median repeats for failure probability `delta`:
/// `max(1, ceil(8 ln(1 / delta)))`.
pub fn repeats_for_confidence(delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(crate::theory::ceil_count(8.0 * (1.0 / delta).ln()))
}
