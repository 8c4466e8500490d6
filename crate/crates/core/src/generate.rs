//! Synthetic dense test matrices.

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::rng::GaussianStream;

fn check(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("matrix dimension must be at least 1"));
    }
    // Dense storage; refuse sizes whose entry count cannot even be indexed.
    if d.checked_mul(d).is_none_or(|n| n > isize::MAX as usize / 8) {
        return Err(Error::invalid(format!("dense {d} x {d} matrix is too large")));
    }
    Ok(())
}

/// Dense `d x d` matrix with i.i.d. standard normal entries.
pub fn gen_gaussian(d: usize, seed: u64) -> Result<MatrixHandle> {
    check(d)?;
    let stream = GaussianStream::matrix(seed);
    let mut data = vec![0.0; d * d];
    stream.rng().fill_normal(0, &mut data);
    MatrixHandle::from_dense(d, data)
}

/// Dense `d x d` matrix with i.i.d. Uniform[0, 1) entries.
pub fn gen_uniform01(d: usize, seed: u64) -> Result<MatrixHandle> {
    check(d)?;
    let rng = *GaussianStream::matrix(seed).rng();
    let data = (0..(d * d) as u64).map(|k| rng.uniform_at(k)).collect();
    MatrixHandle::from_dense(d, data)
}
