//! Matrix-free estimation of the diagonal of a square matrix from
//! quadratic-form queries `u^T A u` alone.
//!
//! The core estimator draws standard Gaussian probes `u_j` and forms
//!
//! ```text
//! g = (1 / 2N) sum_j (u_j^T A u_j) ([u_j]^2 - 1)
//! ```
//!
//! which is unbiased for `diag(A)`. Alongside it the crate provides the
//! median-of-repeats variant, the matrix-vector baseline, exact variance and
//! sample-size formulas with a Monte Carlo validator, a zeroth-order oracle
//! that builds `u^T ∇²f(x) u` from three function values, a Matrix Market
//! reader, and the relative-error sweep used by the `quaddiag` binary.
//!
//! Library indices are 0-based; the CLI and Matrix Market files are 1-based.

pub mod error;
pub mod estimator;
pub mod experiment;
pub mod generate;
pub mod matrix;
pub mod mmio;
pub mod oracle;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use estimator::{
    estimate_diagonal, estimate_diagonal_matvec, estimate_diagonal_median, repeats_for_confidence, DiagonalEstimate,
};
pub use experiment::{run_experiment, ExperimentResult, ExperimentRow, ExperimentSpec, MatrixSource, Selector};
pub use generate::{gen_gaussian, gen_uniform01};
pub use matrix::MatrixHandle;
pub use mmio::{parse_matrix_market, read_matrix_market, read_matrix_market_path, write_matrix_market};
pub use oracle::{
    explicit_oracle, matvec_oracle, with_counter, zeroth_order_oracle, MatVecOracle, QuadraticFormOracle, QueryCounter,
    ScalarFieldProbe,
};
pub use rng::GaussianStream;
pub use theory::{SamplePlan, VarianceReport};
