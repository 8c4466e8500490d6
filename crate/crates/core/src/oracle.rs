//! Oracles: black boxes that answer `u^T A u` (or `A u`) for caller-chosen probes.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;

/// Black-box access to `u ↦ u^T A u` for an implicit `d x d` matrix `A`.
///
/// Evaluation must be deterministic in `u`.
pub trait QuadraticFormOracle {
    fn dim(&self) -> usize;

    /// Returns `u^T A u`. `u.len()` must equal [`dim`](Self::dim).
    fn query(&self, u: &[f64]) -> Result<f64>;

    /// Whether `query` may be called from several threads at once.
    fn is_concurrent(&self) -> bool {
        true
    }
}

/// Black-box access to `u ↦ A u`.
pub trait MatVecOracle {
    fn dim(&self) -> usize;

    fn apply(&self, u: &[f64], out: &mut [f64]) -> Result<()>;

    fn is_concurrent(&self) -> bool {
        true
    }
}

impl<O: QuadraticFormOracle + ?Sized> QuadraticFormOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn query(&self, u: &[f64]) -> Result<f64> {
        (**self).query(u)
    }
    fn is_concurrent(&self) -> bool {
        (**self).is_concurrent()
    }
}

impl<O: MatVecOracle + ?Sized> MatVecOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).apply(u, out)
    }
    fn is_concurrent(&self) -> bool {
        (**self).is_concurrent()
    }
}

/// Quadratic forms of an explicitly stored matrix.
#[derive(Debug, Clone, Copy)]
pub struct ExplicitOracle<'a> {
    matrix: &'a MatrixHandle,
}

pub fn explicit_oracle(matrix: &MatrixHandle) -> ExplicitOracle<'_> {
    ExplicitOracle { matrix }
}

impl ExplicitOracle<'_> {
    pub fn matrix(&self) -> &MatrixHandle {
        self.matrix
    }
}

impl QuadraticFormOracle for ExplicitOracle<'_> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn query(&self, u: &[f64]) -> Result<f64> {
        self.matrix.quad_form(u)
    }
}

/// Matrix-vector products of an explicitly stored matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatVec<'a> {
    matrix: &'a MatrixHandle,
}

pub fn matvec_oracle(matrix: &MatrixHandle) -> MatVec<'_> {
    MatVec { matrix }
}

impl MatVecOracle for MatVec<'_> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.matrix.dim();
        if u.len() != d || out.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if u.len() != d { u.len() } else { out.len() },
            });
        }
        self.matrix.mat_vec_into(u, out);
        Ok(())
    }
}

/// A scalar field `f` probed around a base point `x` with step `alpha`.
pub struct ScalarFieldProbe<F> {
    f: F,
    x: Vec<f64>,
    alpha: f64,
}

impl<F> ScalarFieldProbe<F>
where
    F: Fn(&[f64]) -> f64,
{
    /// Probe with the default step `1e-4 * max(1, ||x||)`.
    pub fn new(f: F, x: Vec<f64>) -> Result<Self> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self::with_step(f, x, 1e-4 * norm.max(1.0))
    }

    pub fn with_step(f: F, x: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "step size must be positive and finite, got {alpha}"
            )));
        }
        if x.is_empty() {
            return Err(Error::invalid("base point must have dimension at least 1"));
        }
        Ok(Self { f, x, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base_point(&self) -> &[f64] {
        &self.x
    }
}

/// Approximates `u^T ∇²f(x) u` by `(f(x + αu) + f(x − αu) − 2 f(x)) / α²`.
///
/// `f(x)` is evaluated on the first query and reused afterwards, so `q`
/// queries cost `1 + 2q` function evaluations.
pub struct ZerothOrderOracle<F> {
    probe: ScalarFieldProbe<F>,
    fx: OnceLock<f64>,
    evaluations: AtomicU64,
}

pub fn zeroth_order_oracle<F>(probe: ScalarFieldProbe<F>) -> ZerothOrderOracle<F>
where
    F: Fn(&[f64]) -> f64,
{
    ZerothOrderOracle {
        probe,
        fx: OnceLock::new(),
        evaluations: AtomicU64::new(0),
    }
}

impl<F> ZerothOrderOracle<F>
where
    F: Fn(&[f64]) -> f64,
{
    pub fn function_evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn probe(&self) -> &ScalarFieldProbe<F> {
        &self.probe
    }

    fn eval(&self, y: &[f64]) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let v = (self.probe.f)(y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("objective returned {v}")))
        }
    }

    fn center_value(&self) -> Result<f64> {
        if let Some(&v) = self.fx.get() {
            return Ok(v);
        }
        let v = self.eval(&self.probe.x)?;
        // A racing thread may have stored first; both computed the same value.
        Ok(*self.fx.get_or_init(|| v))
    }
}

impl<F> QuadraticFormOracle for ZerothOrderOracle<F>
where
    F: Fn(&[f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.probe.x.len()
    }

    fn query(&self, u: &[f64]) -> Result<f64> {
        let x = &self.probe.x;
        if u.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: u.len(),
            });
        }
        let a = self.probe.alpha;
        let fx = self.center_value()?;
        let plus: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + a * ui).collect();
        let minus: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi - a * ui).collect();
        let fp = self.eval(&plus)?;
        let fm = self.eval(&minus)?;
        Ok((fp + fm - 2.0 * fx) / (a * a))
    }
}

/// Forwarding wrapper that counts queries.
#[derive(Debug)]
pub struct QueryCounter<O> {
    inner: O,
    count: AtomicU64,
}

pub fn with_counter<O>(inner: O) -> QueryCounter<O> {
    QueryCounter {
        inner,
        count: AtomicU64::new(0),
    }
}

impl<O> QueryCounter<O> {
    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: QuadraticFormOracle> QuadraticFormOracle for QueryCounter<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn query(&self, u: &[f64]) -> Result<f64> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.query(u)
    }

    fn is_concurrent(&self) -> bool {
        self.inner.is_concurrent()
    }
}

impl<O: MatVecOracle> MatVecOracle for QueryCounter<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(u, out)
    }

    fn is_concurrent(&self) -> bool {
        self.inner.is_concurrent()
    }
}
