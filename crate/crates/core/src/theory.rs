//! Closed-form variance, moment and sample-size formulas for the
//! quadratic-form diagonal estimator, plus a brute-force Monte Carlo
//! validator for them.
//!
//! Notation used in comments: `t = tr(A)`, `s = sum_i a_ii^2`,
//! `F = ||A + A^T||_F^2`, `c_p = ||A_{p,:}^T + A_{:,p}||^2`.
//!
//! The aggregate variance `sum_p V_p` is computed as a direct sum. Expanding
//! that sum gives `(2d + 16) t^2 + (d + 8) F + 20 s`; the commonly quoted
//! closed form carries `(4d + 16) t^2` instead. [`VarianceReport`] exposes
//! both closed forms next to the direct sum.

use crate::error::{Error, Result};
use crate::estimator::reduce_samples;
use crate::matrix::MatrixHandle;
use crate::rng::GaussianStream;

/// Rounds a real-valued requirement up to a sample count, floored at 1.
/// Values within `1e-9` (relative) of an integer are snapped to it so that
/// rounding noise in the formula does not add a spurious sample.
pub fn ceil_count(x: f64) -> u64 {
    if x.is_nan() || x <= 1.0 {
        return 1;
    }
    if !x.is_finite() || x >= u64::MAX as f64 {
        return u64::MAX;
    }
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x.ceil()
    };
    (v as u64).max(1)
}

fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {eps}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_index(m: &MatrixHandle, p: usize) -> Result<()> {
    if p >= m.dim() {
        Err(Error::IndexOutOfRange { index: p, dim: m.dim() })
    } else {
        Ok(())
    }
}

#[inline]
fn variance_from_parts(trace: f64, app: f64, sym_frob: f64, cross: f64) -> f64 {
    2.0 * (trace + 4.0 * app).powi(2) + sym_frob + 8.0 * cross - 12.0 * app * app
}

/// Single-sample variance of `2 g_p`:
/// `V_p = E[(Q(u) u_p^2 - Q(u) - 2 a_pp)^2] = 2 (t + 4 a_pp)^2 + F + 8 c_p - 12 a_pp^2`.
///
/// The estimate from `N` samples has variance `V_p / (4N)`.
pub fn elementwise_variance(m: &MatrixHandle, p: usize) -> Result<f64> {
    let cross = m.cross_norm_sq(p)?;
    let app = m.get(p, p)?;
    Ok(variance_from_parts(m.trace(), app, m.sym_frobenius_sq(), cross))
}

/// `V_p` for every index.
pub fn elementwise_variances(m: &MatrixHandle) -> Vec<f64> {
    let (t, f) = (m.trace(), m.sym_frobenius_sq());
    m.diag()
        .iter()
        .zip(m.cross_norms_sq())
        .map(|(&a, c)| variance_from_parts(t, a, f, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub per_index: Vec<f64>,
    /// `sum_p V_p`. Used for all planning and predictions.
    pub direct_sum: f64,
    /// `(4d + 16) t^2 + d F + 8 sum_p c_p + 20 s`, as commonly printed.
    pub printed_closed_form: f64,
    /// `(2d + 16) t^2 + d F + 8 sum_p c_p + 20 s`, which agrees with the direct sum.
    pub corrected_closed_form: f64,
}

impl VarianceReport {
    /// `direct_sum - printed_closed_form`; equals `-2 d t^2` analytically.
    pub fn discrepancy(&self) -> f64 {
        self.direct_sum - self.printed_closed_form
    }
}

pub fn total_variance(m: &MatrixHandle) -> VarianceReport {
    let per_index = elementwise_variances(m);
    let direct_sum = per_index.iter().sum();
    let d = m.dim() as f64;
    let t2 = m.trace().powi(2);
    let rest = d * m.sym_frobenius_sq() + 8.0 * m.cross_norms_sq().iter().sum::<f64>() + 20.0 * m.diag_norm_sq();
    VarianceReport {
        per_index,
        direct_sum,
        printed_closed_form: (4.0 * d + 16.0) * t2 + rest,
        corrected_closed_form: (2.0 * d + 16.0) * t2 + rest,
    }
}

/// `E[(Q(u) u_p^n)^2]` for `n` in `{0, 1, 2}`.
///
/// With `o = sum_{i>j} (a_ij + a_ji)^2 = (F - 4s) / 2` and
/// `r_p = sum_{i != p} (a_ip + a_pi)^2 = c_p - 4 a_pp^2`:
///
/// ```text
/// n = 0:   t^2 +  2s                     +   o
/// n = 1:   t^2 +  2s +  4 a t +  8 a^2   +   o +  2 r_p
/// n = 2: 3 t^2 +  6s + 24 a t + 72 a^2   + 3 o + 12 r_p
/// ```
pub fn moment_sq(m: &MatrixHandle, p: usize, n: u32) -> Result<f64> {
    if n > 2 {
        return Err(Error::invalid(format!("moment order must be 0, 1 or 2, got {n}")));
    }
    check_index(m, p)?;
    let t = m.trace();
    let s = m.diag_norm_sq();
    let off = (m.sym_frobenius_sq() - 4.0 * s) / 2.0;
    let a = m.get(p, p)?;
    let rest_p = m.cross_norm_sq(p)? - 4.0 * a * a;
    Ok(match n {
        0 => t * t + 2.0 * s + off,
        1 => t * t + 4.0 * a * t + 2.0 * s + 8.0 * a * a + off + 2.0 * rest_p,
        _ => 3.0 * t * t + 6.0 * s + 24.0 * a * t + 72.0 * a * a + 3.0 * off + 12.0 * rest_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanMode {
    /// `|g_p - a_pp| <= eps` with probability `1 - delta` (Chebyshev).
    Elementwise { index: usize, variance: f64 },
    /// `||g - diag(A)||^2 <= eps * sum_i a_ii^2` with probability `1 - delta`.
    Normwise { total_variance: f64, diag_norm_sq: f64 },
    /// Median of `repeats` runs with `samples` each; total queries `samples * repeats`.
    Median { index: usize, variance: f64, repeats: u64 },
    /// Matrix-vector baseline for a single index.
    MatVec { index: usize, off_diagonal_row_sq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    pub epsilon: f64,
    pub delta: f64,
    /// `N` (or `N'` per repeat in median mode).
    pub samples: u64,
    pub mode: PlanMode,
}

impl SamplePlan {
    pub fn total_queries(&self) -> u64 {
        match self.mode {
            PlanMode::Median { repeats, .. } => self.samples.saturating_mul(repeats),
            _ => self.samples,
        }
    }
}

/// `N = ceil(V_p / (4 delta eps^2))`.
pub fn sample_size_elementwise(m: &MatrixHandle, p: usize, eps: f64, delta: f64) -> Result<SamplePlan> {
    check_eps_delta(eps, delta)?;
    let variance = elementwise_variance(m, p)?;
    Ok(SamplePlan {
        epsilon: eps,
        delta,
        samples: ceil_count(variance / (4.0 * delta * eps * eps)),
        mode: PlanMode::Elementwise { index: p, variance },
    })
}

/// `N = ceil(sum_p V_p / (4 eps delta sum_i a_ii^2))`.
pub fn sample_size_normwise(m: &MatrixHandle, eps: f64, delta: f64) -> Result<SamplePlan> {
    check_eps_delta(eps, delta)?;
    let diag_norm_sq = m.diag_norm_sq();
    if diag_norm_sq == 0.0 {
        return Err(Error::DegenerateTarget(
            "diagonal is identically zero; relative norm-wise target undefined".into(),
        ));
    }
    let total_variance = total_variance(m).direct_sum;
    Ok(SamplePlan {
        epsilon: eps,
        delta,
        samples: ceil_count(total_variance / (4.0 * eps * delta * diag_norm_sq)),
        mode: PlanMode::Normwise {
            total_variance,
            diag_norm_sq,
        },
    })
}

/// Median-of-repeats plan: `N' = ceil(V_p / eps^2)` (failure probability at
/// most 1/4 per repeat) and `T = max(1, ceil(8 ln(1 / delta)))`.
pub fn sample_size_median(m: &MatrixHandle, p: usize, eps: f64, delta: f64) -> Result<SamplePlan> {
    check_eps_delta(eps, delta)?;
    let variance = elementwise_variance(m, p)?;
    Ok(SamplePlan {
        epsilon: eps,
        delta,
        samples: ceil_count(variance / (eps * eps)),
        mode: PlanMode::Median {
            index: p,
            variance,
            repeats: crate::estimator::repeats_for_confidence(delta)?,
        },
    })
}

/// Matrix-vector baseline: `N' = ceil(2 (||A_{p,:}||^2 - a_pp^2) ln(2 / delta) / eps^2)`.
pub fn sample_size_matvec_elementwise(m: &MatrixHandle, p: usize, eps: f64, delta: f64) -> Result<SamplePlan> {
    check_eps_delta(eps, delta)?;
    check_index(m, p)?;
    let off: f64 = (0..m.dim())
        .filter(|&j| j != p)
        .map(|j| m.get(p, j).map(|v| v * v))
        .sum::<Result<f64>>()?;
    Ok(SamplePlan {
        epsilon: eps,
        delta,
        samples: ceil_count(2.0 * off * (2.0 / delta).ln() / (eps * eps)),
        mode: PlanMode::MatVec {
            index: p,
            off_diagonal_row_sq: off,
        },
    })
}

fn check_prediction_args(n: u64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Predicted element-wise relative error `V_p / (4 delta N a_pp^2)`.
/// With `delta = 1` this is the expected value of `(g_p - a_pp)^2 / a_pp^2`.
pub fn predicted_rel_err_elementwise(m: &MatrixHandle, p: usize, n: u64, delta: f64) -> Result<f64> {
    check_prediction_args(n, delta)?;
    let app = m.get(p, p)?;
    if app == 0.0 {
        return Err(Error::DegenerateTarget(format!(
            "diagonal entry {p} is zero; relative error undefined"
        )));
    }
    Ok(elementwise_variance(m, p)? / (4.0 * delta * n as f64 * app * app))
}

/// Predicted norm-wise relative error `sum_p V_p / (4 N delta sum_i a_ii^2)`.
pub fn predicted_rel_err_normwise(m: &MatrixHandle, n: u64, delta: f64) -> Result<f64> {
    check_prediction_args(n, delta)?;
    let s = m.diag_norm_sq();
    if s == 0.0 {
        return Err(Error::DegenerateTarget(
            "diagonal is identically zero; relative error undefined".into(),
        ));
    }
    Ok(total_variance(m).direct_sum / (4.0 * n as f64 * delta * s))
}

// Monte Carlo validators. These draw from `GaussianStream::validation`, a
// namespace the estimators never touch.

fn mc_reduce(
    m: &MatrixHandle,
    samples: u64,
    seed: u64,
    width: usize,
    f: impl Fn(&[f64], f64, &mut [f64]) + Sync,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo sample count must be at least 1"));
    }
    let stream = GaussianStream::validation(seed);
    let d = m.dim();
    let sum = reduce_samples(d, width, 0, samples, true, |j, acc, s| {
        stream.sample_into(j, &mut s.u);
        let q = m.quad_form_unchecked(&s.u);
        f(&s.u, q, acc);
        Ok(())
    })?;
    Ok(sum.into_iter().map(|v| v / samples as f64).collect())
}

/// Empirical `E[(Q(u) u_p^2 - Q(u) - 2 a_pp)^2]` for every `p`, from one set of draws.
pub fn mc_variances(m: &MatrixHandle, samples: u64, seed: u64) -> Result<Vec<f64>> {
    let diag = m.diag();
    mc_reduce(m, samples, seed, m.dim(), |u, q, acc| {
        for ((a, &x), &app) in acc.iter_mut().zip(u).zip(&diag) {
            let r = q * x * x - q - 2.0 * app;
            *a += r * r;
        }
    })
}

/// Empirical `E[(Q(u) u_p^2 - Q(u) - 2 a_pp)^2]` for one index.
pub fn mc_variance_oracle(m: &MatrixHandle, p: usize, samples: u64, seed: u64) -> Result<f64> {
    check_index(m, p)?;
    let app = m.get(p, p)?;
    Ok(mc_reduce(m, samples, seed, 1, |u, q, acc| {
        let r = q * u[p] * u[p] - q - 2.0 * app;
        acc[0] += r * r;
    })?[0])
}

/// Empirical `E[sum_p (Q(u) u_p^2 - Q(u) - 2 a_pp)^2]`.
pub fn mc_total_variance(m: &MatrixHandle, samples: u64, seed: u64) -> Result<f64> {
    let diag = m.diag();
    Ok(mc_reduce(m, samples, seed, 1, |u, q, acc| {
        acc[0] += u
            .iter()
            .zip(&diag)
            .map(|(&x, &app)| (q * x * x - q - 2.0 * app).powi(2))
            .sum::<f64>();
    })?[0])
}

/// Empirical `E[(Q(u) u_p^n)^2]`, indexed `[n][p]`.
pub fn mc_moments(m: &MatrixHandle, samples: u64, seed: u64) -> Result<[Vec<f64>; 3]> {
    let d = m.dim();
    let flat = mc_reduce(m, samples, seed, 3 * d, |u, q, acc| {
        let q2 = q * q;
        let (m0, rest) = acc.split_at_mut(d);
        let (m1, m2) = rest.split_at_mut(d);
        for p in 0..d {
            let x2 = u[p] * u[p];
            m0[p] += q2;
            m1[p] += q2 * x2;
            m2[p] += q2 * x2 * x2;
        }
    })?;
    Ok([flat[..d].to_vec(), flat[d..2 * d].to_vec(), flat[2 * d..].to_vec()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> MatrixHandle {
        MatrixHandle::from_rows(&[&[2.0, 1.0], &[0.0, 3.0]]).unwrap()
    }

    fn one() -> MatrixHandle {
        MatrixHandle::from_rows(&[&[1.0]]).unwrap()
    }

    #[test]
    fn variance_anchors() {
        // d = 1: E[(u^4 - u^2 - 2)^2] = 105 - 30 - 9 + 4 + 4.
        assert_eq!(elementwise_variance(&one(), 0).unwrap(), 74.0);
        // 2*13^2 + 54 + 8*17 - 48 and 2*17^2 + 54 + 8*37 - 108.
        assert_eq!(elementwise_variance(&example(), 0).unwrap(), 480.0);
        assert_eq!(elementwise_variance(&example(), 1).unwrap(), 820.0);
        assert_eq!(elementwise_variances(&example().to_sparse()), vec![480.0, 820.0]);
        for d in [1usize, 4, 9] {
            let id = MatrixHandle::identity(d).unwrap();
            let df = d as f64;
            let expected = 2.0 * (df + 4.0).powi(2) + 4.0 * df + 20.0;
            for p in 0..d {
                assert_eq!(elementwise_variance(&id, p).unwrap(), expected);
            }
        }
        assert_eq!(
            elementwise_variance(&MatrixHandle::identity(4).unwrap(), 2).unwrap(),
            164.0
        );
        assert!(elementwise_variance(&example(), 2).is_err());
    }

    #[test]
    fn total_variance_forms() {
        let r = total_variance(&example());
        assert_eq!(r.direct_sum, 1300.0);
        assert_eq!(r.printed_closed_form, 1400.0);
        assert_eq!(r.corrected_closed_form, 1300.0);
        assert_eq!(r.discrepancy(), -2.0 * 2.0 * 25.0);

        let r = total_variance(&one());
        assert_eq!(
            (r.direct_sum, r.printed_closed_form, r.corrected_closed_form),
            (74.0, 76.0, 74.0)
        );

        let r = total_variance(&MatrixHandle::zeros(3).unwrap());
        assert_eq!(
            (r.direct_sum, r.printed_closed_form, r.corrected_closed_form),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn moment_anchors() {
        // Gaussian moments 3, 15, 105.
        assert_eq!(moment_sq(&one(), 0, 0).unwrap(), 3.0);
        assert_eq!(moment_sq(&one(), 0, 1).unwrap(), 15.0);
        assert_eq!(moment_sq(&one(), 0, 2).unwrap(), 105.0);
        let z = MatrixHandle::zeros(3).unwrap();
        for n in 0..3 {
            assert_eq!(moment_sq(&z, 1, n).unwrap(), 0.0);
        }
        assert_eq!(moment_sq(&example(), 0, 0).unwrap(), 52.0);
        assert!(moment_sq(&example(), 0, 3).is_err());
        assert!(moment_sq(&example(), 5, 0).is_err());
    }

    #[test]
    fn sample_sizes() {
        let plan = sample_size_elementwise(&one(), 0, 1.0, 0.25).unwrap();
        assert_eq!(plan.samples, 74);
        assert_eq!(sample_size_elementwise(&example(), 0, 1e6, 0.5).unwrap().samples, 1);
        assert_eq!(sample_size_elementwise(&example(), 1, 1.0, 0.25).unwrap().samples, 820);
        assert_eq!(sample_size_elementwise(&example(), 0, 1.0, 0.25).unwrap().samples, 480);

        assert_eq!(sample_size_normwise(&one(), 1.0, 0.25).unwrap().samples, 74);
        assert_eq!(sample_size_normwise(&example(), 0.1, 0.5).unwrap().samples, 500);
        let hollow = MatrixHandle::from_rows(&[&[0.0, 1.0], &[2.0, 0.0]]).unwrap();
        assert!(matches!(
            sample_size_normwise(&hollow, 0.1, 0.5),
            Err(Error::DegenerateTarget(_))
        ));

        for bad in [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, 1.0), (1.0, 1.5)] {
            assert!(sample_size_elementwise(&example(), 0, bad.0, bad.1).is_err());
            assert!(sample_size_normwise(&example(), bad.0, bad.1).is_err());
            assert!(sample_size_matvec_elementwise(&example(), 0, bad.0, bad.1).is_err());
        }
    }

    #[test]
    fn median_plan() {
        let plan = sample_size_median(&example(), 0, 1.0, 0.05).unwrap();
        assert_eq!(plan.samples, 480);
        assert_eq!(
            plan.mode,
            PlanMode::Median {
                index: 0,
                variance: 480.0,
                repeats: 24
            }
        );
        assert_eq!(plan.total_queries(), 480 * 24);
    }

    #[test]
    fn matvec_sample_sizes() {
        let diag = MatrixHandle::diagonal(&[1.0, -4.0, 2.5]).unwrap();
        for p in 0..3 {
            assert_eq!(sample_size_matvec_elementwise(&diag, p, 0.1, 0.01).unwrap().samples, 1);
        }
        let e2 = std::f64::consts::E.powi(2);
        assert_eq!(
            sample_size_matvec_elementwise(&example(), 0, 1.0, 2.0 / e2)
                .unwrap()
                .samples,
            4
        );
        let e = std::f64::consts::E;
        assert_eq!(
            sample_size_matvec_elementwise(&example(), 1, 0.5, 2.0 / e)
                .unwrap()
                .samples,
            1
        );
    }

    #[test]
    fn predictions() {
        assert_eq!(predicted_rel_err_elementwise(&one(), 0, 74, 1.0).unwrap(), 0.25);
        assert!((predicted_rel_err_elementwise(&example(), 0, 1000, 1.0).unwrap() - 0.03).abs() < 1e-15);
        assert!((predicted_rel_err_normwise(&example(), 1000, 1.0).unwrap() - 0.025).abs() < 1e-15);
        assert_eq!(predicted_rel_err_normwise(&one(), 74, 1.0).unwrap(), 0.25);
        let a = predicted_rel_err_normwise(&example(), 300, 1.0).unwrap();
        let b = predicted_rel_err_normwise(&example(), 600, 1.0).unwrap();
        assert_eq!(a, 2.0 * b);

        let hollow = MatrixHandle::from_rows(&[&[0.0, 1.0], &[2.0, 5.0]]).unwrap();
        assert!(matches!(
            predicted_rel_err_elementwise(&hollow, 0, 10, 1.0),
            Err(Error::DegenerateTarget(_))
        ));
        assert!(predicted_rel_err_elementwise(&example(), 0, 0, 1.0).is_err());
    }

    #[test]
    fn prediction_inverts_sample_size() {
        let m = example();
        for (eps, delta) in [(0.3, 0.1), (1.0, 0.25), (0.05, 0.9)] {
            for p in 0..2 {
                let n = sample_size_elementwise(&m, p, eps, delta).unwrap().samples;
                let app = m.diag()[p];
                // Relative-error target eps_p = (eps / |a_pp|)^2.
                let pred = predicted_rel_err_elementwise(&m, p, n, delta).unwrap();
                assert!(pred <= (eps / app).powi(2) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn ceil_count_behaviour() {
        assert_eq!(ceil_count(0.0), 1);
        assert_eq!(ceil_count(1e-12), 1);
        assert_eq!(ceil_count(f64::NAN), 1);
        assert_eq!(ceil_count(499.99999999999994), 500);
        assert_eq!(ceil_count(500.0000000000001), 500);
        assert_eq!(ceil_count(500.01), 501);
        assert_eq!(ceil_count(f64::INFINITY), u64::MAX);
    }

    #[test]
    fn mc_zero_matrix_is_exactly_zero() {
        let z = MatrixHandle::zeros(3).unwrap();
        assert_eq!(mc_variance_oracle(&z, 1, 1000, 1).unwrap(), 0.0);
        assert_eq!(mc_variances(&z, 1000, 1).unwrap(), vec![0.0; 3]);
        assert!(mc_variance_oracle(&z, 0, 0, 1).is_err());
    }

    #[test]
    fn mc_single_index_matches_all_indices() {
        let m = example();
        let all = mc_variances(&m, 20_000, 4).unwrap();
        for (p, &v) in all.iter().enumerate() {
            let one = mc_variance_oracle(&m, p, 20_000, 4).unwrap();
            assert!((one - v).abs() <= 1e-9 * v, "{one} vs {v}");
        }
    }
}
