//! Tail probabilities used by the significance tests.

use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

/// Upper tail of F(d1, d2) at `f`. Infinite `f` gives 0, non-positive gives 1.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() || f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(d1, d2)
        .map(|d| d.sf(f).clamp(0.0, 1.0))
        .unwrap_or(1.0)
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    StudentsT::new(0.0, 1.0, df)
        .map(|d| (2.0 * d.sf(t.abs())).clamp(0.0, 1.0))
        .unwrap_or(1.0)
}

/// F-test of a nested least-squares model with `p_full` parameters against
/// one with `p_null`, given residual sums of squares over `n` points.
pub fn nested_f_test(rss_null: f64, rss_full: f64, p_null: usize, p_full: usize, n: usize) -> f64 {
    if n <= p_full || p_full <= p_null {
        return 1.0;
    }
    if rss_null <= 0.0 {
        return 1.0;
    }
    let d1 = (p_full - p_null) as f64;
    let d2 = (n - p_full) as f64;
    let gain = (rss_null - rss_full).max(0.0);
    if rss_full <= 0.0 {
        return if gain > 0.0 { 0.0 } else { 1.0 };
    }
    f_sf((gain / d1) / (rss_full / d2), d1, d2)
}
