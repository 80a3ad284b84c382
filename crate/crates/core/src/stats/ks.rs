use std::cmp::Ordering;

use crate::{Error, Result, Scalar};

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`,
/// evaluated exactly at every sample point by a merged walk over both
/// sorted samples.
pub fn ks_statistic<T: Scalar>(a: &[T], b: &[T]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::NonFiniteSample);
    }
    let sorted = |s: &[T]| {
        let mut v = s.to_vec();
        v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max(cdf_gap(i, n, j, m));
    }
    Ok(d)
}

/// `|i/n - j/m|`, shared with the brute-force check so both routes round
/// identically.
#[inline]
pub(crate) fn cdf_gap(i: usize, n: usize, j: usize, m: usize) -> f64 {
    (i as f64 / n as f64 - j as f64 / m as f64).abs()
}
