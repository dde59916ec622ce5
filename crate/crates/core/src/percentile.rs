//! Empirical percentiles at the observed points.
//!
//! `pc(t) = (F(t-) + F(t+)) / 2` for the empirical CDF `F` of the sample.
//! Without ties the sorted values are the rankits `(2i - 1) / 2n`; a tie
//! group of size `k` occupying sorted positions `a..a+k-1` (1-based) shares
//! `(2a + k - 2) / 2n`.
//!
//! Percentiles are only ever exposed at the data points, so no interpolant
//! between them is constructed.

use crate::error::{Error, Result};
use crate::targetdist::TargetDistribution;

/// Percentiles `pc(y_i)`, aligned index-for-index with the response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileVector {
    p: Vec<f64>,
}

impl PercentileVector {
    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Quantile-matched values `Q(pc(y_i))`.
    pub fn matched(&self, dist: &TargetDistribution) -> Vec<f64> {
        self.p.iter().map(|&p| dist.quantile_unchecked(p)).collect()
    }

    /// Matched values together with `sum_i log Q'(pc(y_i))`.
    pub fn transform(&self, dist: &TargetDistribution) -> (Vec<f64>, f64) {
        let mut sum = 0.0;
        let z = self
            .p
            .iter()
            .map(|&p| {
                let (q, lqd) = dist.quantile_and_log_derivative_unchecked(p);
                sum += lqd;
                q
            })
            .collect();
        (z, sum)
    }

    /// `sum_i log Q'(pc(y_i))`, summed in index order.
    pub fn log_quantile_derivative_sum(&self, dist: &TargetDistribution) -> f64 {
        self.p
            .iter()
            .map(|&p| dist.log_quantile_derivative_unchecked(p))
            .sum()
    }
}

/// Percentile vector of `y`.
pub fn percentiles(y: &[f64]) -> Result<PercentileVector> {
    if y.is_empty() {
        return Err(Error::domain("percentiles of an empty vector"));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite response value {} at index {i}", y[i])));
    }
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));

    let two_n = (2 * n) as f64;
    let mut p = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        // -0.0 and 0.0 are the same observation
        while end < n && y[order[end]] == y[order[start]] {
            end += 1;
        }
        let k = end - start;
        // 1-based position a = start + 1, so 2a + k - 2 = 2 start + k
        let value = (2 * start + k) as f64 / two_n;
        for &idx in &order[start..end] {
            p[idx] = value;
        }
        start = end;
    }
    Ok(PercentileVector { p })
}

/// The quantile-matching transformation `y_i -> Q(pc(y_i))`.
pub fn quantile_match(y: &[f64], dist: &TargetDistribution) -> Result<Vec<f64>> {
    Ok(percentiles(y)?.matched(dist))
}
