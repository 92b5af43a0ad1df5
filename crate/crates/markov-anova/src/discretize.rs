//! Equal-frequency binning of a continuous covariate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantile `p` of sorted data by linear interpolation between order
/// statistics (`h = (n − 1) p`, often called type 7).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Intervals `[b0, b1], (b1, b2], …, (b_{q−1}, b_q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationRule {
    pub source: String,
    pub groups: usize,
    pub breaks: Vec<f64>,
}

impl DiscretizationRule {
    /// 0-based group of `x`, or `None` outside `[b0, b_q]`.
    pub fn assign(&self, x: f64) -> Option<usize> {
        let b = &self.breaks;
        if !(x >= b[0] && x <= b[b.len() - 1]) {
            return None;
        }
        // first k ≥ 1 with x ≤ b_k
        Some(b[1..].partition_point(|&bk| bk < x))
    }

    pub fn interval_label(&self, group: usize) -> String {
        let open = if group == 0 { '[' } else { '(' };
        format!("{open}{},{}]", self.breaks[group], self.breaks[group + 1])
    }
}

pub fn quantile_discretize(source: &str, values: &[f64], groups: usize) -> Result<DiscretizationRule> {
    if groups < 2 {
        return Err(Error::Usage(format!("need at least 2 groups, got {groups}")));
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::Data(format!("column '{source}' has non-finite value {x}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < groups {
        return Err(Error::Data(format!(
            "column '{source}' has {} distinct values, fewer than {groups} groups",
            distinct.len()
        )));
    }
    let breaks: Vec<f64> =
        (0..=groups).map(|k| quantile_type7(&sorted, k as f64 / groups as f64)).collect();
    if let Some(w) = breaks.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Data(format!(
            "column '{source}' has too many ties for {groups} groups (repeated break {})",
            w[0]
        )));
    }
    Ok(DiscretizationRule { source: source.to_owned(), groups, breaks })
}
