//! Tail statistics and the between/within variance decomposition.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::quantile_graph::quantile_sorted;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailStats {
    pub mean: f64,
    pub std: f64,
    pub excess_kurtosis: f64,
    /// 0.1% and 99.9% quantiles.
    pub quantile_range: (f64, f64),
}

impl TailStats {
    /// Population moments and linear-interpolation quantiles.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (m2, m4) = values.iter().fold((0.0, 0.0), |(m2, m4), v| {
            let d = (v - mean) * (v - mean);
            (m2 + d, m4 + d * d)
        });
        let (m2, m4) = (m2 / n, m4 / n);
        if m2 <= 0.0 {
            return Err(Error::ZeroVariance("kurtosis of constant data"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(TailStats {
            mean,
            std: m2.sqrt(),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
            quantile_range: (quantile_sorted(&sorted, 0.001), quantile_sorted(&sorted, 0.999)),
        })
    }
}

/// Statistics for pooled values `x` and for first differences `Δx`, which
/// are taken within each window only.
pub fn tail_stats<W: AsRef<[f64]>>(windows: &[W]) -> Result<(TailStats, TailStats)> {
    let x: Vec<f64> = windows.iter().flat_map(|w| w.as_ref().iter().copied()).collect();
    let dx: Vec<f64> = windows
        .iter()
        .flat_map(|w| w.as_ref().windows(2).map(|p| p[1] - p[0]).collect::<Vec<_>>())
        .collect();
    Ok((TailStats::from_values(&x)?, TailStats::from_values(&dx)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceDecomposition {
    /// `Var(X)`
    pub total: f64,
    /// `Var(E[X|G])`, sample-weighted over groups.
    pub between: f64,
    /// `E[Var(X|G)]`, sample-weighted over groups.
    pub within: f64,
    /// `|total − (between + within)| / total`
    pub rel_gap: f64,
}

impl VarianceDecomposition {
    pub fn rhs(&self) -> f64 {
        self.between + self.within
    }
}

/// Compares `Var(X)` with `Var(E[X|G]) + E[Var(X|G)]` on labeled samples,
/// all under the population (divide-by-n) convention.
pub fn variance_decomposition_check(samples: &[(f64, usize)]) -> Result<VarianceDecomposition> {
    if samples.is_empty() {
        return Err(Error::Empty("labeled samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let total = samples.iter().map(|s| (s.0 - mean) * (s.0 - mean)).sum::<f64>() / n;
    if total <= 0.0 {
        return Err(Error::ZeroVariance("labeled samples"));
    }

    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(x, g) in samples {
        groups.entry(g).or_default().push(x);
    }
    let (mut between, mut within) = (0.0, 0.0);
    for xs in groups.values() {
        let w = xs.len() as f64 / n;
        let gm = xs.iter().sum::<f64>() / xs.len() as f64;
        let gv = xs.iter().map(|x| (x - gm) * (x - gm)).sum::<f64>() / xs.len() as f64;
        between += w * (gm - mean) * (gm - mean);
        within += w * gv;
    }
    Ok(VarianceDecomposition {
        total,
        between,
        within,
        rel_gap: (total - between - within).abs() / total,
    })
}
