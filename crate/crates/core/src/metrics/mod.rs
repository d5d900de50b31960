//! Scores a synthetic window set against a real one: marginal fidelity,
//! temporal structure, representativeness, and manifold coverage.

mod distribution;
mod prototype;
mod tails;
mod temporal;

pub use distribution::{ks_pooled, wasserstein1_pooled};
pub use prototype::{
    coverage, coverage_many, medoid_index, mdr, nearest_synth_distances, proto_err, real_nn_distances,
};
pub use tails::{tail_stats, variance_decomposition_check, TailStats, VarianceDecomposition};
pub use temporal::{acf, acf_mae, hann, mean_acf, mean_psd, periodogram, psd_l2};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    /// Largest ACF lag; `None` means half the window length.
    pub max_lag: Option<usize>,
    pub coverage_quantiles: Vec<f64>,
    /// Seed for subsampling the larger set down to the smaller one's size.
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_lag: None,
            coverage_quantiles: vec![0.5, 0.9],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetTails {
    pub x: TailStats,
    pub dx: TailStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub wasserstein: f64,
    pub ks: f64,
    pub acf_mae: f64,
    pub psd_l2: f64,
    pub proto_err_avg: f64,
    pub proto_err_med: f64,
    pub mdr: f64,
    /// `(q, Coverage@τ_q)` in ascending `q`.
    pub coverage: Vec<(f64, f64)>,
    pub real_tails: SetTails,
    pub synth_tails: SetTails,
}

impl MetricsReport {
    pub fn coverage_at(&self, q: f64) -> Option<f64> {
        self.coverage.iter().find(|(k, _)| *k == q).map(|(_, v)| *v)
    }
}

/// Seeded subsample of `set` down to `n` elements, keeping original order.
pub fn balanced_subsample<W: Clone>(set: &[W], n: usize, seed: u64) -> Vec<W> {
    if set.len() <= n {
        return set.to_vec();
    }
    let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), set.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| set[i].clone()).collect()
}

/// Runs every metric on equal-size sets (the larger one is subsampled).
pub fn evaluate<W: AsRef<[f64]> + Clone + Sync>(real: &[W], synth: &[W], opts: &EvalOptions) -> Result<MetricsReport> {
    if real.is_empty() || synth.is_empty() {
        return Err(Error::Empty("window set"));
    }
    let len = real[0].as_ref().len();
    if real.iter().chain(synth).any(|w| w.as_ref().len() != len) {
        return Err(Error::Invalid("all windows must share one length".into()));
    }
    let n = real.len().min(synth.len());
    let real = balanced_subsample(real, n, opts.seed);
    let synth = balanced_subsample(synth, n, opts.seed.wrapping_add(1));

    let mut qs = opts.coverage_quantiles.clone();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let cov = coverage_many(&real, &synth, &qs)?;
    let (proto_avg, proto_med) = proto_err(&real, &synth)?;
    let (rx, rdx) = tail_stats(&real)?;
    let (sx, sdx) = tail_stats(&synth)?;

    Ok(MetricsReport {
        n,
        wasserstein: wasserstein1_pooled(&real, &synth)?,
        ks: ks_pooled(&real, &synth)?,
        acf_mae: acf_mae(&real, &synth, opts.max_lag.unwrap_or(len / 2))?,
        psd_l2: psd_l2(&real, &synth)?,
        proto_err_avg: proto_avg,
        proto_err_med: proto_med,
        mdr: mdr(&real, &synth)?,
        coverage: qs.into_iter().zip(cov).collect(),
        real_tails: SetTails { x: rx, dx: rdx },
        synth_tails: SetTails { x: sx, dx: sdx },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsample_is_seeded_and_sized() {
        let v: Vec<u32> = (0..50).collect();
        let a = balanced_subsample(&v, 10, 3);
        assert_eq!(a.len(), 10);
        assert_eq!(a, balanced_subsample(&v, 10, 3));
        assert!(a.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(balanced_subsample(&v, 80, 3), v);
    }

    #[test]
    fn evaluate_balances_sizes() {
        let real: Vec<Vec<f64>> = (0..12).map(|i| (0..8).map(|t| ((i + t) as f64).sin()).collect()).collect();
        let synth: Vec<Vec<f64>> = (0..30).map(|i| (0..8).map(|t| ((i * t) as f64).cos()).collect()).collect();
        let r = evaluate(&real, &synth, &EvalOptions::default()).unwrap();
        assert_eq!(r.n, 12);
        assert!(r.coverage_at(0.5).unwrap() <= r.coverage_at(0.9).unwrap());
    }
}
